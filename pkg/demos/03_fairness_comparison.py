# %% [markdown]
# What fairness costs
#
# Six users with Rayleigh fading. The proposed controller runs for a few
# values of alpha next to opportunistic unicast and the classical coded
# caching scheme that sends every round at the weakest user's rate.

# %%
import numpy as np

from faircc import FairnessConfig, preset, run

K, H = 6, 300_000

# %%
# Symmetric users: every alpha lands on the same equal split.
print(f"{'scheme':12s} {'alpha':>5s} {'sum rate':>9s}  per-user rates")
for policy in ("unicast_opp", "standard_cc"):
    m = run(preset("sym_fading", K, policy=policy, horizon=H // 10, seed=3))
    print(f"{policy:12s} {'':>5s} {m.sum_rate:9.4f}  {np.round(m.rates, 3)}")
for alpha in (0.0, 1.0, 10.0):
    m = run(preset("sym_fading", K, fairness=FairnessConfig(alpha=alpha, V=10.0), horizon=H // 10, seed=3))
    print(f"{'proposed':12s} {alpha:5g} {m.sum_rate:9.4f}  {np.round(m.rates, 3)}")

# %%
# Three strong and three weak users. The virtual queues settle near
# V g'(rate), and the codeword queues have to fill before they get there,
# so V is picked per alpha to put that level at a few tens of files.
# With a large V and a short run every alpha looks the same because the
# controller is still admitting at full speed.
for alpha, V in ((0.0, 50.0), (1.0, 15.0), (2.0, 3.0), (10.0, 5e-5)):
    m = run(preset("two_class_fading", K, fairness=FairnessConfig(alpha=alpha, V=V), horizon=H, seed=3))
    print(f"alpha={alpha:<4g} strong {m.rates[:K // 2].mean():.3f}  weak {m.rates[K // 2:].mean():.3f}"
          f"  sum {m.sum_rate:.3f}")
