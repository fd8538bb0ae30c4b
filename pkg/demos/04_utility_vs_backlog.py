# %% [markdown]
# Trading backlog for utility
#
# V weights the utility against the queue drift. A larger V gets closer to
# the best fair allocation and pays for it with longer queues that take
# longer to build up. The runs below are short, so the largest V is still
# in its transient.

# %%
import numpy as np

from faircc import FairnessConfig, preset, run

# %%
print(f"{'V':>7s} {'utility':>9s} {'files in S':>11s} {'files in Q':>11s}")
for V in (10.0, 100.0, 1000.0, 10_000.0):
    m = run(preset("sym_fading", 4, fairness=FairnessConfig(alpha=1.0, V=V), horizon=200_000, seed=0))
    print(f"{V:7g} {m.utility:9.4f} {m.avg_S:11.1f} {m.avg_Q_total / 1000.0:11.1f}")

# %%
# The virtual queues settle near V over the marginal utility of the
# achieved rate, which is why large V needs long runs.
m = run(preset("sym_fading", 4, fairness=FairnessConfig(alpha=1.0, V=100.0), horizon=50_000, seed=0,
               sample_every=5_000))
print(np.round(m.trajectories["U"], 1))
print("V / (d + rate):", np.round(100.0 / (0.01 + m.rates), 1))
