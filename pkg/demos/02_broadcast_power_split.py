# %% [markdown]
# Splitting power over a degraded broadcast channel
#
# The scheduler sees one weight per codeword queue. Superposition coding
# lets each layer carry the best message whose receivers can all decode
# it, and the power split follows the upper envelope of the per-layer
# marginal rates. Here we solve one instance, look at the split, and
# check it against a grid search.

# %%
import numpy as np

from faircc import reduce_weights, solve_wsr, wsr_bruteforce
from faircc.bc_capacity import capacity_slack

h = np.array([1.0, 0.5, 0.2])
P = 10.0
rng = np.random.default_rng(2)
theta = rng.exponential(1.0, 7)

# %%
r = reduce_weights(theta, h)
for k, (w, mask) in enumerate(zip(r.theta_tilde, r.argsubset)):
    users = [u for u in range(3) if mask >> u & 1]
    print(f"layer {k} (user {r.order[k]}): weight {w:.3f} from subset {users}")

# %%
a = solve_wsr(theta, h, P)
print("power per user ", np.round(a.p_user, 4))
print("rate per subset", np.round(a.mu, 4))
print("weighted sum   ", round(a.wsr, 6))
print("grid search    ", round(wsr_bruteforce(theta, h, P), 6))
print("capacity slack ", capacity_slack(a.mu, a.p_user, h))

# %%
# Only the common message matters: it is sent at the weakest user's rate.
common = np.zeros(7)
common[-1] = 1.0
print(solve_wsr(common, h, P).mu[-1], np.log2(1 + 0.2 * P))
