# %% [markdown]
# Where the queues stop being stable
#
# For two users on a fixed channel, a linear program over combination
# rates and time-shared broadcast rate points finds the largest symmetric
# admission rate any policy can sustain. A static randomized policy built
# from the solution keeps the queues flat at 80% of that rate and lets
# them grow at 120%.

# %%
import numpy as np

from faircc import RunConfig, SystemParams, run
from faircc.policies import max_admission_scale, static_table

p = SystemParams(2)
h, direction = (1.0, 0.2), (1.0, 1.0)
point = max_admission_scale(p, h, direction, sigma_max=10)
print("largest symmetric rate", round(point.scale, 4), "files/slot/user")
print("time shares", np.round(point.probs, 3))

# %%
for factor in (0.8, 1.2):
    cfg = RunConfig(p, "deterministic", h, policy="static", static_table=static_table(point, h, direction, factor),
                    horizon=20_000, sample_every=2_000, seed=0)
    m = run(cfg)
    q = m.trajectories["Q_total"] / p.F
    print(f"{factor:.1f}x  codeword backlog in files:", np.round(q, 1))
