# %% [markdown]
# # Law of large numbers and the cell system
#
# For `theta > 0` and a supercritical model, the empirical distribution of
# fragment sizes converges to the stationary law of the selected fragment.
# `check_lln_conditions` reports the hypotheses one by one.

# %%
import math

import numpy as np

from ougf import dislocation as dl
from ougf import gf_sim as gs
from ougf import levy_ou as lo

gf = dl.half_half_model(theta=1.0)
for c in dl.check_lln_conditions(gf).conditions:
    print("PASS" if c.ok else "FAIL", c.name, c.value)

# %% [markdown]
# The empirical mean of `x^2` at time `t`, averaged over runs, against the
# stationary moment. The ratio estimator is biased at finite `t`, and the
# bias decays as the population grows.

# %%
target = dl.stationary_gf_moment(gf, 2.0)
for t in (2.0, 4.0):
    vals = [gs.empirical_average(gs.simulate(gf, math.inf, [t], s).snapshots[0], lambda x: x ** 2)
            for s in gs.replication_seeds(3, 200)]
    print(f"t={t}: {np.mean(vals):.4f} +- {np.std(vals, ddof=1) / math.sqrt(len(vals)):.4f}   target {target:.4f}")

# %% [markdown]
# A binary cell system driven by `exp` of an OU process with a single jump
# `-log 2` at rate 1 has the same law as the halving model.

# %%
levy = lo.atom_levy([-math.log(2.0)], [1.0])
cell = [gs.lq_statistic(gs.cell_system_simulate(levy, 1.0, None, [1.0], s).snapshots[0], 2.0)
        for s in gs.replication_seeds(4, 2000)]
atom = gs.estimate_moment(dl.binary_from_levy(levy, 1.0), math.inf, 2.0, 1.0, 2000, 5)
print(f"cell {np.mean(cell):.4f} +- {np.std(cell, ddof=1) / math.sqrt(len(cell)):.4f}")
print(f"atom {atom.estimate:.4f} +- {atom.stderr:.4f}")
