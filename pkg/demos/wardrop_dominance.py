# %% [markdown]
# # Invasion and dominance of the Wardrop flow
#
# A small share of traffic switches from an incumbent flow x to a mutant flow y. We
# compare what the two groups pay at the mixed flow and find the share below which
# the incumbents still do better.

# %%
import numpy as np

from mwstab import (
    ParallelLinkSystem,
    beckmann_potential,
    delta_epsilon,
    invasion_barrier,
    is_incrementally_deployable,
    wardrop_parallel_affine,
)
from mwstab.routing import dominates

system = ParallelLinkSystem([0, 0], [1, 10])
w = wardrop_parallel_affine(system).flows
eps = np.linspace(0, 1, 11)

# %%
x, y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
print("cost gap along the mix:", np.round(delta_epsilon(system, x, y, eps), 4))
print("barrier of (0,1) against (1,0):", invasion_barrier(system, y, x))

# %% [markdown]
# The Wardrop flow beats every alternative at every mix, so its barrier is 1.

# %%
rng = np.random.default_rng(1)
for _ in range(5):
    z = rng.dirichlet([1, 1])
    print(f"y={np.round(z, 3)}  dominated={dominates(system, w, z)}  "
          f"barrier={invasion_barrier(system, z, w):.3f}  "
          f"potential gap={beckmann_potential(system, z) - beckmann_potential(system, w):.4f}")

# %% [markdown]
# Traffic switching to the Wardrop routes out of an all-on-link-one population never
# pays more than the traffic that stays, whatever share has switched. The reverse move
# is not safe.

# %%
print("Wardrop routes entering (1,0):", is_incrementally_deployable(system, w, x))
print("(1,0) routes entering Wardrop:", is_incrementally_deployable(system, x, w))
