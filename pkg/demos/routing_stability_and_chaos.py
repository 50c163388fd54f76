# %% [markdown]
# # Hedge on parallel links: stability, then chaos
#
# Two parallel links with costs x and 10x carry one unit of traffic. The Wardrop flow is
# (10/11, 1/11). For small learning rates the Hedge map converges to it. For large rates
# the linearization loses stability and the scalar map picks up orbits of period three.

# %%
import numpy as np

from mwstab import (
    ParallelLinkSystem,
    alpha_bar,
    deflated_k,
    find_periodic_orbits,
    hedge_scalar_map,
    jacobian_full_support,
    wardrop_parallel_affine,
)
from mwstab.routing import charpoly_gap, routing_report, spectral_radius

system = ParallelLinkSystem([0, 0], [1, 10])
flow = wardrop_parallel_affine(system).flows
print("Wardrop flow:", flow)
print("largest rate keeping the deflated matrix non-negative:", alpha_bar(system, flow))

# %%
for alpha in [0.1, 0.5, 1.1, 2.0, 5.0]:
    K = deflated_k(system, flow, alpha).K
    J = jacobian_full_support(system, flow, alpha)
    print(f"alpha={alpha:<4} rho(K)={spectral_radius(K):.6f}  charpoly gap={charpoly_gap(J, K):.1e}")

# %% [markdown]
# Orbits of the one-dimensional map on the first link's share.

# %%
for alpha in [0.1, 5.0]:
    H = hedge_scalar_map(system, alpha)
    for p in (1, 2, 3):
        orbits = find_periodic_orbits(H, p)
        print(f"alpha={alpha} period {p}: {[np.round(o.points, 6).tolist() for o in orbits]}")

# %% [markdown]
# A larger system with random affine costs, summarized in one report.

# %%
rng = np.random.default_rng(0)
big = ParallelLinkSystem(rng.uniform(0, 1, 6), rng.uniform(0.5, 4, 6))
report = routing_report(big, alpha=0.5)
print(report)
