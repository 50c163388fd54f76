"""Selfish routing on parallel affine links and the dominance calculus.

Covers Wardrop equilibria, the linearization of Hedge at an equilibrium
(Jacobian, its deflation, the step bound ``alpha_bar``), stability verdicts
for equilibria with partial support, periodic orbits of the two-link Hedge
map, and incumbent/mutant comparisons of flows on congestion networks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegeneratePairError, DimensionError, DomainError, ModelError, SupportError
from .games import CongestionNetwork, parallel_network

STABILITY_MARGIN = 1e-9
DOMINANCE_TOL = 1e-12

STABLE = "stable"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class ParallelLinkSystem:
    """Parallel links with costs ``c_j(x) = offsets[j] + slopes[j] x``."""

    offsets: np.ndarray
    slopes: np.ndarray
    demand: float = 1.0

    def __post_init__(self):
        rho = np.array(self.offsets, dtype=float).reshape(-1)
        sigma = np.array(self.slopes, dtype=float).reshape(-1)
        if rho.shape != sigma.shape:
            raise DimensionError("offsets and slopes must have the same length")
        if rho.size < 2:
            raise ModelError("a parallel-link system needs at least two links")
        if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)) or not np.all(np.isfinite(rho)):
            raise ModelError("slopes must be positive and all parameters finite")
        if not self.demand > 0:
            raise ModelError("demand must be positive")
        rho.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "offsets", rho)
        object.__setattr__(self, "slopes", sigma)
        object.__setattr__(self, "demand", float(self.demand))

    @property
    def m(self) -> int:
        return self.offsets.size

    def costs(self, flows) -> np.ndarray:
        return self.offsets + self.slopes * np.asarray(flows, dtype=float)

    def to_network(self) -> CongestionNetwork:
        return parallel_network(self.offsets, self.slopes, self.demand)

    def unit_demand(self) -> "ParallelLinkSystem":
        """Equivalent system with demand 1; flows scale by ``1 / demand``."""
        return ParallelLinkSystem(self.offsets, self.slopes * self.demand, 1.0)

    def sorted(self) -> tuple["ParallelLinkSystem", np.ndarray]:
        """Links reordered by non-increasing offset (stable), and the permutation."""
        perm = np.argsort(-self.offsets, kind="stable")
        return ParallelLinkSystem(self.offsets[perm], self.slopes[perm], self.demand), perm

    def restrict(self, links) -> "ParallelLinkSystem":
        links = np.asarray(links)
        return ParallelLinkSystem(self.offsets[links], self.slopes[links], self.demand)


@dataclass(frozen=True, eq=False)
class FlowProfile:
    flows: np.ndarray
    demand: float = 1.0

    def __post_init__(self):
        x = np.array(self.flows, dtype=float).reshape(-1)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise DomainError("flows must be finite and non-negative")
        if abs(x.sum() - self.demand) > 1e-12 * max(1.0, self.demand):
            raise DomainError(f"flows sum to {x.sum()!r}, expected demand {self.demand!r}")
        x.setflags(write=False)
        object.__setattr__(self, "flows", x)
        object.__setattr__(self, "demand", float(self.demand))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.flows > 0)

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.flows > 0))


def _flows(flow) -> np.ndarray:
    return np.asarray(flow.flows if isinstance(flow, FlowProfile) else flow, dtype=float)


# ------------------------------------------------------------------- Wardrop


def wardrop_parallel_affine(system: ParallelLinkSystem) -> FlowProfile:
    """Wardrop flow by active-set iteration on the equal-delay system.

    On the active set the common delay is
    ``lam = (d + sum rho/sigma) / sum 1/sigma``; links whose solved flow is
    negative leave the set. Removing them only lowers ``lam``, so links once
    dropped never return.
    """
    rho, sigma, d = system.offsets, system.slopes, system.demand
    active = np.ones(system.m, dtype=bool)
    while True:
        lam = (d + np.sum(rho[active] / sigma[active])) / np.sum(1.0 / sigma[active])
        x = np.where(active, (lam - rho) / sigma, 0.0)
        negative = active & (x < 0)
        if not np.any(negative):
            break
        active &= ~negative
    x = np.maximum(x, 0.0)
    x *= d / x.sum()
    return FlowProfile(x, d)


def wardrop_closed_form(system: ParallelLinkSystem) -> np.ndarray:
    """Full-support solution of the equal-delay system as a ratio of sums of products.

    ``x_j = [sum_{i != j} (rho_i - rho_j) prod_{k != i,j} sigma_k
    + d prod_{i != j} sigma_i] / e_{m-1}(sigma)``. Entries may be negative when
    the full support is not an equilibrium.
    """
    rho, sigma, d = system.offsets, system.slopes, system.demand
    m = system.m
    idx = np.arange(m)
    e = sum(np.prod(sigma[idx != i]) for i in range(m))
    x = np.empty(m)
    for j in range(m):
        num = d * np.prod(sigma[idx != j])
        for i in range(m):
            if i != j:
                num += (rho[i] - rho[j]) * np.prod(sigma[(idx != i) & (idx != j)])
        x[j] = num / e
    return x


# ----------------------------------------------------------------- linearization


def _unit_full_support(system: ParallelLinkSystem, flow) -> np.ndarray:
    x = _flows(flow)
    if x.shape != (system.m,):
        raise DimensionError(f"flow has {x.size} entries, system has {system.m} links")
    if abs(x.sum() - 1.0) > 1e-12 or abs(system.demand - 1.0) > 0:
        raise DomainError("linearization needs unit demand; use system.unit_demand() "
                          "and divide flows by the demand")
    if np.any(x <= 0):
        raise SupportError("flow has partial support; use classify_partial_support")
    return x


def jacobian_full_support(system: ParallelLinkSystem, flow, alpha: float) -> np.ndarray:
    """``J(i, j) = delta_ij (1 - a x_i s_i) - x_i (1 - a x_j s_j)``; columns sum to zero."""
    x = _unit_full_support(system, flow)
    v = 1.0 - alpha * x * system.slopes
    return np.diag(v) - np.outer(x, v)


class DeflatedMatrix(NamedTuple):
    K: np.ndarray
    permutation: np.ndarray


def deflated_k(system: ParallelLinkSystem, flow, alpha: float) -> DeflatedMatrix:
    """The ``(m-1)x(m-1)`` deflation of the Jacobian after sorting by offset.

    With ``rho_1`` the largest offset, row ``i`` refers to link ``i+1``:
    ``K(i,i) = 1 - a x (s + r - rho_1)`` and ``K(i,j) = a x (rho_1 - r)``.
    """
    x = _unit_full_support(system, flow)
    srt, perm = system.sorted()
    x = x[perm]
    rho, sigma = srt.offsets, srt.slopes
    xs, rs, ss = x[1:], rho[1:], sigma[1:]
    off = alpha * xs * (rho[0] - rs)
    K = np.repeat(off[:, None], rs.size, axis=1)
    np.fill_diagonal(K, 1.0 - alpha * xs * (ss + rs - rho[0]))
    return DeflatedMatrix(K, perm)


def alpha_bar(system: ParallelLinkSystem, flow) -> float:
    """``min_{j >= 2} 1 / (x_j (s_j + r_j - rho_1))`` after sorting by offset."""
    x = _unit_full_support(system, flow)
    srt, perm = system.sorted()
    x = x[perm]
    den = x[1:] * (srt.slopes[1:] + srt.offsets[1:] - srt.offsets[0])
    den = den[den > 0]
    return float(1.0 / den.max()) if den.size else float("inf")


def spectral_radius(matrix) -> float:
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def charpoly_gap(J, K) -> float:
    """Largest coefficient gap between ``charpoly(J)`` and ``lambda * charpoly(K)``.

    Comparing coefficients avoids the ill-conditioning of eigenvalues of
    nearly defective matrices, which is common at ``alpha = alpha_bar``.
    """
    pj = np.poly(np.asarray(J, dtype=float))
    pk = np.append(np.poly(np.asarray(K, dtype=float)), 0.0)
    return float(np.max(np.abs(np.real_if_close(pj - pk))))


def spectra_match(J, K, tol: float = 1e-9) -> bool:
    """Whether ``spec(J) = spec(K) + {0}`` as multisets, via characteristic polynomials."""
    return charpoly_gap(J, K) <= tol


def classify_partial_support(system: ParallelLinkSystem, flow, alpha: float,
                             tol: float = 1e-9) -> str:
    """Linear-stability verdict at a Hedge fixed point that may miss some links.

    An unused link cheaper than the common delay is unstable; a tie is
    inconclusive; otherwise the verdict comes from the spectral radius of the
    deflated Jacobian of the used links.
    """
    return _partial_support(system, flow, alpha, tol)[0]


def _partial_support(system, flow, alpha, tol):
    x = _flows(flow)
    if x.shape != (system.m,):
        raise DimensionError(f"flow has {x.size} entries, system has {system.m} links")
    d = system.demand
    unit = system.unit_demand()
    u = x / d
    on = u > 0
    if not np.any(on):
        raise DomainError("flow is empty")
    c = system.costs(x)
    lam = float(np.mean(c[on]))
    if np.max(c[on]) - np.min(c[on]) > tol * max(1.0, abs(lam)):
        raise DomainError("flow is not a fixed point: used links have different delays")
    idle = system.offsets[~on]
    if np.any(idle < lam - tol):
        return UNSTABLE, None
    if np.any(np.abs(idle - lam) <= tol):
        return INCONCLUSIVE, None
    if np.count_nonzero(on) == 1:
        return STABLE, 0.0
    block = unit.restrict(np.flatnonzero(on))
    ub = u[on] / u[on].sum()
    r = spectral_radius(deflated_k(block, ub, alpha).K)
    if r < 1.0 - STABILITY_MARGIN:
        return STABLE, r
    if r > 1.0 + STABILITY_MARGIN:
        return UNSTABLE, r
    return INCONCLUSIVE, r


# ---------------------------------------------------------------------- chaos


def hedge_scalar_map(system: ParallelLinkSystem, alpha: float) -> Callable:
    """Hedge on two links as a map of the share ``x`` routed on link 1."""
    if system.m != 2:
        raise DomainError(f"the scalar Hedge map needs exactly 2 links, got {system.m}")
    r1, r2 = system.offsets
    s1, s2 = system.slopes
    d = system.demand

    def H(x):
        x = np.asarray(x, dtype=float)
        c1 = r1 + s1 * d * x
        c2 = r2 + s2 * d * (1.0 - x)
        with np.errstate(over="ignore"):
            ratio = np.exp(-alpha * (c2 - c1))
            out = x / (x + (1.0 - x) * ratio)
        # avoid 0/0 where the weight on link 2 overflowed and x = 0
        return np.where(x == 0, 0.0, out)

    return H


@dataclass(frozen=True)
class Orbit:
    period: int
    points: tuple[float, ...]


def _iterate(H, x, p):
    for _ in range(p):
        x = H(x)
    return x


def find_periodic_orbits(H: Callable, p: int, grid_n: int = 200_000, tol: float = 1e-12,
                         include_divisors: bool = False) -> list[Orbit]:
    """Periodic orbits of a map of [0, 1] from the roots of ``H^p(x) - x``.

    Roots come from sign changes on a uniform grid refined by bisection.
    Orbits are grouped by iterating ``H`` and only those of minimal period
    ``p`` are kept unless ``include_divisors`` is set.
    """
    if p < 1:
        raise DomainError("period must be at least 1")
    if grid_n < 10:
        raise DomainError("grid_n must be at least 10")
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    D = _iterate(H, grid, p) - grid
    roots = list(grid[D == 0.0])
    bracket = np.flatnonzero(D[:-1] * D[1:] < 0)
    lo, hi = grid[bracket], grid[bracket + 1]
    dlo = D[bracket]
    for _ in range(200):
        if lo.size == 0 or np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        dm = _iterate(H, mid, p) - mid
        left = np.sign(dm) == np.sign(dlo)
        lo = np.where(left, mid, lo)
        dlo = np.where(left, dm, dlo)
        hi = np.where(left, hi, mid)
    roots.extend(0.5 * (lo + hi))
    roots = np.sort(np.asarray(roots))
    if roots.size:
        keep = np.concatenate([[True], np.diff(roots) > 10 * tol])
        roots = roots[keep]

    match = 0.5 / grid_n
    divisors = [q for q in range(1, p + 1) if p % q == 0]
    used = np.zeros(roots.size, dtype=bool)
    orbits = []
    for k, r in enumerate(roots):
        if used[k]:
            continue
        period = next(q for q in divisors
                      if q == p or abs(float(_iterate(H, r, q)) - r) < match)
        members = [k]
        y = r
        for _ in range(period - 1):
            y = float(H(y))
            j = int(np.argmin(np.abs(roots - y)))
            if abs(roots[j] - y) < match:
                members.append(j)
        used[members] = True
        if period == p or include_divisors:
            orbits.append(Orbit(period, tuple(float(roots[j]) for j in sorted(set(members)))))
    return orbits


# ---------------------------------------------------------------- dominance


def _network(net) -> CongestionNetwork:
    if isinstance(net, ParallelLinkSystem):
        return net.to_network()
    if isinstance(net, CongestionNetwork):
        return net
    raise TypeError(f"expected a congestion network, got {type(net).__name__}")


def _path_flow(network: CongestionNetwork, x) -> np.ndarray:
    x = _flows(x)
    if x.shape != (network.incidence.shape[1],):
        raise DimensionError(f"flow has {x.size} entries, network has "
                             f"{network.incidence.shape[1]} paths")
    return x


def beckmann_potential(network, flow) -> float:
    """``sum_e int_0^{x_e} c_e``."""
    net = _network(network)
    return net.potential(_path_flow(net, flow))


def mixed_cost(network, x, z) -> float:
    """``c(x|z) = sum_e c_e(z_e) x_e``: cost of flow ``x`` under the loads of ``z``."""
    net = _network(network)
    x = _path_flow(net, x)
    z = _path_flow(net, z)
    return float(net.link_costs(net.link_loads(z)) @ net.link_loads(x))


def _pair(net, x, y):
    x = _path_flow(net, x)
    y = _path_flow(net, y)
    if np.allclose(x, y, rtol=0.0, atol=DOMINANCE_TOL):
        raise DegeneratePairError("x and y coincide")
    return x, y


def delta_epsilon(network, x, y, eps):
    """``c(x|z) - c(y|z)`` with ``z = (1 - eps) x + eps y``; vectorized over ``eps``."""
    net = _network(network)
    x, y = _pair(net, x, y)
    e = np.asarray(eps, dtype=float)
    if np.any(e < 0) or np.any(e > 1):
        raise DomainError("eps must lie in [0, 1]")
    lx, ly = net.link_loads(x), net.link_loads(y)
    out = np.array([net.link_costs((1.0 - t) * lx + t * ly) @ (lx - ly) for t in e.reshape(-1)])
    return float(out[0]) if e.ndim == 0 else out.reshape(e.shape)


def invades(network, y, x, tol: float = DOMINANCE_TOL) -> bool:
    """Whether mutant flow ``y`` does better than incumbent ``x`` at ``x``'s loads."""
    net = _network(network)
    x, y = _pair(net, x, y)
    return mixed_cost(net, y, x) < mixed_cost(net, x, x) - tol


def dominates(network, x, y, tol: float = DOMINANCE_TOL) -> bool:
    """Whether ``x`` keeps up with ``y`` at every mix, i.e. ``delta(0|x, y) <= 0``."""
    return float(delta_epsilon(network, x, y, 0.0)) <= tol


def invasion_barrier(network, y, x, grid_n: int = 101, tol: float = DOMINANCE_TOL) -> float:
    """Share of ``y`` at which ``delta(eps|x, y)`` crosses zero.

    Returns 1 when ``x`` dominates (``delta(0) <= 0``) and 0 when ``delta``
    stays positive on all of [0, 1].
    """
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    net = _network(network)
    x, y = _pair(net, x, y)
    grid = np.linspace(0.0, 1.0, grid_n)
    vals = delta_epsilon(net, x, y, grid)
    if vals[0] <= tol:
        return 1.0
    if np.all(vals > 0):
        return 0.0
    k = int(np.argmax(vals <= 0))
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if delta_epsilon(net, x, y, mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def is_incrementally_deployable(network, x, y, grid_n: int = 101,
                                tol: float = DOMINANCE_TOL) -> bool:
    """``c(x|z) <= c(y|z)`` at ``z = (1 - eps) y + eps x`` for every grid ``eps``."""
    net = _network(network)
    x, y = _pair(net, x, y)
    for eps in np.linspace(0.0, 1.0, grid_n):
        z = (1.0 - eps) * y + eps * x
        if mixed_cost(net, x, z) > mixed_cost(net, y, z) + tol:
            return False
    return True


# ---------------------------------------------------------------------- report


def routing_report(system: ParallelLinkSystem, alpha: float, flow=None,
                   periods=()) -> dict:
    """Wardrop flow, step bound, spectral radius at ``alpha`` and the stability verdict."""
    x = wardrop_parallel_affine(system).flows if flow is None else _flows(flow)
    verdict, rho = _partial_support(system, x, alpha, 1e-9)
    on = x > 0
    abar = None
    if np.count_nonzero(on) >= 2:
        block = system.unit_demand().restrict(np.flatnonzero(on))
        u = x[on] / x[on].sum()
        abar = alpha_bar(block, u)
        if rho is None:
            rho = spectral_radius(deflated_k(block, u, alpha).K)
    elif rho is None:
        rho = 0.0
    report = {"wardrop": [float(v) for v in x], "alpha_bar": abar,
              "spectral_radius_at": {"alpha": float(alpha), "rho": float(rho)},
              "verdict": verdict}
    if periods:
        if system.m != 2:
            raise DomainError("periodic orbits need exactly 2 links")
        H = hedge_scalar_map(system, alpha)
        report["orbits"] = [{"period": o.period, "points": list(o.points)}
                            for p in periods for o in find_periodic_orbits(H, p)]
    return report
