"""Property tests for the invariants of the maps, the analysis tools and routing."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mwstab.analysis import (
    bimatrix_first_difference,
    first_difference_bound,
    is_fixed_point,
    kantorovich_bound,
    relative_entropy,
    weighted_growth,
)
from mwstab.dynamics import (
    ess_oracle_rate,
    hedge_step,
    replicator_step,
    replicator_vector_field,
)
from mwstab.games import (
    Commodity,
    CongestionNetwork,
    LinkCost,
    State,
    congestion_game,
    linear_population_game,
    linear_symmetric_game,
    make_simplotope,
    normalize_game,
)
from mwstab.routing import (
    ParallelLinkSystem,
    alpha_bar,
    beckmann_potential,
    deflated_k,
    delta_epsilon,
    wardrop_parallel_affine,
)

seeds = st.integers(0, 2 ** 32 - 1)
rates = st.floats(1e-3, 10.0)
SETTINGS = settings(max_examples=60, deadline=None)


def random_game(rng, normalized=True):
    n = int(rng.integers(1, 4))
    counts = rng.integers(1, 4, n)
    counts[0] = max(counts[0], 2)
    masses = rng.uniform(0.2, 2.0, n)
    s = make_simplotope(masses, counts)
    g = linear_population_game(s, rng.normal(size=(s.m, s.m)), rng.normal(size=s.m))
    return normalize_game(g) if normalized else g


def random_state(rng, structure, zeros=False):
    parts = []
    for w, k in zip(structure.masses, structure.strategy_counts):
        p = rng.dirichlet(np.ones(k))
        if zeros and k > 1:
            p[rng.random(k) < 0.3] = 0.0
            if p.sum() == 0:
                p[0] = 1.0
        parts.append(w * p / p.sum())
    return State(structure, np.concatenate(parts))


def hawk_dove():
    return normalize_game(linear_symmetric_game([[-1, 2], [0, 1]]))


@SETTINGS
@given(seeds, rates)
def test_forward_invariance_and_support(seed, alpha):
    rng = np.random.default_rng(seed)
    g = random_game(rng)
    x = random_state(rng, g.structure, zeros=True)
    for step in (replicator_step, hedge_step):
        y = step(g, x, alpha)  # State construction checks masses to 1e-12
        assert np.array_equal(y.values == 0, x.values == 0)


@SETTINGS
@given(seeds, rates)
def test_better_response(seed, alpha):
    rng = np.random.default_rng(seed)
    g = random_game(rng)
    x = random_state(rng, g.structure)
    assume(not is_fixed_point(g, x, 1e-6))
    F = g(x)
    assert replicator_step(g, x, alpha).values @ F > x.values @ F


@SETTINGS
@given(seeds)
def test_better_response_cost_orientation(seed):
    rng = np.random.default_rng(seed)
    g = congestion_game(CongestionNetwork(
        [LinkCost((r, s)) for r, s in zip(rng.uniform(0, 1, 3), rng.uniform(0.1, 2, 3))],
        [Commodity(1.0, ((0,), (1,), (2,)))]))
    x = rng.dirichlet(np.ones(3))
    c = g(x)
    assume(np.ptp(c) > 1e-6)
    assert replicator_step(g, x, 0.05).values @ c < x @ c


@SETTINGS
@given(seeds)
def test_taylor_consistency(seed):
    rng = np.random.default_rng(seed)
    g = random_game(rng)
    x = random_state(rng, g.structure)
    ratios = []
    for k in range(7):
        a = 0.5 / 2 ** k
        diff = np.max(np.abs(hedge_step(g, x, a).values - replicator_step(g, x, a).values))
        ratios.append(diff / a ** 2)
    assert max(ratios) < 2.0


@SETTINGS
@given(seeds)
def test_normalization_preserves_superiority_signs(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    g = linear_symmetric_game(rng.normal(scale=3, size=(m, m)))
    n = normalize_game(g)
    x, y = rng.dirichlet(np.ones(m), size=2)
    before = (y - x) @ g(x)
    after = (y - x) @ n(x)
    assume(abs(before) > 1e-9)
    assert np.sign(before) == np.sign(after)


@SETTINGS
@given(seeds)
def test_beckmann_gradient(seed):
    rng = np.random.default_rng(seed)
    links = [LinkCost(tuple(rng.uniform(0, 1, int(rng.integers(1, 4))))) for _ in range(4)]
    net = CongestionNetwork(links, [Commodity(1.0, ((0, 1), (2,))), Commodity(0.7, ((1,), (3,)))])
    g = congestion_game(net)
    x = random_state(rng, g.structure).values
    d = np.array([1.0, -1.0, 1.0, -1.0]) * rng.uniform(0.5, 1.0)
    h = 1e-6
    fd = (g.potential(x + h * d) - g.potential(x - h * d)) / (2 * h)
    assert abs(fd - g(x) @ d) <= 1e-6 * max(1.0, abs(fd))


@SETTINGS
@given(seeds)
def test_fields_total_on_vertices(seed):
    rng = np.random.default_rng(seed)
    g = random_game(rng, normalized=False)
    x = np.zeros(g.structure.m)
    for w, sl in zip(g.structure.masses, g.structure.slices):
        x[sl.start + int(rng.integers(0, sl.stop - sl.start))] = w
    assert np.all(np.isfinite(g(State(g.structure, x))))
    assert np.array_equal(g(x), g(x))


@SETTINGS
@given(seeds, st.floats(1e-3, 10.0))
def test_first_difference_bound(seed, alpha):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    C = rng.uniform(0.01, 0.99, (m, m))
    P_star, P, Q = rng.dirichlet(np.ones(m), size=3)
    assert bimatrix_first_difference(C, P_star, P, Q, alpha) <= (
        first_difference_bound(C, P_star, P, Q, alpha) + 1e-12)


@SETTINGS
@given(seeds)
def test_kantorovich(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 8))
    lhs, rhs = kantorovich_bound(rng.uniform(0.01, 10, k), rng.dirichlet(np.ones(k)))
    assert lhs <= rhs * (1 + 1e-12)


@SETTINGS
@given(seeds)
def test_kantorovich_equality_at_two_point_extremes(seed):
    rng = np.random.default_rng(seed)
    lo, hi = np.sort(rng.uniform(0.1, 5, 2))
    lhs, rhs = kantorovich_bound([lo, hi], [0.5, 0.5])
    assert abs(lhs - rhs) <= 1e-12 * rhs


@SETTINGS
@given(seeds)
def test_relative_entropy_dominates_squared_distance(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 8))
    P, Q = rng.dirichlet(np.full(k, rng.uniform(0.1, 3)), size=2)
    assert relative_entropy(P, Q) >= np.sum((P - Q) ** 2) - 1e-15


@SETTINGS
@given(seeds, st.floats(1e-3, 10.0))
def test_weighted_growth_exceeds_one_for_hawk_dove(seed, alpha):
    x = np.random.default_rng(seed).dirichlet([1, 1])
    assume(abs(x[0] - 0.5) > 1e-6)
    assert weighted_growth(hawk_dove(), x, [0.5, 0.5], alpha) > 1.0


@SETTINGS
@given(seeds)
def test_ess_oracle_rate_decreases_entropy(seed):
    g = hawk_dove()
    x = np.random.default_rng(seed).dirichlet([1, 1])
    assume(abs(x[0] - 0.5) > 1e-4)
    a = ess_oracle_rate(g, x, [0.5, 0.5])
    y = replicator_step(g, x, a).values
    assert relative_entropy([0.5, 0.5], y) < relative_entropy([0.5, 0.5], x)


def full_support_system(rng):
    while True:
        m = int(rng.integers(2, 9))
        s = ParallelLinkSystem(rng.uniform(0, 1, m), rng.uniform(0.2, 5, m))
        x = wardrop_parallel_affine(s).flows
        if np.all(x > 1e-6):
            return s, x


@SETTINGS
@given(seeds)
def test_no_eigenvalue_one(seed):
    rng = np.random.default_rng(seed)
    s, x = full_support_system(rng)
    for a in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        K = deflated_k(s, x, a).K
        assert abs(np.linalg.det(K - np.eye(K.shape[0]))) > 0


@SETTINGS
@given(seeds)
def test_wardrop_minimizes_beckmann(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    s = ParallelLinkSystem(rng.uniform(0, 1, m), rng.uniform(0.1, 3, m), rng.uniform(0.5, 2))
    w = wardrop_parallel_affine(s).flows
    y = s.demand * rng.dirichlet(np.ones(m))
    assert beckmann_potential(s, w) <= beckmann_potential(s, y) + 1e-12
    if np.max(np.abs(y - w)) > 1e-9:
        assert beckmann_potential(s, w) < beckmann_potential(s, y)


@SETTINGS
@given(seeds)
def test_descent_direction(seed):
    rng = np.random.default_rng(seed)
    links = [LinkCost((r, s)) for r, s in zip(rng.uniform(0, 1, 5), rng.uniform(0.1, 3, 5))]
    net = CongestionNetwork(links, [Commodity(1.0, ((0, 1), (2,), (3,))),
                                    Commodity(0.5, ((1,), (4,)))])
    g = congestion_game(net)
    x = random_state(rng, g.structure)
    assume(not is_fixed_point(g, x, 1e-6))
    assert replicator_vector_field(g, x) @ g(x) < 0
    assert g.potential(hedge_step(g, x, 1e-4).values) < g.potential(x.values)


@SETTINGS
@given(seeds)
def test_delta_strictly_decreasing(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    s = ParallelLinkSystem(rng.uniform(0, 1, m), rng.uniform(0.1, 3, m))
    x, y = rng.dirichlet(np.ones(m), size=2)
    d = delta_epsilon(s, x, y, np.linspace(0, 1, 101))
    scale = max(1.0, np.max(np.abs(d)))
    assert np.all(np.diff(d) < -1e-12 * scale)


@SETTINGS
@given(seeds)
def test_alpha_bar_keeps_k_nonnegative(seed):
    s, x = full_support_system(np.random.default_rng(seed))
    K = deflated_k(s, x, alpha_bar(s, x)).K
    assert K.min() >= -1e-12
