import json

import numpy as np
import pytest

from mwstab.analysis import (
    bimatrix_first_difference,
    classify,
    ess_certificate_sample,
    first_difference_bound,
    g_factor,
    is_fixed_point,
    is_nash,
    kantorovich_bound,
    lyapunov_first_difference,
    relative_entropy,
    superiority,
    weighted_growth,
)
from mwstab.errors import DimensionError, DomainError, SupportError
from mwstab.games import (
    linear_population_game,
    linear_symmetric_game,
    make_simplotope,
    normalize_game,
    parallel_links_game,
)

RPS = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]


def hawk_dove():
    return normalize_game(linear_symmetric_game([[-1, 2], [0, 1]]))


def test_relative_entropy_examples():
    assert relative_entropy([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert relative_entropy([1, 0], [0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-15)
    with pytest.raises(SupportError):
        relative_entropy([0.5, 0.5], [1, 0])


def test_lyapunov_first_difference_hand_value():
    d = lyapunov_first_difference(hawk_dove(), [0.9, 0.1], [0.5, 0.5], 0.1)
    before = relative_entropy([0.5, 0.5], [0.9, 0.1])
    assert before == pytest.approx(0.510826, abs=1e-6)
    assert before + d == pytest.approx(0.504643, abs=1e-5)
    assert d == pytest.approx(-0.00619, abs=5e-5)


def test_lyapunov_first_difference_trivial_cases():
    assert lyapunov_first_difference(hawk_dove(), [0.5, 0.5], [0.5, 0.5], 0.3) == 0.0
    g = linear_symmetric_game(np.full((3, 3), 0.5))
    assert lyapunov_first_difference(g, [0.2, 0.3, 0.5], [0.6, 0.4, 0.0], 2.0) == pytest.approx(
        0.0, abs=1e-15)


def test_first_difference_below_bound():
    rng = np.random.default_rng(3)
    C = rng.uniform(0.05, 0.95, (4, 4))
    P_star, P, Q = rng.dirichlet(np.ones(4), size=3)
    for a in (0.01, 0.5, 3.0):
        assert bimatrix_first_difference(C, P_star, P, Q, a) <= (
            first_difference_bound(C, P_star, P, Q, a) + 1e-12)


def test_kantorovich_examples():
    assert kantorovich_bound([1, 2], [0.5, 0.5]) == pytest.approx((1.125, 1.125), abs=1e-15)
    assert kantorovich_bound([3, 3, 3], [0.2, 0.3, 0.5]) == pytest.approx((1.0, 1.0))
    lhs, rhs = kantorovich_bound([1, 2, 4], [1 / 3] * 3)
    assert lhs == pytest.approx(49 / 36) and rhs == pytest.approx(1.5625)


def test_kantorovich_rejects_non_positive():
    with pytest.raises(DomainError):
        kantorovich_bound([0.0, 1.0], [0.5, 0.5])


def test_g_factor():
    g = hawk_dove()
    assert g_factor(g, [0.9, 0.1], 0.0) == 1.0
    assert g_factor(g, [0.5, 0.5], 3.0) == 1.0
    x = [0.9, 0.1]
    ratios = [(g_factor(g, x, a) - 1) / a ** 2 for a in 0.5 ** np.arange(6)]
    assert max(ratios) < 2 * min(ratios)


def test_g_factor_empty_support():
    with pytest.raises(DimensionError):
        g_factor(hawk_dove(), [0.5, 0.5], 0.1, support_tol=0.6)


def test_fixed_point_examples():
    g = hawk_dove()
    assert is_fixed_point(g, [1, 0])
    assert is_fixed_point(g, [0.5, 0.5])
    assert not is_fixed_point(g, [0.9, 0.1])


def test_nash_examples():
    g = hawk_dove()
    assert not is_nash(g, [1, 0])
    assert is_nash(g, [0.5, 0.5])
    assert is_nash(parallel_links_game([0, 0], [1, 10]), [10 / 11, 1 / 11])
    # a non-Wardrop vertex of the routing game
    assert not is_nash(parallel_links_game([0, 0], [1, 10]), [0.0, 1.0])


def test_superiority_hawk_dove_closed_form():
    g = hawk_dove()
    for d in (0.4, 0.1, -0.3):
        x = [0.5 + d, 0.5 - d]
        assert superiority(g, [0.5, 0.5], x) == pytest.approx(0.4 * d ** 2, abs=1e-15)


def test_weighted_growth_above_one():
    g = hawk_dove()
    rng = np.random.default_rng(8)
    for _ in range(50):
        x = rng.dirichlet([1, 1])
        for a in (0.01, 1.0, 10.0):
            assert weighted_growth(g, x, [0.5, 0.5], a) > 1.0


def test_ess_certified_hawk_dove():
    v = ess_certificate_sample(hawk_dove(), [0.5, 0.5], 0.1, 1000, rng_seed=0)
    assert v.status == "certified" and v.n_samples == 1000


def test_ess_refuted_rps():
    g = normalize_game(linear_symmetric_game(RPS))
    v = ess_certificate_sample(g, np.full(3, 1 / 3), 0.1, 1000, rng_seed=0)
    assert v.status == "refuted"
    assert v.witness_value <= 0.0
    assert superiority(g, np.full(3, 1 / 3), v.witness) == v.witness_value


def test_ess_inapplicable_off_nash():
    assert ess_certificate_sample(hawk_dove(), [1, 0], 0.1, 10).status == "inapplicable"


def test_ess_radius_must_be_positive():
    with pytest.raises(DomainError):
        ess_certificate_sample(hawk_dove(), [0.5, 0.5], 0.0, 10)


def test_ess_samples_stay_in_ball():
    # boundary candidate: pure strategy 1 is a strict ESS here
    g = linear_symmetric_game([[0.6, 0.6], [0.2, 0.4]])
    v = ess_certificate_sample(g, [1.0, 0.0], 0.05, 200, rng_seed=1)
    assert v.status == "certified"


def test_ess_two_populations():
    s = make_simplotope([0.5, 0.5], [2, 2])
    # each population prefers its first strategy no matter what
    g = linear_population_game(s, np.zeros((4, 4)), [0.6, 0.2, 0.7, 0.1])
    v = ess_certificate_sample(g, [0.5, 0.0, 0.5, 0.0], 0.1, 300, rng_seed=2)
    assert v.status == "certified"


def test_classification_report_json():
    r = classify(hawk_dove(), [1, 0])
    d = json.loads(r.to_json())
    assert d["fixed_point"] is True and d["nash"] is False and d["ess"] == "inapplicable"
    assert "witness" not in d
    r = classify(normalize_game(linear_symmetric_game(RPS)), np.full(3, 1 / 3))
    d = json.loads(r.to_json())
    assert d["ess"] == "refuted" and len(d["witness"]) == 3
    assert set(d["residuals"]) >= {"support_spread", "nash_gap"}
