"""Relative-entropy Lyapunov tools, the Kantorovich inequality and equilibrium tests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .divergence import relative_entropy
from .dynamics import REPLICATOR, growth_factors, growth_ratios, line_search_terms, step
from .errors import DimensionError, DomainError
from .games import GameField, State, _values, as_state, payoff_values, support_spread

DEFAULT_TOL = 1e-9
SUPERIORITY_MARGIN = 1e-12

__all__ = [
    "relative_entropy", "lyapunov_first_difference", "bimatrix_first_difference",
    "first_difference_bound", "weighted_growth", "kantorovich_bound", "g_factor",
    "is_fixed_point", "is_nash", "nash_gap", "superiority", "ess_certificate_sample",
    "EssVerdict", "ClassificationReport", "classify",
]


def lyapunov_first_difference(game: GameField, state, target, rates,
                              dynamic: str = REPLICATOR) -> float:
    """``RE(target, T(X)) - RE(target, X)`` for one step of ``dynamic``."""
    x = _values(game, state)
    t = np.asarray(as_state(game.structure, target).values)
    after = step(game, x, rates, dynamic).values
    return relative_entropy(t, after) - relative_entropy(t, x)


def bimatrix_first_difference(C, P_star, P, Q, alpha: float) -> float:
    """Realized change of ``RE(P*, .)`` when ``P`` responds to ``Q``."""
    G = growth_factors(C, P, Q, alpha)
    P = np.asarray(P, dtype=float)
    return relative_entropy(P_star, P * G) - relative_entropy(P_star, P)


def first_difference_bound(C, P_star, P, Q, alpha: float) -> float:
    """Upper bound ``sum P*_i / G_i - 1`` on :func:`bimatrix_first_difference`."""
    G = growth_factors(C, P, Q, alpha)
    P_star = np.asarray(P_star, dtype=float)
    on = P_star > 0
    return float(np.sum(P_star[on] / G[on]) - 1.0)


def weighted_growth(game: GameField, state, target, alpha) -> float:
    """``sum X*_ij G_ij(X)``; exceeds the total mass when ``X*`` beats ``X``."""
    t = np.asarray(as_state(game.structure, target).values)
    return float(t @ growth_ratios(game, state, alpha))


def kantorovich_bound(values, weights) -> tuple[float, float]:
    """Both sides of ``(sum w x)(sum w / x) <= (x_min + x_max)^2 / (4 x_min x_max)``.

    Extremes are taken over values carrying positive weight.
    """
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.shape != w.shape or x.ndim != 1 or x.size == 0:
        raise DimensionError("values and weights must be equal-length vectors")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError("Kantorovich values must be positive")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
        raise DomainError("weights must be non-negative and sum to 1")
    lhs = float((w @ x) * (w @ (1.0 / x)))
    on = w > 0
    lo, hi = x[on].min(), x[on].max()
    rhs = float((0.5 * (lo + hi)) ** 2 / (lo * hi))
    return lhs, rhs


def g_factor(game: GameField, state, alpha: float, support_tol: float = 0.0) -> float:
    """Kantorovich factor of the replicator growth ratios over the support."""
    return line_search_terms(game, state, alpha, support_tol).g


# ------------------------------------------------------------------ equilibria


def is_fixed_point(game: GameField, state, tol: float = DEFAULT_TOL) -> bool:
    """Supported payoffs constant within ``tol`` in every population."""
    return bool(np.all(support_spread(game, state) <= tol))


def nash_gap(game: GameField, state) -> float:
    """Worst of the supported payoff spread and the best unsupported advantage."""
    x = _values(game, state)
    F = payoff_values(game, x)
    gap = 0.0
    for s in game.structure.slices:
        on = x[s] > 0
        best = float(F[s][on].max())
        gap = max(gap, best - float(F[s][on].min()), float(F[s].max()) - best)
    return gap


def is_nash(game: GameField, state, tol: float = DEFAULT_TOL) -> bool:
    """Supported payoffs equal and no unsupported strategy better, both within ``tol``."""
    return nash_gap(game, state) <= tol


def superiority(game: GameField, candidate, state) -> float:
    """``(X* - X).F(X)`` in payoff orientation."""
    xs = np.asarray(as_state(game.structure, candidate).values)
    x = _values(game, state)
    return float((xs - x) @ payoff_values(game, x))


def _tangent_basis(structure) -> np.ndarray:
    """Orthonormal basis (columns) of the per-population zero-sum subspace."""
    cols = []
    for s in structure.slices:
        k = s.stop - s.start
        if k < 2:
            continue
        # orthonormal complement of the all-ones vector within the block
        q, _ = np.linalg.qr(np.column_stack([np.ones(k), np.eye(k)[:, :k - 1]]))
        for j in range(1, k):
            col = np.zeros(structure.m)
            col[s] = q[:, j]
            cols.append(col)
    return np.array(cols).T if cols else np.zeros((structure.m, 0))


CERTIFIED = "certified"
REFUTED = "refuted"
INAPPLICABLE = "inapplicable"


@dataclass
class EssVerdict:
    status: str
    witness: np.ndarray | None = None
    witness_value: float | None = None
    min_superiority: float | None = None
    n_samples: int = 0


def ess_certificate_sample(game: GameField, candidate, radius: float, n_samples: int = 1000,
                           rng_seed: int = 0, margin: float = SUPERIORITY_MARGIN,
                           tol: float = DEFAULT_TOL, max_tries: int | None = None) -> EssVerdict:
    """Check strict superiority of ``candidate`` on states sampled near it.

    Samples are uniform in the Euclidean ball of ``radius`` around the
    candidate inside the simplotope (rejection sampling in the tangent space).
    A sample passes when ``(X* - X).F(X) > margin * |X* - X|^2``; the witness
    of a refutation is the worst sample.
    """
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    xs = np.asarray(as_state(game.structure, candidate).values)
    if not is_nash(game, xs, tol):
        return EssVerdict(INAPPLICABLE)
    basis = _tangent_basis(game.structure)
    dim = basis.shape[1]
    if dim == 0:
        return EssVerdict(CERTIFIED, n_samples=0)
    rng = np.random.default_rng(rng_seed)
    max_tries = max_tries or 1000 * n_samples
    worst, worst_x, worst_v = np.inf, None, None
    accepted = tries = 0
    while accepted < n_samples and tries < max_tries:
        batch = min(max(2 * (n_samples - accepted), 64), max_tries - tries)
        tries += batch
        v = rng.standard_normal((batch, dim))
        v *= (radius * rng.random(batch) ** (1.0 / dim) / np.linalg.norm(v, axis=1))[:, None]
        pts = xs + v @ basis.T
        ok = np.all(pts >= 0, axis=1) & np.any(v != 0, axis=1)
        for p in pts[ok][: n_samples - accepted]:
            p = np.maximum(p, 0.0)
            d = xs - p
            value = float(d @ payoff_values(game, p))
            scaled = value - margin * float(d @ d)
            if scaled < worst:
                worst, worst_x, worst_v = scaled, p, value
            accepted += 1
    if accepted == 0:
        raise DomainError("no sample landed inside the state space; increase max_tries")
    if worst > 0:
        return EssVerdict(CERTIFIED, min_superiority=worst, n_samples=accepted)
    return EssVerdict(REFUTED, worst_x, worst_v, worst, accepted)


# ---------------------------------------------------------------------- report


@dataclass
class ClassificationReport:
    is_fixed_point: bool
    is_nash: bool
    ess: EssVerdict
    residuals: dict = field(default_factory=dict)

    @property
    def ess_verdict(self) -> str:
        return self.ess.status

    def to_dict(self) -> dict:
        out = {"fixed_point": self.is_fixed_point, "nash": self.is_nash, "ess": self.ess.status}
        if self.ess.witness is not None:
            out["witness"] = [float(v) for v in self.ess.witness]
        out["residuals"] = {k: float(v) for k, v in self.residuals.items()}
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def classify(game: GameField, candidate, radius: float = 0.1, n_samples: int = 1000,
             rng_seed: int = 0, tol: float = DEFAULT_TOL) -> ClassificationReport:
    x = as_state(game.structure, candidate)
    verdict = ess_certificate_sample(game, x, radius, n_samples, rng_seed, tol=tol)
    residuals = {"support_spread": float(np.max(support_spread(game, x))),
                 "nash_gap": nash_gap(game, x)}
    if verdict.min_superiority is not None:
        residuals["min_superiority"] = verdict.min_superiority
    return ClassificationReport(is_fixed_point(game, x, tol), is_nash(game, x, tol), verdict,
                                residuals)
