"""Discrete replicator and Hedge maps, step-size rules and the trajectory engine."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .divergence import relative_entropy
from .errors import (
    DimensionError,
    FixedPointError,
    NormalizationError,
    OracleInapplicableError,
    RateError,
    StepError,
    StepRuleFailure,
)
from .games import (
    GameField,
    State,
    _values,
    as_state,
    average_payoff,
    payoff_values,
    support_spread,
)

REPLICATOR = "replicator"
HEDGE = "hedge"
EXP_LIMIT = 700.0
FIXED_POINT_TOL = 1e-9


# ----------------------------------------------------------------- step rules


@dataclass(frozen=True)
class Constant:
    alpha: float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError(f"constant step size must be positive, got {self.alpha}")


@dataclass(frozen=True)
class PerPopulation:
    kappa: float

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class LineSearch:
    alpha0: float = 1.0
    max_halvings: int = 60
    support_tol: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha0) or self.alpha0 <= 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if int(self.max_halvings) != self.max_halvings or self.max_halvings < 1:
            raise ValueError(f"max_halvings must be an integer >= 1, got {self.max_halvings}")


@dataclass(frozen=True, eq=False)
class EssOracle:
    target: State
    safety: float = 0.9

    def __post_init__(self):
        if not isinstance(self.target, State):
            raise TypeError("the oracle target must be a State")
        if not 0.0 < self.safety < 1.0:
            raise ValueError(f"safety must lie in (0, 1), got {self.safety}")


StepRule = Union[Constant, PerPopulation, LineSearch, EssOracle]


def _coordinate_rates(game: GameField, rates) -> tuple[np.ndarray, np.ndarray]:
    """Return (per-population, per-coordinate) rate arrays."""
    n = game.structure.n
    r = np.asarray(rates, dtype=float)
    if r.ndim == 0:
        r = np.full(n, float(r))
    if r.shape != (n,):
        raise DimensionError(f"expected {n} rates, got shape {r.shape}")
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise StepError("rates must be finite and non-negative")
    return r, r[game.structure.population_index]


# ---------------------------------------------------------------------- maps


def replicator_step(game: GameField, state, rates) -> State:
    """One step of the discrete replicator ``X (1 + a F) / (1 + a avg)``."""
    x = _values(game, state)
    r, a = _coordinate_rates(game, rates)
    F = payoff_values(game, x)
    masses = np.asarray(game.structure.masses)
    avg = game.structure.block_sums(x * F) / masses
    den = 1.0 + r * avg
    if np.any(den <= 0):
        i = int(np.argmax(den <= 0))
        raise StepError(f"non-positive denominator in population {i}", population=i)
    num = x * (1.0 + a * F)
    if np.any(num < 0):
        i = int(game.structure.population_index[np.argmax(num < 0)])
        raise StepError(f"step size too large for negative payoffs in population {i}",
                        population=i)
    new = num / den[game.structure.population_index]
    # remove rounding drift so masses stay exact over long runs
    sums = game.structure.block_sums(new)
    new = new * (masses / sums)[game.structure.population_index]
    return State(game.structure, new)


def hedge_step(game: GameField, state, rates) -> State:
    """One step of Hedge ``X exp(a F)``, renormalized per population."""
    x = _values(game, state)
    r, a = _coordinate_rates(game, rates)
    E = a * payoff_values(game, x)
    if np.any(np.abs(E) > EXP_LIMIT):
        i = int(game.structure.population_index[np.argmax(np.abs(E) > EXP_LIMIT)])
        raise StepError(f"exponent exceeds {EXP_LIMIT} in population {i}", population=i)
    shift = np.array([E[s].max() for s in game.structure.slices])
    w = x * np.exp(E - shift[game.structure.population_index])
    masses = np.asarray(game.structure.masses)
    new = w * (masses / game.structure.block_sums(w))[game.structure.population_index]
    return State(game.structure, new)


STEPS = {REPLICATOR: replicator_step, HEDGE: hedge_step}


def step(game: GameField, state, rates, dynamic: str = REPLICATOR) -> State:
    try:
        fn = STEPS[dynamic]
    except KeyError:
        raise ValueError(f"unknown dynamic {dynamic!r}") from None
    return fn(game, state, rates)


def replicator_vector_field(game: GameField, state) -> np.ndarray:
    """Tangent ``X (F - avg)`` with ``F = -c`` for cost games; blocks sum to zero."""
    x = _values(game, state)
    F = payoff_values(game, x)
    avg = game.structure.block_sums(x * F) / np.asarray(game.structure.masses)
    return x * (F - avg[game.structure.population_index])


def bimatrix_mw_step(C, P, Q, alpha: float) -> np.ndarray:
    """Replicator response of ``P`` to opponent ``Q`` in the game ``(C, C^T)``."""
    C = np.asarray(C, dtype=float)
    P = np.asarray(P, dtype=float)
    G = growth_factors(C, P, Q, alpha)
    return P * G


def growth_factors(C, P, Q, alpha: float) -> np.ndarray:
    """``G_i = (1 + a (CQ)_i) / (1 + a P.CQ)``."""
    CQ = np.asarray(C, dtype=float) @ np.asarray(Q, dtype=float)
    return (1.0 + alpha * CQ) / (1.0 + alpha * float(np.asarray(P, dtype=float) @ CQ))


# --------------------------------------------------------------------- rates


def per_population_rates(game: GameField, state, kappa: float) -> np.ndarray:
    """``alpha_i = kappa omega_i / (X_i . F_i(X))``."""
    if not np.isfinite(kappa) or kappa <= 0:
        raise RateError(f"kappa must be positive, got {kappa}")
    x = _values(game, state)
    total = game.structure.block_sums(x * payoff_values(game, x))
    bad = total <= 0
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RateError(f"population {i} has non-positive average payoff {total[i]!r}",
                        population=i)
    return kappa * np.asarray(game.structure.masses) / total


def _check_normalized(game: GameField):
    if not game.maximizing:
        raise NormalizationError("the line search needs a payoff (maximize) field")
    if not np.isclose(game.structure.total_mass, 1.0, rtol=0, atol=1e-12):
        raise NormalizationError("the line search needs total mass 1; call normalize_game")
    if game.bounds is not None and not (game.bounds[0] > 0 and game.bounds[1] < 1):
        raise NormalizationError("payoffs must lie in (0, 1); call normalize_game")


@dataclass(frozen=True)
class LineSearchTerms:
    alpha: float
    g_minus_1: float
    t: float

    @property
    def g(self) -> float:
        return 1.0 + self.g_minus_1

    @property
    def h(self) -> float:
        return 1.0 / (1.0 + self.t)

    @property
    def f(self) -> float:
        return self.g * self.h

    @property
    def log_f(self) -> float:
        return float(np.log1p(self.g_minus_1) - np.log1p(self.t))


def line_search_terms(game: GameField, state, alpha: float, support_tol: float = 0.0) -> LineSearchTerms:
    """The factors of the acceptance test ``f(alpha) = g(alpha) h(alpha) < 1``.

    ``g`` is the Kantorovich factor of the growth ratios ``G`` over the support
    and ``h = 1 / (1 + t)`` with ``t = (a / (1 + a)) (X_hat - X).F(X)``.
    Both are kept as offsets from 1 because ``f - 1`` is second order in
    ``alpha`` and drowns in rounding when formed directly.
    """
    x = _values(game, state)
    F = payoff_values(game, x)
    d = growth_ratios(game, x, alpha, minus_one=True)
    on = x > support_tol
    if not np.any(on):
        raise DimensionError("state has empty support")
    dmin, dmax = d[on].min(), d[on].max()
    g_minus_1 = (dmax - dmin) ** 2 / (4.0 * (1.0 + dmin) * (1.0 + dmax))
    t = (alpha / (1.0 + alpha)) * float((x * d) @ F)
    return LineSearchTerms(float(alpha), float(g_minus_1), t)


def growth_ratios(game: GameField, state, alpha, minus_one: bool = False) -> np.ndarray:
    """Per-coordinate ``G = X_hat / X = (1 + a F) / (1 + a avg)``.

    With ``minus_one`` the offset ``G - 1 = a (F - avg) / (1 + a avg)`` is
    returned, computed without cancellation.
    """
    x = _values(game, state)
    _, a = _coordinate_rates(game, alpha)
    F = payoff_values(game, x)
    avg = game.structure.block_sums(x * F) / np.asarray(game.structure.masses)
    avg = avg[game.structure.population_index]
    if minus_one:
        return a * (F - avg) / (1.0 + a * avg)
    return (1.0 + a * F) / (1.0 + a * avg)


def line_search_rate(game: GameField, state, alpha0: float = 1.0, max_halvings: int = 60,
                     support_tol: float = 0.0) -> float:
    """First ``alpha0 / 2**k`` (``k <= max_halvings``) with ``f(alpha) < 1``."""
    _check_normalized(game)
    x = _values(game, state)
    if np.all(support_spread(game, x, support_tol) <= FIXED_POINT_TOL):
        raise FixedPointError("line search called at a fixed point")
    for k in range(int(max_halvings) + 1):
        alpha = alpha0 / 2.0 ** k
        if line_search_terms(game, x, alpha, support_tol).log_f < 0.0:
            return alpha
    raise StepRuleFailure(
        f"no step size alpha0/2^k with k <= {max_halvings} passed the acceptance test")


def ess_oracle_rate(C, X, X_star, safety: float = 0.9) -> float:
    """Safety-scaled step bound from the ESS superiority margin of ``X``.

    ``C`` is a payoff matrix or a single-population bimatrix/QP game.
    """
    if isinstance(C, GameField):
        if "matrix" not in C.params:
            raise OracleInapplicableError("the ESS oracle needs a symmetric bimatrix game")
        C = C.params["matrix"]
    C = np.asarray(C, dtype=float)
    X = np.asarray(X.values if isinstance(X, State) else X, dtype=float)
    Xs = np.asarray(X_star.values if isinstance(X_star, State) else X_star, dtype=float)
    if not 0.0 < safety < 1.0:
        raise ValueError("safety must lie in (0, 1)")
    if C.shape != (X.size, X.size) or Xs.shape != X.shape:
        raise DimensionError("matrix and states disagree in dimension")
    CX = C @ X
    on = X > 0
    spread = float(CX[on].max() - CX[on].min())
    superiority = float(Xs @ CX - X @ CX)
    if spread <= 0.0:
        raise OracleInapplicableError("payoffs are equal on the support (equalizer point)")
    delta = spread ** 4 / 16.0 + superiority * spread ** 2
    if superiority <= 0.0 or delta <= 0.0:
        raise OracleInapplicableError("state lies outside the superiority region of the target")
    bound = -0.5 + np.sqrt(delta) / (0.5 * spread ** 2)
    return float(safety * bound)


def rates_for(game: GameField, state, rule: StepRule) -> np.ndarray:
    """Per-population step sizes chosen by ``rule`` at ``state``."""
    n = game.structure.n
    if isinstance(rule, Constant):
        return _coordinate_rates(game, rule.alpha)[0]
    if isinstance(rule, PerPopulation):
        return per_population_rates(game, state, rule.kappa)
    if isinstance(rule, LineSearch):
        return np.full(n, line_search_rate(game, state, rule.alpha0, rule.max_halvings,
                                           rule.support_tol))
    if isinstance(rule, EssOracle):
        return np.full(n, ess_oracle_rate(game, state, rule.target, rule.safety))
    raise TypeError(f"unknown step rule {rule!r}")


# ---------------------------------------------------------------- trajectory

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STEP_RULE_FAILURE = "step_rule_failure"


@dataclass
class Trajectory:
    iterates: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)
    average_payoffs: list = field(default_factory=list)
    stop_reason: str = MAX_ITERS
    message: str = ""

    @property
    def final(self) -> State:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        return len(self.step_sizes)

    def to_csv(self, path_or_file):
        """Write one row per iterate; ``alpha`` is the largest rate of the outgoing step."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            m = self.iterates[0].structure.m
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter"] + [f"x_{j}" for j in range(m)] + ["alpha", "residual", "lyapunov"])
            for k, s in enumerate(self.iterates):
                alpha = _fmt(np.max(self.step_sizes[k])) if k < len(self.step_sizes) else ""
                lyap = self.lyapunov[k] if k < len(self.lyapunov) else None
                res = self.residuals[k] if k < len(self.residuals) else None
                w.writerow([k] + [_fmt(v) for v in s.values] + [alpha,
                           "" if res is None else _fmt(res),
                           "" if lyap is None else _fmt(lyap)])
        finally:
            if own:
                fh.close()


def _fmt(v) -> str:
    return "%.17g" % float(v)


def run_trajectory(game: GameField, init, step_rule: StepRule, dynamic: str = REPLICATOR,
                   max_iters: int = 10_000, stop_tol: float = 1e-9, target=None) -> Trajectory:
    """Iterate the chosen map until the fixed-point residual drops below ``stop_tol``.

    The residual is the sup-norm change of one step at the rule's constant
    rate, or at a probe rate of 1 for adaptive rules.
    """
    if stop_tol <= 0:
        raise ValueError("stop_tol must be positive")
    if dynamic not in STEPS:
        raise ValueError(f"unknown dynamic {dynamic!r}")
    x = as_state(game.structure, init)
    if target is None and isinstance(step_rule, EssOracle):
        target = step_rule.target
    target_values = None if target is None else np.asarray(as_state(game.structure, target).values)
    probe = _coordinate_rates(game, step_rule.alpha)[0] if isinstance(step_rule, Constant) \
        else np.ones(game.structure.n)
    traj = Trajectory()

    def record(s: State):
        traj.iterates.append(s)
        traj.average_payoffs.append(average_payoff(game, s))
        traj.lyapunov.append(None if target_values is None
                             else relative_entropy(target_values, s.values))

    record(x)
    for _ in range(max_iters + 1):
        try:
            residual = float(np.max(np.abs(step(game, x, probe, dynamic).values - x.values)))
        except StepError:
            residual = float("inf")
        traj.residuals.append(residual)
        if residual < stop_tol:
            traj.stop_reason = CONVERGED
            return traj
        if traj.iterations >= max_iters:
            break
        try:
            rates = rates_for(game, x, step_rule)
            x = step(game, x, rates, dynamic)
        except FixedPointError:
            traj.stop_reason = CONVERGED
            traj.message = "step rule reported a fixed point"
            return traj
        except (StepRuleFailure, StepError) as exc:
            traj.stop_reason = STEP_RULE_FAILURE
            traj.message = str(exc)
            return traj
        traj.step_sizes.append(rates)
        record(x)
    traj.stop_reason = MAX_ITERS
    return traj
