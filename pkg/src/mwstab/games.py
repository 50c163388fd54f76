"""State spaces, population games and the built-in game families.

A population game is a vector field ``F`` on a simplotope: a product of
scaled simplexes, one per population, where population ``i`` has mass
``omega_i`` spread over ``m_i`` pure strategies. States are stored as flat
vectors of length ``m = sum(m_i)`` ordered population by population.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable, Mapping, Sequence

import jsonschema
import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    DimensionError,
    DomainError,
    GameSpecError,
    InvalidStructureError,
    ModelError,
    NormalizationError,
    SymmetryError,
)

MASS_TOL = 1e-12

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


@dataclass(frozen=True)
class PopulationStructure:
    masses: tuple[float, ...]
    strategy_counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.masses) == 0 or len(self.masses) != len(self.strategy_counts):
            raise InvalidStructureError(
                "masses and strategy_counts must be non-empty and of equal length")
        if any(not np.isfinite(w) or w <= 0 for w in self.masses):
            raise InvalidStructureError(f"population masses must be positive, got {self.masses}")
        if any(int(k) != k or k < 1 for k in self.strategy_counts):
            raise InvalidStructureError(
                f"strategy counts must be positive integers, got {self.strategy_counts}")

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def m(self) -> int:
        return int(sum(self.strategy_counts))

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.strategy_counts)]).astype(int)

    @property
    def slices(self) -> list[slice]:
        off = self.offsets
        return [slice(off[i], off[i + 1]) for i in range(self.n)]

    @property
    def population_index(self) -> np.ndarray:
        """Population label of every coordinate."""
        return np.repeat(np.arange(self.n), self.strategy_counts)

    @property
    def mass_vector(self) -> np.ndarray:
        """``omega_i`` broadcast to every coordinate of population ``i``."""
        return np.repeat(np.asarray(self.masses, dtype=float), self.strategy_counts)

    def split(self, values) -> list[np.ndarray]:
        values = np.asarray(values)
        return [values[s] for s in self.slices]

    def block_sums(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return np.add.reduceat(values, self.offsets[:-1])

    def scaled(self, factor: float) -> "PopulationStructure":
        return PopulationStructure(tuple(w * factor for w in self.masses), self.strategy_counts)


def make_simplotope(masses: Sequence[float], strategy_counts: Sequence[int]) -> PopulationStructure:
    """Build a :class:`PopulationStructure`, validating masses and counts."""
    return PopulationStructure(tuple(float(w) for w in masses),
                               tuple(int(k) if float(k).is_integer() else k
                                     for k in strategy_counts))


@dataclass(frozen=True, eq=False)
class State:
    """A point of the simplotope. ``values`` is a read-only copy."""

    structure: PopulationStructure
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.structure.m:
            raise DimensionError(
                f"state has {values.shape[0]} coordinates, structure expects {self.structure.m}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("state coordinates must be finite and non-negative")
        sums = self.structure.block_sums(values)
        masses = np.asarray(self.structure.masses)
        bad = np.abs(sums - masses) > MASS_TOL * np.maximum(1.0, masses)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise DomainError(
                f"population {i} carries mass {sums[i]!r}, expected {masses[i]!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def blocks(self) -> list[np.ndarray]:
        return self.structure.split(self.values)

    def support(self, tol: float = 0.0) -> np.ndarray:
        return self.values > tol

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"State({np.array2string(self.values, precision=6)})"


def as_state(structure: PopulationStructure, x) -> State:
    if isinstance(x, State):
        if x.structure != structure:
            raise DimensionError("state belongs to a different population structure")
        return x
    return State(structure, np.asarray(x, dtype=float))


def barycenter(structure: PopulationStructure) -> State:
    x = structure.mass_vector / np.repeat(structure.strategy_counts, structure.strategy_counts)
    return State(structure, x)


def random_interior_state(structure: PopulationStructure, rng: np.random.Generator,
                          concentration: float = 1.0) -> State:
    """Draw a state whose blocks are Dirichlet(concentration) scaled by the masses."""
    parts = []
    for w, k in zip(structure.masses, structure.strategy_counts):
        p = rng.dirichlet(np.full(k, concentration))
        p = np.maximum(p, 1e-300)
        parts.append(w * p / p.sum())
    return State(structure, np.concatenate(parts))


@dataclass(frozen=True, eq=False)
class GameField:
    """Payoff (``maximize``) or cost (``minimize``) field on a simplotope.

    ``evaluate`` and ``potential`` act on flat coordinate arrays. ``bounds``
    is a pair ``(lo, hi)`` enclosing every component of the field on the
    simplotope; normalization needs it.
    """

    structure: PopulationStructure
    evaluate: Callable[[np.ndarray], np.ndarray]
    orientation: str = MAXIMIZE
    potential: Callable[[np.ndarray], float] | None = None
    bounds: tuple[float, float] | None = None
    kind: str = "custom"
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.orientation not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    def __call__(self, state) -> np.ndarray:
        return field_values(self, state)

    @property
    def maximizing(self) -> bool:
        return self.orientation == MAXIMIZE


def _values(game: GameField, state) -> np.ndarray:
    if isinstance(state, State):
        if state.structure != game.structure:
            raise DimensionError("state structure does not match the game")
        return state.values
    x = np.asarray(state, dtype=float)
    if x.shape != (game.structure.m,):
        raise DimensionError(f"expected a vector of length {game.structure.m}, got shape {x.shape}")
    return x


def field_values(game: GameField, state) -> np.ndarray:
    """Evaluate the field as oriented (payoffs or costs)."""
    return np.asarray(game.evaluate(_values(game, state)), dtype=float)


def payoff_values(game: GameField, state) -> np.ndarray:
    """Evaluate the field as payoffs: costs are negated."""
    f = field_values(game, state)
    return f if game.maximizing else -f


def make_game(structure: PopulationStructure, evaluate, *, orientation: str = MAXIMIZE,
              potential=None, bounds: tuple[float, float] | None = None) -> GameField:
    """Wrap a user-supplied field. Supply ``bounds`` if it will be normalized."""
    if bounds is not None:
        lo, hi = (float(b) for b in bounds)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise NormalizationError(f"invalid bounds {bounds}")
        bounds = (lo, hi)
    return GameField(structure, evaluate, orientation, potential, bounds)


def linear_symmetric_game(C) -> GameField:
    """Symmetric bimatrix game ``(C, C^T)``: ``F(X) = CX`` on the unit simplex."""
    C = np.array(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionError(f"payoff matrix must be square, got shape {C.shape}")
    C.setflags(write=False)
    structure = make_simplotope([1.0], [C.shape[0]])
    return GameField(structure, lambda x: C @ x, MAXIMIZE, None,
                     (float(C.min()), float(C.max())), "bimatrix", {"matrix": C})


def standard_qp_game(S) -> GameField:
    """Doubly symmetric game with potential ``X.SX / 2``."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"payoff matrix must be square, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-12):
        raise SymmetryError("standard QP games need a symmetric matrix")
    S.setflags(write=False)
    structure = make_simplotope([1.0], [S.shape[0]])
    return GameField(structure, lambda x: S @ x, MAXIMIZE, lambda x: 0.5 * x @ S @ x,
                     (float(S.min()), float(S.max())), "qp", {"matrix": S})


def linear_population_game(structure: PopulationStructure, A, b=None) -> GameField:
    """Multi-population linear game ``F(X) = AX + b``.

    Bounds are exact: each component is extremised vertex-wise per population.
    """
    A = np.array(A, dtype=float)
    m = structure.m
    if A.shape != (m, m):
        raise DimensionError(f"A must be {m}x{m}, got {A.shape}")
    b = np.zeros(m) if b is None else np.array(b, dtype=float)
    if b.shape != (m,):
        raise DimensionError(f"b must have length {m}")
    A.setflags(write=False)
    b.setflags(write=False)
    lo = b.copy()
    hi = b.copy()
    for w, s in zip(structure.masses, structure.slices):
        lo += w * A[:, s].min(axis=1)
        hi += w * A[:, s].max(axis=1)
    return GameField(structure, lambda x: A @ x + b, MAXIMIZE, None,
                     (float(lo.min()), float(hi.max())), "linear", {"A": A, "b": b})


# ---------------------------------------------------------------- congestion


@dataclass(frozen=True, eq=False)
class LinkCost:
    """Polynomial link delay ``c(t) = sum_k coeffs[k] t**k``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ModelError("a link cost needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "_poly", Polynomial(self.coeffs))

    @classmethod
    def affine(cls, offset: float, slope: float) -> "LinkCost":
        return cls((offset, slope))

    def __call__(self, t):
        return self._poly(t)

    def derivative(self, t):
        return self._poly.deriv()(t)

    def integral(self, t):
        """``int_0^t c(s) ds``."""
        return self._poly.integ(lbnd=0.0)(t)

    @property
    def strictly_increasing(self) -> bool:
        d = self._poly.deriv().coef
        return bool(len(d) > 0 and np.all(d >= 0) and np.any(d > 0))


@dataclass(frozen=True, eq=False)
class Commodity:
    demand: float
    paths: tuple[tuple[int, ...], ...]


@dataclass(frozen=True, eq=False)
class CongestionNetwork:
    """Nonatomic congestion game given by explicit path enumerations."""

    links: tuple[LinkCost, ...]
    commodities: tuple[Commodity, ...]

    def __post_init__(self):
        links = tuple(l if isinstance(l, LinkCost) else LinkCost(tuple(l)) for l in self.links)
        comms = []
        for k, c in enumerate(self.commodities):
            if not isinstance(c, Commodity):
                c = Commodity(float(c[0]), tuple(tuple(p) for p in c[1]))
            if len(c.paths) == 0:
                raise ModelError(f"commodity {k} has no path")
            if c.demand <= 0:
                raise ModelError(f"commodity {k} has non-positive demand")
            for p in c.paths:
                if any(e < 0 or e >= len(links) for e in p):
                    raise ModelError(f"commodity {k} uses an unknown link in path {p}")
            comms.append(Commodity(float(c.demand), tuple(tuple(int(e) for e in p) for p in c.paths)))
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "commodities", tuple(comms))
        incidence = np.zeros((len(links), sum(len(c.paths) for c in comms)))
        j = 0
        for c in comms:
            for p in c.paths:
                for e in p:
                    incidence[e, j] += 1.0
                j += 1
        incidence.setflags(write=False)
        object.__setattr__(self, "incidence", incidence)

    @property
    def structure(self) -> PopulationStructure:
        return make_simplotope([c.demand for c in self.commodities],
                               [len(c.paths) for c in self.commodities])

    @property
    def total_demand(self) -> float:
        return float(sum(c.demand for c in self.commodities))

    def link_loads(self, x) -> np.ndarray:
        return self.incidence @ np.asarray(x, dtype=float)

    def link_costs(self, loads) -> np.ndarray:
        return np.array([c(t) for c, t in zip(self.links, loads)], dtype=float)

    def path_costs(self, x) -> np.ndarray:
        return self.incidence.T @ self.link_costs(self.link_loads(x))

    def potential(self, x) -> float:
        loads = self.link_loads(x)
        return float(sum(c.integral(t) for c, t in zip(self.links, loads)))

    def cost_bounds(self) -> tuple[float, float]:
        """Path-cost range for non-decreasing link costs on loads in [0, total demand]."""
        at0 = self.incidence.T @ self.link_costs(np.zeros(len(self.links)))
        atD = self.incidence.T @ self.link_costs(np.full(len(self.links), self.total_demand))
        return float(min(at0.min(), atD.min())), float(max(at0.max(), atD.max()))


def parallel_network(offsets, slopes, demand: float = 1.0) -> CongestionNetwork:
    offsets = np.asarray(offsets, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    if offsets.shape != slopes.shape:
        raise DimensionError("offsets and slopes must have the same length")
    links = tuple(LinkCost.affine(r, s) for r, s in zip(offsets, slopes))
    paths = tuple((j,) for j in range(len(links)))
    return CongestionNetwork(links, (Commodity(float(demand), paths),))


def congestion_game(network: CongestionNetwork, demands=None) -> GameField:
    """Cost field of a congestion game; potential is the Beckmann function."""
    if demands is not None:
        demands = list(demands)
        if len(demands) != len(network.commodities):
            raise DimensionError("one demand per commodity is required")
        network = CongestionNetwork(
            network.links,
            tuple(Commodity(float(d), c.paths) for d, c in zip(demands, network.commodities)))
    return GameField(network.structure, network.path_costs, MINIMIZE, network.potential,
                     network.cost_bounds(), "congestion", {"network": network})


def parallel_links_game(offsets, slopes, demand: float = 1.0) -> GameField:
    game = congestion_game(parallel_network(offsets, slopes, demand))
    return GameField(game.structure, game.evaluate, MINIMIZE, game.potential, game.bounds,
                     "parallel_links", game.params)


# ------------------------------------------------------------- normalization


def normalization_constants(lo: float, hi: float) -> tuple[float, float]:
    """Shift ``a`` and scale ``b`` with ``(F + a) / b`` inside (0, 1).

    Fields already inside the open unit interval are left alone.
    """
    if 0.0 < lo and hi < 1.0:
        return 0.0, 1.0
    a = 1.0 - lo
    b = hi - lo + 2.0
    return a, b


def normalize_game(game: GameField) -> GameField:
    """Affinely rescale the field into (0, 1) and the masses to sum to one.

    Linear families are rebuilt with the transformed matrix so that the result
    is again a bimatrix/QP/linear game.
    """
    if game.bounds is None:
        raise NormalizationError("field has no declared bounds; pass bounds= to make_game")
    lo, hi = game.bounds
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise NormalizationError("field bounds must be finite")
    W = game.structure.total_mass
    a, b = normalization_constants(lo, hi)
    if a == 0.0 and b == 1.0 and W == 1.0:
        return game

    if game.kind in ("bimatrix", "qp") and W == 1.0:
        C = (np.asarray(game.params["matrix"]) + a) / b
        return linear_symmetric_game(C) if game.kind == "bimatrix" else standard_qp_game(C)
    if game.kind == "linear":
        A = np.asarray(game.params["A"]) * (W / b)
        bvec = (np.asarray(game.params["b"]) + a) / b
        return linear_population_game(game.structure.scaled(1.0 / W), A, bvec)

    inner_eval = game.evaluate
    inner_pot = game.potential

    def evaluate(x):
        return (np.asarray(inner_eval(W * x), dtype=float) + a) / b

    potential = None
    if inner_pot is not None:
        def potential(x):
            return (inner_pot(W * x) / W + a * float(np.sum(x))) / b

    params = dict(game.params)
    params["normalization"] = {"shift": a, "scale": b, "mass_scale": W}
    return GameField(game.structure.scaled(1.0 / W), evaluate, game.orientation, potential,
                     ((lo + a) / b, (hi + a) / b), game.kind, params)


def to_payoff(game: GameField) -> GameField:
    """Maximize-orientation view of a cost game (``F = -c``)."""
    if game.maximizing:
        return game
    inner_eval, inner_pot = game.evaluate, game.potential
    potential = None if inner_pot is None else (lambda x: -inner_pot(x))
    bounds = None if game.bounds is None else (-game.bounds[1], -game.bounds[0])
    return GameField(game.structure, lambda x: -np.asarray(inner_eval(x), dtype=float),
                     MAXIMIZE, potential, bounds, game.kind, game.params)


def average_payoff(game: GameField, state) -> np.ndarray:
    """Per-population mean ``(1/omega_i) X_i . F_i(X)`` of the field as oriented."""
    x = _values(game, state)
    f = field_values(game, x)
    return game.structure.block_sums(x * f) / np.asarray(game.structure.masses)


# ----------------------------------------------------------------- JSON specs

_NUM = {"type": "number"}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {"type": "array", "items": _NUM_LIST, "minItems": 1}

GAME_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["bimatrix", "qp", "parallel_links", "congestion"]},
        "normalize": {"type": "boolean"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["bimatrix", "qp"]}}},
         "then": {"required": ["matrix"], "properties": {"matrix": _MATRIX}}},
        {"if": {"properties": {"kind": {"const": "parallel_links"}}},
         "then": {"required": ["offsets", "slopes"],
                  "properties": {"offsets": _NUM_LIST, "slopes": _NUM_LIST,
                                 "demand": {"type": "number", "exclusiveMinimum": 0}}}},
        {"if": {"properties": {"kind": {"const": "congestion"}}},
         "then": {"required": ["links", "commodities"],
                  "properties": {
                      "links": {"type": "array", "minItems": 1, "items": {
                          "type": "object", "required": ["coeffs"],
                          "properties": {"coeffs": _NUM_LIST}}},
                      "commodities": {"type": "array", "minItems": 1, "items": {
                          "type": "object", "required": ["demand", "paths"],
                          "properties": {
                              "demand": {"type": "number", "exclusiveMinimum": 0},
                              "paths": {"type": "array", "minItems": 1, "items": {
                                  "type": "array", "items": {"type": "integer", "minimum": 0},
                                  "minItems": 1}}}}}}}},
    ],
}


def read_json(source) -> dict:
    """Accept a dict, a JSON string or a path to a JSON file."""
    if isinstance(source, Mapping):
        return dict(source)
    if isinstance(source, (str, PathLike)):
        text = str(source)
        try:
            if text.lstrip().startswith("{"):
                return json.loads(text)
            with open(source, encoding="utf-8") as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise GameSpecError(f"cannot read JSON document: {exc}") from exc
    raise GameSpecError(f"unsupported JSON source {type(source).__name__}")


def network_from_spec(spec: Mapping) -> CongestionNetwork:
    if spec["kind"] == "parallel_links":
        if len(spec["offsets"]) != len(spec["slopes"]):
            raise GameSpecError("offsets and slopes must have the same length")
        return parallel_network(spec["offsets"], spec["slopes"], spec.get("demand", 1.0))
    if spec["kind"] == "congestion":
        links = tuple(LinkCost(tuple(l["coeffs"])) for l in spec["links"])
        comms = tuple(Commodity(float(c["demand"]), tuple(tuple(p) for p in c["paths"]))
                      for c in spec["commodities"])
        return CongestionNetwork(links, comms)
    raise GameSpecError(f"kind {spec['kind']!r} does not describe a network")


def game_from_spec(source) -> GameField:
    """Build a game from its JSON description (see ``GAME_SCHEMA``)."""
    spec = read_json(source)
    try:
        jsonschema.validate(spec, GAME_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise GameSpecError(f"invalid game spec: {exc.message}") from exc
    try:
        kind = spec["kind"]
        if kind == "bimatrix":
            game = linear_symmetric_game(spec["matrix"])
        elif kind == "qp":
            game = standard_qp_game(spec["matrix"])
        elif kind == "parallel_links":
            network = network_from_spec(spec)
            game = parallel_links_game(spec["offsets"], spec["slopes"], network.total_demand)
        else:
            game = congestion_game(network_from_spec(spec))
    except (DimensionError, SymmetryError, ModelError, InvalidStructureError) as exc:
        raise GameSpecError(str(exc)) from exc
    if spec.get("normalize", False):
        game = normalize_game(game)
    return game


load_game = game_from_spec


def support_spread(game: GameField, state, support_tol: float = 0.0) -> np.ndarray:
    """Per-population ``max - min`` of the field over strategies with ``X > support_tol``."""
    x = _values(game, state)
    f = field_values(game, x)
    out = np.zeros(game.structure.n)
    for i, s in enumerate(game.structure.slices):
        on = x[s] > support_tol
        if np.any(on):
            out[i] = float(f[s][on].max() - f[s][on].min())
    return out
