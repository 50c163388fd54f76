"""Command-line scenario runner: ``mwstab <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis, dynamics, routing
from .errors import MWError
from .games import (
    State,
    game_from_spec,
    network_from_spec,
    random_interior_state,
    read_json,
)

EXIT_OK = 0
EXIT_MAX_ITERS = 1
EXIT_INVALID = 2
EXIT_STEP_RULE = 3

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["game", "step_rule"],
    "properties": {
        "game": {"type": "object"},
        "dynamic": {"enum": ["replicator", "hedge"]},
        "step_rule": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "per_population", "line_search", "ess_oracle"]},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "alpha0": {"type": "number", "exclusiveMinimum": 0},
                "max_halvings": {"type": "integer", "minimum": 1},
                "target": {"type": "array", "items": {"type": "number"}},
                "safety": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "init": {"oneOf": [
            {"type": "array", "items": {"type": "number"}, "minItems": 1},
            {"type": "object", "required": ["random_interior"],
             "properties": {"random_interior": {"const": True}, "seed": {"type": "integer"}}},
        ]},
        "max_iters": {"type": "integer", "minimum": 0},
        "stop_tol": {"type": "number", "exclusiveMinimum": 0},
        "target": {"type": "array", "items": {"type": "number"}},
        "output": {"type": "string"},
    },
}


class InvalidInput(Exception):
    pass


def _dumps(obj) -> str:
    # json writes floats with repr, the shortest round-trip form
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False)


def _vector(text) -> np.ndarray:
    text = text.strip()
    try:
        values = json.loads(text) if text.startswith("[") else [float(v) for v in text.split(",")]
        return np.asarray(values, dtype=float).reshape(-1)
    except (ValueError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot parse vector {text!r}") from exc


def _emit(text: str, args):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _say(args, message: str):
    if not getattr(args, "quiet", False):
        print(message)


# ------------------------------------------------------------------ simulate


def _step_rule(spec: dict, game):
    kind = spec["kind"]
    if kind == "constant":
        return dynamics.Constant(spec["alpha"])
    if kind == "per_population":
        return dynamics.PerPopulation(spec["kappa"])
    if kind == "line_search":
        return dynamics.LineSearch(spec.get("alpha0", 1.0), spec.get("max_halvings", 60))
    if "target" not in spec:
        raise InvalidInput("ess_oracle step rule needs a target")
    return dynamics.EssOracle(State(game.structure, spec["target"]), spec.get("safety", 0.9))


def cmd_simulate(args) -> int:
    scenario = read_json(args.scenario)
    try:
        jsonschema.validate(scenario, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidInput(f"invalid scenario: {exc.message}") from exc
    game = game_from_spec(scenario["game"])
    rule = _step_rule(scenario["step_rule"], game)
    init = scenario.get("init", {"random_interior": True})
    if isinstance(init, dict):
        seed = init.get("seed", getattr(args, "seed", None))
        if seed is None:
            raise InvalidInput("a random initial state needs a seed (init.seed or --seed)")
        x0 = random_interior_state(game.structure, np.random.default_rng(seed))
    else:
        x0 = State(game.structure, init)
    target = scenario.get("target")
    traj = dynamics.run_trajectory(game, x0, rule, scenario.get("dynamic", "replicator"),
                                   scenario.get("max_iters", 10_000),
                                   scenario.get("stop_tol", 1e-9), target)
    out = getattr(args, "out", None) or scenario.get("output")
    if out is None:
        path = Path(str(args.scenario))
        out = path.with_suffix(".csv") if path.suffix == ".json" else "trajectory.csv"
    traj.to_csv(out)
    final = "[" + ", ".join(repr(float(v)) for v in traj.final.values) + "]"
    _say(args, f"final={final} stop_reason={traj.stop_reason} iterations={traj.iterations}")
    return {dynamics.CONVERGED: EXIT_OK, dynamics.MAX_ITERS: EXIT_MAX_ITERS,
            dynamics.STEP_RULE_FAILURE: EXIT_STEP_RULE}[traj.stop_reason]


# ------------------------------------------------------------------- routing


def _system(source) -> tuple[routing.ParallelLinkSystem, dict]:
    spec = read_json(source)
    if spec.get("kind", "parallel_links") != "parallel_links":
        raise InvalidInput("expected a parallel_links system")
    for key in ("offsets", "slopes"):
        if key not in spec:
            raise InvalidInput(f"system is missing {key!r}")
    return routing.ParallelLinkSystem(spec["offsets"], spec["slopes"],
                                      spec.get("demand", 1.0)), spec


def cmd_analyze_routing(args) -> int:
    system, spec = _system(args.system)
    flow = _vector(args.flow) if args.flow else spec.get("flow")
    report = routing.routing_report(system, args.alpha, flow, tuple(args.periods or ()))
    _emit(_dumps(report) + "\n", args)
    return EXIT_OK


def cmd_chaos_scan(args) -> int:
    system, _ = _system(args.system)
    if system.m != 2:
        raise InvalidInput(f"chaos scan needs a 2-link system, got {system.m} links")
    if args.alphas:
        alphas = _vector(args.alphas)
    else:
        lo, hi, n = args.alpha_range
        alphas = np.linspace(float(lo), float(hi), int(n))
    if not np.all(np.isfinite(alphas)) or np.any(alphas <= 0):
        raise InvalidInput("step sizes must be positive and finite")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha"] + [f"n_period{p}" for p in args.periods])
    for a in alphas:
        H = routing.hedge_scalar_map(system, float(a))
        counts = [len(routing.find_periodic_orbits(H, p, args.grid_n)) for p in args.periods]
        w.writerow(["%.17g" % a] + counts)
    _emit(buf.getvalue(), args)
    return EXIT_OK


# -------------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    game = game_from_spec(args.game)
    candidate = _vector(args.candidate)
    if candidate.size != game.structure.m:
        raise InvalidInput(f"candidate has {candidate.size} entries, game expects "
                           f"{game.structure.m}")
    seed = getattr(args, "seed", None)
    report = analysis.classify(game, State(game.structure, candidate), args.radius,
                               args.samples, 0 if seed is None else seed)
    _emit(_dumps(report.to_dict()) + "\n", args)
    return EXIT_OK


# ----------------------------------------------------------------- dominance


def _random_flow(network, rng) -> np.ndarray:
    parts = [c.demand * rng.dirichlet(np.ones(len(c.paths))) for c in network.commodities]
    return np.concatenate(parts)


def _pair_record(net, x, y, grid) -> dict:
    return {"y": [float(v) for v in y],
            "delta0": float(routing.delta_epsilon(net, x, y, 0.0)),
            "barrier": routing.invasion_barrier(net, y, x, grid),
            "dominant": routing.dominates(net, x, y),
            "deployable": routing.is_incrementally_deployable(net, x, y, grid)}


def cmd_dominance(args) -> int:
    spec = read_json(args.network)
    spec.setdefault("kind", "parallel_links")
    if spec["kind"] not in ("parallel_links", "congestion"):
        raise InvalidInput("dominance needs a parallel_links or congestion network")
    try:
        net = network_from_spec(spec)
    except KeyError as exc:
        raise InvalidInput(f"network is missing {exc}") from exc
    if args.x is None or args.x == "wardrop":
        if spec["kind"] != "parallel_links":
            raise InvalidInput("--x is required for general congestion networks")
        system, _ = _system(spec)
        x = routing.wardrop_parallel_affine(system).flows
    else:
        x = _vector(args.x)
    if args.random is not None:
        seed = getattr(args, "seed", None)
        if seed is None:
            raise InvalidInput("--random needs --seed")
        rng = np.random.default_rng(seed)
        ys = [_random_flow(net, rng) for _ in range(args.random)]
    elif args.y is not None:
        ys = [_vector(args.y)]
    else:
        raise InvalidInput("give --y or --random")
    size = net.incidence.shape[1]
    if x.size != size or any(y.size != size for y in ys):
        raise InvalidInput(f"flows must have {size} entries")
    pairs = [_pair_record(net, x, y, args.grid) for y in ys]
    out = {"x": [float(v) for v in x], "pairs": pairs}
    if args.random is not None:
        out["n_pairs"] = len(pairs)
        out["dominant"] = sum(p["dominant"] for p in pairs)
        out["deployable"] = sum(p["deployable"] for p in pairs)
        out["counterexamples"] = sum(not p["dominant"] for p in pairs)
        out["disagreements"] = sum(p["dominant"] != p["deployable"] for p in pairs)
    _emit(_dumps(out) + "\n", args)
    return EXIT_OK


# ---------------------------------------------------------------------- main


def _globals(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--out", default=default, help="output file (default: stdout)")
    parser.add_argument("--seed", type=int, default=default, help="random seed")
    parser.add_argument("--quiet", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="suppress summary lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mwstab", description=(
        "Multiplicative-weights dynamics on population games and stability tools."))
    _globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its trajectory CSV")
    p.add_argument("scenario", help="scenario JSON file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze-routing", help="Wardrop flow and linear stability")
    p.add_argument("system", help="parallel-link system JSON (file or inline)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--flow", help="flow to analyze instead of the Wardrop flow")
    p.add_argument("--periods", type=int, nargs="*", help="also list periodic orbits (2 links)")
    p.set_defaults(func=cmd_analyze_routing)

    p = sub.add_parser("chaos-scan", help="count periodic orbits of the 2-link Hedge map")
    p.add_argument("system")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alphas", help="comma-separated step sizes")
    g.add_argument("--alpha-range", nargs=3, metavar=("START", "STOP", "NUM"))
    p.add_argument("--periods", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--grid-n", type=int, default=200_000)
    p.set_defaults(func=cmd_chaos_scan)

    p = sub.add_parser("verify", help="fixed-point, Nash and sampled ESS checks")
    p.add_argument("game", help="game JSON (file or inline)")
    p.add_argument("--candidate", required=True, help="state, e.g. 0.5,0.5")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dominance", help="invasion, barrier and deployability of flows")
    p.add_argument("network", help="parallel_links or congestion JSON (file or inline)")
    p.add_argument("--x", help="incumbent flow, or 'wardrop' (default)")
    p.add_argument("--y", help="mutant flow")
    p.add_argument("--random", type=int, help="compare against this many random flows")
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=cmd_dominance)

    for sp in sub.choices.values():
        _globals(sp, True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, MWError, ValueError, TypeError, OSError) as exc:
        print(f"mwstab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
