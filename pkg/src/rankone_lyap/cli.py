"""Command-line front end: ``rankone-lyap <subcommand> ...``.

Every subcommand prints one JSON document on stdout. Exit status is 0 on
success, 1 for usage or input-format problems and 2 for numerical failures.
Node and matrix indices on the command line and in output are 1-based.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    MixturePlan,
    ReducibleKernelError,
    conditional_definiteness,
    exchangeable_rate,
    is_irreducible,
    lyapunov_bounds,
    lyapunov_exponent,
    markov_rate,
    martin_triangle_check,
    spectral_radius,
    stationary_distribution,
    validate_kernel,
)
from .ensemble import EnsembleFormatError, cost_matrix, load_ensemble
from .markov_design import design_markov
from .optimize import (
    DEFAULT_K_GRID,
    ConditioningError,
    GridBudgetError,
    OracleError,
    decide_stabilizable,
    default_grid,
    maximize,
    minimize,
)
from .reduction import (
    GraphFormatError,
    alpha_via_sign_queries,
    build_reduction,
    independence_number,
    load_graph,
    reduction_scale,
    verify_sandwich,
)
from .simulate import simulate_iid_dense, simulate_iid_telescoped, simulate_markov, simulate_sphere
from .special_functions import sphere_lyapunov


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CommandResult:
    payload: dict
    exit_code: int


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _to_json(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _to_json(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_json(v) for v in x]
    if isinstance(x, np.ndarray):
        return _to_json(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return x
    return x


def dumps(payload: dict, pretty: bool = False) -> str:
    doc = _to_json(payload)
    if not pretty:
        return json.dumps(doc, sort_keys=False, allow_nan=False)
    lines = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k, w in v.items():
                walk(f"{prefix}.{k}" if prefix else k, w)
        elif isinstance(v, list) and v and isinstance(v[0], list):
            lines.append(f"{prefix}:")
            for row in v:
                lines.append("    " + "  ".join(_fmt(c) for c in row))
        elif isinstance(v, list):
            lines.append(f"{prefix}: " + "  ".join(_fmt(c) for c in v))
        else:
            lines.append(f"{prefix}: {_fmt(v)}")

    walk("", doc)
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def parse_dist(text: str) -> np.ndarray:
    try:
        p = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"--dist: expected comma-separated numbers, got {text!r}") from None
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise UsageError("--dist: entries must be finite and nonnegative")
    if abs(p.sum() - 1.0) > 1e-6:
        raise UsageError(f"--dist: entries sum to {float(p.sum())!r}, not 1")
    return p / p.sum()


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_json(path: str, flag: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag}: malformed JSON in {path}: {exc}") from None


def _ensemble(args):
    return load_ensemble(_read(args.ensemble))


def _kernel(args, n: int) -> np.ndarray:
    Q = _load_json(args.kernel, "--kernel")
    try:
        Q = validate_kernel(Q)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--kernel: {exc}") from None
    if Q.shape[0] != n:
        raise UsageError(f"--kernel: {Q.shape[0]} states but the ensemble has {n} matrices")
    return Q


def _mixture(args, n: int) -> MixturePlan:
    doc = _load_json(args.mixture, "--mixture")
    if not isinstance(doc, dict) or set(doc) != {"weights", "components"}:
        raise UsageError("--mixture: expected an object with 'weights' and 'components'")
    try:
        mix = MixturePlan(doc["weights"], tuple(doc["components"]))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--mixture: {exc}") from None
    if mix.components[0].size != n:
        raise UsageError(f"--mixture: components have length {mix.components[0].size}, need {n}")
    return mix


def _dist_for(args, n: int) -> np.ndarray:
    p = parse_dist(args.dist)
    if p.size != n:
        raise UsageError(f"--dist has {p.size} entries but the ensemble has {n} matrices")
    return p


def _grid_k(args, n: int) -> int:
    if args.grid_k is not None:
        return args.grid_k
    return default_grid(n)


def _base(args, inputs: dict) -> dict:
    out = {"command": args.command, "version": __version__, "inputs": inputs}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    return out


def cmd_analyze(args) -> dict:
    E = _ensemble(args)
    M = cost_matrix(E, args.ortho_tol)
    b = lyapunov_bounds(M)
    out = _base(args, {"ensemble": args.ensemble, "dist": args.dist, "mixture": args.mixture,
                       "kernel": args.kernel, "ortho_tol": args.ortho_tol})
    out["n"] = E.n
    out["d"] = E.d
    out["cost_matrix"] = M.sym
    out["bounds"] = {"lower": b.lower, "upper": b.upper, "vertex_max": b.vertex_max,
                     "argmax_vertex": b.argmax_vertex + 1}
    if args.dist is not None:
        p = _dist_for(args, E.n)
        out["lambda"] = lyapunov_exponent(M, p)
        out["radius"] = spectral_radius(M, p)
    if args.mixture is not None:
        out["mixture_lambda"] = exchangeable_rate(M, _mixture(args, E.n))
    if args.kernel is not None:
        Q = _kernel(args, E.n)
        out["irreducible"] = is_irreducible(Q)
        out["stationary"] = stationary_distribution(Q)
        out["markov_lambda"] = markov_rate(M, Q)
    return out


def cmd_optimize(args) -> dict:
    E = _ensemble(args)
    k = _grid_k(args, E.n)
    res = minimize(E, k_grid=k, restarts=args.restarts, seed=args.seed, ortho_tol=args.ortho_tol)
    top = maximize(E, args.ortho_tol)
    tr = res.method_trace
    out = _base(args, {"ensemble": args.ensemble, "grid_k": k, "restarts": args.restarts,
                       "ortho_tol": args.ortho_tol})
    out["p_star"] = res.p_star
    out["value"] = res.value
    out["radius"] = math.exp(res.value)
    out["trace"] = {"grid_points": tr.grid_points, "grid_value": tr.grid_value,
                    "refine_iterations": tr.refine_iterations, "note": tr.note}
    out["max"] = {"p": top.p_star, "value": top.value, "note": top.method_trace.note}
    return out


def cmd_decide(args) -> dict:
    E = _ensemble(args)
    k = _grid_k(args, E.n)
    dec = decide_stabilizable(E, tol=args.tol, k_grid=k, restarts=args.restarts, seed=args.seed,
                              ortho_tol=args.ortho_tol)
    out = _base(args, {"ensemble": args.ensemble, "tol": args.tol, "grid_k": k,
                       "restarts": args.restarts, "ortho_tol": args.ortho_tol})
    out["verdict"] = dec.verdict.value
    out["witness"] = dec.witness
    out["value"] = dec.value
    out["bracket"] = list(dec.bracket)
    return out


def cmd_simulate(args) -> dict:
    E = _ensemble(args)
    inputs = {"ensemble": args.ensemble, "method": args.method, "steps": args.steps,
              "trials": args.trials}
    if args.method == "markov":
        if args.kernel is None:
            raise UsageError("--method markov needs --kernel")
        Q = _kernel(args, E.n)
        inputs["kernel"] = args.kernel
        res = simulate_markov(E, Q, args.steps, args.trials, args.seed)
        formula = markov_rate(E, Q)
    else:
        if args.dist is None:
            raise UsageError(f"--method {args.method} needs --dist")
        p = _dist_for(args, E.n)
        inputs["dist"] = args.dist
        sim = simulate_iid_dense if args.method == "dense" else simulate_iid_telescoped
        res = sim(E, p, args.steps, args.trials, args.seed)
        formula = lyapunov_exponent(E, p)
    out = _base(args, inputs)
    out["estimate"] = res.estimate
    out["std_error"] = res.std_error
    out["formula"] = formula
    out["per_trial"] = res.per_trial
    return out


def cmd_convexity(args) -> dict:
    E = _ensemble(args)
    M = cost_matrix(E, args.ortho_tol)
    rep = conditional_definiteness(M)
    out = _base(args, {"ensemble": args.ensemble, "ortho_tol": args.ortho_tol})
    out["conditionally_psd"] = rep.cond_psd
    out["conditionally_nsd"] = rep.cond_nsd
    out["convex"] = rep.cond_psd
    out["concave"] = rep.cond_nsd
    out["psd_violation_witness"] = rep.witness_psd_violation
    out["nsd_violation_witness"] = rep.witness_nsd_violation
    if E.is_symmetric() and np.all(np.linalg.norm(E.U, axis=1) > 0):
        out["martin_violations"] = [[i + 1, j + 1, k + 1] for i, j, k in martin_triangle_check(E)]
    return out


def cmd_reduce(args) -> dict:
    G = load_graph(_read(args.graph))
    art = build_reduction(G)
    rep = verify_sandwich(G, art)
    alpha, mis = independence_number(G)
    k = _grid_k(args, G.n_nodes)
    res = minimize(art.M, k_grid=k, restarts=args.restarts, seed=args.seed)
    c = reduction_scale(G.n_nodes)
    out = _base(args, {"graph": args.graph, "grid_k": k, "restarts": args.restarts})
    out["n"] = G.n_nodes
    out["edges"] = [[i + 1, j + 1] for i, j in G.edges]
    out["gram"] = art.B
    out["vectors"] = art.U.T
    out["factor_residual"] = art.factor_residual
    out["sandwich"] = {"passed": rep.passed, "identity_violation": rep.identity_violation,
                       "lower_violation": rep.lower_violation,
                       "upper_violation": rep.upper_violation,
                       "worst_entry": [rep.worst_entry[0] + 1, rep.worst_entry[1] + 1]}
    out["alpha"] = alpha
    out["independent_set"] = [v + 1 for v in mis]
    out["min_value"] = res.value
    out["p_star"] = res.p_star
    out["interval"] = [1.0 / alpha, c / alpha]
    return out


def cmd_alpha(args) -> dict:
    G = load_graph(_read(args.graph))
    k = args.grid_k
    res = alpha_via_sign_queries(G, args.width, tol=args.tol, seed=args.seed, k_grid=k,
                                 restarts=args.restarts)
    out = _base(args, {"graph": args.graph, "width": args.width, "tol": args.tol,
                       "grid_k": k, "restarts": args.restarts})
    out["bracket"] = list(res.bracket)
    out["queries"] = res.queries
    out["alpha_range"] = list(res.alpha_range)
    return out


def cmd_markov(args) -> dict:
    E = _ensemble(args)
    plan = design_markov(E, args.ortho_tol)
    out = _base(args, {"ensemble": args.ensemble, "ortho_tol": args.ortho_tol})
    out["rate"] = plan.rate
    out["cycle"] = [c + 1 for c in plan.cycle]
    out["Q"] = plan.Q
    out["pi"] = plan.pi
    out["circulation"] = plan.F
    return out


def cmd_sphere(args) -> dict:
    r = sphere_lyapunov(args.dim)
    out = _base(args, {"dim": args.dim, "steps": args.steps, "trials": args.trials})
    out["exact"] = r.exact_value
    out["asymptotic"] = r.asymptotic_value
    if args.trials is not None:
        if args.seed is None:
            raise UsageError("sphere Monte Carlo needs --seed")
        sim = simulate_sphere(args.dim, args.steps, args.trials, args.seed)
        out["estimate"] = sim.estimate
        out["std_error"] = sim.std_error
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankone-lyap", description="Lyapunov exponents of rank-one ensembles.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, ensemble=True, seed=False):
        if ensemble:
            p.add_argument("--ensemble", required=True, metavar="PATH")
            p.add_argument("--ortho-tol", type=float, default=0.0)
        if seed:
            p.add_argument("--seed", type=int, required=True)
        p.add_argument("--pretty", action="store_true", help="human-readable output")

    def search(p):
        p.add_argument("--grid-k", type=int, default=None,
                       help=f"grid resolution (default {DEFAULT_K_GRID}, lowered to fit the budget)")
        p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("analyze", help="closed-form exponent, bounds, mixtures, Markov rates")
    common(p)
    p.add_argument("--dist", metavar="CSV")
    p.add_argument("--mixture", metavar="PATH")
    p.add_argument("--kernel", metavar="PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", help="minimize the exponent over the simplex")
    common(p, seed=True)
    search(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("decide", help="is some distribution stabilizing?")
    common(p, seed=True)
    search(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("simulate", help="Monte Carlo estimate from matrix products")
    common(p, seed=True)
    p.add_argument("--method", choices=["dense", "telescoped", "markov"], default="telescoped")
    p.add_argument("--dist", metavar="CSV")
    p.add_argument("--kernel", metavar="PATH")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=32)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convexity", help="conditional definiteness of the cost matrix")
    common(p)
    p.set_defaults(func=cmd_convexity)

    p = sub.add_parser("reduce", help="graph to ensemble reduction with checks")
    p.add_argument("--graph", required=True, metavar="PATH")
    common(p, ensemble=False, seed=True)
    search(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("alpha", help="bracket the independence number with sign queries")
    p.add_argument("--graph", required=True, metavar="PATH")
    common(p, ensemble=False, seed=True)
    search(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--width", type=float, default=0.05, help="target bracket width")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("markov", help="optimal Markov switching kernel")
    common(p)
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("sphere", help="exponent of the uniform measure on the sphere")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=None, help="also run a Monte Carlo check")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_sphere)
    return parser


USAGE_ERRORS = (UsageError, EnsembleFormatError, GraphFormatError)
NUMERICAL_ERRORS = (
    ArithmeticError,
    np.linalg.LinAlgError,
    GridBudgetError,
    ConditioningError,
    OracleError,
    ReducibleKernelError,
)


def run(argv: Optional[Sequence[str]] = None) -> CommandResult:
    """Parse ``argv`` and run one subcommand; never raises for expected failures."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return CommandResult(args.func(args), 0)
    except USAGE_ERRORS as exc:
        return CommandResult({"error": str(exc).strip(), "kind": "usage"}, 1)
    except NUMERICAL_ERRORS as exc:
        return CommandResult({"error": str(exc), "kind": "numerical"}, 2)
    except ValueError as exc:
        # remaining ValueErrors come from argument values the library rejects
        return CommandResult({"error": str(exc), "kind": "usage"}, 1)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    result = run(args)
    if result.exit_code == 0:
        print(dumps(result.payload, pretty="--pretty" in args))
    else:
        print(result.payload["error"], file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
