"""Command-line interface: rule derivation, assembly and validation studies.

Exit codes: 0 success, 2 tolerance failure, 3 solver failure, 4 config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import assembly as asm
from . import rule_solver as rs
from . import validation as val
from .exact_oracle import oracle_matrix
from .formatting import fmt, write_json

EXIT_OK, EXIT_TOL, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3, 4

RULE_TOL = 1e-12
ORACLE_TOL = 1e-12
SPECTRUM_TOL = 1e-9

log = logging.getLogger("wgquad")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="wgquad", description=__doc__, formatter_class=fmt_cls)
    parser.add_argument("--config", type=Path, help="JSON file with the same fields as the flags")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("derive-rules", help="derive weighted Gaussian rules", formatter_class=fmt_cls)
    d.add_argument("--degree", type=int, choices=(2, 3), default=None, help="default: both")
    d.add_argument("--kind", choices=("mass", "stiffness", "both"), default="both", help="rule kinds")
    d.add_argument("--omega1", type=float, default=1.0, help="free weight of the cubic stiffness family")
    d.add_argument("--newton-cotes", action="store_true", help="also emit the knot/midpoint baseline rules")
    d.add_argument("--unsafe-newton", action="store_true",
                   help="also run plain Newton on the cubic mass system without brackets")
    d.add_argument("--start", default="reference",
                   help="start for --unsafe-newton: a named start or tau1,tau2,omega1,omega2")
    d.add_argument("--tolerance", type=float, default=RULE_TOL, help="max exactness residual")
    d.add_argument("--out", type=Path, default=Path("."), help="output directory")

    a = sub.add_parser("assemble", help="assemble mass/stiffness matrices", formatter_class=fmt_cls)
    a.add_argument("--d", type=int, choices=(1, 2, 3), default=1, help="dimension")
    a.add_argument("--p", type=int, default=2, help="spline degree")
    a.add_argument("--mesh", type=_int_list, default=[16], help="elements per direction (one or d values)")
    a.add_argument("--strategy", choices=asm.STRATEGIES, default="gauss-weighted", help="quadrature strategy")
    a.add_argument("--kind", choices=("mass", "stiffness", "both"), default="both", help="matrices to assemble")
    a.add_argument("--scales", type=_float_list, default=None, help="affine scale per direction")
    a.add_argument("--omega1", type=float, default=1.0, help="free weight of the cubic stiffness family")
    a.add_argument("--workers", type=int, default=1, help="threads for row assembly")
    a.add_argument("--check-oracle", action="store_true", help="compare against the exact oracle")
    a.add_argument("--oracle-tol", type=float, default=ORACLE_TOL, help="max entry deviation from the oracle")
    a.add_argument("--ratios", action="store_true", help="run all strategies and report count ratios")
    a.add_argument("--no-export", action="store_true", help="skip writing matrix files")
    a.add_argument("--out", type=Path, default=Path("."), help="output directory")

    s = sub.add_parser("study", help="validation studies", formatter_class=fmt_cls)
    s.add_argument("study", choices=("eig-convergence", "spectrum", "poisson"), help="study to run")
    s.add_argument("--d", type=int, choices=(1, 2, 3), default=1, help="dimension")
    s.add_argument("--p", type=int, choices=(2, 3), default=2, help="spline degree")
    s.add_argument("--meshes", type=_int_list, default=[8, 16, 32], help="elements per direction for each mesh")
    s.add_argument("--mesh", type=int, default=1000, help="elements for the spectrum study")
    s.add_argument("--index", type=int, default=None, help="eigenvalue index, 1-based (default 1 in 1D, 10 otherwise)")
    s.add_argument("--strategy", choices=asm.WEIGHTED + ("standard",), default="gauss-weighted", help="quadrature strategy")
    s.add_argument("--solution", choices=sorted(val.MANUFACTURED), default="sines", help="manufactured solution for poisson")
    s.add_argument("--tolerance", type=float, default=None,
                   help="rate tolerance (default 0.3 for p=2, 0.4 for p=3); curve tolerance for spectrum "
                        f"(default {SPECTRUM_TOL})")
    s.add_argument("--min-rate", type=float, default=None,
                   help="trend check instead: monotone decay and rate at least this")
    s.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise ConfigError(f"unknown command {command!r}")


def _apply_config(parser, args, argv):
    """Merge a JSON config into the namespace; flags given on the command line win."""
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    command = cfg.pop("command", None) or args.command
    if command not in COMMANDS:
        raise ConfigError(f"config needs a valid 'command', got {command!r}")
    base = [command]
    if command == "study":
        study = cfg.pop("study", None) or getattr(args, "study", None)
        base.append(str(study))
    defaults = parser.parse_args(base)
    actions = {a.dest: a for a in _subparser(parser, command)._actions}
    merged = vars(defaults)
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("help", "study"):
            raise ConfigError(f"unknown config field {key!r}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if action.type is not None and value is not None:
            try:
                value = action.type(value if action.type in (_int_list, _float_list) else value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"config field {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"config field {key!r} must be one of {list(action.choices)}")
        merged[key] = value
    if args.command:
        given = vars(args)
        for key, value in given.items():
            if key in merged and value != merged.get(key) and value != getattr(defaults, key, None):
                merged[key] = value
    merged["command"] = command
    merged["verbose"] = args.verbose
    merged["config"] = args.config
    return argparse.Namespace(**merged)


def _validate(args):
    if args.command == "assemble":
        if args.p < 1:
            raise ConfigError("--p must be positive")
        if len(args.mesh) not in (1, args.d):
            raise ConfigError("--mesh takes one value or one per direction")
        if any(n < 1 for n in args.mesh):
            raise ConfigError("mesh sizes must be positive")
        if args.scales is not None and len(args.scales) != args.d:
            raise ConfigError("--scales needs one value per direction")
        if args.strategy != "standard" and args.p not in (2, 3):
            raise ConfigError("weighted rules are available for p = 2 and 3")
    if args.command == "study":
        if any(n < 1 for n in args.meshes):
            raise ConfigError("mesh sizes must be positive")
    if args.command == "derive-rules" and args.omega1 <= 0:
        raise ConfigError("--omega1 must be positive")


def _print_rule(rule: rs.WeightedRule) -> None:
    print(f"{rule.family} {rule.kind} p={rule.degree}  residual_max={fmt(rule.residual_max)}")
    for t, w in zip(rule.nodes, rule.weights):
        print(f"  tau={fmt(t)}  omega={fmt(w)}")


def _start_vector(system, spec: str):
    if spec in rs.NAMED_STARTS:
        return system.named_start(spec)
    vals = _float_list(spec)
    if len(vals) != len(system.free):
        raise ConfigError(f"--start needs {len(system.free)} values ({', '.join(system.free)})")
    return np.array(vals)


def cmd_derive_rules(args) -> int:
    degrees = [args.degree] if args.degree else [2, 3]
    kinds = ["mass", "stiffness"] if args.kind == "both" else [args.kind]
    args.out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for p in degrees:
        rules = []
        for kind in kinds:
            try:
                rules.append(rs.gaussian_rule(kind, p, args.omega1))
            except rs.RuleSolverError as exc:
                print(f"solver failure for {kind} p={p}: {exc}", file=sys.stderr)
                for diag in exc.diagnostics:
                    print(f"  start {diag[0]}: {diag[3]}", file=sys.stderr)
                return EXIT_SOLVER
            if args.newton_cotes:
                rules.append(rs.newton_cotes_cardinal_rule(kind, p))
        report = {"degree": p, "omega1": args.omega1, "tolerance": args.tolerance,
                  "rules": [r.to_dict() for r in rules]}
        for r in rules:
            _print_rule(r)
            if not r.residual_max <= args.tolerance:
                status = EXIT_TOL
        if args.unsafe_newton and p == 3 and "mass" in kinds:
            report["unconstrained_newton"] = _unsafe_newton(args.start)
        name = f"rules_p{p}" + ("" if args.kind == "both" else f"_{args.kind}") + ".json"
        write_json(args.out / name, report)
        print(f"wrote {args.out / name}")
    if args.unsafe_newton and 3 not in degrees:
        print("--unsafe-newton applies to the cubic mass system; use --degree 3", file=sys.stderr)
    return status


def _unsafe_newton(start_spec: str) -> dict:
    system = rs.cubic_mass_system()
    x0 = _start_vector(system, start_spec)
    res = rs.newton_raphson(system, x0)
    finite = bool(np.all(np.isfinite(res.x)))
    out = {
        "start": dict(zip(system.free, x0.tolist())),
        "converged": bool(res.converged),
        "iterations": res.iterations,
        "final_residual": float(res.residual),
        "final_iterate": dict(zip(system.free, res.x.tolist())) if finite else None,
    }
    if res.converged:
        reason = rs._admissible(system, res.x)
        out["accepted_by_brackets"] = reason is None
        out["rejection_reason"] = reason
        print("unconstrained Newton root:", " ".join(f"{n}={fmt(v)}" for n, v in zip(system.free, res.x)))
        print(f"  {'accepted' if reason is None else 'rejected: ' + reason}")
    else:
        print(f"unconstrained Newton from {start_spec} did not converge after {res.iterations} "
              f"iterations (residual {fmt(res.residual)})")
    bracketed = rs.cubic_mass_rule()
    out["bracketed_nodes"] = bracketed.nodes.tolist()
    return out


def _space_and_map(args):
    mesh = args.mesh * args.d if len(args.mesh) == 1 else args.mesh
    space = asm.TensorSpace.uniform(args.p, mesh)
    amap = asm.AffineMap(tuple(args.scales)) if args.scales else asm.AffineMap.identity(args.d)
    return space, amap


def cmd_assemble(args) -> int:
    space, amap = _space_and_map(args)
    kinds = ["mass", "stiffness"] if args.kind == "both" else [args.kind]
    args.out.mkdir(parents=True, exist_ok=True)
    counter = asm.EvalCounter()
    status = EXIT_OK
    summary = {"d": args.d, "p": args.p, "shape": list(space.shape), "n_dof": space.n_dof,
               "strategy": args.strategy, "matrices": {}}
    for kind in kinds:
        A = asm.assemble(space, kind, args.strategy, amap, counter, args.omega1, args.workers)
        info = {"nnz": int(A.nnz)}
        print(f"{kind}: {A.shape[0]}x{A.shape[1]}, nnz={A.nnz}")
        if not args.no_export:
            stem = f"{kind}_{args.strategy}_d{args.d}_p{args.p}"
            asm.write_matrix_market(args.out / f"{stem}.mtx", A,
                                    f"{kind} matrix, strategy {args.strategy}, shape {space.shape}")
            write_json(args.out / f"{stem}_band.json", asm.band_dict(A, space))
            info["file"] = f"{stem}.mtx"
        if args.check_oracle:
            O = oracle_matrix(space.spaces, kind, amap.scales)
            dev = asm.max_entry_difference(A, O)
            info["oracle_deviation"] = dev
            ok = dev <= args.oracle_tol
            print(f"  max |A - oracle| = {fmt(dev)} ({'ok' if ok else 'FAIL'}, tol {fmt(args.oracle_tol)})")
            if not ok:
                status = EXIT_TOL
        summary["matrices"][kind] = info
    if args.ratios:
        for kind in kinds:
            (st, nc), c = asm.measure_count_ratio(space, kind)
            summary.setdefault("ratios", {})[kind] = {"standard_over_gauss_weighted": st,
                                                      "nc_weighted_over_gauss_weighted": nc,
                                                      "counters": c.report()}
            print(f"{kind} evaluation ratios: standard/gauss-weighted={fmt(st)}  "
                  f"nc-weighted/gauss-weighted={fmt(nc)}")
    write_json(args.out / "counters.json", counter.report())
    write_json(args.out / "assemble_summary.json", summary)
    return status


def cmd_study(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    if args.study == "eig-convergence":
        index = args.index or (1 if args.d == 1 else 10)
        rep = val.run_eigen_convergence(args.d, args.p, index, args.meshes, args.strategy,
                                        args.tolerance, args.min_rate)
        stem = f"eig_convergence_d{args.d}_p{args.p}"
    elif args.study == "poisson":
        rep = val.run_poisson_convergence(args.d, args.p, args.meshes, args.solution, args.strategy,
                                          args.tolerance)
        stem = f"poisson_d{args.d}_p{args.p}"
    else:
        tol = SPECTRUM_TOL if args.tolerance is None else args.tolerance
        strategy = args.strategy if args.strategy != "standard" else "gauss-weighted"
        sc = val.run_spectrum_comparison(args.p, args.mesh, args.d, strategy)
        stem = f"spectrum_p{args.p}_n{args.mesh}"
        sc.write_csv(args.out / f"{stem}.csv")
        summary = sc.summary()
        summary["tolerance"] = tol
        summary["passed"] = bool(sc.max_curve_difference <= tol
                                 and max(sc.matrix_difference.values()) <= ORACLE_TOL)
        write_json(args.out / f"{stem}.json", summary)
        print(f"max |e_weighted - e_gauss| = {fmt(sc.max_curve_difference)} (tol {fmt(tol)})")
        print("max matrix difference:", ", ".join(f"{k}={fmt(v)}" for k, v in sc.matrix_difference.items()))
        return EXIT_OK if summary["passed"] else EXIT_TOL
    rep.write(args.out / f"{stem}.json", args.out / f"{stem}.csv")
    for n, e in zip(rep.meshes, rep.errors):
        print(f"  n={n:5d}  error={fmt(e)}")
    print(f"fitted rate {fmt(rep.rate)} (expected {fmt(rep.expected_rate)}): "
          f"{'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_TOL


COMMANDS = {"derive-rules": cmd_derive_rules, "assemble": cmd_assemble, "study": cmd_study}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            args = _apply_config(parser, args, argv)
        if args.command is None:
            parser.print_help()
            return EXIT_CONFIG
        _validate(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except rs.RuleSolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
