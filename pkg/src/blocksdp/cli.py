"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error (including a failed
scheme verification).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import estimators, io, objective, solver
from .experiment import ConfigError, generate_sample, load_config, run_experiment
from .report import report
from .scheme import SchemeError, load_scheme_csv, make_basis, scheme_from_spec, verify_scheme

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_scheme_arg(text):
    """A scheme spec string, or a file holding one."""
    if text is None:
        return None
    p = Path(text)
    if p.is_file():
        text = p.read_text().strip()
    return text


def _theta_hat(theta_path, scheme_spec):
    basis = scheme_from_spec(scheme_spec) if scheme_spec else None
    return objective.make_theta_hat(io.read_matrix(theta_path), basis)


def cmd_generate(args):
    cfg = load_config(args.config)
    n = args.n if args.n is not None else cfg.n[0]
    degree = args.degree if args.degree is not None else cfg.degree[0]
    sample = generate_sample(cfg, n, degree, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(sample.A, out / "graph.edges")
    io.write_matrix(sample.P, out / "probs.csv")
    io.write_matrix(sample.theta_hat.theta, out / "thetahat.csv")
    if sample.z is not None:
        io.write_labels(sample.z, out / "labels.txt")
        io.write_matrix(sample.theta, out / "theta.csv")
    if sample.coords is not None:
        io.write_matrix(sample.coords, out / "coords.csv")
    if cfg.model == "community" or cfg.theta_hat == "community":
        spec = f"community:{cfg.classes}"
    elif cfg.model == "overlapping":
        spec = f"overlapping:{cfg.k}"
    else:
        spec = f"toric:{cfg.k},{cfg.d}"
    (out / "scheme.txt").write_text(spec + "\n")
    meta = {"model": cfg.model, "n": n, "avg_degree": degree, "seed": args.seed, "scheme": spec}
    if sample.sigma is not None:
        meta["sigma"] = sample.sigma
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_solve(args):
    A = io.read_edge_list(args.edges)
    spec = _read_scheme_arg(args.scheme)
    th = _theta_hat(args.theta, spec)
    if args.mode == "structured" and th.basis is None:
        raise ValueError("--mode structured needs --scheme")
    F = objective.build_objective(A, th)
    cfg = solver.SolverConfig(max_iter=args.max_iter, penalty_scale=args.penalty_scale,
                              tol_primal=args.tol, tol_dual=args.tol, mode=args.mode,
                              seed=args.seed)
    sol = solver.solve(F, cfg, basis=th.basis)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_solution(sol.X, out / "solution.npz")
    solver.write_trace(sol, out / "trace.csv")
    summary = {"objective": sol.objective, "iterations": sol.iterations,
               "converged": sol.converged, "mode": sol.mode_used, "penalty": sol.penalty,
               "feasibility_error": solver.feasibility_error(sol.X)}
    (out / "solve.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_estimate(args):
    A = io.read_edge_list(args.edges)
    spec = _read_scheme_arg(args.scheme)
    th = _theta_hat(args.theta, spec)
    X = io.load_solution(args.solution, basis=th.basis)
    overlapping_k = grid = None
    name, _, rest = (spec or "").partition(":")
    if name == "overlapping":
        overlapping_k = int(rest)
    elif name == "toric":
        k, d = (int(v) for v in rest.split(","))
        grid = estimators.toric_grid(k, d)
    bundle = estimators.estimate_bundle(X, th, A, seed=args.seed, overlapping_k=overlapping_k,
                                        grid=grid)
    print(f"wrote {io.save_bundle(bundle, args.out)}")
    return EXIT_OK


def cmd_simulate(args):
    cfg = load_config(args.config)
    out = Path(args.out)
    if out.suffix != ".csv":
        out = out / "results.csv"
    run_experiment(cfg, out, threads=args.threads)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_report(args):
    for p in report(args.csv, args.out):
        print(p)
    return EXIT_OK


def cmd_verify_scheme(args):
    spec = args.spec
    if Path(spec).is_dir():
        mats = load_scheme_csv(spec)
    else:
        mats = list(scheme_from_spec(spec).mats)
    rep = verify_scheme(mats)
    print(f"scheme {spec}: {len(mats)} matrices of size {mats[0].shape[0]}")
    for v in rep.violations:
        print(f"  violation: {v}")
    if not rep.ok:
        print("FAIL")
        return EXIT_RUNTIME
    err = make_basis(mats, check=False).reconstruction_error()
    print(f"  eigen-reconstruction residual {err:.3e}")
    print("OK")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="blocksdp", description="SDP estimation for general stochastic blockmodels")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a graph and its ground truth")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int, default=0, help="replication index")
    g.add_argument("--n", type=int)
    g.add_argument("--degree", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve the SDP for an edge list")
    s.add_argument("edges")
    s.add_argument("--theta", required=True, help="CSV of theta-hat")
    s.add_argument("--scheme", help="community:K, overlapping:k, toric:k,d, a directory, "
                                    "or a file holding one of these")
    s.add_argument("--mode", choices=("dense", "structured", "auto"), default="auto")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int, default=2000)
    s.add_argument("--penalty-scale", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("estimate", help="estimates from a saved solution")
    e.add_argument("solution")
    e.add_argument("--edges", required=True)
    e.add_argument("--theta", required=True)
    e.add_argument("--scheme")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("simulate", help="run an experiment grid")
    m.add_argument("--config", required=True)
    m.add_argument("--out", required=True, help="CSV path or directory")
    m.add_argument("--threads", type=int, default=1)
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="summary table and charts from a result CSV")
    r.add_argument("csv")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)

    v = sub.add_parser("verify-scheme", help="check the association scheme axioms")
    v.add_argument("spec")
    v.set_defaults(func=cmd_verify_scheme)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"blocksdp: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"blocksdp: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, SchemeError, solver.SolverDivergence, OSError) as exc:
        print(f"blocksdp: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
