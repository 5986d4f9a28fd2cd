"""Command-line entry point.

Every command writes CSV or JSON-lines files into ``--out`` together with
``report.json`` (command, scenario digest, resolution, wall time, outputs,
warnings).  Exit codes: 0 success, 1 input error, 2 numerical failure,
3 acceptance failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .discretization import build_mesh
from .eigen import principal_eigenpair, richardson_eigenpair
from .logistic import existence_verdict, solve_periodic_logistic
from .perturb import sigma_sequence
from .propagator import SCHEMES, MonodromyOperator
from .scenario import ScenarioError, load_scenario, validate_hypotheses
from .sigma import sigma_curve
from .suite import load_suite, run_checks
from .zeroset import build_zero_set_graph, tau_path_exists, write_zero_set_raster

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_SUITE = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    scenario_hash: str = ""
    resolution: list = field(default_factory=list)
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    result: dict = field(default_factory=dict)

    def warn(self, message):
        if message not in self.warnings:
            self.warnings.append(message)


class _Collector(logging.Handler):
    def __init__(self, report):
        super().__init__(logging.WARNING)
        self.report = report

    def emit(self, record):
        self.report.warn(record.getMessage())


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return path


def write_jsonl(path: Path, records):
    with open(path, "w", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def _field_rows(x, t, values):
    for j, tj in enumerate(t):
        for k, xk in enumerate(x):
            yield (xk, tj, values[j, k])


# argument parsing


def parse_lambda_grid(text):
    try:
        a, b, k = text.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:k, got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("k must be >= 1")
    return np.linspace(a, b, k) if k > 1 else np.array([a])


def parse_gamma_ramp(text):
    try:
        g0, ratio, count = text.split(":")
        g0, ratio, count = float(g0), float(ratio), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected g0:ratio:count, got {text!r}") from None
    if g0 <= 0 or ratio <= 1 or count < 1:
        raise argparse.ArgumentTypeError("need g0 > 0, ratio > 1, count >= 1")
    return g0 * ratio ** np.arange(count)


def parse_int_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="pplogistic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--nx", type=int)
        p.add_argument("--nt", type=int)
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--threads", type=int, default=1)
        return p

    p = scenario_cmd("eig", "principal eigenpair at one (lambda, gamma)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--richardson", action="store_true", help="extrapolate in dt from nt and 2 nt")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="implicit-euler")

    p = scenario_cmd("curve", "Sigma over a lambda grid and gamma ramp, with classification")
    p.add_argument("--lambda-grid", type=parse_lambda_grid, default=parse_lambda_grid("0:0:1"))
    p.add_argument("--gamma-ramp", type=parse_gamma_ramp, default=parse_gamma_ramp("1:2:21"))

    p = scenario_cmd("tau", "periodic path through the refuge a = 0")
    p.add_argument("--raster", action="store_true", help="also write the discrete zero set")

    p = scenario_cmd("solve", "periodic solution of the logistic problem")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--u0", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-periods", type=int, default=2000)

    p = scenario_cmd("verdict", "predicted vs observed existence of a positive periodic solution")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)

    p = scenario_cmd("perturb", "principal eigenvalues on dilated domains")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--n-list", type=parse_int_list, nargs="+", default=[[4, 8, 16, 32, 64]])

    p = sub.add_parser("suite", help="acceptance checks over a scenario directory")
    p.add_argument("suite_dir", nargs="?", type=Path, help="defaults to the bundled scenarios")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--only", nargs="+", help="names of check functions to run")
    return parser


# commands


def _load(args, report):
    if not args.scenario.is_file():
        raise InputError(f"no such scenario file: {args.scenario}")
    spec = load_scenario(args.scenario)
    check = validate_hypotheses(spec, (args.nx, args.nt) if args.nx and args.nt else None)
    if not check.ok:
        raise InputError("scenario violates standing hypotheses:\n  " + "\n  ".join(check.lines()))
    mesh = build_mesh(spec, args.nx, args.nt)
    report.scenario_hash = spec.digest()
    report.resolution = [mesh.nx, mesh.nt]
    return spec, mesh


def cmd_eig(args, report):
    spec, mesh = _load(args, report)
    if args.richardson:
        res = richardson_eigenpair(spec, mesh, args.lam, args.gamma, scheme=args.scheme)
    else:
        res = principal_eigenpair(MonodromyOperator(spec, mesh, args.lam, args.gamma, scheme=args.scheme))
    report.outputs.append(
        write_csv(
            args.out / "eigen.csv",
            ("lambda", "gamma", "sigma", "rho", "iterations", "residual"),
            [(args.lam, args.gamma, res.sigma, res.rho, res.iterations, res.residual)],
        )
    )
    report.outputs.append(write_csv(args.out / "eigenfunction.csv", ("x", "t", "phi"), _field_rows(res.x, res.t, res.eigenfunction)))
    report.result = {"sigma": res.sigma, "rho": res.rho}
    return EXIT_OK


def cmd_curve(args, report):
    spec, mesh = _load(args, report)
    curve = sigma_curve(spec, mesh, args.lambda_grid, args.gamma_ramp, threads=args.threads)
    rows = [
        (lam, g, curve.values[i, j])
        for i, lam in enumerate(curve.lambda_grid)
        for j, g in enumerate(curve.gamma_ramp)
    ]
    report.outputs.append(write_csv(args.out / "curve.csv", ("lambda", "gamma", "sigma"), rows))
    records = [c.record() for c in curve.classifications]
    report.outputs.append(write_jsonl(args.out / "classification.jsonl", records))
    for c in curve.classifications:
        if c.kind == "inconclusive":
            report.warn(f"inconclusive classification at lambda={c.lam:.17g} (last increment {c.value:.3g})")
    report.result = {"classes": sorted({c.kind for c in curve.classifications})}
    return EXIT_OK


def cmd_tau(args, report):
    spec, mesh = _load(args, report)
    graph = build_zero_set_graph(spec, mesh)
    cert = tau_path_exists(graph)
    record = {"verdict": cert.verdict, "cut": cert.cut}
    if cert.exists:
        witness = cert.witness + cert.witness[:1]
        record["witness"] = [list(graph.layers[j % graph.nt][c]) for j, c in enumerate(witness)]
        record["margin_cells"] = cert.margin_cells
    else:
        record["wrap_failed"] = cert.wrap_failed
    report.outputs.append(write_jsonl(args.out / "tau.jsonl", [record]))
    if args.raster:
        report.outputs.append(write_zero_set_raster(graph, args.out / "zero_set.csv"))
    report.result = {"verdict": cert.verdict}
    return EXIT_OK


def cmd_solve(args, report):
    spec, mesh = _load(args, report)
    sol = solve_periodic_logistic(spec, mesh, args.lam, args.u0, tol=args.tol, max_periods=args.max_periods)
    report.outputs.append(write_csv(args.out / "solution.csv", ("x", "t", "u"), _field_rows(sol.x, sol.t, sol.u)))
    report.result = {"status": sol.status, "periods": sol.iterations, "residual": sol.residual, "sup": sol.sup}
    if sol.status in ("blowup", "stagnated"):
        report.warn(f"solution did not settle: {sol.status}")
        return EXIT_OK
    if not sol.converged:
        report.warn(f"no periodic state within {args.max_periods} periods (residual {sol.residual:.3g})")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verdict(args, report):
    spec, mesh = _load(args, report)
    v = existence_verdict(spec, mesh, args.lam, tol=args.tol)
    c = v.classification
    record = {
        "lambda": args.lam,
        "sigma0": v.sigma_zero,
        "class": c.kind if c is not None else "not-needed",
        "plateau_or_slope": c.value if c is not None else None,
        "predicted": v.predicted,
        "observed": v.observed,
        "agree": v.agree,
    }
    if c is not None and c.kind == "inconclusive":
        report.warn(f"inconclusive classification at lambda={args.lam:.17g}")
    report.outputs.append(write_jsonl(args.out / "verdict.jsonl", [record]))
    report.result = record
    return EXIT_OK


def cmd_perturb(args, report):
    spec, mesh = _load(args, report)
    n_list = [n for chunk in args.n_list for n in chunk]
    seq = sigma_sequence(spec, args.lam, args.gamma, n_list, mesh=mesh, threads=args.threads)
    report.outputs.append(write_csv(args.out / "perturb.csv", ("n", "sigma_n"), zip(seq.n_list, seq.sigmas)))
    report.result = {"sigma": seq.sigma, "increasing": seq.strictly_increasing(), "below": seq.all_below()}
    return EXIT_OK


def cmd_suite(args, report):
    if args.suite_dir is not None and not args.suite_dir.is_dir():
        raise InputError(f"no such directory: {args.suite_dir}")
    suite = load_suite(args.suite_dir)
    report.scenario_hash = hashlib.sha256("".join(f"{k}:{s.digest()}" for k, s in suite.items()).encode()).hexdigest()[:16]
    results = run_checks(suite, only=set(args.only) if args.only else None)
    for r in results:
        report.outputs.append(write_csv(args.out / f"criterion_{r.number:02d}.csv", r.header, r.rows))
        for w in r.warnings:
            report.warn(w)
        print(r.line())
    report.outputs.append(
        write_csv(args.out / "summary.csv", ("criterion", "title", "passed"), [(r.number, r.title, r.passed) for r in results])
    )
    failed = [r.number for r in results if not r.passed]
    report.result = {"failed": failed, "seconds": {r.number: r.seconds for r in results}}
    return EXIT_SUITE if failed else EXIT_OK


COMMANDS = {
    "eig": cmd_eig,
    "curve": cmd_curve,
    "tau": cmd_tau,
    "solve": cmd_solve,
    "verdict": cmd_verdict,
    "perturb": cmd_perturb,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    report = RunReport(args.command)
    collector = _Collector(report)
    pkg_log = logging.getLogger("pplogistic")
    pkg_log.addHandler(collector)
    start = time.perf_counter()
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](args, report)
    except np.linalg.LinAlgError as exc:
        code = _fail(report, EXIT_NUMERIC, exc)
    except (InputError, ScenarioError, ValueError, OSError) as exc:
        code = _fail(report, EXIT_INPUT, exc)
    except ArithmeticError as exc:
        code = _fail(report, EXIT_NUMERIC, exc)
    finally:
        pkg_log.removeHandler(collector)
    report.wall_time = time.perf_counter() - start
    report.exit_code = code
    report.outputs = [str(p) for p in report.outputs]
    try:
        with open(args.out / "report.json", "w") as fh:
            json.dump(asdict(report), fh, indent=2, default=float)
            fh.write("\n")
    except OSError as exc:
        print(f"could not write report: {exc}", file=sys.stderr)
    return code


def _fail(report, code, exc):
    report.warn(f"{type(exc).__name__}: {exc}")
    print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
