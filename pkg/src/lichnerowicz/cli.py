"""``lichnerowicz`` command line: eigen, barriers, solve, verify, dual.

Exit codes: 0 success, 1 verification failed, 2 invalid config or input,
3 numeric failure, 4 hypothesis failure, 5 construction failure,
6 scheme failure or nonconvergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .barriers import BarrierOptions, build_barriers, build_supersolution
from .errors import (ConstructionFailure, DomainError, HypothesisFailure, InvalidArgument, LichnerowiczError,
                     NonConvergence, NumericError, SchemeFailure)
from .fields import dual_problem
from .io import (RunConfig, atomic_write_text, coefficient_field, config_error, dump_yaml, field_csv,
                 gaps_csv, load_config, problem_to_dict, read_field_csv, render_report)
from .iteration import MonotoneConfig, solve_lichnerowicz
from .mesh import Exhaustion, build_exhaustion
from .operators import residual
from .spectral import dirichlet_first, zaremba_first

logger = logging.getLogger("lichnerowicz")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC, EXIT_HYPOTHESIS, EXIT_CONSTRUCTION, EXIT_SCHEME = range(7)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, HypothesisFailure):
        return EXIT_HYPOTHESIS
    if isinstance(exc, ConstructionFailure):
        return EXIT_CONSTRUCTION
    if isinstance(exc, (SchemeFailure, NonConvergence)):
        return EXIT_SCHEME
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (InvalidArgument, DomainError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


class Run:
    """One command invocation: config, CLI overrides and output files."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.out = Path(args.out)
        self.config: RunConfig = load_config(args.config)
        if getattr(args, "tol", None) is not None:
            if not args.tol > 0:
                raise InvalidArgument("--tol must be positive")
            self.config.tol = args.tol
        if getattr(args, "max_iter", None) is not None:
            if args.max_iter < 1:
                raise InvalidArgument("--max-iter must be positive")
            self.config.max_iter = args.max_iter
        if getattr(args, "exhaustion", None) is not None:
            if args.exhaustion < 1:
                raise InvalidArgument("--exhaustion must be at least 1")
            self.config.exhaustion = args.exhaustion
        if getattr(args, "theta", None) is not None:
            self.config.theta = _parse_theta(args.theta)
        self.domain = self.config.domain()
        self.stdout_text = ""

    def write(self, name: str, text: str) -> None:
        atomic_write_text(self.out / name, text)

    def emit(self, command: str, body: dict, csv_text: str | None = None) -> None:
        report = render_report(command, body)
        self.write(f"{command}_report.txt", report)
        self.stdout_text = csv_text if self.args.format == "csv" and csv_text is not None else report

    def exhaustion(self) -> Exhaustion:
        cfg = self.config
        if cfg.exhaustion == 1:
            return Exhaustion.trivial(self.domain)
        return build_exhaustion(self.domain, cfg.exhaustion, cfg.exhaustion_policy)

    def barrier_options(self) -> BarrierOptions:
        return BarrierOptions(cutoff=self.config.cutoff)

    def monotone(self) -> MonotoneConfig:
        return MonotoneConfig(tol=self.config.tol, max_iter=self.config.max_iter)


def _parse_theta(text: str):
    if text == "auto":
        return "auto"
    try:
        val = float(text)
    except ValueError:
        raise InvalidArgument(f"--theta must be 'auto' or a number, got {text!r}") from None
    if not 0 < val <= 1:
        raise InvalidArgument("--theta must lie in (0, 1]")
    return val


def _region(run: Run, spec, eig: dict) -> np.ndarray | None:
    if spec is None or spec == "all":
        return None
    d = run.domain
    if isinstance(spec, dict) and set(spec) == {"radius"}:
        lo, hi = spec["radius"]
        return np.flatnonzero((d.radius >= float(lo)) & (d.radius <= float(hi)))
    if isinstance(spec, list) and all(isinstance(i, int) and not isinstance(i, bool) for i in spec):
        nodes = np.asarray(spec, dtype=np.int64)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= d.n):
            raise config_error(eig, "region", "region node id out of range")
        return nodes
    raise config_error(eig, "region", "region must be 'all', {radius: [lo, hi]} or a list of node ids")


def cmd_eigen(run: Run) -> int:
    eig = run.config.eigen
    kind = eig.get("kind", "zaremba")
    if kind not in ("zaremba", "dirichlet"):
        raise config_error(eig, "kind", "eigen kind must be 'zaremba' or 'dirichlet'")
    if "a" in eig:
        a = coefficient_field(eig["a"], run.domain, eig, "a")
    else:
        coef = run.config.coef_raw or {}
        a = coefficient_field(coef.get("a", 0.0), run.domain, coef, "a")
    region = _region(run, eig.get("region"), eig)
    solver = dirichlet_first if kind == "dirichlet" else zaremba_first
    pair = solver(run.domain, a, region)
    values = pair.extended(run.domain.n)
    csv_text = field_csv(run.domain, {"value": values})
    run.write("eigenfunction.csv", csv_text)
    run.emit("eigen", {"status": "ok", "kind": kind, "zeta": pair.zeta, "residual_norm": pair.residual_norm,
                       "region_size": int(pair.nodes.size)}, csv_text)
    return EXIT_OK


def cmd_barriers(run: Run) -> int:
    spec = run.config.problem(run.domain)
    pair = build_barriers(spec, run.exhaustion(), run.config.theta, run.barrier_options())
    csv_text = field_csv(run.domain, {"u_minus": pair.u_minus, "u_plus": pair.u_plus})
    run.write("barriers.csv", csv_text)
    run.emit("barriers", {"status": "ok", **pair.to_dict()}, csv_text)
    return EXIT_OK


def cmd_solve(run: Run) -> int:
    cfg = run.config
    spec = cfg.problem(run.domain)
    result = solve_lichnerowicz(spec, run.exhaustion(), cfg.theta, run.monotone(), run.barrier_options(),
                                check=cfg.check_hypotheses, override=cfg.override, exhaustion_mode=cfg.mode)
    csv_text = field_csv(run.domain, {"value": result.solution})
    run.write("solution.csv", csv_text)
    run.write("gaps.csv", gaps_csv(result.report.gaps))
    body = {"status": "ok", "tol": cfg.tol, **result.to_dict(),
            "acceptance": {"innermost_differences": result.exhaustion.innermost_differences,
                           "interior_residual": result.report.interior_residual,
                           "boundary_residual": result.report.boundary_residual,
                           "residual_bound": 10 * cfg.tol}}
    run.emit("solve", body, csv_text)
    return EXIT_OK


def _verify_theta(run: Run, spec) -> float:
    # the solve used b_theta, so the check must too
    if not np.any(spec.b < 0):
        return 1.0
    theta = run.config.theta
    if theta == "auto":
        theta = build_supersolution(spec, run.exhaustion(), "auto", run.barrier_options()).theta_0
    return float(theta)


def cmd_verify(run: Run) -> int:
    spec = run.config.problem(run.domain)
    theta = _verify_theta(run, spec)
    spec = spec.with_theta(theta)
    u = read_field_csv(run.args.solution)
    if u.size != run.domain.n:
        raise InvalidArgument(f"solution has {u.size} nodes, mesh has {run.domain.n}")
    bad = np.flatnonzero(~(u > 0))
    if bad.size:
        raise InvalidArgument(f"solution value at node {int(bad[0])} is not positive", node=int(bad[0]))
    res = residual(spec, u)
    thr = run.config.residual_threshold
    ok = res.interior_sup <= thr and res.boundary_sup <= thr
    worst = {}
    for part, vals, nodes in (("interior", res.interior, res.interior_nodes),
                              ("boundary", res.boundary, res.boundary_nodes)):
        if vals.size:
            j = int(np.argmax(np.abs(vals)))
            worst[part] = {"node": int(nodes[j]), "value": float(vals[j])}
    flagged = sorted({int(n) for vals, nodes in ((res.interior, res.interior_nodes), (res.boundary, res.boundary_nodes))
                      for n in nodes[np.abs(vals) > thr]})
    run.emit("verify", {"status": "ok" if ok else "failed", "theta": theta, "threshold": thr,
                        "interior_sup": res.interior_sup,
                        "boundary_sup": res.boundary_sup, "worst": worst, "flagged_nodes": flagged})
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_dual(run: Run) -> int:
    spec = run.config.problem(run.domain)
    dual = dual_problem(spec)
    original_dump = dump_yaml(problem_to_dict(spec))
    dual_dump = dump_yaml(problem_to_dict(dual))
    run.write("coefficients.yaml", original_dump)
    run.write("dual_coefficients.yaml", dual_dump)
    note = ("dual of dual recovers b" if np.all(spec.b >= 0)
            else "b has a negative part: the dual uses b_+, so the dual of the dual has b_+ in place of b")
    run.emit("dual", {"status": "ok", "sigma": dual.sigma, "tau": dual.tau,
                      "g_terms": [[c[run.domain.boundary1], q] for c, q in dual.g.terms],
                      "roundtrip_note": note}, dual_dump)
    return EXIT_OK


COMMANDS = {"eigen": cmd_eigen, "barriers": cmd_barriers, "solve": cmd_solve, "verify": cmd_verify,
            "dual": cmd_dual}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lichnerowicz",
                                     description="Barrier-bracketed solver for Lichnerowicz-type equations "
                                                 "with nonlinear boundary conditions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run config (YAML)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("report", "csv"), default="report", help="what to print on stdout")
        p.add_argument("--verbose", "-v", action="store_true")
        if name in ("barriers", "solve", "verify"):
            p.add_argument("--theta", help="'auto' or a value in (0, 1]")
            p.add_argument("--exhaustion", type=int, help="number of exhaustion members")
        if name == "solve":
            p.add_argument("--tol", type=float)
            p.add_argument("--max-iter", dest="max_iter", type=int)
        if name == "verify":
            p.add_argument("--solution", required=True, help="solution CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = None
    try:
        run = Run(args)
        code = COMMANDS[args.command](run)
    except LichnerowiczError as exc:
        code = exit_code(exc)
        failure = exc.to_dict()
        text = render_report(args.command, {"status": "failed", "exit_code": code, "failure": failure})
        try:
            atomic_write_text(Path(args.out) / f"{args.command}_report.txt", text)
        except OSError:
            pass
        sys.stderr.write(f"lichnerowicz {args.command}: {failure['kind']}: {failure['message']}\n")
        sys.stdout.write(text)
        return code
    sys.stdout.write(run.stdout_text)
    return code


if __name__ == "__main__":
    sys.exit(main())
