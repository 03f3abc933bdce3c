"""Command-line front end.

Subcommands:

    volterra solve   --problem P [--t-end T --step H --out DIR]
    volterra certify --problem P [--t-max T --u-max U --out DIR]
    volterra verify  --problem P [all of the above]
    volterra demo-blowup [--out DIR]

Problem files are JSON (schema in docs/problem-schema.md).  Exit codes:
0 success (solve completed / certificate issued / bound verified),
2 negative verdict (no certificate, or bound violated), 3 blow-up from
``solve``, 1 anything malformed.  Outputs are written atomically and
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certificate import (
    Certificate,
    derive_inequality,
    search_exponential,
    verify_solution_bound,
)
from .comparison import propagate_majorant
from .expr import ExprError
from .ioutil import write_text_atomic
from .model import (
    ProblemFileError,
    ProblemSpec,
    ValidationReport,
    load_problem,
    problem_from_dict,
    validate_decay,
)
from .solver import BlowUp, Completed, Grid, StepFailure, Trajectory, solve, write_trajectory_csv

__all__ = ["main"]

log = logging.getLogger("volterra")

_EXIT_OK = 0
_EXIT_ERROR = 1
_EXIT_REFUSED = 2
_EXIT_BLOWUP = 3

_DEMO_PROBLEM = {
    # u = 1 + integral of u^2: the textbook finite-time blow-up at t = 1.
    "f": "1",
    "a": "u^2",
    "c0": 1.0,
    "b0": 0.0,
    "c1": 1.0,
    "b1": 0.0,
    "c2": 0.0,
    "b": 0.0,
    "p": 1.0,
}


def _configure_logging() -> None:
    level_name = os.environ.get("VOLTERRA_LOG", "warning").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING}.get(
        level_name, logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_json(path: Path, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _certify_pipeline(
    spec: ProblemSpec, t_max: float, u_max: float
) -> tuple[ValidationReport, Certificate]:
    report = validate_decay(spec, t_max=t_max, u_max=u_max)
    if not report.passed:
        log.info("decay hypotheses failed numerical validation")
    data = derive_inequality(spec)
    cert = search_exponential(data, t_max=t_max)
    return report, cert


def cmd_solve(args: argparse.Namespace) -> int:
    spec = load_problem(args.problem)
    grid = Grid(t_end=args.t_end, h=args.step)
    traj = solve(spec, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out / "trajectory.csv")
    if isinstance(traj.status, Completed):
        print(f"completed: {len(traj.values)} nodes, u(t_end) = {traj.values[-1]:.8g}")
        return _EXIT_OK
    if isinstance(traj.status, BlowUp):
        print(f"blow-up detected near t={traj.status.t_star:.2f}")
        return _EXIT_BLOWUP
    print(f"step failure at t={traj.status.t:.6g}: {traj.status.reason}", file=sys.stderr)
    return _EXIT_ERROR


def cmd_certify(args: argparse.Namespace) -> int:
    spec = load_problem(args.problem)
    report, cert = _certify_pipeline(spec, args.t_max, args.u_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "certificate.json", {"validation": report.as_dict(), "certificate": cert.to_dict()})
    if cert.certified and report.passed:
        print(f"certified: |u(t)| <= {cert.to_dict()['bound']}")
        return _EXIT_OK
    if not cert.certified:
        detail = cert.verdict.reason
        margin = cert.margin_min
        if margin is not None:
            print(f"no certificate: {detail} (best margin {margin:.6g})")
        else:
            print(f"no certificate: {detail}")
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        print(f"decay hypotheses failed validation: {', '.join(failed)}")
    return _EXIT_REFUSED


def cmd_verify(args: argparse.Namespace) -> int:
    spec = load_problem(args.problem)
    grid = Grid(t_end=args.t_end, h=args.step)
    traj = solve(spec, grid)
    report, cert = _certify_pipeline(spec, args.t_max, args.u_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out / "trajectory.csv")

    payload: dict = {
        "solver": {"status": _status_dict(traj)},
        "validation": report.as_dict(),
        "certificate": cert.to_dict(),
    }

    if isinstance(traj.status, StepFailure):
        _write_json(out / "report.json", payload)
        print(f"step failure at t={traj.status.t:.6g}: {traj.status.reason}", file=sys.stderr)
        return _EXIT_ERROR

    if not (cert.certified and report.passed):
        _write_json(out / "report.json", payload)
        reasons = []
        if not cert.certified:
            reasons.append(f"no certificate ({cert.verdict.reason})")
        if not report.passed:
            reasons.append("decay hypotheses failed validation")
        message = "; ".join(reasons)
        if isinstance(traj.status, BlowUp):
            message += f"; solution blows up near t={traj.status.t_star:.2f}"
        print(message)
        return _EXIT_REFUSED

    if isinstance(traj.status, BlowUp):
        # A certified problem must not blow up; report the contradiction.
        _write_json(out / "report.json", payload)
        print(
            f"certificate issued but the solver reports blow-up near "
            f"t={traj.status.t_star:.2f}; check the envelope constants",
            file=sys.stderr,
        )
        return _EXIT_REFUSED

    bound_report = verify_solution_bound(traj, cert)
    data = derive_inequality(spec)
    majorant = propagate_majorant(data, grid)
    payload["bound_check"] = bound_report.as_dict()
    payload["majorant_status"] = _status_token_dict(majorant.status)
    _write_json(out / "report.json", payload)
    _write_bound_csv(out / "bound.csv", traj, majorant.values, cert)

    if bound_report.holds:
        print(f"bound holds at every node (min slack {bound_report.min_slack:.6g})")
        return _EXIT_OK
    print(
        f"bound violated at t={bound_report.worst_t:.6g}: "
        f"|u| = {abs(bound_report.worst_u):.6g} vs bound {bound_report.worst_bound:.6g}"
    )
    return _EXIT_REFUSED


def _write_bound_csv(path: Path, traj: Trajectory, majorant: np.ndarray, cert: Certificate) -> None:
    t = traj.times()
    bound = cert.bound_values(t)
    n = min(len(t), len(majorant))
    lines = ["t,u,g,mu_inv"]
    for k in range(n):
        lines.append(
            f"{t[k]:.17g},{traj.values[k]:.17g},{majorant[k]:.17g},{bound[k]:.17g}"
        )
    write_text_atomic(path, "\n".join(lines) + "\n")


def _status_dict(traj: Trajectory) -> dict:
    return _status_token_dict(traj.status)


def _status_token_dict(status) -> dict:
    if isinstance(status, Completed):
        return {"kind": "completed"}
    if isinstance(status, BlowUp):
        return {"kind": "blowup", "t_star": status.t_star}
    return {"kind": "step_failure", "t": status.t, "reason": status.reason}


def cmd_demo_blowup(args: argparse.Namespace) -> int:
    """Walk through the quadratic-kernel example end to end."""
    spec = problem_from_dict(_DEMO_PROBLEM)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print("problem: u(t) = 1 + integral_0^t u(s)^2 ds")
    print("closed form: u(t) = 1/(1-t), which leaves every bound at t -> 1")
    grid = Grid(t_end=2.0, h=1e-3)
    traj = solve(spec, grid)
    write_trajectory_csv(traj, out / "trajectory.csv")
    k = int(round(0.5 / grid.h))
    print(f"solver: u(0.5) = {traj.values[k]:.6f} (closed form 2.0)")
    if isinstance(traj.status, BlowUp):
        print(f"solver: blow-up detected near t={traj.status.t_star:.2f}")

    report, cert = _certify_pipeline(spec, t_max=50.0, u_max=10.0)
    _write_json(out / "certificate.json", {"validation": report.as_dict(), "certificate": cert.to_dict()})
    if not cert.certified:
        print(f"certificate search: refused ({cert.verdict.reason})")
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        print(f"hypothesis validation: failed {', '.join(failed)}")
    print("conclusion: no global bound exists for this problem, and none is claimed")
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volterra",
        description=(
            "Solve nonlinear Volterra integral equations of the second kind "
            "and certify global growth bounds on their solutions."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, problem: bool = True) -> None:
        if problem:
            p.add_argument("--problem", required=True, help="problem file (JSON)")
        p.add_argument("--out", default=".", help="output directory (default: .)")

    p_solve = sub.add_parser("solve", help="integrate the equation and export the trajectory")
    add_common(p_solve)
    p_solve.add_argument("--t-end", type=float, default=10.0, help="horizon (default 10)")
    p_solve.add_argument("--step", type=float, default=1e-3, help="grid step (default 1e-3)")
    p_solve.set_defaults(func=cmd_solve)

    p_cert = sub.add_parser("certify", help="validate hypotheses and search for a growth bound")
    add_common(p_cert)
    p_cert.add_argument("--t-max", type=float, default=50.0, help="check horizon (default 50)")
    p_cert.add_argument("--u-max", type=float, default=10.0, help="state sample range (default 10)")
    p_cert.set_defaults(func=cmd_certify)

    p_verify = sub.add_parser("verify", help="solve, certify, and check the bound node by node")
    add_common(p_verify)
    p_verify.add_argument("--t-end", type=float, default=10.0)
    p_verify.add_argument("--step", type=float, default=1e-3)
    p_verify.add_argument("--t-max", type=float, default=50.0)
    p_verify.add_argument("--u-max", type=float, default=10.0)
    p_verify.set_defaults(func=cmd_verify)

    p_demo = sub.add_parser("demo-blowup", help="run the quadratic-kernel blow-up walkthrough")
    add_common(p_demo, problem=False)
    p_demo.set_defaults(func=cmd_demo_blowup)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    for name in ("t_end", "step", "t_max", "u_max"):
        value = getattr(args, name, None)
        if value is not None and not (value > 0.0 and math.isfinite(value)):
            print(f"--{name.replace('_', '-')} must be a positive number", file=sys.stderr)
            return _EXIT_ERROR
    try:
        return args.func(args)
    except (ProblemFileError, ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
