"""Time stepping for u(t) = f(t) + int_0^t a(t, s, u(s)) ds on [0, t_end].

The integral is discretized by the product trapezoidal rule over all
accepted nodes, which leaves one implicit scalar equation per step:

    u_n = f(t_n) + h * (a(t_n,t_0,u_0)/2 + sum_j a(t_n,t_j,u_j) + a(t_n,t_n,u_n)/2)

solved by damped Newton with the symbolic kernel derivative a_u, and a
geometrically grown bisection bracket as fallback.  When a step cannot
be completed, the step is halved locally (up to 40 times); exhaustion
with evidence of |u| crossing the blow-up cap is reported as finite-time
blow-up, exhaustion without growth as a step failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .expr import EvalDomainError, evaluate
from .ioutil import write_text_atomic
from .model import ProblemSpec

__all__ = [
    "Grid",
    "Completed",
    "BlowUp",
    "StepFailure",
    "Trajectory",
    "NonConvergenceError",
    "solve",
    "picard_reference",
    "write_trajectory_csv",
]

_MAX_HALVINGS = 40
_MAX_SUBNODES = 400  # refinement nodes allowed between two grid nodes
_NEWTON_ITERATIONS = 60
_DERIVATIVE_FLOOR = 1e-12  # below this the Newton slope is unusable; bisect instead


class NonConvergenceError(Exception):
    """Fixed-point iteration failed to settle within its budget."""

    def __init__(self, message: str, sup_diff: float = math.inf):
        self.sup_diff = sup_diff
        super().__init__(message)


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_k = t0 + k*h with n = round((t_end - t0)/h) + 1 nodes."""

    t_end: float
    h: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.h > 0.0):
            raise ValueError("h must be > 0")
        if not (self.t_end > self.t0):
            raise ValueError("t_end must exceed t0")

    @property
    def n(self) -> int:
        return int(round((self.t_end - self.t0) / self.h)) + 1

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n)


@dataclass(frozen=True)
class Completed:
    pass


@dataclass(frozen=True)
class BlowUp:
    t_star: float


@dataclass(frozen=True)
class StepFailure:
    t: float
    reason: str


Status = Union[Completed, BlowUp, StepFailure]


@dataclass(frozen=True)
class Trajectory:
    """Solution samples on the grid nodes reached before termination."""

    grid: Grid
    values: np.ndarray
    status: Status

    def times(self) -> np.ndarray:
        return self.grid.times()[: len(self.values)]


@dataclass(frozen=True)
class _SolveResult:
    converged: bool
    value: float
    max_abs: float  # largest |u| seen among iterates; blow-up evidence


class _History:
    """Append-only (t, u) store backed by amortized-growth arrays, so
    the per-step quadrature reads contiguous views instead of converting
    Python lists every attempt."""

    __slots__ = ("t", "u", "n")

    def __init__(self, t0: float, u0: float):
        self.t = np.empty(256)
        self.u = np.empty(256)
        self.t[0] = t0
        self.u[0] = u0
        self.n = 1

    def push(self, t: float, u: float) -> None:
        if self.n == len(self.t):
            self.t = np.concatenate([self.t, np.empty_like(self.t)])
            self.u = np.concatenate([self.u, np.empty_like(self.u)])
        self.t[self.n] = t
        self.u[self.n] = u
        self.n += 1

    @property
    def last_t(self) -> float:
        return float(self.t[self.n - 1])

    @property
    def last_u(self) -> float:
        return float(self.u[self.n - 1])


def solve(
    spec: ProblemSpec,
    grid: Grid,
    newton_tol: float = 1e-12,
    blowup_cap: float = 1e8,
) -> Trajectory:
    """March the discretized equation across the grid.

    Each accepted node satisfies its implicit equation to residual
    <= newton_tol * (1 + |u_n|).  The returned trajectory is a pure
    function of the inputs (bit-identical on repeated runs).  Values
    stop at the last grid node accepted before blow-up or failure.
    """
    if not (newton_tol > 0.0):
        raise ValueError("newton_tol must be > 0")
    if not (blowup_cap > 0.0):
        raise ValueError("blowup_cap must be > 0")

    tgrid = grid.times()
    u0 = float(evaluate(spec.f, {"t": grid.t0}))
    hist = _History(float(grid.t0), u0)
    values = [u0]
    status: Status = Completed()

    for n in range(1, grid.n):
        terminal = _advance_to(spec, hist, float(tgrid[n]), newton_tol, blowup_cap)
        if terminal is not None:
            status = terminal
            break
        values.append(hist.last_u)

    traj_values = np.array(values, dtype=float)
    traj_values.flags.writeable = False
    return Trajectory(grid=grid, values=traj_values, status=status)


def _advance_to(spec, hist, target, tol, cap):
    """Extend the history to ``target``, refining locally if needed.

    Returns None on success or a terminal status.  Accepted refinement
    nodes stay in the history so the quadrature remains consistent; only
    grid nodes are reported in the trajectory.
    """
    subnodes = 0
    while hist.last_t < target:
        t_cur = hist.last_t
        h_full = target - t_cur
        h_loc = h_full
        halvings = 0
        blowup_evidence = False
        while True:
            # Land on the grid node exactly; rounding of t_cur + h_loc
            # must not perturb where f and the kernel are sampled.
            t_cand = target if h_loc == h_full else t_cur + h_loc
            res = _attempt_step(spec, hist, t_cand, tol)
            if res.converged and abs(res.value) <= cap:
                hist.push(t_cand, res.value)
                break
            if res.max_abs > cap or (res.converged and abs(res.value) > cap):
                blowup_evidence = True
            halvings += 1
            h_loc *= 0.5
            if halvings > _MAX_HALVINGS or t_cur + h_loc <= t_cur:
                # Bracket: last accepted time and the smallest step that failed.
                t_star = 0.5 * (t_cur + t_cand)
                if blowup_evidence:
                    return BlowUp(t_star=t_star)
                return StepFailure(
                    t=t_cur,
                    reason="step solve failed without |u| growth after local halving",
                )
        subnodes += 1
        if subnodes > _MAX_SUBNODES and hist.last_t < target:
            return StepFailure(t=hist.last_t, reason="local refinement budget exhausted")
    return None


def _attempt_step(spec, hist, t_new, tol) -> _SolveResult:
    """One implicit solve at t_new over the current history.

    Any domain excursion during the attempt counts as a failed attempt
    (the halving machinery decides what it means); it is never raised.
    """
    m = hist.n
    ht = hist.t[:m]
    hu = hist.u[:m]
    # trapezoid weights over the nodes [t_0, ..., t_{m-1}, t_new]:
    # w_j = (d_{j-1} + d_j)/2 with segment lengths d and d_{-1} = 0
    d = np.empty(m)
    np.subtract(ht[1:], ht[:-1], out=d[: m - 1])
    d[m - 1] = t_new - ht[m - 1]
    w = np.empty(m)
    w[0] = 0.0
    w[1:] = d[: m - 1]
    w += d
    w *= 0.5
    try:
        fval = float(evaluate(spec.f, {"t": t_new}))
        lag = np.dot(w, np.broadcast_to(evaluate(spec.a, {"t": t_new, "s": ht, "u": hu}), (m,)))
        rhs = fval + float(lag)
    except EvalDomainError:
        return _SolveResult(False, 0.0, 0.0)
    return _implicit_scalar(spec, t_new, rhs, 0.5 * d[m - 1], hist.last_u, tol)


def _implicit_scalar(spec, t, rhs, weight, u_start, tol) -> _SolveResult:
    """Solve u = rhs + weight * a(t, t, u) near u_start."""

    def residual(u: float) -> float:
        return u - rhs - weight * float(evaluate(spec.a, {"t": t, "s": t, "u": u}))

    def slope(u: float) -> float:
        return 1.0 - weight * float(evaluate(spec.a_u, {"t": t, "s": t, "u": u}))

    max_abs = abs(u_start)
    u = u_start
    try:
        fu = residual(u)
    except EvalDomainError:
        return _SolveResult(False, u, max_abs)

    for _ in range(_NEWTON_ITERATIONS):
        if abs(fu) <= tol * (1.0 + abs(u)):
            return _SolveResult(True, u, max_abs)
        try:
            d = slope(u)
        except EvalDomainError:
            return _SolveResult(False, u, max_abs)
        if not math.isfinite(d) or abs(d) < _DERIVATIVE_FLOOR:
            break  # flat slope; hand over to bisection
        step = fu / d
        improved = False
        for _ in range(30):
            trial = u - step
            try:
                ft = residual(trial)
            except EvalDomainError:
                ft = math.nan
            max_abs = max(max_abs, abs(trial))
            if math.isfinite(ft) and abs(ft) < abs(fu):
                u, fu = trial, ft
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    else:
        if abs(fu) <= tol * (1.0 + abs(u)):
            return _SolveResult(True, u, max_abs)

    return _bisect(residual, u_start, tol, max_abs)


def _bisect(residual, u_start, tol, max_abs) -> _SolveResult:
    """Bracket grown geometrically from u_start, then plain bisection."""
    d = max(1.0, abs(u_start))
    lo, hi = u_start - d, u_start + d
    try:
        flo, fhi = residual(lo), residual(hi)
    except EvalDomainError:
        return _SolveResult(False, u_start, max_abs)
    grow = 0
    while flo * fhi > 0.0 and grow < 60:
        d *= 2.0
        lo, hi = u_start - d, u_start + d
        try:
            flo, fhi = residual(lo), residual(hi)
        except EvalDomainError:
            return _SolveResult(False, u_start, max_abs)
        grow += 1
    if not (math.isfinite(flo) and math.isfinite(fhi)) or flo * fhi > 0.0:
        return _SolveResult(False, u_start, max_abs)
    if flo == 0.0:
        return _SolveResult(True, lo, max(max_abs, abs(lo)))
    mid = u_start
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        try:
            fm = residual(mid)
        except EvalDomainError:
            return _SolveResult(False, mid, max_abs)
        max_abs = max(max_abs, abs(mid))
        if abs(fm) <= tol * (1.0 + abs(mid)):
            return _SolveResult(True, mid, max_abs)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return _SolveResult(False, mid, max_abs)


# ---------------------------------------------------------------------------
# Picard reference iteration
# ---------------------------------------------------------------------------


def picard_reference(spec: ProblemSpec, grid: Grid, iterations: int = 50) -> Trajectory:
    """Fixed-point iteration u <- f + int a(t, s, u) on the same grid.

    Used in tests as an independent second solver on short horizons; the
    converged iterate satisfies the same trapezoidal equations as
    :func:`solve`.  Raises :class:`NonConvergenceError` when successive
    iterates still differ by more than 1e-8 in sup norm after the
    budget, or when the iteration leaves the floating-point range.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    t = grid.times()
    n = grid.n
    f_vals = np.broadcast_to(np.asarray(evaluate(spec.f, {"t": t}), dtype=float), (n,)).copy()
    u = f_vals.copy()
    diff = math.inf
    for _ in range(iterations):
        new = f_vals.copy()
        try:
            for m in range(1, n):
                w = np.full(m + 1, grid.h)
                w[0] = w[-1] = 0.5 * grid.h
                vals = evaluate(spec.a, {"t": float(t[m]), "s": t[: m + 1], "u": u[: m + 1]})
                new[m] = f_vals[m] + float(np.sum(w * vals))
        except EvalDomainError as exc:
            raise NonConvergenceError(f"iteration left the real domain: {exc}") from exc
        diff = float(np.max(np.abs(new - u)))
        u = new
        if diff <= 1e-8:
            u.flags.writeable = False
            return Trajectory(grid=grid, values=u, status=Completed())
    raise NonConvergenceError(
        f"no convergence after {iterations} iterations (sup diff {diff:.3e})", sup_diff=diff
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def _status_token(status: Status) -> str:
    if isinstance(status, Completed):
        return "completed"
    if isinstance(status, BlowUp):
        return f"blowup t_star={status.t_star:.17g}"
    return f"step_failure t={status.t:.17g} reason={status.reason}"


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> None:
    """Write ``t,u`` rows with 17 significant digits (binary64 round
    trip) and a trailing ``# status=...`` comment line."""
    lines = ["t,u"]
    for tk, uk in zip(traj.times(), traj.values):
        lines.append(f"{tk:.17g},{uk:.17g}")
    lines.append(f"# status={_status_token(traj.status)}")
    write_text_atomic(Path(path), "\n".join(lines) + "\n")
