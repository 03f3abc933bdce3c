"""Majorant integration and the norm-derivative sanity check.

The growth inequality taken with equality,

    g'(t) = -damping(t) * g(t) + gain(t, g(t)) + drive(t),   g(0) = initial,

is an ordinary differential equation whose solution dominates every
solution of the inequality (comparison principle: the right side is
non-decreasing in g).  Integrating it numerically gives the extremal
curve against which both solver trajectories and certified bounds are
tested.  Classical RK4 is used here; the order mismatch with the
trapezoidal integral-equation solver is irrelevant to the domination
property, which carries its own tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .certificate import InequalityData
from .expr import evaluate
from .ioutil import write_text_atomic
from .solver import BlowUp, Completed, Grid

__all__ = [
    "MajorantCurve",
    "NormDerivativeReport",
    "propagate_majorant",
    "norm_derivative_check",
    "write_majorant_csv",
]


@dataclass(frozen=True)
class MajorantCurve:
    grid: Grid
    values: np.ndarray
    status: Union[Completed, BlowUp]

    def times(self) -> np.ndarray:
        return self.grid.times()[: len(self.values)]


def propagate_majorant(
    data: InequalityData, grid: Grid, blowup_cap: float = 1e8
) -> MajorantCurve:
    """Integrate the equality version of the inequality with RK4.

    Reports blow-up (midpoint of the crossing step) once the curve
    leaves [-cap, cap] or the reals; domain errors from the expressions
    themselves propagate.
    """

    def rhs(t: float, g: float) -> float:
        damping = float(evaluate(data.damping, {"t": t}))
        gain = float(evaluate(data.gain, {"t": t, "u": g}))
        drive = float(evaluate(data.drive, {"t": t}))
        return -damping * g + gain + drive

    times = grid.times()
    h = grid.h
    values = [float(data.initial)]
    status: Union[Completed, BlowUp] = Completed()
    g = float(data.initial)
    for n in range(1, grid.n):
        t = float(times[n - 1])
        k1 = rhs(t, g)
        k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2)
        k4 = rhs(t + h, g + h * k3)
        g_new = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(g_new) or abs(g_new) > blowup_cap:
            status = BlowUp(t_star=t + 0.5 * h)
            break
        g = g_new
        values.append(g)
    curve = np.array(values, dtype=float)
    curve.flags.writeable = False
    return MajorantCurve(grid=grid, values=curve, status=status)


@dataclass(frozen=True)
class NormDerivativeReport:
    max_violation: float
    worst_t: float


def norm_derivative_check(
    samples: Sequence[tuple[float, float, float]], h: float
) -> NormDerivativeReport:
    """Check that |u|' never exceeds |u'| along sampled data.

    ``samples`` lists (t, u(t), u'(t)) at consecutive points spaced h
    apart.  The one-sided quotient (|u(t+h)| - |u(t)|) / h is compared
    against |u'(t)|; for C1 data the excess stays O(h) above zero, also
    across corners of |u|.
    """
    if h <= 0.0:
        raise ValueError("h must be > 0")
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    worst = (-np.inf, float(samples[0][0]))
    for (t0, u0, du0), (_, u1, _) in zip(samples[:-1], samples[1:]):
        quotient = (abs(u1) - abs(u0)) / h
        violation = quotient - abs(du0)
        if violation > worst[0]:
            worst = (violation, float(t0))
    return NormDerivativeReport(max_violation=float(worst[0]), worst_t=worst[1])


def write_majorant_csv(curve: MajorantCurve, path: Union[str, Path]) -> None:
    """Write ``t,g`` rows in the same numeric format as trajectories."""
    lines = ["t,g"]
    for tk, gk in zip(curve.times(), curve.values):
        lines.append(f"{tk:.17g},{gk:.17g}")
    if isinstance(curve.status, BlowUp):
        lines.append(f"# status=blowup t_star={curve.status.t_star:.17g}")
    else:
        lines.append("# status=completed")
    write_text_atomic(Path(path), "\n".join(lines) + "\n")
