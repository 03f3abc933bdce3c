"""Verifiable global growth bounds for the scalar differential inequality

    g'(t) <= -damping(t) * g(t) + gain(t, g(t)) + drive(t),    g(0) = initial,

where gain(t, .) is non-negative and non-decreasing on g >= 0.  A
certificate is a positive C1 weight function w(t) satisfying

    gain(t, 1/w(t)) + drive(t) <= (1/w(t)) * (damping(t) - w'(t)/w(t))

for all t >= 0 together with the start condition w(0) * g(0) < 1 (or
<= 1 for the non-strict variant); it entails g(t) < 1/w(t) for all t.
Trajectories of the integral-equation solver inherit the bound because
|u(t)| satisfies exactly this inequality when the problem's decay
envelopes hold.

Two closed-form weight families are searched.  For exponential decay
data the candidate w(t) = coefficient * exp(-rate*t) reduces, after
dividing by the right side, to a sum of exponentials staying below 1;
with every exponent non-positive the supremum sits at t = 0 and the
whole condition collapses to the scalar level check

    h(c) = (c0+c1+c2)*c + (c1+c2)*c**(1-2p) <= rate.

Power-law decay data admits the same argument for
w(t) = coefficient * (1+t)**(-rate) in log-time.  Tabulated weights are
checked on the grid only, and the certificate records that weaker
guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .expr import (
    Binary,
    Constant,
    Expr,
    Unary,
    Variable,
    differentiate,
    evaluate,
    to_text,
)
from .model import ProblemSpec
from .solver import Completed, Trajectory

__all__ = [
    "ExponentialWeight",
    "PowerWeight",
    "TabulatedWeight",
    "ExponentialDecayData",
    "PowerDecayData",
    "InequalityData",
    "Certified",
    "Refused",
    "ExponentComparison",
    "GridOnly",
    "Certificate",
    "BoundReport",
    "InvalidWeightError",
    "derive_inequality",
    "make_exponential_data",
    "make_power_data",
    "check_weight",
    "search_exponential",
    "search_power",
    "verify_solution_bound",
]

RATE_GRID = np.logspace(-3.0, 3.0, 601)  # candidate growth rates, log-spaced
_GOLDEN_TOL = 1e-10
_COEFF_FLOOR = 1e-8  # left end of the coefficient bracket in searches
_COEFF_CAP = 1e8  # right end when the start condition puts no limit
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


class InvalidWeightError(ValueError):
    """The candidate weight is not strictly positive on the grid."""


# ---------------------------------------------------------------------------
# Weight families
# ---------------------------------------------------------------------------


def _var_t() -> Expr:
    return Variable("t")


@dataclass(frozen=True)
class ExponentialWeight:
    """w(t) = coefficient * exp(-rate * t); implied bound exp(rate*t)/coefficient."""

    coefficient: float
    rate: float

    def __post_init__(self):
        if not (self.coefficient > 0.0 and self.rate > 0.0):
            raise ValueError("coefficient and rate must be > 0")

    def values(self, t):
        return self.coefficient * np.exp(-self.rate * np.asarray(t, dtype=float))

    def derivative_values(self, t):
        return -self.rate * self.values(t)

    def bound_values(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self.rate * np.asarray(t, dtype=float)) / self.coefficient

    def bound_expr(self) -> Expr:
        grow = Unary("exp", Binary("mul", Constant(self.rate), _var_t()))
        return Binary("div", grow, Constant(self.coefficient))


@dataclass(frozen=True)
class PowerWeight:
    """w(t) = coefficient * (1+t)**(-rate); implied bound (1+t)**rate / coefficient."""

    coefficient: float
    rate: float

    def __post_init__(self):
        if not (self.coefficient > 0.0 and self.rate > 0.0):
            raise ValueError("coefficient and rate must be > 0")

    def values(self, t):
        return self.coefficient * (1.0 + np.asarray(t, dtype=float)) ** (-self.rate)

    def derivative_values(self, t):
        return -self.rate * self.coefficient * (1.0 + np.asarray(t, dtype=float)) ** (
            -self.rate - 1.0
        )

    def bound_values(self, t):
        with np.errstate(over="ignore"):
            return (1.0 + np.asarray(t, dtype=float)) ** self.rate / self.coefficient

    def bound_expr(self) -> Expr:
        grow = Binary("pow", Binary("add", Constant(1.0), _var_t()), Constant(self.rate))
        return Binary("div", grow, Constant(self.coefficient))


@dataclass(frozen=True)
class TabulatedWeight:
    """Arbitrary positive weight given as an expression in t.

    The derivative comes from symbolic differentiation; condition checks
    against tabulated weights are grid-only and the certificate says so.
    """

    expr: Expr

    def __post_init__(self):
        from .expr import variables

        extra = variables(self.expr) - {"t"}
        if extra:
            raise ValueError(f"tabulated weight may depend on t only; found {sorted(extra)}")

    def values(self, t):
        return evaluate(self.expr, {"t": np.asarray(t, dtype=float)})

    def derivative_values(self, t):
        return evaluate(differentiate(self.expr, "t"), {"t": np.asarray(t, dtype=float)})

    def bound_values(self, t):
        with np.errstate(divide="ignore", over="ignore"):
            return 1.0 / np.asarray(self.values(t), dtype=float)

    def bound_expr(self) -> Expr:
        return Binary("div", Constant(1.0), self.expr)


WeightFamily = Union[ExponentialWeight, PowerWeight, TabulatedWeight]


# ---------------------------------------------------------------------------
# Inequality data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialDecayData:
    """Constants of exponential-decay data: drive and gain built from
    c0*e^(-b0 t) + c1*e^(-b1 t) + c2*e^(-b t) and (c1 e^(-b1 t) + c2 e^(-b t)) g^(2p)."""

    c0: float
    b0: float
    c1: float
    b1: float
    c2: float
    b: float
    p: float


@dataclass(frozen=True)
class PowerDecayData:
    """Power-law analogue with terms d_i * (1+t)**(-e_i)."""

    d0: float
    e0: float
    d1: float
    e1: float
    d2: float
    e2: float
    p: float


@dataclass(frozen=True)
class InequalityData:
    """Right-hand side of the growth inequality.

    ``gain`` is an expression in (t, u) where u stands for the state g;
    it must be non-negative and non-decreasing in u on the range checked
    (verified by sampling in :func:`check_weight`).  ``exp_data`` and
    ``power_data`` carry the structured decay constants when the data
    has that closed form, enabling exact tail handling.
    """

    damping: Expr
    gain: Expr
    drive: Expr
    initial: float
    exp_data: Optional[ExponentialDecayData] = None
    power_data: Optional[PowerDecayData] = None

    def __post_init__(self):
        if not (self.initial >= 0.0):
            raise ValueError("initial value must be >= 0")


def _decay_term(c: float, rate: float) -> Optional[Expr]:
    """c * exp(-rate * t), dropped when c = 0, constant when rate = 0."""
    if c == 0.0:
        return None
    if rate == 0.0:
        return Constant(c)
    decay = Unary("exp", Binary("mul", Constant(-rate), _var_t()))
    return Binary("mul", Constant(c), decay)


def _power_term(c: float, order: float) -> Optional[Expr]:
    """c * (1+t)**(-order), dropped when c = 0, constant when order = 0."""
    if c == 0.0:
        return None
    if order == 0.0:
        return Constant(c)
    base = Binary("add", Constant(1.0), _var_t())
    return Binary("mul", Constant(c), Binary("pow", base, Constant(-order)))


def _sum_terms(terms: list) -> Expr:
    terms = [term for term in terms if term is not None]
    if not terms:
        return Constant(0.0)
    total = terms[0]
    for term in terms[1:]:
        if isinstance(total, Constant) and isinstance(term, Constant):
            total = Constant(total.value + term.value)
        else:
            total = Binary("add", total, term)
    return total


def _state_gain(coefficient: Expr, two_p: float) -> Expr:
    if isinstance(coefficient, Constant) and coefficient.value == 0.0:
        return Constant(0.0)
    power = Binary("pow", Variable("u"), Constant(two_p))
    if isinstance(coefficient, Constant) and coefficient.value == 1.0:
        return power
    return Binary("mul", coefficient, power)


def derive_inequality(spec: ProblemSpec) -> InequalityData:
    """Translate a problem's decay envelopes into inequality data.

    The damping term is identically zero here; drive collects the three
    envelope decays, gain carries the state growth factor g**(2p), and
    the initial value is the exact |f(0)| (not the looser constant c0).
    """
    fe, ke = spec.forcing_env, spec.kernel_env
    drive = _sum_terms(
        [_decay_term(fe.c0, fe.b0), _decay_term(ke.c1, ke.b1), _decay_term(ke.c2, ke.b)]
    )
    gain_coef = _sum_terms([_decay_term(ke.c1, ke.b1), _decay_term(ke.c2, ke.b)])
    gain = _state_gain(gain_coef, 2.0 * ke.p)
    initial = abs(float(evaluate(spec.f, {"t": 0.0})))
    return InequalityData(
        damping=Constant(0.0),
        gain=gain,
        drive=drive,
        initial=initial,
        exp_data=ExponentialDecayData(
            c0=fe.c0, b0=fe.b0, c1=ke.c1, b1=ke.b1, c2=ke.c2, b=ke.b, p=ke.p
        ),
    )


def make_exponential_data(
    c0: float,
    b0: float,
    c1: float,
    b1: float,
    c2: float,
    b: float,
    p: float,
    initial: float,
) -> InequalityData:
    """Inequality data with exponential decay structure, built directly
    from constants (for certificates detached from any problem file)."""
    drive = _sum_terms([_decay_term(c0, b0), _decay_term(c1, b1), _decay_term(c2, b)])
    gain = _state_gain(_sum_terms([_decay_term(c1, b1), _decay_term(c2, b)]), 2.0 * p)
    return InequalityData(
        damping=Constant(0.0),
        gain=gain,
        drive=drive,
        initial=initial,
        exp_data=ExponentialDecayData(c0=c0, b0=b0, c1=c1, b1=b1, c2=c2, b=b, p=p),
    )


def make_power_data(
    d0: float,
    e0: float,
    d1: float,
    e1: float,
    d2: float,
    e2: float,
    p: float,
    initial: float,
) -> InequalityData:
    """Inequality data with power-law decay structure (1+t)**(-e_i)."""
    drive = _sum_terms([_power_term(d0, e0), _power_term(d1, e1), _power_term(d2, e2)])
    gain = _state_gain(_sum_terms([_power_term(d1, e1), _power_term(d2, e2)]), 2.0 * p)
    return InequalityData(
        damping=Constant(0.0),
        gain=gain,
        drive=drive,
        initial=initial,
        power_data=PowerDecayData(d0=d0, e0=e0, d1=d1, e1=e1, d2=d2, e2=e2, p=p),
    )


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certified:
    strict: bool


@dataclass(frozen=True)
class Refused:
    reason: str


@dataclass(frozen=True)
class ExponentComparison:
    """Exact tail condition: the listed exponents must all be <= 0, so
    the normalized condition attains its supremum at t = 0 and the grid
    check extends to the whole half line."""

    exponents: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(x <= 0.0 for x in self.exponents)


@dataclass(frozen=True)
class GridOnly:
    """No closed-form tail argument; the margin was checked on [0, t_max] only."""

    t_max: float


TailCheck = Union[ExponentComparison, GridOnly]


@dataclass(frozen=True)
class Certificate:
    weight: Optional[WeightFamily]
    verdict: Union[Certified, Refused]
    margin_min: Optional[float]
    tail_check: TailCheck
    bound: Optional[Expr]

    @property
    def certified(self) -> bool:
        return isinstance(self.verdict, Certified)

    def bound_values(self, t) -> np.ndarray:
        if self.weight is None:
            raise ValueError("refused certificate carries no bound")
        return np.asarray(self.weight.bound_values(t), dtype=float)

    def to_dict(self) -> dict:
        out: dict = {
            "family": _family_name(self.weight),
            "verdict": "certified" if self.certified else "refused",
            "margin_min": _json_float(self.margin_min),
            "bound": to_text(self.bound) if self.bound is not None else None,
        }
        if isinstance(self.weight, (ExponentialWeight, PowerWeight)):
            out["coefficient"] = self.weight.coefficient
            out["rate"] = self.weight.rate
        elif isinstance(self.weight, TabulatedWeight):
            out["weight"] = to_text(self.weight.expr)
        if isinstance(self.verdict, Certified):
            out["strict"] = self.verdict.strict
        else:
            out["reason"] = self.verdict.reason
        if isinstance(self.tail_check, ExponentComparison):
            out["tail_check"] = {
                "kind": "exponent_comparison",
                "exponents": list(self.tail_check.exponents),
                "passed": self.tail_check.passed,
            }
        else:
            out["tail_check"] = {"kind": "grid_only", "t_max": self.tail_check.t_max}
        return out


def _family_name(weight: Optional[WeightFamily]) -> Optional[str]:
    if isinstance(weight, ExponentialWeight):
        return "exponential"
    if isinstance(weight, PowerWeight):
        return "power"
    if isinstance(weight, TabulatedWeight):
        return "tabulated"
    return None


def _json_float(x: Optional[float]):
    if x is None:
        return None
    return x if math.isfinite(x) else repr(x)


# ---------------------------------------------------------------------------
# Margin evaluation
# ---------------------------------------------------------------------------


def _exp_reduction_terms(d: ExponentialDecayData, weight: ExponentialWeight):
    """(coefficient, exponent) pairs of the normalized condition
    sum_i C_i * exp(lambda_i * t) <= 1 for an exponential weight on
    exponential data.  Inactive envelope terms are dropped."""
    q, c = weight.rate, weight.coefficient
    shrink = c ** (1.0 - 2.0 * d.p)
    terms = []
    if d.c0 > 0.0:
        terms.append((d.c0 * c / q, -(d.b0 + q)))
    if d.c1 > 0.0:
        terms.append((d.c1 * c / q, -(d.b1 + q)))
    if d.c2 > 0.0:
        terms.append((d.c2 * c / q, -(d.b + q)))
    if d.c1 > 0.0:
        terms.append((d.c1 * shrink / q, (2.0 * d.p - 1.0) * q - d.b1))
    if d.c2 > 0.0:
        terms.append((d.c2 * shrink / q, (2.0 * d.p - 1.0) * q - d.b))
    return terms


def _power_reduction_terms(d: PowerDecayData, weight: PowerWeight):
    """Analogous pairs (D_i, sigma_i) for sum_i D_i * (1+t)**sigma_i <= 1."""
    r, c = weight.rate, weight.coefficient
    shrink = c ** (1.0 - 2.0 * d.p)
    terms = []
    if d.d0 > 0.0:
        terms.append((d.d0 * c / r, 1.0 - r - d.e0))
    if d.d1 > 0.0:
        terms.append((d.d1 * c / r, 1.0 - r - d.e1))
    if d.d2 > 0.0:
        terms.append((d.d2 * c / r, 1.0 - r - d.e2))
    if d.d1 > 0.0:
        terms.append((d.d1 * shrink / r, (2.0 * d.p - 1.0) * r + 1.0 - d.e1))
    if d.d2 > 0.0:
        terms.append((d.d2 * shrink / r, (2.0 * d.p - 1.0) * r + 1.0 - d.e2))
    return terms


def _margin_from_terms(terms, factor: np.ndarray, profile) -> np.ndarray:
    """margin(t) = factor(t) * (1 - sum_i C_i * profile(exponent_i, t)).

    The factored form never produces NaN: factor > 0 may overflow to
    inf, and the normalized sum is exactly zero at equality.
    """
    total = np.zeros_like(factor)
    with np.errstate(over="ignore", invalid="ignore"):
        for coef, exponent in terms:
            total = total + coef * profile(exponent)
        normalized = 1.0 - total
        # inf * 0 in the discarded branch of the where is masked out
        return np.where(normalized == 0.0, 0.0, factor * normalized)


def _margin_exponential(d, weight, t):
    terms = _exp_reduction_terms(d, weight)
    with np.errstate(over="ignore"):
        factor = (weight.rate / weight.coefficient) * np.exp(weight.rate * t)
    return _margin_from_terms(terms, factor, lambda lam: np.exp(lam * t))


def _margin_power(d, weight, t):
    terms = _power_reduction_terms(d, weight)
    base = 1.0 + t
    with np.errstate(over="ignore"):
        factor = (weight.rate / weight.coefficient) * base ** (weight.rate - 1.0)
    return _margin_from_terms(terms, factor, lambda sig: base**sig)


def _margin_generic(data: InequalityData, weight: WeightFamily, t: np.ndarray) -> np.ndarray:
    w = np.asarray(weight.values(t), dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
        raise InvalidWeightError("weight must be positive and finite on the grid")
    wp = np.asarray(weight.derivative_values(t), dtype=float)
    inv = 1.0 / w
    damping = np.asarray(evaluate(data.damping, {"t": t}), dtype=float)
    drive = np.asarray(evaluate(data.drive, {"t": t}), dtype=float)
    gain = np.asarray(evaluate(data.gain, {"t": t, "u": inv}), dtype=float)
    return inv * (damping - wp * inv) - gain - drive


def _check_gain_shape(data: InequalityData) -> None:
    """Sample the gain for non-negativity and monotonicity in the state."""
    probes_t = np.linspace(0.0, 10.0, 5)
    probes_g = np.array([0.0, 1e-3, 1.0, 1e3, 1e6])
    for t in probes_t:
        vals = np.asarray(
            evaluate(data.gain, {"t": float(t), "u": probes_g}), dtype=float
        )
        vals = np.broadcast_to(vals, probes_g.shape)
        if np.any(vals < -1e-12):
            raise ValueError("gain must be non-negative on g >= 0")
        if np.any(np.diff(vals) < -1e-9 * (1.0 + np.abs(vals[:-1]))):
            raise ValueError("gain must be non-decreasing in the state")


def _assemble_certificate(
    data: InequalityData, weight: WeightFamily, grid: np.ndarray
) -> Certificate:
    if isinstance(weight, ExponentialWeight) and data.exp_data is not None:
        margins = _margin_exponential(data.exp_data, weight, grid)
        tail: TailCheck = ExponentComparison(
            tuple(lam for _, lam in _exp_reduction_terms(data.exp_data, weight))
        )
    elif isinstance(weight, PowerWeight) and data.power_data is not None:
        margins = _margin_power(data.power_data, weight, grid)
        tail = ExponentComparison(
            tuple(sig for _, sig in _power_reduction_terms(data.power_data, weight))
        )
    else:
        margins = np.asarray(_margin_generic(data, weight, grid), dtype=float)
        margins = np.broadcast_to(margins, grid.shape)
        tail = GridOnly(t_max=float(grid[-1]))

    w0 = float(np.asarray(weight.values(np.asarray([0.0]))).reshape(-1)[0])
    if not (w0 > 0.0):
        raise InvalidWeightError("weight must be positive at t = 0")
    start = w0 * data.initial

    margin_min = float(np.min(margins))
    failures = []
    if isinstance(tail, ExponentComparison) and not tail.passed:
        positive = [x for x in tail.exponents if x > 0.0]
        failures.append(f"positive tail exponent(s) {positive}")
    if margin_min < 0.0:
        worst = float(grid[int(np.argmin(margins))])
        failures.append(f"negative margin {margin_min:.6g} at t={worst:.6g}")
    if start > 1.0:
        failures.append(f"start condition failed: w(0)*g(0) = {start:.6g} > 1")

    if failures:
        verdict: Union[Certified, Refused] = Refused("; ".join(failures))
    else:
        verdict = Certified(strict=bool(start < 1.0))
    return Certificate(
        weight=weight,
        verdict=verdict,
        margin_min=margin_min,
        tail_check=tail,
        bound=weight.bound_expr(),
    )


def check_weight(
    data: InequalityData,
    weight: WeightFamily,
    t_max: float = 50.0,
    n_samples: int = 5001,
) -> Certificate:
    """Check one candidate weight against the inequality data.

    The margin

        (1/w) * (damping - w'/w) - gain(t, 1/w) - drive

    is evaluated on a uniform grid over [0, t_max]; certification
    requires the minimum margin >= 0, the start condition w(0)*g(0) <= 1
    (strict bound when < 1), and a passing tail check.  For exponential
    weights on exponential decay data (and power on power) the tail is
    exact; otherwise the certificate records a grid-only guarantee.
    """
    if not (t_max > 0.0):
        raise ValueError("t_max must be > 0")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    _check_gain_shape(data)
    grid = np.linspace(0.0, t_max, n_samples)
    return _assemble_certificate(data, weight, grid)


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------


def _golden_min(f, lo: float, hi: float, tol: float = _GOLDEN_TOL):
    """Golden-section minimum of a unimodal f on [lo, hi]; returns (x, f(x)).
    For monotone f this converges to the boundary minimizer."""
    a, b = lo, hi
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    steps = int(math.ceil(math.log(tol / h) / math.log(_INVPHI)))
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    yc, yd = f(c), f(d)
    for _ in range(steps - 1):
        h *= _INVPHI
        if yc < yd:
            b, d, yd = d, c, yc
            c = a + _INVPHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            d = a + _INVPHI * h
            yd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _coefficient_bracket(initial: float) -> tuple[float, float]:
    """Admissible weight coefficients: (0, 1/initial) from the strict
    start condition, clipped to a representable bracket."""
    if initial > 0.0:
        hi = (1.0 / initial) * (1.0 - 1e-12)
    else:
        hi = _COEFF_CAP
    lo = min(_COEFF_FLOOR, hi * 1e-3)
    return lo, hi


def _level_function(total: float, state_total: float, p: float):
    """h(c) = total * c + state_total * c**(1-2p), the normalized
    condition at t = 0.  Unimodal on (0, inf)."""
    exponent = 1.0 - 2.0 * p

    def h(c: float) -> float:
        value = total * c
        if state_total > 0.0:
            value += state_total * c**exponent
        return value

    return h


def search_exponential(
    data: InequalityData, t_max: float = 50.0, n_samples: int = 5001
) -> Certificate:
    """Search the family w(t) = c * exp(-rate*t) for a certificate.

    Admissible rates must keep every tail exponent non-positive; for
    p > 1/2 that caps the rate at min(active kernel decay rates)/(2p-1)
    and the search takes the largest admissible rate, while for
    p <= 1/2 every rate is admissible and the sweep returns the smallest
    certifying rate on the grid (slowest certified growth).  For each
    rate the coefficient minimizing the level function h is located by
    golden section on the admissible bracket.  A refusal is a verdict,
    not an error.
    """
    if data.exp_data is None:
        raise ValueError("search_exponential needs exponential decay data")
    d = data.exp_data
    lo, hi = _coefficient_bracket(data.initial)
    total = d.c0 + d.c1 + d.c2
    state_total = d.c1 + d.c2
    h = _level_function(total, state_total, d.p)

    if state_total == 0.0:
        # Pure forcing: the condition is total * c <= rate, satisfiable
        # for every rate, so the smallest rate on the grid wins.  The
        # coefficient sits at half its feasible range to stay clear of
        # equality knife edges.
        rate = float(RATE_GRID[0])
        if total > 0.0:
            coefficient = 0.5 * min(rate / total, hi)
        else:
            coefficient = 0.5 * hi if data.initial > 0.0 else 1.0
        return check_weight(data, ExponentialWeight(coefficient, rate), t_max, n_samples)

    if d.p > 0.5:
        active = [b for c, b in ((d.c1, d.b1), (d.c2, d.b)) if c > 0.0]
        rate_cap = min(active) / (2.0 * d.p - 1.0)
        if rate_cap <= 0.0:
            smallest = float(RATE_GRID[0])
            exponent = (2.0 * d.p - 1.0) * smallest - min(active)
            return Certificate(
                weight=None,
                verdict=Refused(
                    "no admissible rate: the tail exponent (2p-1)*rate stays "
                    "positive for every rate > 0 because the kernel envelopes "
                    "do not decay"
                ),
                margin_min=None,
                tail_check=ExponentComparison((exponent,)),
                bound=None,
            )
        coefficient, level = _golden_min(h, lo, hi)
        if level <= rate_cap and coefficient * data.initial < 1.0:
            return check_weight(data, ExponentialWeight(coefficient, rate_cap), t_max, n_samples)
        return Certificate(
            weight=None,
            verdict=Refused(
                f"level condition failed: min h = {level:.6g} exceeds the largest "
                f"admissible rate {rate_cap:.6g} (best margin {rate_cap - level:.6g})"
            ),
            margin_min=rate_cap - level,
            tail_check=ExponentComparison(
                tuple(
                    x
                    for x in (
                        (2.0 * d.p - 1.0) * rate_cap - d.b1 if d.c1 > 0 else None,
                        (2.0 * d.p - 1.0) * rate_cap - d.b if d.c2 > 0 else None,
                    )
                    if x is not None
                )
            ),
            bound=None,
        )

    # p <= 1/2: every positive rate passes the tail, and the level
    # function does not depend on the rate, so the first grid rate at or
    # above its minimum certifies.
    coefficient, level = _golden_min(h, lo, hi)
    for rate in RATE_GRID:
        if level <= rate and coefficient * data.initial < 1.0:
            return check_weight(data, ExponentialWeight(coefficient, float(rate)), t_max, n_samples)
    return Certificate(
        weight=None,
        verdict=Refused(
            f"level condition failed on the whole rate grid: min h = {level:.6g} "
            f"exceeds {float(RATE_GRID[-1]):.6g} (best margin {float(RATE_GRID[-1]) - level:.6g})"
        ),
        margin_min=float(RATE_GRID[-1]) - level,
        tail_check=ExponentComparison(()),
        bound=None,
    )


def search_power(
    data: InequalityData, t_max: float = 50.0, n_samples: int = 5001
) -> Certificate:
    """Search the family w(t) = c * (1+t)**(-rate) for a certificate.

    Requires power-law decay data.  A rate is admissible when every
    normalized order is <= 0, which bounds it below via the drive orders
    (rate >= 1 - e_i) and above via the state terms when p > 1/2.  The
    sweep returns the smallest certifying rate; the margin is verified
    on a log-spaced grid over [0, t_max] on top of the order comparison.
    """
    if data.power_data is None:
        raise ValueError("search_power needs power-law decay data")
    d = data.power_data
    lo, hi = _coefficient_bracket(data.initial)
    total = d.d0 + d.d1 + d.d2
    state_total = d.d1 + d.d2
    h = _level_function(total, state_total, d.p)

    grid = np.concatenate(([0.0], np.geomspace(max(t_max * 1e-4, 1e-6), t_max, n_samples - 1)))

    def orders_ok(rate: float) -> bool:
        probe = PowerWeight(coefficient=1.0, rate=rate)
        return all(sig <= 0.0 for _, sig in _power_reduction_terms(d, probe))

    if state_total == 0.0:
        for rate in RATE_GRID:
            rate = float(rate)
            if not orders_ok(rate):
                continue
            if total > 0.0:
                coefficient = 0.5 * min(rate / total, hi)
            else:
                coefficient = 0.5 * hi if data.initial > 0.0 else 1.0
            return _assemble_certificate(data, PowerWeight(coefficient, rate), grid)
        return Certificate(
            weight=None,
            verdict=Refused("no rate makes every drive order non-positive"),
            margin_min=None,
            tail_check=ExponentComparison(()),
            bound=None,
        )

    coefficient, level = _golden_min(h, lo, hi)
    best_gap = -math.inf
    for rate in RATE_GRID:
        rate = float(rate)
        if not orders_ok(rate):
            continue
        best_gap = max(best_gap, rate - level)
        if level <= rate and coefficient * data.initial < 1.0:
            return _assemble_certificate(data, PowerWeight(coefficient, rate), grid)
    if best_gap == -math.inf:
        reason = (
            "order comparison failed for every rate: the state terms grow "
            "faster than the decay orders allow"
        )
        margin = None
    else:
        reason = f"level condition failed: best margin {best_gap:.6g}"
        margin = best_gap
    return Certificate(
        weight=None,
        verdict=Refused(reason),
        margin_min=margin,
        tail_check=ExponentComparison(()),
        bound=None,
    )


# ---------------------------------------------------------------------------
# Trajectory verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    holds: bool
    min_slack: float
    worst_index: int
    worst_t: float
    worst_u: float
    worst_bound: float

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "min_slack": _json_float(self.min_slack),
            "worst_index": self.worst_index,
            "worst_t": self.worst_t,
            "worst_u": self.worst_u,
            "worst_bound": _json_float(self.worst_bound),
        }


def verify_solution_bound(traj: Trajectory, cert: Certificate) -> BoundReport:
    """Check |u_n| < bound(t_n) at every node of a completed trajectory
    (non-strict comparison when the certificate is non-strict)."""
    if not cert.certified:
        raise ValueError("certificate is not certified")
    if not isinstance(traj.status, Completed):
        raise ValueError("trajectory did not complete")
    t = traj.times()
    bound = cert.bound_values(t)
    slack = bound - np.abs(traj.values)
    k = int(np.argmin(slack))
    min_slack = float(slack[k])
    strict = cert.verdict.strict
    holds = bool(min_slack > 0.0) if strict else bool(min_slack >= 0.0)
    return BoundReport(
        holds=holds,
        min_slack=min_slack,
        worst_index=k,
        worst_t=float(t[k]),
        worst_u=float(traj.values[k]),
        worst_bound=float(bound[k]),
    )
