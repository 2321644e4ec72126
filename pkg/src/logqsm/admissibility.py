"""Admissible-pair test for the noise interval ``[a, b]``.

A pair with ``a >= 2`` is admissible outright.  For ``a < 2`` two
inequalities must hold at every ``x`` in ``[(4a^2 - a^3)/16, a/4]``; they are
checked on a uniform probe grid.  Pairs in ``[1, 4) x (4, inf)`` are known to
be admissible, and the sweep must never contradict that.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, InternalConsistencyError, PreconditionError
from .kernel import LogisticParams

__all__ = [
    "AdmissibilityReport",
    "ADMISSIBLE_BY_A",
    "ADMISSIBLE_BY_INEQUALITIES",
    "ADMISSIBLE_BY_THEOREM",
    "VIOLATED",
    "INCONCLUSIVE",
    "ineq1_lhs",
    "ineq1_margin",
    "ineq2_margin",
    "F1",
    "F2",
    "F3",
    "p_poly",
    "p_poly_shifted",
    "is_admissible",
]

ADMISSIBLE_BY_A = "admissible-by-a>=2"
ADMISSIBLE_BY_INEQUALITIES = "admissible-by-inequalities"
ADMISSIBLE_BY_THEOREM = "admissible-by-theorem-range"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

# fraction of the interval, next to a/4, evaluated in the F1 <= F2 form
ENDPOINT_ZONE = 0.01

P_COEFFS = (4239, -23868, 31482, 8964, -40401, 23424, -4096)
P_SHIFTED_COEFFS = (4239, 77868, 571482, 2119716, 4091679, 3683256, 998384)


@dataclass(frozen=True)
class AdmissibilityReport:
    params: LogisticParams
    verdict: str
    worst_margin_ineq1: Optional[float]
    worst_margin_ineq2: Optional[float]
    probe_count: int
    stamps: Tuple[str, ...] = ()
    domain_errors: int = 0

    @property
    def admissible(self) -> bool:
        return self.verdict not in (VIOLATED, INCONCLUSIVE)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {"a": self.params.a, "b": self.params.b}
        d["stamps"] = list(self.stamps)
        d["admissible"] = self.admissible
        return d

    def summary(self) -> str:
        def fmt(v):
            return "n/a" if v is None else f"{v:.6g}"

        return (
            f"a={self.params.a:g} b={self.params.b:g} verdict={self.verdict} "
            f"worst_ineq1={fmt(self.worst_margin_ineq1)} "
            f"worst_ineq2={fmt(self.worst_margin_ineq2)} probes={self.probe_count}"
        )


def _interval(params):
    return params.breakpoint, params.kink


def _sqrt(v):
    if v < 0.0:
        raise DomainError(f"negative radicand {v!r}")
    return math.sqrt(v)


def _atanh(v):
    if not -1.0 < v < 1.0:
        raise DomainError(f"atanh argument {v!r} outside (-1, 1)")
    return math.atanh(v)


def _check_x(params, x):
    lo, hi = _interval(params)
    slack = 1e-15 * max(1.0, hi)
    if not lo - slack <= x <= hi + slack:
        raise ValueError(f"x={x} outside [{lo}, {hi}]")
    return min(max(x, lo), hi)


def ineq1_lhs(params: LogisticParams, x: float) -> float:
    a, b = params.a, params.b
    inner = _sqrt(1.0 - 4.0 * x / a)
    return 0.5 - 0.5 * _sqrt(1.0 - 2.0 / b * (1.0 - inner))


def ineq1_margin(params: LogisticParams, x: float) -> float:
    """``min(LHS, a/4 - LHS)`` for ``0 <= LHS <= a/4``; negative means violated."""
    if params.a >= 2.0:
        raise PreconditionError("a >= 2 is admissible without the inequalities")
    x = _check_x(params, x)
    lhs = ineq1_lhs(params, x)
    return min(lhs, params.a / 4.0 - lhs)


def _ineq2_parts(params, x):
    a, b = params.a, params.b
    sb = _sqrt(1.0 - 4.0 * x / b)
    sa = _sqrt(max(1.0 - 4.0 * x / a, 0.0))
    num = 2.0 * (_atanh(_sqrt((2.0 * sb + b - 2.0) / b)) - _atanh(_sqrt((a + 2.0 * sb - 2.0) / a)))
    den = 2.0 * _atanh(_sqrt((2.0 * sa + b - 2.0) / b)) + math.log(a / (4.0 - a))
    return num, den, sb, sa


def F1(params: LogisticParams, x: float) -> float:
    a, b = params.a, params.b
    sb = _sqrt(1.0 - 4.0 * x / b)
    top = _atanh(_sqrt(1.0 - 2.0 / b + 2.0 / b * sb)) - _atanh(_sqrt(1.0 - 2.0 / a + 2.0 / a * sb))
    return 2.0 * top / sb


def F2(params: LogisticParams, x: float) -> float:
    a, b = params.a, params.b
    sa = _sqrt(1.0 - 4.0 * x / a)
    if sa == 0.0:
        raise DomainError("F2 is unbounded at x = a/4")
    top = 2.0 * _atanh(_sqrt((-2.0 + 2.0 * sa + b) / b)) + math.log(a / (4.0 - a))
    return top / sa


def F3(b: float, y: float, a: float = 1.0) -> float:
    """``(log((1+y)/(1-y)) + log(a/(4-a))) / (b y^2 - b + 2)``."""
    den = b * y * y - b + 2.0
    if den == 0.0:
        raise DomainError("F3 denominator vanishes")
    if not -1.0 < y < 1.0:
        raise DomainError(f"y={y} outside (-1, 1)")
    return (math.log((1.0 + y) / (1.0 - y)) + math.log(a / (4.0 - a))) / den


def F3_interval(b: float) -> Tuple[float, float]:
    return math.sqrt((b - 2.0) / b), math.sqrt((b - 1.0) / b)


def _horner(coeffs, t):
    acc = 0
    for c in coeffs:
        acc = acc * t + c
    return acc


def p_poly(b):
    """The degree-6 certificate polynomial; exact for int or Fraction input."""
    return _horner(P_COEFFS, b)


def p_poly_shifted(delta):
    """``p(4 + delta)`` expanded in powers of ``delta``."""
    return _horner(P_SHIFTED_COEFFS, delta)


def ineq2_margin(params: LogisticParams, x: float) -> float:
    """RHS minus LHS of the second inequality; negative means violated.

    Within the last 1% of the interval the equivalent ``F2(x) - F1(x)``
    (valid while the LHS denominator is positive) is used.  At ``x = a/4``
    itself, where ``F2`` is unbounded, the finite endpoint comparison
    ``F2((4a^2 - a^3)/16) - F1(a/4)`` is returned instead.
    """
    if params.a >= 2.0:
        raise PreconditionError("a >= 2 is admissible without the inequalities")
    x = _check_x(params, x)
    lo, hi = _interval(params)
    try:
        num, den, sb, sa = _ineq2_parts(params, x)
    except ZeroDivisionError as exc:
        raise DomainError(str(exc)) from exc
    near_end = x >= hi - ENDPOINT_ZONE * (hi - lo)
    if near_end and den > 0.0:
        if sa == 0.0:
            return F2(params, lo) - F1(params, hi)
        return den / sa - num / sb
    if sa == 0.0:
        return math.inf
    if den == 0.0:
        raise DomainError(f"LHS denominator vanishes at x={x}")
    return sb / sa - num / den


def is_admissible(
    params: LogisticParams, probes: int = 512, tolerance: float = 1e-12
) -> AdmissibilityReport:
    """Probe-grid verdict with the known-range stamp cross-checked."""
    if probes < 2:
        raise ValueError(f"need at least 2 probes, got {probes}")
    a, b = params.a, params.b
    stamps = []
    in_theorem = 1.0 <= a < 4.0 and b > 4.0
    if in_theorem:
        stamps.append(ADMISSIBLE_BY_THEOREM)
    if a >= 2.0:
        stamps.insert(0, ADMISSIBLE_BY_A)
        return AdmissibilityReport(params, ADMISSIBLE_BY_A, None, None, 0, tuple(stamps))

    lo, hi = _interval(params)
    xs = np.linspace(lo, hi, probes) if hi > lo else np.array([lo])
    worst1 = worst2 = math.inf
    domain_errors = 0
    for x in xs:
        for which in (1, 2):
            try:
                m = ineq1_margin(params, x) if which == 1 else ineq2_margin(params, x)
            except (DomainError, ValueError, ZeroDivisionError):
                domain_errors += 1
                continue
            if which == 1:
                worst1 = min(worst1, m)
            else:
                worst2 = min(worst2, m)
    worst1 = None if worst1 == math.inf else worst1
    worst2 = None if worst2 == math.inf else worst2
    negative = any(w is not None and w < -tolerance for w in (worst1, worst2))
    if negative:
        verdict = VIOLATED
    elif domain_errors:
        verdict = INCONCLUSIVE
    else:
        verdict = ADMISSIBLE_BY_INEQUALITIES
        stamps.insert(0, ADMISSIBLE_BY_INEQUALITIES)
    if in_theorem:
        if verdict == VIOLATED:
            raise InternalConsistencyError(
                f"probe sweep reports a violation for (a, b) = ({a}, {b}) inside the known admissible range"
            )
        if verdict == INCONCLUSIVE:
            verdict = ADMISSIBLE_BY_THEOREM
    return AdmissibilityReport(
        params, verdict, worst1, worst2, len(xs), tuple(stamps), domain_errors
    )
