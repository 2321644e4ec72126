"""Closed-form kernel of the absorbed random logistic map.

For ``x`` in ``(0, 1)`` the one-step law of ``w x (1 - x)`` with
``w ~ Unif[a, b]`` has density ``1/((b - a) q)`` on ``[a q, b q]`` where
``q = x (1 - x)``; the part of that band above 1 is the killed mass.  The
points 0 and 1 both map to 0 deterministically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, SingularTailWarning

__all__ = [
    "LogisticParams",
    "alpha_minus",
    "alpha_plus",
    "beta_minus",
    "beta_plus",
    "logit",
    "kernel_density",
    "survival_probability",
    "apply_forward",
    "apply_transfer",
    "transfer_of_one",
    "piecewise_integral",
]


@dataclass(frozen=True)
class LogisticParams:
    """Noise interval ``[a, b]`` of the random logistic map.

    Only ``0 < a < 4 < b`` is accepted; use :meth:`probe` to build a pair
    outside that range (e.g. ``b <= 4``, where nothing is ever absorbed).
    """

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"a and b must be finite, got a={a}, b={b}")
        if not (0.0 < a < 4.0 < b):
            raise ValueError(f"need 0 < a < 4 < b, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def probe(cls, a: float, b: float) -> "LogisticParams":
        """Build params without range validation (requires only 0 < a < b)."""
        if not 0.0 < a < b:
            raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
        obj = object.__new__(cls)
        object.__setattr__(obj, "a", float(a))
        object.__setattr__(obj, "b", float(b))
        return obj

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def kink(self) -> float:
        """``a/4``: beyond it the lower noise edge never reaches 1/2."""
        return self.a / 4.0

    @property
    def breakpoint(self) -> float:
        """``(4a^2 - a^3)/16``, left end of the admissibility interval."""
        a = self.a
        return (4.0 * a * a - a ** 3) / 16.0

    @property
    def min_survival(self) -> float:
        """Survival probability from ``x = 1/2``, the smallest over ``[0, 1]``."""
        return min(1.0, (4.0 - self.a) / (self.b - self.a))


def _half_roots(x, c):
    # small root from the product of roots: 0.5 - 0.5*s cancels for small x
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - 4.0 * x / c, 0.0, None))
    upper = 0.5 + 0.5 * s
    return (x / c) / upper, upper


def alpha_minus(params: LogisticParams, x):
    """Smaller root of ``b y (1 - y) = x``."""
    return _half_roots(x, params.b)[0]


def alpha_plus(params: LogisticParams, x):
    return _half_roots(x, params.b)[1]


def beta_minus(params: LogisticParams, x):
    """Smaller root of ``a y (1 - y) = x``; callers pass ``min(x, a/4)``."""
    return _half_roots(np.minimum(x, params.kink), params.a)[0]


def beta_plus(params: LogisticParams, x):
    return _half_roots(np.minimum(x, params.kink), params.a)[1]


def logit(y):
    """Antiderivative of ``1/(y (1 - y))``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(y) - np.log1p(-y)


def _check_open(x):
    if not 0.0 < x < 1.0:
        raise DomainError(
            f"kernel is singular at x={x}; the endpoints map to 0 deterministically"
        )


def kernel_density(params: LogisticParams, x: float, y: float) -> float:
    """Density of ``P(x, dy)`` with respect to Lebesgue measure."""
    _check_open(x)
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must lie in [0, 1], got {y}")
    q = x * (1.0 - x)
    if params.a * q <= y <= params.b * q:
        return 1.0 / (params.width * q)
    return 0.0


def survival_probability(params: LogisticParams, x):
    """``P(x, [0, 1])``, vectorized; equals 1 at the endpoints."""
    x = np.asarray(x, dtype=float)
    q = x * (1.0 - x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (np.minimum(params.b * q, 1.0) - params.a * q) / (params.width * q)
    out = np.where(q > 0.0, np.clip(out, 0.0, 1.0), 1.0)
    return out if out.ndim else float(out)


def piecewise_integral(edges, values, lo, hi, antiderivative=None) -> float:
    """Integrate a piecewise-constant function over ``[lo, hi]``.

    ``values[k]`` is the value on ``[edges[k], edges[k+1]]``.  With an
    ``antiderivative`` ``F`` the weight ``F'`` is integrated exactly on each
    cell overlap instead of plain length.
    """
    if hi <= lo:
        return 0.0
    edges = np.asarray(edges, dtype=float)
    k0 = max(int(np.searchsorted(edges, lo, side="right")) - 1, 0)
    k1 = min(int(np.searchsorted(edges, hi, side="left")), len(edges) - 1)
    pts = np.clip(edges[k0 : k1 + 1], lo, hi)
    F = pts if antiderivative is None else antiderivative(pts)
    return float(np.dot(np.asarray(values, dtype=float)[k0:k1], np.diff(F)))


def _is_piecewise(f) -> bool:
    return hasattr(f, "grid") and hasattr(f, "values")


Integrand = Union[Callable[[float], float], "Density"]  # noqa: F821


def apply_forward(params: LogisticParams, f: Integrand, x: float) -> float:
    """``(P f)(x)``.

    ``f`` is either a :class:`~logqsm.discretization.Density` (integrated
    exactly cell by cell) or a callable (adaptive quadrature on the
    surviving part of the band).
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x in (0.0, 1.0):
        return float(f.values[0]) if _is_piecewise(f) else float(f(0.0))
    q = x * (1.0 - x)
    lo, hi = params.a * q, min(params.b * q, 1.0)
    if hi <= lo:
        return 0.0
    if _is_piecewise(f):
        vals = np.asarray(f.values, dtype=float)
        total = piecewise_integral(f.grid.edges, vals, lo, hi)
    else:
        total, _ = integrate.quad(f, lo, hi, limit=200)
    if not math.isfinite(total):
        raise FloatingPointError(f"non-finite integral of f over [{lo}, {hi}]")
    return total / (params.width * q)


def apply_transfer(params: LogisticParams, g: Integrand, x: float) -> float:
    """``(L g)(x)``, the Lebesgue density of ``P*(g dx)`` at ``x``.

    Integrates ``g(y) / ((b - a) y (1 - y))`` over
    ``[alpha-(x), beta-(x^a/4)]`` and ``[beta+(x^a/4), alpha+(x)]``.  At
    ``x = 0`` both pieces diverge and the continuous extension
    ``log(b/a)/(b - a) * (g(0) + g(1))`` is returned.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    scale = 1.0 / params.width
    piecewise = _is_piecewise(g)
    if x == 0.0:
        if piecewise:
            g0, g1 = float(g.values[0]), float(g.values[-1])
        else:
            warnings.warn(
                "transfer band touches {0, 1} at x=0; using the continuous extension",
                SingularTailWarning,
                stacklevel=2,
            )
            g0, g1 = float(g(0.0)), float(g(1.0))
        return math.log(params.b / params.a) * scale * (g0 + g1)
    am, ap = float(alpha_minus(params, x)), float(alpha_plus(params, x))
    bm, bp = float(beta_minus(params, x)), float(beta_plus(params, x))
    if piecewise:
        vals = np.asarray(g.values, dtype=float)
        edges = g.grid.edges
        total = piecewise_integral(edges, vals, am, bm, logit) + piecewise_integral(
            edges, vals, bp, ap, logit
        )
    else:
        w = lambda y: g(y) / (y * (1.0 - y))  # noqa: E731
        total = 0.0
        for lo, hi in ((am, bm), (bp, ap)):
            if hi > lo:
                total += integrate.quad(w, lo, hi, limit=200)[0]
    if not math.isfinite(total):
        raise FloatingPointError("non-finite transfer integral")
    return total * scale


def transfer_of_one(params: LogisticParams, x: float) -> float:
    """Closed form of ``(L 1)(x)``, the Lebesgue density of ``P*(dx)``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    a, b = params.a, params.b
    if x == 0.0:
        return 2.0 * math.log(b / a) / (b - a)
    # 2 atanh(sqrt(1 - 4x/c)) = log(upper root / lower root)
    am, ap = _half_roots(x, b)
    val = math.log(ap / am)
    if x < a / 4.0:
        bm, bp = _half_roots(x, a)
        val -= math.log(bp / bm)
    return 2.0 * float(val) / (b - a)
