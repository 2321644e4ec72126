from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logqsm import (
    F1,
    F2,
    F3,
    LogisticParams,
    PreconditionError,
    ineq1_margin,
    ineq2_margin,
    is_admissible,
    p_poly,
    p_poly_shifted,
)
from logqsm.admissibility import (
    ADMISSIBLE_BY_A,
    ADMISSIBLE_BY_INEQUALITIES,
    ADMISSIBLE_BY_THEOREM,
    F3_interval,
    P_COEFFS,
    VIOLATED,
)


def test_p_values():
    assert p_poly(5) == 11_546_624
    assert p_poly(4) == p_poly_shifted(0) == 998_384
    for d in range(8):
        assert p_poly(4 + d) == p_poly_shifted(d)
    assert p_poly(Fraction(9, 2)) == p_poly_shifted(Fraction(1, 2))


def test_p_matches_numpy():
    for b in np.linspace(4, 20, 17):
        assert p_poly(float(b)) == pytest.approx(np.polyval(P_COEFFS, b), rel=1e-12)


def test_shifted_coefficients_are_positive():
    # so p(b) > 0 for every b > 4
    from logqsm.admissibility import P_SHIFTED_COEFFS

    assert all(c > 0 for c in P_SHIFTED_COEFFS)


def test_monotone_helpers(params):
    lo, hi = params.breakpoint, params.kink
    xs = np.linspace(lo, hi, 100)
    f1 = [F1(params, x) for x in xs]
    f2 = [F2(params, x) for x in xs[:-1]]
    assert all(u < v for u, v in zip(f1, f1[1:]))
    assert all(u < v for u, v in zip(f2, f2[1:]))
    ylo, yhi = F3_interval(5.0)
    ys = np.linspace(ylo, yhi, 102)[1:-1]
    f3 = [F3(5.0, y) for y in ys]
    assert all(u > v for u, v in zip(f3, f3[1:]))


def test_margins_positive_for_reference(params):
    for x in np.linspace(params.breakpoint, params.kink, 64):
        assert ineq1_margin(params, x) >= 0.0
        assert ineq2_margin(params, x) >= 0.0


def test_margins_require_small_a():
    p = LogisticParams(2.5, 5.0)
    with pytest.raises(PreconditionError):
        ineq1_margin(p, 0.5)
    with pytest.raises(ValueError):
        ineq2_margin(LogisticParams(1.0, 5.0), 0.9)


def test_verdicts():
    r = is_admissible(LogisticParams(2.5, 6.0))
    assert r.verdict == ADMISSIBLE_BY_A and r.admissible and r.probe_count == 0
    r = is_admissible(LogisticParams(1.0, 5.0))
    assert r.verdict == ADMISSIBLE_BY_INEQUALITIES
    assert ADMISSIBLE_BY_THEOREM in r.stamps
    assert r.to_dict()["admissible"] is True
    assert "verdict=" in r.summary()


def test_below_known_range_is_decided():
    # outside [1, 4) the sweep is the only evidence; it must return a definite verdict
    r = is_admissible(LogisticParams(0.5, 4.5))
    assert r.verdict in (VIOLATED, ADMISSIBLE_BY_INEQUALITIES)
    assert ADMISSIBLE_BY_THEOREM not in r.stamps


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 1.999), st.floats(4.001, 20.0))
def test_known_range_never_violated(a, b):
    assert is_admissible(LogisticParams(a, b), probes=64).admissible
