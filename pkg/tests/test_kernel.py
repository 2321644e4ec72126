import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from logqsm import (
    DomainError,
    LogisticParams,
    SingularTailWarning,
    alpha_minus,
    alpha_plus,
    apply_forward,
    apply_transfer,
    beta_minus,
    beta_plus,
    kernel_density,
    survival_probability,
    transfer_of_one,
)

pairs = st.tuples(st.floats(0.2, 3.9), st.floats(4.1, 15.0))
interior = st.floats(1e-6, 1 - 1e-6)


def test_params_validation():
    for a, b in [(0.0, 5.0), (4.0, 5.0), (1.0, 4.0), (-1.0, 5.0), (1.0, float("nan"))]:
        with pytest.raises(ValueError):
            LogisticParams(a, b)
    p = LogisticParams(1.0, 5.0)
    assert p.kink == 0.25
    assert p.breakpoint == pytest.approx(3.0 / 16.0)
    assert p.min_survival == pytest.approx(0.75)


def test_roots_solve_quadratic(params):
    xs = np.linspace(1e-4, 0.99, 50)
    for x in xs:
        for y in (alpha_minus(params, x), alpha_plus(params, x)):
            assert params.b * y * (1 - y) == pytest.approx(x, rel=1e-12)
        if x < params.kink:
            for y in (beta_minus(params, x), beta_plus(params, x)):
                assert params.a * y * (1 - y) == pytest.approx(x, rel=1e-12)
        else:
            assert beta_minus(params, x) == beta_plus(params, x) == pytest.approx(0.5)


def test_small_root_keeps_precision(params):
    x = 1e-14
    assert alpha_minus(params, x) == pytest.approx(x / params.b, rel=1e-10)


def test_kernel_density_domain(params):
    with pytest.raises(DomainError):
        kernel_density(params, 0.0, 0.5)
    with pytest.raises(DomainError):
        kernel_density(params, 1.0, 0.5)
    assert kernel_density(params, 0.5, 0.1) == 0.0
    assert kernel_density(params, 0.5, 0.3) == pytest.approx(1 / (4 * 0.25))


@settings(max_examples=60, deadline=None)
@given(pairs, interior)
def test_survival_matches_direct_integral(ab, x):
    p = LogisticParams(*ab)
    q = x * (1 - x)
    # P(ω q <= 1) for ω ~ Unif[a, b]
    direct = np.clip((1.0 / q - p.a) / (p.b - p.a), 0.0, 1.0)
    assert survival_probability(p, x) == pytest.approx(direct, abs=1e-13)
    assert 0.0 <= survival_probability(p, x) <= 1.0


def test_survival_bounds(params):
    xs = np.linspace(0.0, 1.0, 1001)
    s = survival_probability(params, xs)
    assert s.min() >= params.min_survival - 1e-15
    assert s[0] == s[-1] == 1.0


def test_forward_against_quadrature_over_noise(params):
    f = lambda y: np.cos(3 * y) + 2  # noqa: E731
    for x in (0.05, 0.3, 0.5, 0.8):
        q = x * (1 - x)
        oracle, _ = integrate.quad(
            lambda w: f(w * q) if w * q <= 1 else 0.0, params.a, params.b, points=[1 / q] if 1 / q < params.b else None
        )
        oracle /= params.b - params.a
        assert apply_forward(params, f, x) == pytest.approx(oracle, rel=1e-9)


def test_forward_endpoints(params):
    f = lambda y: 1 + y  # noqa: E731
    assert apply_forward(params, f, 0.0) == 1.0
    assert apply_forward(params, f, 1.0) == 1.0


@settings(max_examples=40, deadline=None)
@given(pairs, st.floats(1e-3, 0.999))
def test_transfer_of_one_closed_form(ab, x):
    p = LogisticParams(*ab)
    a, b = p.a, p.b
    expected = 4 / (b - a) * math.atanh(math.sqrt(max(0.0, 1 - 4 * x / b)))
    if x < a / 4:
        expected -= 4 / (b - a) * math.atanh(math.sqrt(1 - 4 * x / a))
    if x <= b / 4:
        assert transfer_of_one(p, x) == pytest.approx(expected, rel=1e-9, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularTailWarning)
        assert apply_transfer(p, lambda y: np.ones_like(y), x) == pytest.approx(
            transfer_of_one(p, x), rel=1e-7, abs=1e-10
        )


def test_transfer_of_one_limit_at_zero(params):
    limit = 2 * math.log(params.b / params.a) / (params.b - params.a)
    assert transfer_of_one(params, 0.0) == pytest.approx(limit, rel=1e-14)
    assert transfer_of_one(params, 1e-12) == pytest.approx(limit, rel=1e-6)


def test_transfer_zero_point_warns(params):
    with pytest.warns(SingularTailWarning):
        apply_transfer(params, lambda y: 1.0 + y, 0.0)


def test_duality_pointwise(params):
    # ∫ (Pf) g = ∫ f (Lg) for smooth f, g
    f = lambda y: np.sin(2 * y) + 1.5  # noqa: E731
    g = lambda y: 1 + y * y  # noqa: E731
    lhs, _ = integrate.quad(lambda x: apply_forward(params, f, x) * g(x), 0, 1, limit=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularTailWarning)
        rhs, _ = integrate.quad(
            lambda x: f(x) * apply_transfer(params, g, x), 0, 1, points=[params.kink], limit=200
        )
    assert lhs == pytest.approx(rhs, rel=1e-7)
