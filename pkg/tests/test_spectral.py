import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from logqsm import (
    ConvergenceError,
    DegenerateOperatorError,
    DiscreteOperator,
    LogisticParams,
    PositivityError,
    PreconditionError,
    build_grid,
    cesaro_profile,
    compute_eta,
    empirical_gap,
    conditioned_time_average,
    leading_eigenpair,
    period_and_classes,
    power_convergence_profile,
    solve,
    synthetic_period2_operator,
    yaglom_ratio,
)
from logqsm.discretization import FORWARD, TRANSFER


def _perron(matrix, weights):
    # dense oracle for the leading eigenvalue of the weighted operator
    vals = linalg.eigvals(matrix)
    return float(np.max(vals.real))


def test_leading_eigenvalue_matches_dense(small):
    w = small.grid.weights
    assert small.lam == pytest.approx(_perron(small.transfer.matrix, w), abs=1e-9)
    assert small.lam_forward == pytest.approx(_perron(small.forward.matrix, w), abs=1e-9)


def test_normalizations(small):
    w = small.grid.weights
    assert np.dot(small.g.values, w) == pytest.approx(1.0, abs=1e-12)
    assert np.dot(small.nu.values, w) == pytest.approx(1.0, abs=1e-12)
    assert small.eta.values.min() > 0.0


def test_eigen_residuals(small):
    w = small.grid.weights
    L, P = small.transfer.matrix, small.forward.matrix
    g, eta = small.g.values, small.eta.values
    assert np.dot(np.abs(L @ g - small.lam * g), w) < 1e-9
    assert np.dot(np.abs(P @ eta - small.lam_forward * eta) * g, w) < 1e-9


def test_header_keys(small):
    h = small.header()
    assert {"a", "b", "n", "lambda", "lambda_forward", "residual", "iterations", "m"} <= set(h)
    assert h["n"] == 200 and h["m"] == 1


def test_eta_rejects_wrong_lambda(small):
    with pytest.raises(ConvergenceError):
        compute_eta(small.forward, small.lam_forward * 1.01, small.g, max_iter=2000)


def test_period_two_fails_to_converge_and_is_detected():
    grid = build_grid(20)
    op = synthetic_period2_operator(grid)
    ramp = np.linspace(1.0, 2.0, 20)
    with pytest.raises(ConvergenceError) as info:
        leading_eigenpair(op, max_iter=500, init=ramp)
    assert info.value.iterations == 500
    dec = period_and_classes(op)
    assert dec.m == 2
    first, second = dec.classes()
    assert sorted(first.tolist() + second.tolist()) == list(range(20))
    assert set(first.tolist()) in ({*range(10)}, {*range(10, 20)})


def test_period_positive_matrix():
    rng = np.random.default_rng(3)
    grid = build_grid(30)
    op = DiscreteOperator(grid, rng.random((30, 30)) + 0.01, FORWARD)
    assert period_and_classes(op).m == 1


def test_period_three_cycle_with_tail():
    grid = build_grid(7)
    A = np.zeros((7, 7))
    for i, j in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (5, 0), (6, 3)]:
        A[i, j] = 1.0
    dec = period_and_classes(DiscreteOperator(grid, A, FORWARD))
    assert dec.m == 3
    # every edge inside the main cycle advances the class by one
    for i, j in [(0, 1), (1, 2), (2, 0)]:
        assert dec.class_of[j] == (dec.class_of[i] + 1) % 3


def test_period_degenerate():
    grid = build_grid(3)
    with pytest.raises(DegenerateOperatorError):
        period_and_classes(DiscreteOperator(grid, np.zeros((3, 3)), FORWARD))


def test_logistic_aperiodic(small):
    assert small.m == 1


def _brute_yaglom(P, h, n, j):
    Pn = np.linalg.matrix_power(P, n)
    return (Pn @ h)[j] / Pn.sum(axis=1)[j]


def _brute_time_average(P, lam, h, n, j):
    Q = P / lam
    powers = [np.linalg.matrix_power(Q, k) for k in range(n + 1)]
    total = sum(powers[i] @ (h * (powers[n - i] @ np.ones(len(h)))) for i in range(n))
    return total[j] / (n * (powers[n] @ np.ones(len(h)))[j])


def test_yaglom_and_time_average_match_matrix_powers():
    p = LogisticParams(1.0, 5.0)
    res = solve(p, 40)
    P, grid = res.forward.matrix, res.grid
    h = grid.nodes ** 2
    for n in (1, 5, 12):
        for x in (0.1, 0.6):
            j = grid.cell_of(x)
            assert yaglom_ratio(res.forward, lambda y: y ** 2, n, x) == pytest.approx(
                _brute_yaglom(P, h, n, j), rel=1e-12
            )
            assert conditioned_time_average(res.forward, res.lam_forward, lambda y: y ** 2, n, x) == pytest.approx(
                _brute_time_average(P, res.lam_forward, h, n, j), rel=1e-11
            )


def test_yaglom_zero_steps_is_h(small):
    assert yaglom_ratio(small.forward, lambda y: y, 0, 0.3) == pytest.approx(small.grid.nodes[60])


def test_time_average_needs_forward(small):
    with pytest.raises(ValueError):
        conditioned_time_average(small.transfer, small.lam, lambda y: y, 3, 0.5)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.01, 0.99))
def test_yaglom_ratio_bounded_by_observable(c, x):
    p = LogisticParams(1.0, 5.0)
    res = _cached(p)
    r = yaglom_ratio(res.forward, lambda y: np.where(y < c, 1.0, 0.0), 7, x)
    assert -1e-12 <= r <= 1 + 1e-12


_CACHE = {}


def _cached(p):
    if p not in _CACHE:
        _CACHE[p] = solve(p, 60)
    return _CACHE[p]


def test_profiles_small_and_cesaro_decreasing(small):
    one = lambda y: np.ones_like(y)  # noqa: E731
    power = power_convergence_profile(small.forward, small.lam_forward, one, [1, 5, 20], eta=small.eta, g=small.g)
    assert power[0] > power[1] > power[2] or power[2] < 1e-3
    ces = cesaro_profile(small.forward, small.lam_forward, one, [10, 20, 40, 80], eta=small.eta, g=small.g)
    assert all(x > y for x, y in zip(ces, ces[1:]))


def test_power_profile_needs_aperiodic(small):
    with pytest.raises(PreconditionError):
        power_convergence_profile(small.forward, small.lam, lambda y: y, [1], eta=small.eta, g=small.g, period=2)


def test_eta_positivity_check():
    grid = build_grid(4)
    # reducible operator: the fourth state is a sink of zero mass
    A = np.array([[0.5, 0.4, 0, 0], [0.4, 0.5, 0, 0], [0.3, 0.3, 0, 0], [0, 0, 0, 0.0]]) * 4
    op = DiscreteOperator(grid, A, FORWARD)
    g = leading_eigenpair(DiscreteOperator(grid, A.T.copy(), TRANSFER)).vector
    lam = leading_eigenpair(op).lam
    with pytest.raises(PositivityError):
        compute_eta(op, lam, g)


def test_empirical_gap_matches_dense(small):
    vals = np.sort(np.abs(linalg.eigvals(small.forward.matrix)))[::-1]
    assert empirical_gap(small.forward) == pytest.approx(vals[1] / vals[0], rel=1e-6)
    assert empirical_gap(small.forward) < 1.0
