import numpy as np
import pytest

from logqsm import TruncatedDomain, assemble_truncated, assemble_transfer, build_grid, epsilon_sweep
from logqsm.discretization import FORWARD
from logqsm.spectral import leading_eigenpair
from logqsm.truncated import cdf_distance


def test_domain_bounds():
    d = TruncatedDomain(0.1)
    assert d.lower == pytest.approx(0.4 * 0.81)
    assert d.upper == pytest.approx(0.9)
    for bad in (0.0, 0.375, -0.1):
        with pytest.raises(ValueError):
            TruncatedDomain(bad)


def test_coverage(params):
    assert TruncatedDomain(0.01).covers_admissibility_interval(params)
    assert not TruncatedDomain(0.2).covers_admissibility_interval(params)


def test_truncated_is_dominated(params):
    grid = build_grid(200)
    full = assemble_transfer(params, grid).matrix
    trunc = assemble_truncated(params, grid, TruncatedDomain(0.05)).matrix
    assert np.all(trunc <= full + 1e-15)
    fwd = assemble_truncated(params, grid, TruncatedDomain(0.05), kind=FORWARD)
    assert fwd.kind == FORWARD


def test_too_narrow(params):
    with pytest.raises(ValueError):
        assemble_truncated(params, build_grid(4), TruncatedDomain(0.3))


def test_sweep_small(params):
    grid = build_grid(200)
    sweep = epsilon_sweep(params, grid, [0.1, 0.02])
    lam_full = leading_eigenpair(assemble_transfer(params, grid)).lam
    assert sweep.lam_full == pytest.approx(lam_full)
    assert len(sweep) == 2
    assert sweep[0].lambda_eps < sweep[1].lambda_eps < lam_full
    assert sweep.cdf_distances[0] > sweep.cdf_distances[1]


def test_sweep_validates(params):
    grid = build_grid(50)
    with pytest.raises(ValueError):
        epsilon_sweep(params, grid, [0.01, 0.1])
    with pytest.raises(ValueError):
        epsilon_sweep(params, grid, [])


def test_cdf_distance_identity(small):
    assert cdf_distance(small.g, small.g) == 0.0
