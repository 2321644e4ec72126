"""Chains killed outside ``M_eps = [4 eps (1 - eps)^2, 1 - eps]``.

As ``eps -> 0`` the truncated survival rates and quasi-stationary densities
approach those of the full chain; :func:`epsilon_sweep` tabulates that
approach.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .discretization import (
    FORWARD,
    TRANSFER,
    Density,
    DiscreteOperator,
    Grid,
    assemble_forward,
    assemble_transfer,
)
from .errors import ConvergenceError, DegenerateOperatorError
from .kernel import LogisticParams
from .spectral import DEFAULT_MAX_ITER, DEFAULT_TOL, leading_eigenpair

__all__ = ["TruncatedDomain", "SweepEntry", "EpsilonSweep", "assemble_truncated", "epsilon_sweep"]


@dataclass(frozen=True)
class TruncatedDomain:
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.375:
            raise ValueError(f"epsilon must lie in (0, 3/8), got {self.epsilon}")

    @property
    def lower(self) -> float:
        e = self.epsilon
        return 4.0 * e * (1.0 - e) ** 2

    @property
    def upper(self) -> float:
        return 1.0 - self.epsilon

    def contains(self, lo: float, hi: float) -> bool:
        return self.lower <= lo and hi <= self.upper

    def covers_admissibility_interval(self, params: LogisticParams) -> bool:
        return self.contains(params.breakpoint, params.kink)


def assemble_truncated(
    params: LogisticParams,
    grid: Grid,
    domain: TruncatedDomain,
    kind: str = TRANSFER,
    threads: int = 1,
) -> DiscreteOperator:
    """Operator with rows and columns restricted to ``M_eps`` by exact clipping."""
    inside = np.count_nonzero((grid.nodes >= domain.lower) & (grid.nodes <= domain.upper))
    if inside < 2:
        raise ValueError(
            f"M_eps=[{domain.lower:.6g}, {domain.upper:.6g}] holds {inside} grid nodes; need >= 2"
        )
    build = {FORWARD: assemble_forward, TRANSFER: assemble_transfer}[kind]
    return build(params, grid, window=(domain.lower, domain.upper), threads=threads)


def cdf_distance(p: Density, q: Density) -> float:
    """Sup distance between the cumulative distributions of two densities."""
    return float(np.max(np.abs(p.normalized().cdf() - q.normalized().cdf())))


@dataclass(frozen=True)
class SweepEntry:
    epsilon: float
    lambda_eps: float
    g_eps: Optional[Density] = field(repr=False)
    cdf_distance_to_full: float
    iterations: int = 0
    error: Optional[str] = None


@dataclass(frozen=True)
class EpsilonSweep:
    lam_full: float
    g_full: Density = field(repr=False)
    entries: List[SweepEntry]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lambda_eps for e in self.entries])

    @property
    def cdf_distances(self) -> np.ndarray:
        return np.array([e.cdf_distance_to_full for e in self.entries])


def epsilon_sweep(
    params: LogisticParams,
    grid: Grid,
    eps_list: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
    reference=None,
) -> EpsilonSweep:
    """Leading eigenpair of each truncated transfer operator.

    ``reference`` is an optional ``(lam, g)`` pair for the full chain on the
    same grid; it is computed when omitted.  Entries whose eigen-solve fails
    are kept with ``error`` set and NaN values.
    """
    eps = [float(e) for e in eps_list]
    if not eps:
        raise ValueError("eps_list is empty")
    if any(not 0.0 < e < 0.375 for e in eps):
        raise ValueError("every epsilon must lie in (0, 3/8)")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be strictly decreasing")

    if reference is None:
        lam_full, g_full, *_ = leading_eigenpair(assemble_transfer(params, grid), tol, max_iter)
    else:
        lam_full, g_full = reference

    def run(e):
        domain = TruncatedDomain(e)
        try:
            op = assemble_truncated(params, grid, domain, TRANSFER)
            lam, g, it, _ = leading_eigenpair(op, tol, max_iter)
        except (ConvergenceError, DegenerateOperatorError) as exc:
            return SweepEntry(e, float("nan"), None, float("nan"), getattr(exc, "iterations", 0), str(exc))
        return SweepEntry(e, lam, g, cdf_distance(g, g_full), it)

    workers = max(1, min(int(threads or 1), len(eps)))
    if workers == 1:
        entries = [run(e) for e in eps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run, eps))
    return EpsilonSweep(lam_full, g_full, entries)
