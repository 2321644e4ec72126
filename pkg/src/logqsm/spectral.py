"""Perron eigenpairs, cyclic structure and exact conditioned expectations.

The quasi-stationary density ``g`` is the leading eigenvector of the
transfer matrix, ``eta`` the leading eigenvector of the forward matrix
normalized so that ``sum(eta * g * w) = 1``, and ``nu = eta * g`` the
quasi-ergodic density.  On the grid the two matrices are adjoint only up to
discretization error, so every forward-side iteration uses the forward
matrix's own Perron value (``SpectralResult.lam_forward``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from math import gcd
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg
from scipy.sparse import csgraph

from .discretization import (
    DEFAULT_CELLS,
    FORWARD,
    TRANSFER,
    Density,
    DiscreteOperator,
    Grid,
    build_grid,
    cached_operator,
    node_values,
)
from .errors import (
    ConvergenceError,
    DegenerateOperatorError,
    PositivityError,
    PreconditionError,
    UnderflowError,
)
from .kernel import LogisticParams

log = logging.getLogger(__name__)

__all__ = [
    "EigenPair",
    "SpectralResult",
    "CyclicDecomposition",
    "leading_eigenpair",
    "compute_eta",
    "period_and_classes",
    "conditioned_time_average",
    "yaglom_ratio",
    "power_convergence_profile",
    "cesaro_profile",
    "empirical_gap",
    "solve",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class EigenPair(NamedTuple):
    lam: float
    vector: Density
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class CyclicDecomposition:
    m: int
    class_of: np.ndarray = field(repr=False)
    component: np.ndarray = field(repr=False)

    def classes(self):
        return [np.flatnonzero(self.class_of == i) for i in range(self.m)]


@dataclass(frozen=True, eq=False)
class SpectralResult:
    params: LogisticParams
    lam: float
    lam_forward: float
    g: Density = field(repr=False)
    eta: Density = field(repr=False)
    nu: Density = field(repr=False)
    iterations: int
    residual: float
    residual_transfer: float
    residual_forward: float
    m: int
    forward: Optional[DiscreteOperator] = field(default=None, repr=False)
    transfer: Optional[DiscreteOperator] = field(default=None, repr=False)

    @property
    def grid(self) -> Grid:
        return self.g.grid

    def header(self) -> dict:
        return {
            "a": self.params.a,
            "b": self.params.b,
            "n": self.grid.n_cells,
            "lambda": self.lam,
            "lambda_forward": self.lam_forward,
            "residual": self.residual,
            "residual_transfer": self.residual_transfer,
            "residual_forward": self.residual_forward,
            "iterations": self.iterations,
            "m": self.m,
        }

    def integrate(self, h, against: str = "g") -> float:
        """``∫ h g`` (``against='g'``) or ``∫ h eta g`` (``against='nu'``)."""
        dens = {"g": self.g, "nu": self.nu}[against]
        return float(np.dot(node_values(h, self.grid) * dens.values, self.grid.weights))


def _l1(v, w):
    return float(np.dot(np.abs(v), w))


def leading_eigenpair(
    op: DiscreteOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init=None,
) -> EigenPair:
    """Power iteration normalized in weighted L¹.

    Starts from the uniform density unless ``init`` is given.  Stops when the
    normalized iterate moves by less than ``tol`` and ``‖A v - λ v‖₁ < tol``.
    Raises :class:`ConvergenceError` otherwise, which is the expected outcome
    for a periodic operator started off its Perron vector.
    """
    grid = op.grid
    w = grid.weights
    v = np.ones(grid.n_cells) if init is None else node_values(init, grid).copy()
    mass = np.dot(v, w)
    if mass <= 0.0 or np.any(v < 0.0):
        raise ValueError("initial vector must be nonnegative with positive mass")
    v /= mass
    A = op.matrix
    residual = np.inf
    for it in range(1, max_iter + 1):
        u = A @ v
        lam = float(np.dot(u, w))
        if not lam > 0.0:
            raise DegenerateOperatorError("operator annihilates the iterate")
        residual = _l1(u - lam * v, w)
        change = residual / lam
        if residual < tol and change < tol:
            return EigenPair(lam, Density(grid, v), it, residual)
        v = u / lam
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps (residual {residual:.3e})",
        residual=residual,
        iterations=max_iter,
    )


def compute_eta(
    P_op: DiscreteOperator,
    lam: float,
    g: Density,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EigenPair:
    """Positive eigenfunction of ``P`` normalized by ``∫ eta g = 1``.

    Iterates ``v <- P v / lam`` with renormalization.  ``lam`` must be the
    Perron value of ``P_op`` itself: a mismatched value leaves a residual of
    order ``|λ_P - lam|`` and raises :class:`ConvergenceError` as soon as the
    iterate stops moving.
    """
    if P_op.kind != FORWARD:
        raise ValueError("compute_eta needs a forward operator")
    grid = P_op.grid
    if g.grid != grid:
        raise ValueError("g lives on a different grid")
    gw = g.values * grid.weights
    A = P_op.matrix
    v = np.ones(grid.n_cells)
    v /= np.dot(v, gw)
    residual = np.inf
    for it in range(1, max_iter + 1):
        Pv = A @ v
        residual = _l1(Pv - lam * v, gw)
        u = Pv / lam
        norm = np.dot(u, gw)
        if not norm > 0.0:
            raise DegenerateOperatorError("P annihilates the iterate on supp(g)")
        u /= norm
        change = _l1(u - v, gw)
        if change < tol:
            if residual >= tol:
                raise ConvergenceError(
                    f"eta iterate is stationary but residual {residual:.3e} >= {tol:.1e}; "
                    "lam is not the Perron value of this operator",
                    residual=residual,
                    iterations=it,
                )
            v = u
            break
        v = u
    else:
        raise ConvergenceError(
            f"eta iteration did not converge in {max_iter} steps (residual {residual:.3e})",
            residual=residual,
            iterations=max_iter,
        )
    if np.any(v <= 0.0):
        bad = int(np.sum(v <= 0.0))
        raise PositivityError(f"eta has {bad} non-positive entries (period > 1 or bad assembly?)")
    return EigenPair(lam, Density(grid, v), it, residual)


def period_and_classes(op: DiscreteOperator, support_threshold: float = 0.0) -> CyclicDecomposition:
    """Period and cyclic classes of the support graph of ``op``.

    Edges ``j -> k`` where ``op[j, k] > support_threshold``.  On the largest
    strongly connected component, BFS levels give the period as the gcd of
    ``level(u) + 1 - level(v)`` over edges and the classes as levels mod m,
    so every edge goes from class ``i`` to class ``i + 1 (mod m)``.

    Nodes outside the component that can reach it are labeled one class
    before their lowest-index successor already labeled, processed in order
    of distance to the component.  Nodes that never reach it get class 0.
    """
    adj = sparse.csr_matrix(np.asarray(op.matrix) > support_threshold)
    adj.eliminate_zeros()
    if adj.nnz == 0:
        raise DegenerateOperatorError("support graph has no edges")
    n = adj.shape[0]
    n_comp, labels = csgraph.connected_components(adj, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    comp = int(np.argmax(sizes))
    members = np.flatnonzero(labels == comp)
    sub = adj[members][:, members].tocsr()
    if sub.nnz == 0:
        raise DegenerateOperatorError("largest strongly connected component has no cycle")

    order, pred = csgraph.breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    level = np.zeros(len(members), dtype=np.int64)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    coo = sub.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    m = int(reduce(gcd, np.unique(diffs).tolist(), 0))
    if m == 0:
        raise DegenerateOperatorError("could not determine a period")

    class_of = np.full(n, -1, dtype=np.int64)
    class_of[members] = level % m
    labeled = class_of >= 0
    while True:
        # unlabeled nodes with at least one labeled successor
        frontier_hits = adj[:, np.flatnonzero(labeled)]
        reach = np.flatnonzero((np.diff(frontier_hits.indptr) > 0) & ~labeled)
        if reach.size == 0:
            break
        targets = np.flatnonzero(labeled)
        for u in reach:
            succ = targets[frontier_hits[u].indices]
            class_of[u] = (class_of[succ.min()] - 1) % m
        labeled[reach] = True
    class_of[class_of < 0] = 0
    component = np.zeros(n, dtype=bool)
    component[members] = True
    return CyclicDecomposition(m, class_of, component)


def conditioned_time_average(P_op: DiscreteOperator, lam: float, h, n: int, x: float) -> float:
    """``E_x[(1/n) Σ_{i<n} h(X_i) | τ > n]`` computed exactly on the grid.

    Uses the Horner form ``S_k = h u_k + Q S_{k-1}`` with ``Q = P/λ`` and
    ``u_k = Q^k 1``, so only a few vectors are kept; the answer is
    ``S_n / (n u_n)`` at the cell containing ``x``.
    """
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    if P_op.kind != FORWARD:
        raise ValueError("conditioned_time_average needs a forward operator")
    grid = P_op.grid
    hv = node_values(h, grid)
    A = P_op.matrix
    u = np.ones(grid.n_cells)
    S = np.zeros(grid.n_cells)
    for _ in range(n):
        u = (A @ u) / lam
        S = hv * u + (A @ S) / lam
    j = grid.cell_of(x)
    if not (np.isfinite(u[j]) and u[j] > 0.0):
        raise UnderflowError(f"survival mass at node {j} is numerically zero")
    return float(S[j] / (n * u[j]))


def yaglom_ratio(P_op: DiscreteOperator, h, n: int, x: float) -> float:
    """``(P^n h)(x) / (P^n 1)(x)`` with a shared rescaling at every step."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    grid = P_op.grid
    num = node_values(h, grid).copy()
    den = np.ones(grid.n_cells)
    A = P_op.matrix
    for _ in range(n):
        num, den = A @ num, A @ den
        scale = den.max()
        if not scale > 0.0:
            raise UnderflowError("survival mass vanished everywhere")
        num /= scale
        den /= scale
    j = grid.cell_of(x)
    if not den[j] > 0.0:
        raise UnderflowError(f"survival mass at node {j} is numerically zero")
    return float(num[j] / den[j])


def power_convergence_profile(
    P_op: DiscreteOperator,
    lam: float,
    h,
    n_list: Sequence[int],
    *,
    eta: Density,
    g: Density,
    period: Optional[int] = None,
) -> list:
    """``‖λ^{-n} P^n h - eta ∫ h g‖_{L¹(g)}`` for each ``n`` in ``n_list``."""
    if period is None:
        period = period_and_classes(P_op).m
    if period != 1:
        raise PreconditionError(f"power convergence needs period 1, got m={period}")
    grid = P_op.grid
    gw = g.values * grid.weights
    hv = node_values(h, grid)
    limit = eta.values * float(np.dot(hv, gw))
    wanted = sorted(set(int(k) for k in n_list))
    out = {}
    v = hv.copy()
    for k in range(wanted[-1] + 1):
        if k in wanted:
            out[k] = _l1(v - limit, gw)
        v = (P_op.matrix @ v) / lam
    return [out[int(k)] for k in n_list]


def cesaro_profile(
    P_op: DiscreteOperator,
    lam: float,
    f,
    n_list: Sequence[int],
    *,
    eta: Density,
    g: Density,
) -> list:
    """``‖(1/n) Σ_{i<n} λ^{-i} P^i f - eta ∫ f g‖_{L¹(g)}`` for each ``n``."""
    grid = P_op.grid
    gw = g.values * grid.weights
    fv = node_values(f, grid)
    limit = eta.values * float(np.dot(fv, gw))
    wanted = sorted(set(int(k) for k in n_list))
    out = {}
    v, total = fv.copy(), np.zeros(grid.n_cells)
    for k in range(1, wanted[-1] + 1):
        total += v
        if k in wanted:
            out[k] = _l1(total / k - limit, gw)
        v = (P_op.matrix @ v) / lam
    return [out[int(k)] for k in n_list]


def empirical_gap(op: DiscreteOperator) -> float:
    """``|λ₂| / λ₁`` from the two largest-modulus eigenvalues (ARPACK).

    No a-priori gap is available for these kernels, so this is reported as an
    empirical diagnostic only; ``n`` iterations contract by about ratio^n.
    """
    vals = sparse_linalg.eigs(op.matrix, k=2, which="LM", return_eigenvectors=False, tol=1e-10)
    mods = np.sort(np.abs(vals))[::-1]
    return float(mods[1] / mods[0])


def solve(
    params: LogisticParams,
    n_cells: int = DEFAULT_CELLS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
    cache_dir=None,
) -> SpectralResult:
    """Assemble both operators and compute ``(λ, g, eta, nu)`` and the period."""
    grid = build_grid(n_cells)
    L_op = cached_operator(params, grid, TRANSFER, cache_dir, threads)
    P_op = cached_operator(params, grid, FORWARD, cache_dir, threads)
    lam, g, it_t, res_t = leading_eigenpair(L_op, tol, max_iter)
    lam_f, _, it_f, _ = leading_eigenpair(P_op, tol, max_iter)
    lam_f, eta, it_e, res_f = compute_eta(P_op, lam_f, g, tol, max_iter)
    m = period_and_classes(P_op).m
    log.info("a=%g b=%g n=%d lambda=%.15g lambda_forward=%.15g m=%d",
             params.a, params.b, n_cells, lam, lam_f, m)
    return SpectralResult(
        params=params,
        lam=lam,
        lam_forward=lam_f,
        g=g,
        eta=eta,
        nu=Density(grid, eta.values * g.values),
        iterations=it_t + it_f + it_e,
        residual=max(res_t, res_f),
        residual_transfer=res_t,
        residual_forward=res_f,
        m=m,
        forward=P_op,
        transfer=L_op,
    )
