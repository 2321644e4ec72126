"""Ulam-style discretization on a uniform midpoint grid of ``[0, 1]``.

Densities are piecewise constant on cells.  Operator entries are exact
integrals of the kernel band over each cell overlap, so the forward matrix
applied to a value vector reproduces ``P`` of the piecewise-constant
interpolant at every node, and likewise for the transfer matrix and ``L``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .kernel import LogisticParams, alpha_minus, alpha_plus, beta_minus, beta_plus, logit

__all__ = [
    "Grid",
    "Density",
    "DiscreteOperator",
    "build_grid",
    "assemble_forward",
    "assemble_transfer",
    "cached_operator",
    "duality_residual",
    "synthetic_period2_operator",
    "node_values",
]

FORWARD = "forward"
TRANSFER = "transfer"

DEFAULT_CELLS = 2000
TEST_CELLS = 200


@dataclass(frozen=True, eq=False)
class Grid:
    n_cells: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n_cells == other.n_cells

    def __hash__(self):
        return hash(self.n_cells)

    def cell_of(self, x: float) -> int:
        """Index of the cell containing ``x`` (right edge belongs to the last cell)."""
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {x}")
        return min(int(x * self.n_cells), self.n_cells - 1)


def build_grid(n_cells: int) -> Grid:
    """Uniform open midpoint grid with ``n_cells`` cells."""
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"n_cells must be an integer >= 2, got {n_cells}")
    n = int(n_cells)
    edges = np.linspace(0.0, 1.0, n + 1)
    nodes = (np.arange(n) + 0.5) / n
    weights = np.full(n, 1.0 / n)
    for arr in (edges, nodes, weights):
        arr.setflags(write=False)
    return Grid(n, nodes, weights, edges)


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative piecewise-constant function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n_cells,):
            raise ValueError(
                f"expected {self.grid.n_cells} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite")
        if np.any(vals < 0.0):
            raise ValueError("density values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, grid: Grid) -> "Density":
        return cls(grid, np.ones(grid.n_cells))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Density":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.n_cells))

    def integral(self) -> float:
        return float(np.dot(self.values, self.grid.weights))

    def normalized(self) -> "Density":
        total = self.integral()
        if total <= 0.0:
            raise ValueError("cannot normalize a density with zero mass")
        return Density(self.grid, self.values / total)

    def cdf(self) -> np.ndarray:
        """Cumulative mass at the right edge of each cell."""
        return np.cumsum(self.values * self.grid.weights)

    def __call__(self, x):
        idx = np.minimum((np.asarray(x, dtype=float) * self.grid.n_cells).astype(int),
                         self.grid.n_cells - 1)
        return self.values[idx]

    def bin_masses(self, n_bins: int) -> np.ndarray:
        """Mass in each of ``n_bins`` equal bins; ``n_bins`` must divide the cell count."""
        n = self.grid.n_cells
        if n_bins < 1 or n % n_bins:
            raise ValueError(f"{n_bins} bins do not align with {n} cells")
        return (self.values * self.grid.weights).reshape(n_bins, n // n_bins).sum(axis=1)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Dense matrix of ``P`` (kind ``forward``) or ``L`` (kind ``transfer``)."""

    grid: Grid
    matrix: np.ndarray = field(repr=False)
    kind: str

    def __post_init__(self):
        if self.kind not in (FORWARD, TRANSFER):
            raise ValueError(f"kind must be 'forward' or 'transfer', got {self.kind!r}")
        m = np.asarray(self.matrix, dtype=float)
        n = self.grid.n_cells
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match grid with {n} cells")
        if np.any(m < 0.0):
            raise ValueError("operator entries must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)


def node_values(h, grid: Grid) -> np.ndarray:
    """Value vector of ``h`` on ``grid`` from a Density, array, scalar or callable."""
    if isinstance(h, Density):
        if h.grid != grid:
            raise ValueError("density lives on a different grid")
        return np.asarray(h.values, dtype=float)
    if callable(h):
        return np.asarray(h(grid.nodes), dtype=float) * np.ones(grid.n_cells)
    arr = np.asarray(h, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_cells, float(arr))
    if arr.shape != (grid.n_cells,):
        raise ValueError(f"expected {grid.n_cells} values, got shape {arr.shape}")
    return arr


def _row_blocks(n, threads):
    threads = max(1, int(threads or 1))
    size = max(1, -(-n // threads))
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _assemble(builder, n, threads):
    blocks = _row_blocks(n, threads)
    if len(blocks) == 1:
        return builder(blocks[0])
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        parts = list(pool.map(builder, blocks))
    return np.vstack(parts)


def _window(window):
    if window is None:
        return 0.0, 1.0
    lo, hi = window
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"window must satisfy 0 <= lo < hi <= 1, got {window}")
    return float(lo), float(hi)


def _band_lengths(edges, lo, hi, antiderivative=None):
    """Rows: ``|cell_k ∩ [lo_j, hi_j]|`` (or the integral of ``antiderivative'``)."""
    hi = np.maximum(hi, lo)
    clipped = np.clip(edges[None, :], lo[:, None], hi[:, None])
    if antiderivative is not None:
        clipped = antiderivative(clipped)
    return np.diff(clipped, axis=1)


def assemble_forward(
    params: LogisticParams,
    grid: Grid,
    window: Optional[Tuple[float, float]] = None,
    threads: int = 1,
) -> DiscreteOperator:
    """Matrix of ``P``: entry ``(j, k) = |cell_k ∩ band(x_j)| / ((b - a) q_j)``.

    With ``window=(lo, hi)`` both the rows (start points) and the integration
    are restricted to ``[lo, hi]``, which gives the truncated kernel.
    """
    wlo, whi = _window(window)
    x, edges = grid.nodes, grid.edges

    def rows(sl):
        q = x[sl] * (1.0 - x[sl])
        lo = np.maximum(params.a * q, wlo)
        hi = np.minimum(np.minimum(params.b * q, 1.0), whi)
        out = _band_lengths(edges, lo, hi) / (params.width * q)[:, None]
        out[(x[sl] < wlo) | (x[sl] > whi)] = 0.0
        return out

    return DiscreteOperator(grid, _assemble(rows, grid.n_cells, threads), FORWARD)


def assemble_transfer(
    params: LogisticParams,
    grid: Grid,
    window: Optional[Tuple[float, float]] = None,
    threads: int = 1,
) -> DiscreteOperator:
    """Matrix of ``L`` with the weight ``1/((b - a) y (1 - y))`` integrated exactly.

    The band ``[alpha-, alpha+]`` minus ``(beta-, beta+)`` is split into its
    two pieces so no entry is formed by subtraction.
    """
    wlo, whi = _window(window)
    x, edges = grid.nodes, grid.edges

    def rows(sl):
        xs = x[sl]
        am, ap = alpha_minus(params, xs), alpha_plus(params, xs)
        bm, bp = beta_minus(params, xs), beta_plus(params, xs)
        left = _band_lengths(edges, np.maximum(am, wlo), np.minimum(bm, whi), logit)
        right = _band_lengths(edges, np.maximum(bp, wlo), np.minimum(ap, whi), logit)
        out = (left + right) / params.width
        out[(xs < wlo) | (xs > whi)] = 0.0
        return out

    return DiscreteOperator(grid, _assemble(rows, grid.n_cells, threads), TRANSFER)


def cached_operator(params: LogisticParams, grid: Grid, kind: str, cache_dir=None, threads=1):
    """Assemble, or load from ``cache_dir`` a matrix keyed by ``(a, b, n, kind)``."""
    build = {FORWARD: assemble_forward, TRANSFER: assemble_transfer}[kind]
    if cache_dir is None:
        return build(params, grid, threads=threads)
    path = Path(cache_dir) / f"{kind}_a{params.a!r}_b{params.b!r}_n{grid.n_cells}.npy"
    if path.exists():
        return DiscreteOperator(grid, np.load(path), kind)
    op = build(params, grid, threads=threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, op.matrix)
    return op


def duality_residual(P_op: DiscreteOperator, L_op: DiscreteOperator, f, g) -> float:
    """``|<P f, g> - <f, L g>|`` in the grid's midpoint quadrature."""
    if P_op.grid != L_op.grid:
        raise ValueError("operators live on different grids")
    if P_op.kind != FORWARD or L_op.kind != TRANSFER:
        raise ValueError("expected a forward and a transfer operator")
    grid = P_op.grid
    fv, gv = node_values(f, grid), node_values(g, grid)
    w = grid.weights
    lhs = np.dot(P_op.apply(fv) * gv, w)
    rhs = np.dot(fv * L_op.apply(gv), w)
    return float(abs(lhs - rhs))


def synthetic_period2_operator(grid: Grid, survival: float = 0.9) -> DiscreteOperator:
    """Forward operator swapping ``[0, 1/2)`` and ``[1/2, 1)`` uniformly, row sums ``survival``."""
    n = grid.n_cells
    if n % 2:
        raise ValueError(f"need an even number of cells, got {n}")
    half = n // 2
    m = np.zeros((n, n))
    m[:half, half:] = survival / half
    m[half:, :half] = survival / half
    return DiscreteOperator(grid, m, FORWARD)
