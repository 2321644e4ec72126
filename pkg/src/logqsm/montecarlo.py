"""Monte Carlo simulation of absorbed random logistic paths.

Uniforms come from counter-based Philox streams: path ``p`` reads its
draws from the stream keyed by ``(seed, p // BLOCK_SIZE)`` at position
``(step, p % BLOCK_SIZE)``.  Blocks are therefore independent units of work
and results are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .discretization import Density
from .errors import InsufficientSurvivorsError
from .kernel import LogisticParams

__all__ = [
    "BLOCK_SIZE",
    "SimConfig",
    "SurvivalStats",
    "simulate",
    "simulate_thinning",
    "estimate_survival_rate",
    "yaglom_distance",
]

BLOCK_SIZE = 1 << 16
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    params: LogisticParams
    n_paths: int
    horizon: int
    seed: int = 0
    start: Union[float, Density] = 0.3
    n_bins: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {self.n_bins}")
        if not isinstance(self.start, Density) and not 0.0 < float(self.start) < 1.0:
            raise ValueError(f"start point must lie in (0, 1), got {self.start}")


@dataclass(frozen=True, eq=False)
class SurvivalStats:
    survivors_by_step: np.ndarray
    histogram_counts: np.ndarray
    time_average_mean: float
    time_average_stderr: float
    config: Optional[SimConfig] = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return len(self.survivors_by_step) - 1

    @property
    def n_survivors(self) -> int:
        return int(self.survivors_by_step[-1])

    @property
    def n_bins(self) -> int:
        return len(self.histogram_counts)

    @property
    def conditional_histogram(self) -> np.ndarray:
        total = self.histogram_counts.sum()
        if total == 0:
            return np.zeros(self.n_bins)
        return self.histogram_counts / total


def _stream(seed: int, block: int) -> np.random.Generator:
    key = (int(seed) & _SEED_MASK) | (int(block) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(n_paths):
    return [(k, min(BLOCK_SIZE, n_paths - k * BLOCK_SIZE)) for k in range(-(-n_paths // BLOCK_SIZE))]


def _initial(start, size, gen):
    if not isinstance(start, Density):
        return np.full(size, float(start))
    grid = start.grid
    cdf = start.normalized().cdf()
    u = gen.random(size)
    cell = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), grid.n_cells - 1)
    return grid.edges[cell] + gen.random(size) * grid.weights[cell]


def _run_block(config: SimConfig, observable, block: int, size: int):
    gen = _stream(config.seed, block)
    a, width = config.params.a, config.params.width
    x = _initial(config.start, size, gen)
    alive = np.arange(size)
    running = np.zeros(size)
    survivors = np.empty(config.horizon + 1, dtype=np.int64)
    survivors[0] = size
    for t in range(config.horizon):
        u = gen.random(size)[alive]
        running += observable(x)
        x = (a + width * u) * x * (1.0 - x)
        keep = (x >= 0.0) & (x <= 1.0)
        x, alive, running = x[keep], alive[keep], running[keep]
        survivors[t + 1] = alive.size
    bins = np.minimum((x * config.n_bins).astype(np.int64), config.n_bins - 1)
    counts = np.bincount(bins, minlength=config.n_bins)
    means = running / config.horizon
    return survivors, counts, float(means.sum()), float(np.dot(means, means))


def _reduce(parts, n_bins, horizon, config=None):
    survivors = np.zeros(horizon + 1, dtype=np.int64)
    counts = np.zeros(n_bins, dtype=np.int64)
    s1 = s2 = 0.0
    for surv, cnt, a1, a2 in parts:
        survivors += surv
        counts += cnt
        s1 += a1
        s2 += a2
    k = int(survivors[-1])
    if k == 0:
        mean = stderr = float("nan")
    else:
        mean = s1 / k
        var = max(s2 - k * mean * mean, 0.0) / (k - 1) if k > 1 else 0.0
        stderr = math.sqrt(var / k)
    return SurvivalStats(survivors, counts, mean, stderr, config)


def _map_blocks(fn, blocks, threads):
    threads = max(1, int(threads or 1))
    if threads == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


def simulate(config: SimConfig, observable: Optional[Callable] = None) -> SurvivalStats:
    """Run ``n_paths`` absorbed paths for ``horizon`` steps.

    ``observable`` (vectorized, default ``y -> y``) is averaged over steps
    ``0..horizon-1`` on every path that survives the full horizon.
    """
    obs = observable if observable is not None else (lambda y: y)
    h = lambda y: np.asarray(obs(y), dtype=float) * np.ones_like(y)  # noqa: E731
    parts = _map_blocks(
        lambda blk: _run_block(config, h, *blk), _blocks(config.n_paths), config.threads
    )
    return _reduce(parts, config.n_bins, config.horizon, config)


def simulate_thinning(
    death_prob: float, n_paths: int, horizon: int, seed: int = 0, threads: int = 1
) -> SurvivalStats:
    """Paths killed independently with probability ``death_prob`` per step.

    The exact survival rate is ``1 - death_prob``; used to validate the
    estimators.
    """
    if not 0.0 <= death_prob <= 1.0:
        raise ValueError(f"death_prob must lie in [0, 1], got {death_prob}")
    if n_paths < 1 or horizon < 1:
        raise ValueError("n_paths and horizon must be >= 1")

    def run(blk):
        block, size = blk
        gen = _stream(seed, block)
        alive = np.arange(size)
        survivors = np.empty(horizon + 1, dtype=np.int64)
        survivors[0] = size
        for t in range(horizon):
            u = gen.random(size)[alive]
            alive = alive[u >= death_prob]
            survivors[t + 1] = alive.size
        k = alive.size
        return survivors, np.array([k], dtype=np.int64), float(k), float(k)

    parts = _map_blocks(run, _blocks(n_paths), threads)
    return _reduce(parts, 1, horizon)


def estimate_survival_rate(stats: SurvivalStats, window: Tuple[int, int] = (15, 30)) -> Tuple[float, float]:
    """Geometric mean of ``S_{k+1}/S_k`` over ``lo <= k < hi`` with delta-method stderr.

    ``Var log r_k ≈ (1 - r_k)/(r_k S_k)`` treating each step as a binomial
    thinning of the current survivors.
    """
    lo, hi = (int(v) for v in window)
    if not 0 <= lo < hi <= stats.horizon:
        raise ValueError(f"window {window} not inside [0, {stats.horizon}]")
    s = stats.survivors_by_step[lo : hi + 1].astype(float)
    if np.any(s == 0):
        raise InsufficientSurvivorsError(f"no survivors at some step in window {window}")
    steps = hi - lo
    lam_hat = (s[-1] / s[0]) ** (1.0 / steps)
    r = s[1:] / s[:-1]
    var_log = np.sum((1.0 - r) / (r * s[:-1])) / steps ** 2
    return float(lam_hat), float(lam_hat * math.sqrt(var_log))


def yaglom_distance(stats: SurvivalStats, reference: Density) -> float:
    """Total-variation distance between the survivors' histogram and ``reference``."""
    if stats.n_survivors == 0:
        raise InsufficientSurvivorsError("no survivors at the horizon")
    ref = reference.bin_masses(stats.n_bins)
    ref = ref / ref.sum()
    return float(0.5 * np.abs(stats.conditional_histogram - ref).sum())
