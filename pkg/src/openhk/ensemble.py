"""Monte Carlo ensembles of closed or open realizations on a fixed time grid."""

from __future__ import annotations

import bisect
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from openhk import _kernels
from openhk.dynamics import advance
from openhk.open_process import OpenConfig, Trace, simulate_open_realization

OBSERVABLES = ("U0", "U", "V", "W0", "n")
DEFAULT_GRID_POINTS = 400
THREADS_ENV = "OPENHK_THREADS"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("a time grid needs at least one point")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t0: float, t_end: float, num_points: int = DEFAULT_GRID_POINTS) -> TimeGrid:
        if num_points < 1:
            raise ValueError("num_points must be positive")
        pts = np.linspace(t0, t_end, num_points)
        pts[-1] = t_end
        return cls(pts)

    @property
    def t0(self) -> float:
        return float(self.points[0])

    @property
    def t_end(self) -> float:
        return float(self.points[-1])

    @property
    def num_points(self) -> int:
        return int(self.points.size)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)


@dataclass(frozen=True, eq=False)
class GridSeries:
    """Observables of one realization; ``values`` has one row per name in OBSERVABLES."""

    grid: TimeGrid
    values: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[OBSERVABLES.index(name)]


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Pointwise sample mean and unbiased sample variance (0 for one realization)."""

    grid: TimeGrid
    mean: dict[str, np.ndarray]
    var: dict[str, np.ndarray]
    count: np.ndarray

    def stderr(self, name: str) -> np.ndarray:
        return np.sqrt(self.var[name] / self.count)


def _observables(x: np.ndarray) -> tuple[float, float, float, float, float]:
    u0, _, _, w0, v, u = _kernels.functionals(x)
    return u0, u, v, w0, float(x.size)


def sample_on_grid(trace: Trace, grid: TimeGrid) -> GridSeries:
    """Evaluate the observables on the right-continuous trajectory of ``trace``.

    Grid times that are not checkpoints are reached by replaying the flow
    from the latest checkpoint before them.
    """
    if grid.t0 < 0 or grid.t_end > trace.t_end:
        raise ValueError(f"grid [{grid.t0}, {grid.t_end}] outside trace horizon [0, {trace.t_end}]")
    times = [c.time for c in trace.checkpoints]
    out = np.empty((len(OBSERVABLES), grid.num_points))
    for k, t in enumerate(grid.points):
        state = trace.checkpoints[bisect.bisect_right(times, t) - 1]
        if state.time < t:
            state, _ = advance(state, t - state.time, trace.config.h)
        out[:, k] = _observables(np.ascontiguousarray(state.opinions))
    return GridSeries(grid, out)


def aggregate(series: Iterable[GridSeries]) -> EnsembleStats:
    """One-pass (Welford) mean and variance over realizations, in iteration order."""
    grid = None
    count = 0
    mean = m2 = None
    for s in series:
        if grid is None:
            grid = s.grid
            mean = np.zeros_like(s.values)
            m2 = np.zeros_like(s.values)
        elif s.grid != grid:
            raise ValueError("all series must share one time grid")
        count += 1
        delta = s.values - mean
        mean += delta / count
        m2 += delta * (s.values - mean)
    if grid is None:
        raise ValueError("cannot aggregate an empty ensemble")
    var = m2 / (count - 1) if count > 1 else np.zeros_like(m2)
    np.maximum(var, 0.0, out=var)
    return EnsembleStats(
        grid=grid,
        mean={name: mean[i] for i, name in enumerate(OBSERVABLES)},
        var={name: var[i] for i, name in enumerate(OBSERVABLES)},
        count=np.full(grid.num_points, count, dtype=np.int64),
    )


def realization_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def thread_count(requested: int | None = None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def run_realization(config: OpenConfig, grid: TimeGrid, master_seed: int, index: int) -> GridSeries:
    trace = simulate_open_realization(config, realization_seed(master_seed, index), grid.points)
    return sample_on_grid(trace, grid)


def run_ensemble(
    config: OpenConfig,
    realizations: int,
    master_seed: int,
    grid: TimeGrid | None = None,
    threads: int | None = None,
) -> EnsembleStats:
    """Average ``realizations`` independent runs.

    Results depend only on ``(config, realizations, master_seed, grid)``;
    realizations are reduced in index order whatever the thread count.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    if grid is None:
        grid = TimeGrid.uniform(0.0, config.t_end)
    workers = thread_count(threads)
    indices = range(realizations)
    if workers == 1:
        return aggregate(run_realization(config, grid, master_seed, i) for i in indices)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return aggregate(pool.map(lambda i: run_realization(config, grid, master_seed, i), indices))
