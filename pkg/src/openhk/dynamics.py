"""Closed Hegselmann-Krause flow on a sorted population of scalar opinions.

Agents interact when their opinions differ by strictly less than 1. The
threshold is not a parameter: rescale opinions to change it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from openhk import _kernels

DEFAULT_STEP = 1e-3
EVENT_TOL = 1e-12


class NumericalError(ArithmeticError):
    """Raised when the integrator meets a non-finite opinion."""


@dataclass(frozen=True)
class Agent:
    id: int
    opinion: float
    t_arrival: float = 0.0


@dataclass(frozen=True, eq=False)
class SystemState:
    """Population at one instant, kept sorted by (opinion, id).

    Treat instances as values; every operation returns a new state.
    """

    time: float
    ids: np.ndarray
    opinions: np.ndarray
    arrivals: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        x = np.asarray(self.opinions, dtype=np.float64)
        arr = np.asarray(self.arrivals, dtype=np.float64)
        if not (ids.shape == x.shape == arr.shape) or x.ndim != 1:
            raise ValueError("ids, opinions and arrivals must be 1-D and equally long")
        order = np.lexsort((ids, x))
        for name, value in (("ids", ids[order]), ("opinions", x[order]), ("arrivals", arr[order])):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_opinions(
        cls,
        opinions: Iterable[float],
        time: float = 0.0,
        ids: Sequence[int] | None = None,
    ) -> SystemState:
        x = np.array(list(opinions), dtype=float)
        if ids is None:
            ids = np.arange(x.size)
        return cls(time=float(time), ids=ids, opinions=x, arrivals=np.full(x.size, float(time)))

    @classmethod
    def empty(cls, time: float = 0.0) -> SystemState:
        return cls.from_opinions([], time=time)

    @property
    def n(self) -> int:
        return int(self.opinions.size)

    @property
    def agents(self) -> tuple[Agent, ...]:
        return tuple(
            Agent(int(i), float(x), float(t))
            for i, x, t in zip(self.ids, self.opinions, self.arrivals)
        )

    def with_agent(self, agent: Agent, time: float | None = None) -> SystemState:
        return SystemState(
            time=self.time if time is None else time,
            ids=np.append(self.ids, agent.id),
            opinions=np.append(self.opinions, agent.opinion),
            arrivals=np.append(self.arrivals, agent.t_arrival),
        )

    def without_index(self, index: int, time: float | None = None) -> SystemState:
        keep = np.arange(self.n) != index
        return SystemState(
            time=self.time if time is None else time,
            ids=self.ids[keep],
            opinions=self.opinions[keep],
            arrivals=self.arrivals[keep],
        )

    def __eq__(self, other):
        if not isinstance(other, SystemState):
            return NotImplemented
        return (
            self.time == other.time
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.opinions, other.opinions)
            and np.array_equal(self.arrivals, other.arrivals)
        )

    def __repr__(self):
        return f"SystemState(time={self.time!r}, n={self.n}, opinions={self.opinions.tolist()!r})"


@dataclass(frozen=True)
class InteractionGraph:
    n: int
    edges: frozenset[tuple[int, int]]

    def laplacian(self) -> np.ndarray:
        lap = np.zeros((self.n, self.n))
        for i, j in self.edges:
            lap[i, j] = lap[j, i] = -1.0
            lap[i, i] += 1.0
            lap[j, j] += 1.0
        return lap


@dataclass(frozen=True)
class ClusterPartition:
    """Connected components as contiguous index ranges of the sorted state."""

    clusters: tuple[range, ...]
    sizes: tuple[int, ...]
    means: tuple[float, ...]

    def __len__(self):
        return len(self.clusters)

    def labels(self) -> np.ndarray:
        out = np.empty(sum(self.sizes), dtype=np.int64)
        for k, r in enumerate(self.clusters):
            out[r.start : r.stop] = k
        return out


@dataclass(frozen=True)
class SwitchEvent:
    """A change of the interaction graph's edge set.

    ``before`` and ``after`` are the sorted opinions bracketing the switch
    within the event tolerance.
    """

    time: float
    edges_added: int
    edges_removed: int
    before: np.ndarray = field(repr=False, compare=False, default=None)
    after: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def n(self) -> int:
        return 0 if self.after is None else int(self.after.size)


def sorted_opinions(state) -> np.ndarray:
    if isinstance(state, SystemState):
        return state.opinions
    return np.sort(np.asarray(state, dtype=np.float64))


def _windows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(x.size, np.int64)
    hi = np.empty(x.size, np.int64)
    _kernels.reach(np.ascontiguousarray(x), lo, hi)
    return lo, hi


def build_interaction_graph(state) -> InteractionGraph:
    x = sorted_opinions(state)
    _, hi = _windows(x)
    edges = frozenset((i, j) for i in range(x.size) for j in range(i + 1, hi[i] + 1))
    return InteractionGraph(n=int(x.size), edges=edges)


def find_clusters(state) -> ClusterPartition:
    """Maximal runs of sorted agents whose adjacent gaps are below 1."""
    x = sorted_opinions(state)
    if x.size == 0:
        return ClusterPartition((), (), ())
    cuts = np.flatnonzero(np.diff(x) >= 1.0) + 1
    bounds = np.concatenate(([0], cuts, [x.size]))
    clusters = tuple(range(int(s), int(e)) for s, e in zip(bounds[:-1], bounds[1:]))
    return ClusterPartition(
        clusters=clusters,
        sizes=tuple(len(r) for r in clusters),
        means=tuple(float(x[r.start : r.stop].mean()) for r in clusters),
    )


def hk_rhs(state) -> np.ndarray:
    """Velocity of every agent, in the state's sorted order."""
    x = np.ascontiguousarray(sorted_opinions(state))
    lo, hi = _windows(x)
    out = np.empty_like(x)
    _kernels.hk_velocity(x, lo, hi, out)
    return out


def is_equilibrium(state, tol: float = 0.0) -> bool:
    """Whether every pair is either (nearly) together or at distance >= 1 - tol."""
    x = sorted_opinions(state)
    gaps = np.abs(x[:, None] - x[None, :])
    return bool(np.all((gaps <= tol) | (gaps >= 1.0 - tol)))


def advance(
    state: SystemState,
    horizon: float,
    h: float = DEFAULT_STEP,
    tau: float = EVENT_TOL,
) -> tuple[SystemState, list[SwitchEvent]]:
    """Integrate the closed flow for ``horizon`` time units.

    Returns the new state (time advanced by exactly ``horizon``) and the
    switch events met on the way, in time order.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if not h > 0:
        raise ValueError(f"step must be > 0, got {h}")
    if not np.all(np.isfinite(state.opinions)):
        raise NumericalError("non-finite opinion in state")

    x = state.opinions.copy()
    perm = np.arange(state.n, dtype=np.int64)
    pre = np.empty_like(x)
    events: list[SwitchEvent] = []
    elapsed = 0.0
    while horizon - elapsed > 0.0:
        dt, status, added, removed = _kernels.integrate(x, perm, horizon - elapsed, h, tau, pre)
        if status == _kernels.STATUS_NONFINITE:
            raise NumericalError(f"non-finite opinion at t={state.time + elapsed + dt}")
        if status == _kernels.STATUS_DONE:
            break
        elapsed += dt
        events.append(
            SwitchEvent(
                time=state.time + elapsed,
                edges_added=int(added),
                edges_removed=int(removed),
                before=pre.copy(),
                after=x.copy(),
            )
        )

    new = SystemState(
        time=state.time + horizon,
        ids=state.ids[perm],
        opinions=x,
        arrivals=state.arrivals[perm],
    )
    return new, events
