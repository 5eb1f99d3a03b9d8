"""Open population: Poisson arrivals and per-agent exponential departures
interleaved with the bounded-confidence flow.

Between population changes the total event rate ``lambda_a + n * lambda_d``
is constant, so the next arrival or departure is drawn exactly by
superposing the competing exponential clocks.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from openhk.dynamics import (
    DEFAULT_STEP,
    EVENT_TOL,
    Agent,
    SwitchEvent,
    SystemState,
    advance,
)

SeedLike = int | np.random.SeedSequence


class EventKind(str, enum.Enum):
    ARRIVAL = "arrival"
    DEPARTURE = "departure"
    SWITCH = "switch"


@dataclass(frozen=True)
class OpinionLaw:
    """Bounded law on ``[a, b]``; uniform unless a quantile function is given."""

    a: float
    b: float
    quantile: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"need finite a < b, got a={self.a}, b={self.b}")

    def sample(self, rng: np.random.Generator) -> float:
        u = rng.random()
        if self.quantile is None:
            return self.a + (self.b - self.a) * u
        x = float(self.quantile(u))
        if not self.a <= x <= self.b:
            raise ValueError(f"quantile({u}) = {x} lies outside [{self.a}, {self.b}]")
        return x

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.array([self.sample(rng) for _ in range(size)], dtype=float)


@dataclass(frozen=True)
class OpenConfig:
    lambda_a: float = 5.0
    lambda_d: float = 0.4
    n0: int = 10
    init_law: OpinionLaw = OpinionLaw(0.0, 6.0)
    arrival_law: OpinionLaw | None = None
    t_end: float = 10.0
    h: float = DEFAULT_STEP
    closed: bool = False

    def __post_init__(self):
        if self.arrival_law is None:
            object.__setattr__(self, "arrival_law", self.init_law)
        if not self.closed:
            for name in ("lambda_a", "lambda_d"):
                value = getattr(self, name)
                if not (math.isfinite(value) and value > 0):
                    raise ValueError(f"{name} must be > 0, got {value}")
        if self.n0 < 0:
            raise ValueError(f"n0 must be >= 0, got {self.n0}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not self.h > 0:
            raise ValueError(f"h must be > 0, got {self.h}")


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    agent: int | None
    opinion: float | None
    n_after: int


@dataclass
class Trace:
    """One realization: event log plus states at the requested sample times.

    ``checkpoints`` holds every state the simulation stopped at (start,
    sample times, right after each arrival or departure), in time order,
    which is enough to rebuild the trajectory at any time by replaying
    the deterministic flow.
    """

    config: OpenConfig
    seed: object
    events: list[Event]
    switches: list[SwitchEvent]
    sample_times: np.ndarray
    samples: list[SystemState]
    checkpoints: list[SystemState]

    @property
    def t_end(self) -> float:
        return self.config.t_end

    @property
    def final(self) -> SystemState:
        return self.checkpoints[-1]

    def count(self, kind: EventKind) -> int:
        return sum(1 for e in self.events if e.kind is kind)


def sample_next_event(
    rng: np.random.Generator, t: float, n: int, lambda_a: float, lambda_d: float
) -> tuple[float, EventKind]:
    """Waiting time from ``t`` to the next arrival or departure, and its kind."""
    total = lambda_a + n * lambda_d
    dt = rng.exponential(1.0 / total)
    kind = EventKind.ARRIVAL if rng.random() * total < lambda_a else EventKind.DEPARTURE
    return dt, kind


def apply_arrival(
    state: SystemState,
    rng: np.random.Generator,
    arrival_law: OpinionLaw,
    agent_id: int | None = None,
) -> tuple[SystemState, Event]:
    """Insert one agent drawn from ``arrival_law`` at ``state.time``.

    ``agent_id`` must be unused in the whole realization; without one the
    next id above the current maximum is used, which is only safe when no
    higher id has departed.
    """
    if agent_id is None:
        agent_id = int(state.ids.max()) + 1 if state.n else 0
    x = arrival_law.sample(rng)
    new = state.with_agent(Agent(agent_id, x, state.time))
    return new, Event(state.time, EventKind.ARRIVAL, agent_id, x, new.n)


def apply_departure(state: SystemState, rng: np.random.Generator) -> tuple[SystemState, Event]:
    """Remove one present agent, chosen uniformly."""
    if state.n == 0:
        raise ValueError("departure from an empty population")
    k = int(rng.integers(state.n))
    agent_id, x = int(state.ids[k]), float(state.opinions[k])
    new = state.without_index(k)
    return new, Event(state.time, EventKind.DEPARTURE, agent_id, x, new.n)


def expected_population_limit(lambda_a: float, lambda_d: float) -> float:
    if lambda_a <= 0 or lambda_d <= 0:
        raise ValueError("rates must be positive")
    return lambda_a / lambda_d


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def simulate_open_realization(
    config: OpenConfig,
    seed: SeedLike,
    sample_times: Sequence[float] | None = None,
    tau: float = EVENT_TOL,
) -> Trace:
    """Run one realization on ``[0, config.t_end]``.

    States are recorded at ``sample_times`` (right-continuous: an event
    falling exactly on a sample time is applied first). With
    ``config.closed`` no arrivals or departures are drawn.
    """
    rng = make_rng(seed)
    times = np.unique(np.asarray([] if sample_times is None else sample_times, dtype=float))
    if times.size and (times[0] < 0 or times[-1] > config.t_end):
        raise ValueError(f"sample times must lie in [0, {config.t_end}]")

    x0 = config.init_law.sample_many(rng, config.n0)
    state = SystemState.from_opinions(x0, time=0.0)
    next_id = config.n0

    events: list[Event] = []
    switches: list[SwitchEvent] = []
    samples: list[SystemState] = []
    checkpoints: list[SystemState] = [state]

    def flow_to(st: SystemState, t: float) -> SystemState:
        st, sw = advance(st, t - st.time, config.h, tau)
        switches.extend(sw)
        events.extend(Event(e.time, EventKind.SWITCH, None, None, st.n) for e in sw)
        return dataclasses.replace(st, time=t)

    def draw(st: SystemState) -> tuple[float, EventKind | None]:
        if config.closed:
            return math.inf, None
        dt, kind = sample_next_event(rng, st.time, st.n, config.lambda_a, config.lambda_d)
        return st.time + dt, kind

    t_next, kind = draw(state)
    goals = np.union1d(times, [config.t_end])
    for goal in goals:
        while t_next <= goal:
            state = flow_to(state, t_next)
            if kind is EventKind.ARRIVAL:
                state, ev = apply_arrival(state, rng, config.arrival_law, next_id)
                next_id += 1
            else:
                state, ev = apply_departure(state, rng)
            events.append(ev)
            checkpoints.append(state)
            t_next, kind = draw(state)
        if goal > state.time:
            state = flow_to(state, goal)
            checkpoints.append(state)
        if times.size and goal in times:
            samples.append(state)

    return Trace(
        config=config,
        seed=seed,
        events=events,
        switches=switches,
        sample_times=times,
        samples=samples,
        checkpoints=checkpoints,
    )
