"""Global and local disagreement functionals.

Every function accepts a :class:`~openhk.dynamics.SystemState` or a plain
sequence of opinions. Pair sums run over ordered pairs ``(i, j)``
including ``i == j``. Empty and single-agent populations have zero
disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from openhk import _kernels
from openhk.dynamics import SwitchEvent, sorted_opinions


@dataclass(frozen=True)
class LyapunovVector:
    u0: float
    v0: float
    t0: float
    w0: float
    v_local: float
    u_local: float


def _all(state) -> tuple[float, float, float, float, float, float]:
    return _kernels.functionals(np.ascontiguousarray(sorted_opinions(state)))


def lyapunov_vector(state) -> LyapunovVector:
    return LyapunovVector(*_all(state))


def compute_U0(state) -> float:
    """Variance of the opinions around the population mean."""
    return _all(state)[0]


def compute_V0(state) -> float:
    """Mean squared difference over all ordered pairs."""
    return _all(state)[1]


def compute_T0(state) -> float:
    """Half the mean squared opinion; zero for an empty population."""
    return _all(state)[2]


def compute_W0(state) -> float:
    """Squared differences of interacting pairs plus a count of the
    non-interacting ordered pairs, normalised by ``n**2``."""
    return _all(state)[3]


def compute_V_local(state) -> float:
    """Mean squared difference restricted to interacting pairs.

    Equals ``2 * x @ L @ x / n**2`` for the Laplacian ``L`` of the
    interaction graph, and ``-(1/n) dU0/dt`` along the flow.
    """
    return _all(state)[4]


def compute_U_local(state) -> float:
    """Variance of each opinion around its own cluster mean."""
    return _all(state)[5]


def v_jump_delta(event: SwitchEvent, n: int) -> float:
    """Discontinuity of the local pair functional across a topology switch.

    Each edge appearing or vanishing at the threshold carries a squared
    difference of 1 for both of its ordered pairs.
    """
    if n < 1:
        raise ValueError("a switch needs a non-empty population")
    return 2.0 * (event.edges_added - event.edges_removed) / n**2
