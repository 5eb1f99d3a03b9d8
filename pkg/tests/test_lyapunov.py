import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openhk.dynamics import SwitchEvent, SystemState, advance, find_clusters
from openhk.lyapunov import (
    compute_T0,
    compute_U0,
    compute_U_local,
    compute_V0,
    compute_V_local,
    compute_W0,
    lyapunov_vector,
    v_jump_delta,
)

from oracles import brute, dense_laplacian, spectral_U

opinion_lists = st.lists(st.floats(0.0, 6.0, allow_nan=False), min_size=0, max_size=25)


def test_U0_examples():
    assert compute_U0([0, 2]) == 1.0
    assert compute_U0([1.7] * 5) == 0.0
    assert compute_U0([]) == 0.0


def test_V0_examples():
    assert compute_V0([0, 2]) == 2.0
    assert compute_V0([3.1, 3.1]) == 0.0
    assert compute_V0([4.0]) == 0.0


def test_T0_examples():
    assert compute_T0([0, 2]) == 1.0
    assert compute_T0([0]) == 0.0
    assert compute_T0([]) == 0.0


def test_W0_examples():
    assert compute_W0([0, 0.5, 2]) == pytest.approx(0.5, rel=1e-15)
    assert compute_W0([2.5] * 4) == 0.0


def test_V_local_examples():
    assert compute_V_local([0, 0.5, 2]) == pytest.approx(1 / 18, rel=1e-15)
    assert compute_V_local([0, 0, 1, 2.5, 2.5]) == 0.0


def test_U_local_examples():
    assert compute_U_local([0, 0.5, 2]) == pytest.approx(0.125 / 3, rel=1e-15)
    assert compute_U_local([0, 0, 1, 2.5, 2.5]) == 0.0


def test_accepts_states_and_unsorted_sequences():
    s = SystemState.from_opinions([2, 0.5, 0])
    assert lyapunov_vector(s) == lyapunov_vector([0, 2, 0.5])


@given(opinion_lists)
def test_functionals_match_definitions(xs):
    got = lyapunov_vector(xs)
    want = brute(xs)
    for name in ("u0", "v0", "t0", "w0", "v_local", "u_local"):
        assert getattr(got, name) == pytest.approx(want[name], rel=1e-10, abs=1e-12), name


@given(st.lists(st.floats(0.0, 6.0, allow_nan=False), min_size=2, max_size=50))
def test_relations_between_global_functionals(xs):
    f = lyapunov_vector(xs)
    mean = float(np.mean(xs))
    scale = max(f.v0, 1e-300)
    assert abs(f.v0 - 2 * f.u0) <= 1e-12 * scale + 1e-14
    assert abs(f.v0 - (4 * f.t0 - 2 * mean**2)) <= 1e-12 * max(4 * f.t0, 1) + 1e-13
    assert f.u_local <= f.u0 + 1e-12


@given(opinion_lists)
def test_W0_splits_into_local_part_and_far_pairs(xs):
    x = np.asarray(xs)
    n = len(x)
    far = int(np.sum(np.abs(x[:, None] - x[None, :]) >= 1)) if n else 0
    f = lyapunov_vector(xs)
    if n >= 2:
        assert f.w0 == pytest.approx(f.v_local + far / n**2, rel=1e-12, abs=1e-15)
    assert f.w0 >= f.v_local
    assert (f.w0 == f.v_local) == (far == 0 or n < 2)


@given(st.lists(st.floats(0.0, 4.0, allow_nan=False), min_size=2, max_size=12))
def test_V_local_is_laplacian_quadratic_form(xs):
    # x'Lx sums each edge once; the pair sum counts both orientations
    x = np.sort(xs)
    lap = dense_laplacian(x)
    n = len(x)
    assert compute_V_local(x) == pytest.approx(2 * (x @ lap @ x) / n**2, rel=1e-9, abs=1e-12)


@settings(max_examples=60)
@given(st.lists(st.floats(0.0, 4.0, allow_nan=False), min_size=2, max_size=8))
def test_U_local_matches_spectral_construction(xs):
    assert compute_U_local(xs) == pytest.approx(spectral_U(xs), rel=1e-9, abs=1e-9)


# --- jumps ------------------------------------------------------------------


def test_jump_examples():
    assert v_jump_delta(SwitchEvent(0.0, 1, 0), 3) == pytest.approx(2 / 9)
    assert v_jump_delta(SwitchEvent(0.0, 2, 2), 7) == 0.0
    assert v_jump_delta(SwitchEvent(0.0, 0, 2), 4) == -0.25
    with pytest.raises(ValueError):
        v_jump_delta(SwitchEvent(0.0, 1, 0), 0)


def test_jump_matches_straddled_states():
    d = 1e-10
    # two edges vanish together at the threshold
    pre = [0, 1 - d, 3, 4 - d]
    post = [0, 1 + d, 3, 4 + d]
    assert compute_V_local(post) - compute_V_local(pre) == pytest.approx(-0.25, abs=1e-9)
    # the three-agent merge: outer agents come within range of each other
    pre = [0, 0.5, 1 + d]
    post = [0, 0.5, 1 - d]
    assert compute_V_local(post) - compute_V_local(pre) == pytest.approx(2 / 9, abs=1e-9)


def test_jump_law_on_integrated_switches():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(30):
        _, events = advance(SystemState.from_opinions(rng.uniform(0, 4, 8)), 10.0)
        for e in events:
            dv = compute_V_local(e.after) - compute_V_local(e.before)
            assert abs(dv - v_jump_delta(e, e.n)) <= 1e-9
            checked += 1
    assert checked > 20


def test_within_cluster_switch_leaves_U_unchanged():
    _, events = advance(SystemState.from_opinions([0, 0.6, 1.1]), 2.0)
    (e,) = events
    assert find_clusters(e.before).clusters == find_clusters(e.after).clusters
    assert compute_U_local(e.after) == pytest.approx(compute_U_local(e.before), abs=1e-8)
    assert compute_V_local(e.after) > compute_V_local(e.before)


# --- along trajectories -----------------------------------------------------


def test_monotone_functionals_along_closed_runs():
    h = 1e-3
    dt = 0.02
    rng = np.random.default_rng(21)
    for _ in range(10):
        s = SystemState.from_opinions(rng.uniform(0, 6, 10))
        prev = lyapunov_vector(s)
        for _ in range(200):
            s, events = advance(s, dt, h)
            for e in events:
                assert compute_U_local(e.after) <= compute_U_local(e.before) + 1e-15
            cur = lyapunov_vector(s)
            assert cur.u0 <= prev.u0 + 10 * h**4 * dt
            assert cur.u_local <= prev.u_local + 10 * h**4 * dt
            assert cur.w0 <= prev.w0 + 1e-12
            prev = cur


def test_derivative_identities():
    # dU/dt = dU0/dt = -n V between switches (second-order one-sided differences)
    rng = np.random.default_rng(2)
    delta = 1e-4
    checked = 0
    for _ in range(20):
        s, _ = advance(SystemState.from_opinions(rng.uniform(0, 6, 10)), rng.uniform(0.0, 0.5))
        s1, ev1 = advance(s, delta, 1e-5)
        s2, ev2 = advance(s1, delta, 1e-5)
        if ev1 or ev2:
            continue
        f0, f1, f2 = (lyapunov_vector(x) for x in (s, s1, s2))
        rate = -s.n * f0.v_local
        for name in ("u0", "u_local"):
            a, b, c = (getattr(f, name) for f in (f0, f1, f2))
            slope = (-3 * a + 4 * b - c) / (2 * delta)
            assert slope == pytest.approx(rate, rel=1e-4, abs=1e-10)
        checked += 1
    assert checked >= 10


def test_closed_limits():
    rng = np.random.default_rng(8)
    positive = 0
    for _ in range(20):
        s, _ = advance(SystemState.from_opinions(rng.uniform(0, 6, 10)), 30.0)
        f = lyapunov_vector(s)
        assert f.u_local < 1e-6 and f.v_local < 1e-6
        p = find_clusters(s)
        if len(p) >= 2:
            assert f.u0 > 0 and f.w0 > 0
            positive += 1
    assert positive > 0
