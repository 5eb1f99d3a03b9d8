"""JIT-compiled inner loops.

Everything here works on a 1-D float64 array of opinions sorted in
ascending order. The interaction threshold is fixed at 1.
"""

import numpy as np
from numba import njit

STATUS_DONE = 0
STATUS_SWITCH = 1
STATUS_NONFINITE = -1


@njit(cache=True, nogil=True)
def reach(x, lo, hi):
    """Index window ``lo[i]..hi[i]`` of agents within distance < 1 of agent i."""
    n = x.size
    j = 0
    for i in range(n):
        while x[i] - x[j] >= 1.0:
            j += 1
        lo[i] = j
    j = 0
    for i in range(n):
        if j < i:
            j = i
        while j + 1 < n and x[j + 1] - x[i] < 1.0:
            j += 1
        hi[i] = j


@njit(cache=True, nogil=True)
def hk_velocity(y, lo, hi, out):
    n = y.size
    for i in range(n):
        s = 0.0
        yi = y[i]
        for j in range(lo[i], hi[i] + 1):
            s += y[j] - yi
        out[i] = s


@njit(cache=True, nogil=True)
def _rk4(x, lo, hi, dt, out, k1, k2, k3, k4, tmp):
    n = x.size
    hk_velocity(x, lo, hi, k1)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k1[i]
    hk_velocity(tmp, lo, hi, k2)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k2[i]
    hk_velocity(tmp, lo, hi, k3)
    for i in range(n):
        tmp[i] = x[i] + dt * k3[i]
    hk_velocity(tmp, lo, hi, k4)
    for i in range(n):
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def _restore_order(x, perm):
    # Stable insertion sort; only ever moves agents separated by rounding noise.
    n = x.size
    for i in range(1, n):
        if x[i] < x[i - 1]:
            v = x[i]
            p = perm[i]
            j = i - 1
            while j >= 0 and x[j] > v:
                x[j + 1] = x[j]
                perm[j + 1] = perm[j]
                j -= 1
            x[j + 1] = v
            perm[j + 1] = p


@njit(cache=True, nogil=True)
def _all_finite(x):
    for i in range(x.size):
        if not np.isfinite(x[i]):
            return False
    return True


@njit(cache=True, nogil=True)
def _same(a, b):
    for i in range(a.size):
        if a[i] != b[i]:
            return False
    return True


@njit(cache=True, nogil=True)
def integrate(x, perm, horizon, h, tau, pre):
    """Advance ``x`` (and its permutation ``perm``) in place.

    Integrates with RK4 using the topology frozen at each step start,
    stopping early at the first change of the edge set. On a switch the
    state just before it is written to ``pre`` and ``x`` holds the state
    just after it; the bracket between the two is at most ``tau`` wide.

    Returns ``(elapsed, status, edges_added, edges_removed)``.
    """
    n = x.size
    if n < 2 or horizon <= 0.0:
        return horizon, STATUS_DONE, 0, 0
    if not _all_finite(x):
        return 0.0, STATUS_NONFINITE, 0, 0

    lo = np.empty(n, np.int64)
    hi = np.empty(n, np.int64)
    lo2 = np.empty(n, np.int64)
    hi2 = np.empty(n, np.int64)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    trial = np.empty(n)
    tperm = np.empty(n, np.int64)
    post = np.empty(n)
    pperm = np.empty(n, np.int64)

    reach(x, lo, hi)
    hk_velocity(x, lo, hi, k1)
    still = True
    for i in range(n):
        if k1[i] != 0.0:
            still = False
            break
    if still:
        # Exact fixed point of the frozen-topology flow: every RK4 stage is zero.
        return horizon, STATUS_DONE, 0, 0

    steps = max(1, int(np.ceil(horizon / h - 1e-9)))
    dt = horizon / steps
    t = 0.0
    for step in range(steps):
        _rk4(x, lo, hi, dt, trial, k1, k2, k3, k4, tmp)
        if not _all_finite(trial):
            return t, STATUS_NONFINITE, 0, 0
        tperm[:] = perm
        _restore_order(trial, tperm)
        reach(trial, lo2, hi2)
        if _same(hi, hi2):
            x[:] = trial
            perm[:] = tperm
            t = horizon if step == steps - 1 else t + dt
            continue

        # Bisection on the sub-step length: [a, b] brackets the first switch.
        a = 0.0
        b = dt
        post[:] = trial
        pperm[:] = tperm
        while b - a > tau:
            mid = 0.5 * (a + b)
            _rk4(x, lo, hi, mid, trial, k1, k2, k3, k4, tmp)
            tperm[:] = perm
            _restore_order(trial, tperm)
            reach(trial, lo2, hi2)
            if _same(hi, hi2):
                a = mid
            else:
                b = mid
                post[:] = trial
                pperm[:] = tperm
        if a > 0.0:
            _rk4(x, lo, hi, a, trial, k1, k2, k3, k4, tmp)
            tperm[:] = perm
            _restore_order(trial, tperm)
            pre[:] = trial
        else:
            pre[:] = x
        reach(post, lo2, hi2)
        added = 0
        removed = 0
        for i in range(n):
            d = hi2[i] - hi[i]
            if d > 0:
                added += d
            else:
                removed -= d
        x[:] = post
        perm[:] = pperm
        return t + b, STATUS_SWITCH, added, removed
    return horizon, STATUS_DONE, 0, 0


@njit(cache=True, nogil=True)
def functionals(x):
    """Return ``(U0, V0, T0, W0, V, U)`` for sorted opinions ``x``."""
    n = x.size
    if n == 0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    sq = 0.0
    total = 0.0
    for i in range(n):
        sq += x[i] * x[i]
        total += x[i]
    t0 = sq / (2.0 * n)
    if n == 1:
        return 0.0, 0.0, t0, 0.0, 0.0, 0.0

    mean = total / n
    u0 = 0.0
    for i in range(n):
        d = x[i] - mean
        u0 += d * d
    u0 /= n

    all_pairs = 0.0
    for i in range(n):
        for j in range(n):
            d = x[i] - x[j]
            all_pairs += d * d
    v0 = all_pairs / (n * n)

    lo = np.empty(n, np.int64)
    hi = np.empty(n, np.int64)
    reach(x, lo, hi)
    near = 0.0
    linked = 0
    for i in range(n):
        linked += hi[i] - lo[i] + 1
        for j in range(lo[i], hi[i] + 1):
            d = x[i] - x[j]
            near += d * d
    v = near / (n * n)
    w0 = (near + (n * n - linked)) / (n * n)

    u = 0.0
    start = 0
    for i in range(1, n + 1):
        if i == n or x[i] - x[i - 1] >= 1.0:
            s = 0.0
            for k in range(start, i):
                s += x[k]
            m = s / (i - start)
            for k in range(start, i):
                d = x[k] - m
                u += d * d
            start = i
    u /= n
    return u0, v0, t0, w0, v, u
