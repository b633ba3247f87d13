"""Compiled inner loops for extrema detection and natural cubic splines.

Sifting calls these thousands of times per ensemble, so they run under
numba. Results are deterministic; the pure-Python call sites in ``emd``
handle validation and boundary extension.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def local_extrema(x):
    """Strict interior extrema; a flat plateau counts once at its midpoint."""
    n = x.shape[0]
    maxima = np.empty(n, np.int64)
    minima = np.empty(n, np.int64)
    n_max = 0
    n_min = 0
    i = 1
    while i < n and x[i] == x[0]:
        i += 1
    if i >= n:
        return maxima[:0], minima[:0]
    direction = 1 if x[i] > x[i - 1] else -1
    start = i
    while True:
        stop = start
        while stop + 1 < n and x[stop + 1] == x[start]:
            stop += 1
        if stop + 1 >= n:
            break
        nxt = 1 if x[stop + 1] > x[stop] else -1
        if direction > 0 and nxt < 0:
            maxima[n_max] = (start + stop) // 2
            n_max += 1
        elif direction < 0 and nxt > 0:
            minima[n_min] = (start + stop) // 2
            n_min += 1
        direction = nxt
        start = stop + 1
    return maxima[:n_max], minima[:n_min]


@njit(cache=True)
def natural_spline_grid(knots, values, n):
    """Natural cubic spline through (knots, values) evaluated at 0..n-1.

    Knots must be strictly increasing. Outside the knot range the end
    polynomial pieces are extended.
    """
    m = knots.shape[0]
    out = np.empty(n)
    if m == 2:
        slope = (values[1] - values[0]) / (knots[1] - knots[0])
        for s in range(n):
            out[s] = values[0] + slope * (s - knots[0])
        return out

    h = np.empty(m - 1)
    for k in range(m - 1):
        h[k] = knots[k + 1] - knots[k]

    # Tridiagonal system for the interior second derivatives (Thomas).
    k_in = m - 2
    sub = np.empty(k_in)
    diag = np.empty(k_in)
    sup = np.empty(k_in)
    rhs = np.empty(k_in)
    for k in range(k_in):
        sub[k] = h[k]
        diag[k] = 2.0 * (h[k] + h[k + 1])
        sup[k] = h[k + 1]
        rhs[k] = 6.0 * (
            (values[k + 2] - values[k + 1]) / h[k + 1] - (values[k + 1] - values[k]) / h[k]
        )
    for k in range(1, k_in):
        w = sub[k] / diag[k - 1]
        diag[k] -= w * sup[k - 1]
        rhs[k] -= w * rhs[k - 1]
    curv = np.zeros(m)
    curv[k_in] = rhs[k_in - 1] / diag[k_in - 1]
    for k in range(k_in - 2, -1, -1):
        curv[k + 1] = (rhs[k] - sup[k] * curv[k + 2]) / diag[k]

    # Evaluate segment by segment; samples left/right of the knots use the end pieces.
    s = 0
    for k in range(m - 1):
        hk = h[k]
        ca = curv[k] / (6.0 * hk)
        cb = curv[k + 1] / (6.0 * hk)
        la = values[k] / hk - curv[k] * hk / 6.0
        lb = values[k + 1] / hk - curv[k + 1] * hk / 6.0
        x0 = knots[k]
        x1 = knots[k + 1]
        while s < n and (k == m - 2 or float(s) <= x1):
            a = x1 - s
            b = s - x0
            out[s] = (ca * a * a + la) * a + (cb * b * b + lb) * b
            s += 1
    return out


@njit(cache=True)
def zero_crossings(x):
    """Sign changes; exact zeros inherit the sign of the preceding run."""
    n = x.shape[0]
    sign = 0
    count = 0
    for i in range(n):
        if x[i] > 0:
            s = 1
        elif x[i] < 0:
            s = -1
        else:
            continue
        if sign != 0 and s != sign:
            count += 1
        sign = s
    return count


BOUNDARY_CODES = {None: 0, "mirror": 1, "clamp": 2}


@njit(cache=True)
def extend_knots(idx, x, code):
    """Knot positions and values after boundary treatment (see ``emd._extend``)."""
    n = x.shape[0]
    m = idx.shape[0]
    knots = np.empty(m + 4)
    vals = np.empty(m + 4)
    k = 0
    if code == 1 and m > 0:
        for j in range(min(2, m) - 1, -1, -1):
            if idx[j] > 0:
                knots[k] = -float(idx[j])
                vals[k] = x[idx[j]]
                k += 1
    elif code == 2 and m > 0 and idx[0] > 0:
        knots[k] = 0.0
        vals[k] = x[idx[0]]
        k += 1
    for j in range(m):
        knots[k] = float(idx[j])
        vals[k] = x[idx[j]]
        k += 1
    if code == 1 and m > 0:
        for j in range(m - 1, max(m - 2, 0) - 1, -1):
            if idx[j] < n - 1:
                knots[k] = 2.0 * (n - 1) - idx[j]
                vals[k] = x[idx[j]]
                k += 1
    elif code == 2 and m > 0 and idx[m - 1] < n - 1:
        knots[k] = float(n - 1)
        vals[k] = x[idx[m - 1]]
        k += 1
    return knots[:k], vals[:k]


@njit(cache=True)
def envelope_mean(h, code):
    """Mean of the upper and lower spline envelopes; ``ok`` is False when
    there are fewer than two maxima or two minima."""
    imax, imin = local_extrema(h)
    n = h.shape[0]
    if imax.shape[0] < 2 or imin.shape[0] < 2:
        return np.zeros(n), False
    kx, vx = extend_knots(imax, h, code)
    kn, vn = extend_knots(imin, h, code)
    upper = natural_spline_grid(kx, vx, n)
    lower = natural_spline_grid(kn, vn, n)
    return 0.5 * (upper + lower), True


@njit(cache=True)
def _imf_ok(h):
    imax, imin = local_extrema(h)
    d = imax.shape[0] + imin.shape[0] - zero_crossings(h)
    return -1 <= d <= 1


@njit(cache=True)
def sift(x, sd_tol, max_iters, code):
    """Repeated envelope-mean removal until the SD ratio is at most
    ``sd_tol`` and the candidate satisfies the extrema/zero-crossing
    balance, or ``max_iters`` passes. Returns (h, iterations, sd)."""
    h = x.copy()
    sd = np.inf
    iterations = 0
    while iterations < max_iters:
        mean, ok = envelope_mean(h, code)
        if not ok:
            break
        new = h - mean
        iterations += 1
        denom = 0.0
        num = 0.0
        for i in range(h.shape[0]):
            denom += h[i] * h[i]
            diff = h[i] - new[i]
            num += diff * diff
        sd = num / denom if denom > 0 else 0.0
        h = new
        if sd <= sd_tol and _imf_ok(h):
            break
    return h, iterations, sd


@njit(cache=True)
def decompose(x, sd_tol, max_iters, code, limit, cap=16):
    """Peel off up to ``limit`` IMFs. Returns (imfs, residual, iterations, sds)."""
    n = x.shape[0]
    cap = max(1, min(limit, cap))
    imfs = np.empty((cap, n))
    iters = np.empty(cap, np.int64)
    sds = np.empty(cap)
    residual = x.copy()
    count = 0
    while count < limit:
        imax, imin = local_extrema(residual)
        if imax.shape[0] < 2 or imin.shape[0] < 2:
            break
        h, it, sd = sift(residual, sd_tol, max_iters, code)
        if count == cap:
            cap = min(limit, 2 * cap)
            grown = np.empty((cap, n))
            grown[:count] = imfs[:count]
            imfs = grown
            iters = np.concatenate((iters[:count], np.empty(cap - count, np.int64)))
            sds = np.concatenate((sds[:count], np.empty(cap - count)))
        imfs[count] = h
        iters[count] = it
        sds[count] = sd
        residual = residual - h
        count += 1
    return imfs[:count], residual, iters[:count], sds[:count]
