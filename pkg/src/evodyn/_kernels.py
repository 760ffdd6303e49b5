"""Compiled inner loops.

Every kernel takes its random inputs (standard normals, outcome indices,
jump times) as arrays so that all randomness stays with numpy Generators on
the Python side.
"""
import math

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# discrete game


@njit(cache=True)
def discrete_path(y0, lam, support, idx, stride, out):
    """Iterate the wealth recursion for outcome indices ``idx``.

    Returns 0 on success or ``-(i+1)`` when step ``i`` has a zero aggregate bet
    on an asset with positive payoff.
    """
    n_agents, n_assets = lam.shape
    y = y0.copy()
    ratio = np.empty(n_assets)
    out[0, :] = y
    row = 1
    count = 0
    for i in range(idx.shape[0]):
        k = idx[i]
        for n in range(n_assets):
            x = support[k, n]
            if x == 0.0:
                ratio[n] = 0.0
                continue
            s = 0.0
            for m in range(n_agents):
                s += lam[m, n] * y[m]
            if s <= 0.0:
                return -(i + 1)
            ratio[n] = x / s
        for m in range(n_agents):
            g = 0.0
            for n in range(n_assets):
                g += lam[m, n] * ratio[n]
            y[m] *= g
        count += 1
        if count == stride:
            out[row, :] = y
            row += 1
            count = 0
    return 0


# ---------------------------------------------------------------------------
# multi-agent SDE


@njit(cache=True)
def multi_em(y0, b, a, inv_mu, L, dt, xi, max_fix, stride, out, fixes):
    """Euler-Maruyama for the M-agent system with simplex renormalization.

    ``fixes[i]`` receives the l1 size of the renormalization at step ``i``.
    Returns ``-(i+1)`` if a correction exceeds ``max_fix``, else 0.
    """
    n_agents, n_assets = b.shape
    sq = math.sqrt(dt)
    y = y0.copy()
    bbar = np.empty(n_assets)
    dw = np.empty(n_assets)
    raw = np.empty(n_agents)
    out[0, :] = y
    row = 1
    for i in range(xi.shape[0]):
        for n in range(n_assets):
            s = 0.0
            for j in range(n_assets):
                s += L[n, j] * xi[i, j]
            dw[n] = sq * s
            s = 0.0
            for m in range(n_agents):
                s += y[m] * b[m, n]
            bbar[n] = s
        tot = 0.0
        for m in range(n_agents):
            inc = 0.0
            for n in range(n_assets):
                dev = b[m, n] - bbar[n]
                inc += inv_mu[n] * dev * ((a[n] - bbar[n]) * dt + dw[n])
            raw[m] = y[m] + y[m] * inc
            if raw[m] < 0.0:
                y[m] = 0.0
            else:
                y[m] = raw[m]
            tot += y[m]
        fix = 0.0
        for m in range(n_agents):
            y[m] = y[m] / tot
            fix += abs(y[m] - raw[m])
        fixes[i] = fix
        if fix > max_fix:
            return -(i + 1)
        if (i + 1) % stride == 0:
            out[row, :] = y
            row += 1
    return 0


# ---------------------------------------------------------------------------
# two-agent scalar SDE


@njit(cache=True)
def _em_step(y, k0, k1, v, h, dw, milstein):
    g = v * y * (1.0 - y)
    y_new = y + y * (1.0 - y) * (k0 - k1 * y) * h + g * dw
    if milstein:
        y_new += 0.5 * g * v * (1.0 - 2.0 * y) * (dw * dw - h)
    return y_new


@njit(cache=True)
def scalar_em(y0, k0, k1, v, dt, xi, eps, milstein, stride, out):
    """Scalar wealth-share SDE; returns the number of clamping events."""
    sq = math.sqrt(dt)
    y = y0
    clamps = 0
    out[0] = y
    row = 1
    for i in range(xi.shape[0]):
        y = _em_step(y, k0, k1, v, dt, sq * xi[i], milstein)
        if y < eps:
            y = eps
            clamps += 1
        elif y > 1.0 - eps:
            y = 1.0 - eps
            clamps += 1
        if (i + 1) % stride == 0:
            out[row] = y
            row += 1
    return clamps


@njit(cache=True)
def _f(z, th0, th1):
    return th0 + (th1 - th0) / (1.0 + math.exp(-z))


@njit(cache=True)
def logodds_em(z0, th0, th1, v, dt, xi, stride, out):
    sq = math.sqrt(dt)
    z = z0
    out[0] = z
    row = 1
    for i in range(xi.shape[0]):
        z = z + _f(z, th0, th1) * dt + v * sq * xi[i]
        if (i + 1) % stride == 0:
            out[row] = z
            row += 1
    return z


@njit(cache=True)
def logodds_occupation(z, th0, th1, v, dt, xi, skip, lo, hi, hist, band_lo, band_hi,
                       low, high, s1, s2):
    """Advance several log-odds processes on shared noise and accumulate occupation.

    ``z``, ``th0``, ``th1``, ``v`` have one entry per process. The first ``skip``
    steps are not counted. ``hist`` has ``nbins + 2`` columns; the first and the
    last collect underflow and overflow of ``[lo, hi)``. ``low``/``high`` count
    steps with ``y < band_lo`` and ``y > band_hi``; ``s1``/``s2`` accumulate the
    first two moments of ``y``. Returns the number of counted steps.
    """
    sq = math.sqrt(dt)
    nbins = hist.shape[1] - 2
    scale = nbins / (hi - lo)
    counted = 0
    for i in range(xi.shape[0]):
        noise = sq * xi[i]
        for s in range(z.shape[0]):
            zs = z[s]
            zs = zs + _f(zs, th0[s], th1[s]) * dt + v[s] * noise
            z[s] = zs
            if i < skip:
                continue
            if zs < lo:
                hist[s, 0] += 1
            elif zs >= hi:
                hist[s, nbins + 1] += 1
            else:
                hist[s, 1 + int((zs - lo) * scale)] += 1
            y = 1.0 / (1.0 + math.exp(-zs))
            if y < band_lo:
                low[s] += 1
            elif y > band_hi:
                high[s] += 1
            s1[s] += y
            s2[s] += y * y
        if i >= skip:
            counted += 1
    return counted


# ---------------------------------------------------------------------------
# regime switching


@njit(cache=True)
def switched_path(y0, q0, k0, k1, v, th0, th1, dt, n_steps, xi, jumps, logodds, splice,
                  eps, stride, out_y, out_q):
    """Two-regime scalar SDE between the jump times of the regime chain.

    With ``splice`` the step containing a jump is cut at the jump time so each
    sub-step uses one regime; otherwise the regime at the start of the step is
    used for the whole step. ``xi`` must hold at least ``n_steps + len(jumps)``
    normals. Returns ``(y_T, z_T, clamps)``.
    """
    q = q0
    j = 0
    n_jumps = jumps.shape[0]
    k = 0
    clamps = 0
    y = y0
    z = math.log(y0 / (1.0 - y0))
    out_y[0] = y0
    out_q[0] = q
    row = 1
    for i in range(n_steps):
        t = i * dt
        t_end = (i + 1) * dt
        while True:
            if splice and j < n_jumps and jumps[j] < t_end:
                h = jumps[j] - t
            else:
                h = t_end - t
            if not splice:
                while j < n_jumps and jumps[j] <= t:
                    q = 1 - q
                    j += 1
            if h > 0.0:
                dw = math.sqrt(h) * xi[k]
                k += 1
                if logodds:
                    z = z + _f(z, th0[q], th1[q]) * h + v[q] * dw
                else:
                    y = _em_step(y, k0[q], k1[q], v[q], h, dw, False)
                    if y < eps:
                        y = eps
                        clamps += 1
                    elif y > 1.0 - eps:
                        y = 1.0 - eps
                        clamps += 1
            if splice and j < n_jumps and jumps[j] < t_end:
                t = jumps[j]
                q = 1 - q
                j += 1
            else:
                break
        if logodds:
            y = 1.0 / (1.0 + math.exp(-z))
        if (i + 1) % stride == 0:
            out_y[row] = y
            out_q[row] = q
            row += 1
    if not logodds:
        z = math.log(y / (1.0 - y))
    return y, z, clamps


# ---------------------------------------------------------------------------
# Frank-Wolfe over the probability simplex


@njit(cache=True)
def pairwise_frank_wolfe(Q, lin, w0, tol, max_iter):
    """Minimize ``lin @ w + w @ Q @ w / 2`` over the simplex.

    Pairwise Frank-Wolfe with exact line search. Stops once the Frank-Wolfe
    duality gap is at most ``tol``. Returns ``(w, gap, iterations)``.
    """
    k = w0.shape[0]
    w = w0.copy()
    grad = lin + Q @ w
    gap = 0.0
    for it in range(max_iter):
        s = 0
        for i in range(1, k):
            if grad[i] < grad[s]:
                s = i
        gap = 0.0
        for i in range(k):
            gap += grad[i] * w[i]
        gap -= grad[s]
        if gap <= tol:
            return w, gap, it
        v = -1
        for i in range(k):
            if w[i] > 0.0 and (v < 0 or grad[i] > grad[v]):
                v = i
        slope = grad[s] - grad[v]
        curv = Q[s, s] - 2.0 * Q[s, v] + Q[v, v]
        cap = w[v]
        if curv > 0.0:
            gamma = -slope / curv
            if gamma > cap:
                gamma = cap
        else:
            gamma = cap
        w[s] += gamma
        if gamma == cap:
            w[v] = 0.0
        else:
            w[v] -= gamma
        for i in range(k):
            grad[i] += gamma * (Q[i, s] - Q[i, v])
    return w, gap, max_iter
