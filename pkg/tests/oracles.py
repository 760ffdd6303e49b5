"""Independent reference computations used by the test-suite.

Nothing here imports the package under test: each oracle rebuilds the
objects it needs from the raw parameters.
"""
import itertools

import numpy as np


# ---------------------------------------------------------------------------
# two assets, mu = (1/2, 1/2), scalar coordinates b = (x, -x), a = (a, -a)


def closed_form_two_asset(sigma2, a, b1, b2):
    """``(theta0, theta1, v2)`` from the scalar two-asset formulas."""
    d = b1 - b2
    lin = 4.0 * (a - b1) * d
    return lin + 4.0 * (1.0 - 2.0 * sigma2) * d * d, lin + 8.0 * sigma2 * d * d, 16.0 * sigma2 * d * d


def region_label(sigma2, a, b1, b2, tol=1e-9):
    th0, th1, v2 = closed_form_two_asset(sigma2, a, b1, b2)
    if abs(b1 - b2) < 1e-15:
        return "C"
    if th1 > tol:
        return "1D"
    if th0 < -tol:
        return "2D"
    return "S"


# ---------------------------------------------------------------------------
# theta by brute force over the hull


def theta_objectives(mu, a, sigma, b1, others):
    """Objective functions of the two hull problems, built from scratch."""
    mu = np.asarray(mu, float)
    Mm = np.diag(1.0 / mu)
    Sm = np.asarray(sigma, float) / np.outer(mu, mu)
    a = np.asarray(a, float)
    b1 = np.asarray(b1, float)
    P = np.asarray(others, float)

    def q(W, which):
        bt = W @ P  # (n, N)
        c = b1[None, :] - bt
        lin = (c @ Mm) @ (a - b1)
        H = 2.0 * Mm - Sm if which == 0 else Sm
        quad = np.einsum("in,nl,il->i", c, H, c)
        return lin + 0.5 * quad

    return q


def _simplex_grid(k, h):
    """All weight vectors on the k-simplex with coordinates on the grid ``h Z``."""
    n = int(round(1.0 / h))
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        t = np.arange(n + 1) / n
        return np.column_stack([t, 1.0 - t])
    if k == 3:
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = i + j <= n
        i, j = i[keep], j[keep]
        return np.column_stack([i / n, j / n, (n - i - j) / n])
    raise ValueError("grid oracle supports at most three opponents")


def grid_minimum(q, k, h=1e-3, zoom_levels=6, radius=3):
    """Grid search on the simplex followed by local zooming around the best point."""
    W = _simplex_grid(k, h)
    vals = q(W)
    best = W[np.argmin(vals)]
    val = float(vals.min())
    step = h
    for _ in range(zoom_levels):
        if k == 1:
            break
        step /= 10.0
        offs = np.arange(-radius * 10, radius * 10 + 1) * step
        free = np.array(list(itertools.product(offs, repeat=k - 1))) + best[: k - 1]
        last = 1.0 - free.sum(axis=1)
        cand = np.column_stack([free, last])
        cand = cand[np.all(cand >= -1e-15, axis=1)]
        cand = np.clip(cand, 0.0, None)
        v = q(cand)
        i = int(np.argmin(v))
        if v[i] < val:
            val, best = float(v[i]), cand[i]
    return val, best


def grid_thetas(mu, a, sigma, b, agent=0, **kw):
    b = np.asarray(b, float)
    others = np.delete(b, agent, axis=0)
    q = theta_objectives(mu, a, sigma, b[agent], others)
    k = others.shape[0]
    return grid_minimum(lambda W: q(W, 0), k, **kw)[0], grid_minimum(lambda W: q(W, 1), k, **kw)[0]


# ---------------------------------------------------------------------------
# random instances


def random_distribution(rng, N, K=None):
    """Random finite-support law on the N-simplex: ``(support, probs)``."""
    K = K or int(rng.integers(2, 2 * N + 3))
    support = rng.dirichlet(np.full(N, rng.uniform(0.2, 3.0)), size=K)
    probs = rng.dirichlet(np.ones(K))
    return support, probs


def exact_moments(support, probs):
    mean = probs @ support
    dev = support - mean
    return mean, (dev * probs[:, None]).T @ dev


def zero_sum(rng, N, scale=1.0, size=None):
    shape = (N,) if size is None else (size, N)
    x = rng.normal(scale=scale, size=shape)
    return x - x.mean(axis=-1, keepdims=True)


def random_market(rng, N):
    """``(mu, a, sigma)`` whose covariance comes from a law on the simplex with mean ``mu``."""
    support, probs = random_distribution(rng, N)
    mu, sigma = exact_moments(support, probs)
    mu = mu / mu.sum()
    sigma = 0.5 * (sigma + sigma.T)
    # remove rounding drift from the row sums
    sigma = sigma - sigma.mean(axis=1, keepdims=True) - sigma.mean(axis=0, keepdims=True) + sigma.mean()
    a = zero_sum(rng, N, scale=rng.uniform(0.0, 1.0))
    return mu, a, sigma


def random_instance(rng, max_agents=5, max_assets=5):
    N = int(rng.integers(2, max_assets + 1))
    M = int(rng.integers(2, max_agents + 1))
    mu, a, sigma = random_market(rng, N)
    b = zero_sum(rng, N, scale=rng.uniform(0.1, 2.0), size=M)
    return mu, a, sigma, b


def complete_sigma(mu):
    mu = np.asarray(mu, float)
    return np.diag(mu) - np.outer(mu, mu)
