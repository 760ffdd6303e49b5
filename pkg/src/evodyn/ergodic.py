"""Long-run occupation statistics of the two-agent share.

Occupation is accumulated in log-odds coordinates, where uniform bins resolve
the neighbourhoods of 0 and 1 that matter for Beta laws with a parameter
below one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .diffusion import TwoAgentSpec
from .paths import logistic, n_steps, path_rng

CHUNK = 1 << 20


@dataclass
class Occupation:
    """Pooled occupation of one two-agent specification over many paths."""

    spec: TwoAgentSpec
    edges: np.ndarray  # log-odds bin edges, len nbins + 1
    counts: np.ndarray  # len nbins + 2 (underflow, bins..., overflow)
    steps: int
    low_fraction: float
    high_fraction: float
    mean: float
    second_moment: float
    terminal_z: np.ndarray

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    def cdf_at_edges(self) -> np.ndarray:
        """Empirical CDF of the share at ``logistic(edges)``."""
        c = np.cumsum(self.fractions)
        return c[:-1]

    def sup_cdf_distance(self, alpha: float, beta: float) -> float:
        """Kolmogorov distance to Beta(alpha, beta), evaluated at every bin edge."""
        y_edges = logistic(self.edges)
        ref = stats.beta.cdf(y_edges, alpha, beta)
        return float(np.max(np.abs(self.cdf_at_edges() - ref)))

    def density(self):
        """Bin centres in share coordinates and the empirical share density."""
        y = logistic(self.edges)
        frac = self.fractions[1:-1]
        width = np.diff(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(width > 0, frac / width, 0.0)
        return 0.5 * (y[1:] + y[:-1]), dens


def occupation_study(specs, y0: float, horizon: float, dt: float, n_paths: int, seed: int, *,
                     burn_in: float = 0.1, z_range=(-40.0, 40.0), nbins: int = 8000,
                     band=(0.05, 0.95)) -> list:
    """Simulate log-odds paths for every spec on shared noise and pool their occupation.

    Path ``p`` uses the stream ``(seed, p)`` for all specs, so the specs see the
    same Brownian realization. The first ``burn_in`` fraction of each path is
    discarded.
    """
    specs = list(specs)
    S = len(specs)
    th0 = np.array([s.theta0 for s in specs])
    th1 = np.array([s.theta1 for s in specs])
    v = np.array([s.v for s in specs])
    lo, hi = z_range
    hist = np.zeros((S, nbins + 2), dtype=np.int64)
    low = np.zeros(S, dtype=np.int64)
    high = np.zeros(S, dtype=np.int64)
    s1 = np.zeros(S)
    s2 = np.zeros(S)
    n = n_steps(horizon, dt)
    skip_total = int(round(burn_in * n))
    counted = 0
    z0 = float(np.log(y0 / (1.0 - y0)))
    terminal = np.empty((S, n_paths))
    for p in range(n_paths):
        rng = path_rng(seed, p)
        z = np.full(S, z0)
        done = 0
        while done < n:
            m = min(CHUNK, n - done)
            xi = rng.standard_normal(m)
            skip = max(0, min(m, skip_total - done))
            counted += _kernels.logodds_occupation(z, th0, th1, v, dt, xi, skip, lo, hi, hist,
                                                   band[0], band[1], low, high, s1, s2)
            done += m
        terminal[:, p] = z
    edges = np.linspace(lo, hi, nbins + 1)
    return [Occupation(specs[s], edges, hist[s], counted, low[s] / counted, high[s] / counted,
                       s1[s] / counted, s2[s] / counted, terminal[s]) for s in range(S)]
