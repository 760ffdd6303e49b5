"""Diffusion limit of the betting game.

Three integrators are provided:

* :func:`simulate_multi` -- the M-agent system on the simplex, driven by an
  N-dimensional Brownian motion with covariance ``sigma``;
* :func:`simulate_two_agent` -- the scalar SDE for agent 1's share when M = 2;
* :func:`simulate_log_odds` -- the same two-agent model in log-odds
  coordinates, where there is no boundary to handle.

For two agents the scalar SDE is determined by ``theta0``, ``theta1`` and
``v2`` alone::

    dY = Y(1-Y) {(theta0 + v2/2 - (theta0 - theta1 + v2) Y) dt + v dW}
    dZ = (theta0 + (theta1 - theta0) / (1 + exp(-Z))) dt + v dW
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import PreconditionError, StepSizeError
from .model import DerivedMatrices, MarketParams, StrategyProfile, derive_matrices, validate_params
from .paths import LogOddsPath, WealthPath, logistic, n_steps, path_rng

MAX_RENORM = 1e-3
CLAMP_EPS = 1e-12


def noise_factor(sigma) -> np.ndarray:
    """``L`` with ``L @ L.T == sigma``; negative eigenvalues are truncated to zero."""
    sigma = np.asarray(sigma, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass(frozen=True)
class DiffusionSpec:
    params: MarketParams
    profile: StrategyProfile
    derived: DerivedMatrices
    noise_factor: np.ndarray

    @classmethod
    def build(cls, params: MarketParams, profile: StrategyProfile) -> "DiffusionSpec":
        validate_params(params, profile).raise_if_invalid()
        L = noise_factor(params.sigma)
        L.setflags(write=False)
        return cls(params, profile, derive_matrices(params), L)


@dataclass(frozen=True)
class TwoAgentSpec:
    theta0: float
    theta1: float
    v2: float

    def __post_init__(self):
        if self.theta0 < self.theta1 - 1e-12:
            raise PreconditionError(f"theta0={self.theta0} < theta1={self.theta1}")
        if self.v2 < -1e-12:
            raise PreconditionError(f"negative v2={self.v2}")

    @property
    def v(self) -> float:
        return math.sqrt(max(self.v2, 0.0))

    @property
    def linear_coeffs(self):
        """``(k0, k1)`` with drift ``y(1-y)(k0 - k1 y)``."""
        return self.theta0 + 0.5 * self.v2, self.theta0 - self.theta1 + self.v2

    @classmethod
    def from_params(cls, params: MarketParams, b1, b2) -> "TwoAgentSpec":
        from .survival import two_agent_thetas

        th0, th1, v2 = two_agent_thetas(params, b1, b2)
        return cls(th0, th1, v2)


# ---------------------------------------------------------------------------
# coefficients


def drift_multi(y, spec: DiffusionSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    b = spec.profile.b
    bbar = y @ b
    dev = b - bbar
    return y * (dev @ ((spec.params.a - bbar) / spec.params.mu))


def diffusion_multi(y, spec: DiffusionSpec) -> np.ndarray:
    """``g`` with ``dY = ... + g dW``; shape ``(M, N)``."""
    y = np.asarray(y, dtype=float)
    b = spec.profile.b
    bbar = y @ b
    return y[:, None] * (b - bbar) / spec.params.mu


def covariance_rate_multi(y, spec: DiffusionSpec) -> np.ndarray:
    g = diffusion_multi(y, spec)
    return g @ spec.params.sigma @ g.T


def two_agent_drift(spec: TwoAgentSpec, y):
    y = np.asarray(y, dtype=float)
    k0, k1 = spec.linear_coeffs
    return y * (1.0 - y) * (k0 - k1 * y)


def log_odds_drift(spec: TwoAgentSpec, z):
    return spec.theta0 + (spec.theta1 - spec.theta0) * logistic(z)


# ---------------------------------------------------------------------------
# noise helpers


def _normals(noise, seed, path_index, shape):
    if noise is not None:
        noise = np.asarray(noise, dtype=float)
        if noise.shape[0] < shape[0]:
            raise ValueError(f"need {shape[0]} noise rows, got {noise.shape[0]}")
        return np.ascontiguousarray(noise[: shape[0]])
    return path_rng(seed, path_index).standard_normal(shape)


def matched_scalar_noise(spec: DiffusionSpec, xi) -> np.ndarray:
    """Scalar standard normals driving agent 1's share in an M = 2 system.

    ``xi`` are the N-dimensional normals fed to :func:`simulate_multi`; the
    result drives :func:`simulate_two_agent` with the same Brownian path.
    """
    b = spec.profile.b
    d = b[0] - b[1]
    weights = (d / spec.params.mu) @ spec.noise_factor
    v = math.sqrt(float(weights @ weights))
    if v == 0.0:
        return np.zeros(np.asarray(xi).shape[0])
    return np.asarray(xi) @ weights / v


# ---------------------------------------------------------------------------
# integrators


def simulate_multi(spec: DiffusionSpec, y0, horizon: float, dt: float, seed=None, *,
                   stride: int = 1, noise=None, path_index: int = 0) -> WealthPath:
    """Euler-Maruyama for the M-agent system, renormalized onto the simplex each step.

    Raises :class:`StepSizeError` when a single renormalization exceeds 1e-3 in
    l1 norm.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    y0 = np.asarray(y0, dtype=float)
    n = n_steps(horizon, dt)
    N = spec.params.n_assets
    xi = _normals(noise, seed, path_index, (n, N))
    out = np.empty((n // stride + 1, y0.shape[0]))
    fixes = np.zeros(n)
    status = _kernels.multi_em(y0, spec.profile.b, spec.params.a, 1.0 / spec.params.mu,
                               np.ascontiguousarray(spec.noise_factor), dt, xi, MAX_RENORM,
                               stride, out, fixes)
    if status < 0:
        step = -status - 1
        raise StepSizeError(
            f"renormalization {fixes[step]:.3g} exceeds {MAX_RENORM} at step {step}; reduce dt")
    times = np.arange(out.shape[0]) * (stride * dt)
    info = {"renorm_total": float(fixes.sum()), "renorm_max": float(fixes.max(initial=0.0))}
    return WealthPath(times, out, seed, "euler", info)


def simulate_two_agent(spec: TwoAgentSpec, y0: float, horizon: float, dt: float, seed=None, *,
                       stride: int = 1, noise=None, path_index: int = 0,
                       milstein: bool = False) -> WealthPath:
    """Integrate agent 1's share; clamps to ``(1e-12, 1 - 1e-12)`` and counts clamps.

    ``milstein=True`` adds the Milstein correction, which makes the scheme
    strong order one like the log-odds integrator.
    """
    if not 0.0 < y0 < 1.0:
        raise ValueError("y0 must lie in (0, 1)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = n_steps(horizon, dt)
    xi = _normals(noise, seed, path_index, (n,))
    k0, k1 = spec.linear_coeffs
    out = np.empty(n // stride + 1)
    clamps = _kernels.scalar_em(float(y0), k0, k1, spec.v, dt, xi, CLAMP_EPS, milstein,
                                stride, out)
    times = np.arange(out.shape[0]) * (stride * dt)
    scheme = "milstein" if milstein else "euler"
    return WealthPath(times, np.column_stack([out, 1.0 - out]), seed, scheme,
                      {"clamps": int(clamps)})


def simulate_log_odds(spec: TwoAgentSpec, z0: float, horizon: float, dt: float, seed=None, *,
                      stride: int = 1, noise=None, path_index: int = 0) -> LogOddsPath:
    """Euler scheme for ``dZ = f(Z) dt + v dW`` (exact in law when ``theta0 == theta1``)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = n_steps(horizon, dt)
    xi = _normals(noise, seed, path_index, (n,))
    out = np.empty(n // stride + 1)
    _kernels.logodds_em(float(z0), spec.theta0, spec.theta1, spec.v, dt, xi, stride, out)
    times = np.arange(out.shape[0]) * (stride * dt)
    return LogOddsPath(times, out, seed)
