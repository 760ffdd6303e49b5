"""The pre-limit betting game in discrete time.

At every step each asset's payoff is split between the agents in proportion to
their bets::

    Y_{i+1}^m = sum_n lambda_mn Y_i^m / (sum_k lambda_kn Y_i^k) X_{i+1}^n

Payoffs are normalized to the simplex, so relative and absolute wealth
coincide. A :class:`DiscreteModelSeries` fixes one member of the family of
games indexed by the step ``delta``, in which strategies are
``mu + b sqrt(delta)`` and payoff moments are ``mu + a sqrt(delta)`` and
``sigma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .diffusion import DiffusionSpec
from .errors import (DynamicsUndefinedError, InfeasibleMomentsError, ParameterRangeError,
                     UnsupportedFamilyError, ValidationError)
from .model import (LEMMA_TOL, SUM_TOL, MarketParams, StrategyProfile, Violation,
                    validate_params, zero_sum_basis)
from .paths import WealthPath, n_steps, path_rng

MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class PayoffDistribution:
    """Finite-support law of the payoff vector; every support point lies on the simplex."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.atleast_2d(np.array(self.support, dtype=float))
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (support.shape[0],):
            raise ValueError(f"{support.shape[0]} support points but {probs.shape} probabilities")
        if np.any(support < 0) or np.max(np.abs(support.sum(axis=1) - 1.0)) > SUM_TOL:
            raise ValueError("support points must lie on the simplex")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValueError("probabilities must be non-negative and sum to 1")
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    def mean(self) -> np.ndarray:
        return self.probs @ self.support

    def cov(self) -> np.ndarray:
        dev = self.support - self.mean()
        return (dev * self.probs[:, None]).T @ dev


# ---------------------------------------------------------------------------
# payoff families


class PayoffFamily:
    """Maps the step ``delta`` to a finite-support payoff distribution."""

    name = "family"
    finite_support = True

    def __init__(self, params: MarketParams, mean_correction: Optional[Callable] = None):
        self.params = params
        self.mean_correction = mean_correction

    def target_mean(self, delta: float) -> np.ndarray:
        m = self.params.mu + self.params.a * math.sqrt(delta)
        if self.mean_correction is not None:
            m = m + np.asarray(self.mean_correction(delta), dtype=float)
        return m

    def __call__(self, delta: float) -> PayoffDistribution:
        raise NotImplementedError

    def residuals(self, delta: float):
        """``(c(delta), e(delta))``: exact mean and covariance minus their limit targets."""
        dist = self(delta)
        c = dist.mean() - self.params.mu - self.params.a * math.sqrt(delta)
        e = dist.cov() - self.params.sigma
        return c, e


class CompleteMarketFamily(PayoffFamily):
    """Payoff is basis vector ``e_n`` with probability ``mu_n + a_n sqrt(delta)``.

    The covariance is whatever this law implies; it tends to
    ``diag(mu) - mu mu'`` as ``delta -> 0``.
    """

    name = "complete"

    def __call__(self, delta):
        p = self.target_mean(delta)
        if np.any(p <= 0) or np.any(p >= 1):
            raise ParameterRangeError(f"outcome probabilities {p} leave (0, 1) at delta={delta}")
        return PayoffDistribution(np.eye(p.shape[0]), p)


class MomentMatchedFamily(PayoffFamily):
    """Finite-support law with mean ``mu + a sqrt(delta)`` and covariance exactly ``sigma``.

    If ``sigma`` is a multiple ``w`` of the complete-market covariance of the
    target mean, the law is the mixture of the complete market (weight ``w``)
    and a point mass at the mean; for two equally likely assets and
    ``sigma2 = 1/8`` this is the three-point law on ``(1,0), (1/2,1/2), (0,1)``.
    Otherwise each eigen-direction of ``sigma`` contributes a two-point law on
    the simplex boundary and the remaining mass sits at the mean.
    """

    name = "moment-matched"

    def __init__(self, params, mean_correction=None, cov_correction=None):
        super().__init__(params, mean_correction)
        self.cov_correction = cov_correction

    def target_cov(self, delta):
        s = np.array(self.params.sigma, dtype=float)
        if self.cov_correction is not None:
            s = s + np.asarray(self.cov_correction(delta), dtype=float)
        return s

    def __call__(self, delta):
        m = self.target_mean(delta)
        s = self.target_cov(delta)
        n = m.shape[0]
        if np.any(m <= 0):
            raise ParameterRangeError(f"target mean {m} has non-positive entries at delta={delta}")
        scale = max(1.0, float(np.abs(s).max()))
        if np.max(np.abs(s.sum(axis=1))) > 1e-12 * scale:
            raise InfeasibleMomentsError(
                "covariance rows must sum to zero for payoffs on the simplex "
                f"(max row sum {np.max(np.abs(s.sum(axis=1))):.3g})")
        basis = zero_sum_basis(n)
        lemma = basis.T @ (np.diag(1.0 / m) - s / np.outer(m, m)) @ basis
        margin = float(np.linalg.eigvalsh(0.5 * (lemma + lemma.T))[0])
        if margin < -LEMMA_TOL:
            msg = f"M - S is not non-negative on zero-sum vectors (min eigenvalue {margin:.3g})"
            if n == 2:
                msg += f"; two assets need sigma2 <= mu1 mu2 = {m[0] * m[1]:.6g}, got {s[0, 0]:.6g}"
            raise InfeasibleMomentsError(msg)
        if np.max(np.abs(s)) <= 1e-15:
            return PayoffDistribution(m[None, :], [1.0])

        complete = np.diag(m) - np.outer(m, m)
        w = float(np.trace(s) / np.trace(complete))
        if np.max(np.abs(s - w * complete)) <= 1e-12 * scale:
            if w > 1.0 + 1e-12:
                raise InfeasibleMomentsError(
                    f"variance exceeds the complete-market bound diag(m) - m m' by factor {w:.6g}"
                    + (f"; for two assets sigma2 <= m1 m2 = {m[0] * m[1]:.6g}" if n == 2 else ""))
            w = min(w, 1.0)
            support = np.vstack([np.eye(n), m])
            probs = np.append(w * m, 1.0 - w)
            return PayoffDistribution(*_drop_null(support, probs))
        return PayoffDistribution(*_drop_null(*_eigen_construction(m, s)))


def _drop_null(support, probs):
    keep = probs > 0
    return support[keep], probs[keep]


def _eigen_construction(m, s):
    vals, vecs = np.linalg.eigh(0.5 * (s + s.T))
    points, probs = [], []
    budget = 0.0
    for lam, u in zip(vals, vecs.T):
        if lam <= 1e-15:
            continue
        # largest steps t with m + t u and m - t u still non-negative
        up = np.min(m[u < -1e-15] / -u[u < -1e-15])
        down = np.min(m[u > 1e-15] / u[u > 1e-15])
        budget += lam / (up * down)
        points += [m + up * u, m - down * u]
        probs += [lam / (up * (up + down)), lam / (down * (up + down))]
    if budget > 1.0 + 1e-12:
        raise InfeasibleMomentsError(
            f"eigen-direction construction needs total probability {budget:.6g} > 1")
    points.append(m)
    probs.append(max(0.0, 1.0 - sum(probs)))
    pts = np.clip(np.array(points), 0.0, None)
    pts /= pts.sum(axis=1, keepdims=True)
    return pts, np.array(probs) / sum(probs)


def make_complete_market_family(params: MarketParams, mean_correction=None) -> CompleteMarketFamily:
    return CompleteMarketFamily(params, mean_correction)


def make_moment_matched_family(params: MarketParams, mean_correction=None,
                               cov_correction=None) -> MomentMatchedFamily:
    return MomentMatchedFamily(params, mean_correction, cov_correction)


# ---------------------------------------------------------------------------
# a member of the series


@dataclass(frozen=True)
class DiscreteModelSeries:
    params: MarketParams
    profile: StrategyProfile
    delta: float
    family: PayoffFamily
    strategy_correction: Optional[Callable] = field(default=None, compare=False)

    def lambdas(self) -> np.ndarray:
        lam = self.params.mu + self.profile.b * math.sqrt(self.delta)
        if self.strategy_correction is not None:
            lam = lam + np.asarray(self.strategy_correction(self.delta), dtype=float)
        return lam

    def distribution(self) -> PayoffDistribution:
        return self.family(self.delta)

    def violations(self):
        """Constraint violations at this ``delta`` (empty when the game is well posed)."""
        out = list(validate_params(self.params, self.profile).violations)
        if self.delta <= 0:
            out.append(Violation("delta > 0", self.delta))
            return out
        lam = self.lambdas()
        if lam.min() < 0 or lam.max() > 1:
            out.append(Violation("strategies in [0, 1]", float(min(lam.min(), 1 - lam.max()))))
        row = float(np.max(np.abs(lam.sum(axis=1) - 1.0)))
        if row > SUM_TOL:
            out.append(Violation("strategies sum to 1", row))
        if not np.any(np.all(lam > 0, axis=1)):
            out.append(Violation("some agent bets on every asset", float(lam.min())))
        try:
            dist = self.distribution()
        except (ParameterRangeError, InfeasibleMomentsError) as exc:
            out.append(Violation(f"payoff family: {exc}", float("nan")))
            return out
        expected = self.family.target_mean(self.delta)
        err = float(np.max(np.abs(dist.mean() - expected)))
        if err > MOMENT_TOL:
            out.append(Violation("payoff mean matches mu + a sqrt(delta) + c(delta)", err))
        return out

    def check(self):
        v = self.violations()
        if v:
            raise ValidationError(v)
        return self


# ---------------------------------------------------------------------------
# dynamics


def step_discrete(state, payoff, lambdas) -> np.ndarray:
    """One step of the wealth recursion."""
    state = np.asarray(state, dtype=float)
    payoff = np.asarray(payoff, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    agg = state @ lam
    paid = payoff > 0
    if np.any(agg[paid] <= 0):
        bad = np.flatnonzero(paid & (agg <= 0))
        raise DynamicsUndefinedError(f"zero aggregate bet on paying asset(s) {bad.tolist()}")
    ratio = np.zeros_like(payoff)
    ratio[paid] = payoff[paid] / agg[paid]
    return state * (lam @ ratio)


def simulate_discrete(series: DiscreteModelSeries, y0, horizon: float, seed, *,
                      stride: int = 1, path_index: int = 0) -> WealthPath:
    """Play ``floor(horizon / delta)`` rounds with i.i.d. payoffs; times are ``i delta``."""
    y0 = np.asarray(y0, dtype=float)
    if np.any(y0 <= 0) or abs(y0.sum() - 1.0) > 1e-9:
        raise ValueError("initial wealth must be strictly positive and sum to 1")
    series.check()
    dist = series.distribution()
    n = n_steps(horizon, series.delta)
    rng = path_rng(seed, path_index)
    idx = rng.choice(dist.probs.shape[0], size=n, p=dist.probs)
    out = np.empty((n // stride + 1, y0.shape[0]))
    status = _kernels.discrete_path(y0, series.lambdas(), np.ascontiguousarray(dist.support),
                                    idx, stride, out)
    if status < 0:
        raise DynamicsUndefinedError("zero aggregate bet on a paying asset", step=-status - 1)
    times = np.arange(out.shape[0]) * (stride * series.delta)
    return WealthPath(times, out, seed, "discrete", {"delta": series.delta, "family": series.family.name})


# ---------------------------------------------------------------------------
# predictable characteristics


@dataclass
class Characteristics:
    """Accumulated one-step conditional moments along a discrete path and their limits."""

    times: np.ndarray
    B_delta: np.ndarray
    B_limit: np.ndarray
    C_delta: np.ndarray
    C_limit: np.ndarray

    def drift_residual(self) -> float:
        return float(np.max(np.linalg.norm(self.B_delta - self.B_limit, axis=1)))

    def covariance_residual(self, sup: bool = True) -> float:
        diff = np.linalg.norm(self.C_delta - self.C_limit, axis=(1, 2))
        return float(diff.max() if sup else diff[-1])


def conditional_moments(series: DiscreteModelSeries, states):
    """Exact one-step conditional mean and covariance of the increments at ``states``."""
    dist = series.distribution()
    lam = series.lambdas()
    states = np.atleast_2d(np.asarray(states, dtype=float))
    agg = states @ lam  # (n, N)
    x = dist.support  # (K, N)
    paid = x > 0
    if np.any((agg[:, None, :] <= 0) & paid[None, :, :]):
        raise DynamicsUndefinedError("zero aggregate bet on a paying asset")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(paid[None], x[None] / agg[:, None, :], 0.0)  # (n, K, N)
    growth = np.einsum("mn,ikn->ikm", lam, ratio)  # (n, K, M)
    inc = states[:, None, :] * (growth - 1.0)
    p = dist.probs
    mean = np.einsum("k,ikm->im", p, inc)
    dev = inc - mean[:, None, :]
    cov = np.einsum("k,ikm,ikl->iml", p, dev, dev)
    return mean, cov


def empirical_characteristics(series: DiscreteModelSeries, path: WealthPath) -> Characteristics:
    """First and modified second characteristics of a discrete path, and their diffusion limits.

    Conditional moments are summed exactly over the payoff support. The limit
    characteristics integrate the SDE coefficients along the same
    piecewise-constant path.
    """
    if not getattr(series.family, "finite_support", False):
        raise UnsupportedFamilyError("characteristics need a finite-support payoff family")
    if path.scheme != "discrete" or not np.allclose(np.diff(path.times), series.delta):
        raise ValueError("need a discrete path recorded at every step of the series")
    pre = path.states[:-1]
    mean, cov = conditional_moments(series, pre)
    spec = DiffusionSpec.build(series.params, series.profile)
    delta = series.delta
    f = _drift_rows(pre, spec)
    c = _cov_rows(pre, spec)
    M = pre.shape[1]
    zero_b = np.zeros((1, M))
    zero_c = np.zeros((1, M, M))
    B_delta = np.concatenate([zero_b, np.cumsum(mean, axis=0)])
    B_limit = np.concatenate([zero_b, np.cumsum(delta * f, axis=0)])
    C_delta = np.concatenate([zero_c, np.cumsum(cov, axis=0)])
    C_limit = np.concatenate([zero_c, np.cumsum(delta * c, axis=0)])
    return Characteristics(path.times, B_delta, B_limit, C_delta, C_limit)


def _drift_rows(states, spec):
    b = spec.profile.b
    bbar = states @ b  # (n, N)
    dev = b[None, :, :] - bbar[:, None, :]  # (n, M, N)
    w = (spec.params.a[None, :] - bbar) / spec.params.mu  # (n, N)
    return states * np.einsum("imn,in->im", dev, w)


def _cov_rows(states, spec):
    b = spec.profile.b
    bbar = states @ b
    g = states[:, :, None] * (b[None] - bbar[:, None, :]) / spec.params.mu  # (n, M, N)
    return np.einsum("imn,nl,ikl->imk", g, spec.params.sigma, g)
