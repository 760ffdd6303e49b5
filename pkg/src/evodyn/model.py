"""Limit-model parameters, strategy profiles and the derived quadratic forms.

The limit model is described by asset mean payoffs ``mu``, a zero-sum drift
perturbation ``a`` of the means, and the payoff covariance ``sigma``. Agents are
identified with zero-sum perturbation vectors ``b_m`` of the Kelly strategy
``mu``. Everything downstream works with two matrices built from these::

    M_mat = diag(1/mu_1, ..., 1/mu_N)
    S_mat = (sigma_nl / (mu_n mu_l))_{n,l}

Validation is kept separate from construction so that a configuration can
report every violated constraint at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

SUM_TOL = 1e-12
PSD_TOL = 1e-10
LEMMA_TOL = 1e-9


def _frozen(x, ndim):
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MarketParams:
    """Limit-model parameters ``(mu, a, sigma)``."""

    mu: np.ndarray
    a: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, 1))
        object.__setattr__(self, "a", _frozen(self.a, 1))
        object.__setattr__(self, "sigma", _frozen(self.sigma, 2))

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class StrategyProfile:
    """Row ``m`` of ``b`` is agent ``m``'s perturbation of the Kelly strategy."""

    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", _frozen(self.b, 2))

    @property
    def n_agents(self) -> int:
        return self.b.shape[0]

    @property
    def n_assets(self) -> int:
        return self.b.shape[1]

    def __getitem__(self, m):
        return self.b[m]


@dataclass(frozen=True)
class DerivedMatrices:
    M_mat: np.ndarray
    S_mat: np.ndarray

    def lemma_margin(self) -> float:
        """Smallest eigenvalue of ``M_mat - S_mat`` on the zero-sum subspace."""
        basis = zero_sum_basis(self.M_mat.shape[0])
        form = basis.T @ (self.M_mat - self.S_mat) @ basis
        return float(np.linalg.eigvalsh(0.5 * (form + form.T))[0])


@dataclass(frozen=True)
class Violation:
    constraint: str
    magnitude: float

    def __str__(self):
        return f"{self.constraint} (magnitude {self.magnitude:.3g})"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            raise ValidationError(self.violations)

    def names(self):
        return [v.constraint for v in self.violations]


def zero_sum_basis(n: int) -> np.ndarray:
    """Orthonormal ``n x (n-1)`` basis of ``{c : sum(c) = 0}``."""
    # Centering projector has eigenvalue 1 with multiplicity n-1, 0 on the ones vector.
    _, vecs = np.linalg.eigh(np.eye(n) - 1.0 / n)
    return vecs[:, 1:]


def derive_matrices(params: MarketParams) -> DerivedMatrices:
    mu = params.mu
    M_mat = np.diag(1.0 / mu)
    S_mat = params.sigma / np.outer(mu, mu)
    M_mat.setflags(write=False)
    S_mat.setflags(write=False)
    return DerivedMatrices(M_mat, S_mat)


def _check_dimensions(params, profile):
    n = params.mu.shape[0]
    problems = []
    if params.a.shape != (n,):
        problems.append(f"a has shape {params.a.shape}, expected ({n},)")
    if params.sigma.shape != (n, n):
        problems.append(f"sigma has shape {params.sigma.shape}, expected ({n}, {n})")
    if profile is not None and profile.b.shape[1] != n:
        problems.append(f"b has {profile.b.shape[1]} columns, expected {n}")
    if problems:
        raise DimensionError("; ".join(problems))


def validate_params(params: MarketParams, profile: StrategyProfile | None = None) -> ValidationResult:
    """Check every structural constraint of the limit model.

    Raises :class:`DimensionError` when shapes disagree; all other problems are
    collected into the returned :class:`ValidationResult`.
    """
    _check_dimensions(params, profile)
    out = []
    mu, a, sigma = params.mu, params.a, params.sigma
    if mu.shape[0] < 2:
        out.append(Violation("N >= 2", float(mu.shape[0])))
    if np.any(mu <= 0):
        out.append(Violation("mu strictly positive", float(mu.min())))
    if abs(mu.sum() - 1.0) > SUM_TOL:
        out.append(Violation("mu sums to 1", float(mu.sum() - 1.0)))
    if abs(a.sum()) > SUM_TOL:
        out.append(Violation("a not zero-sum", float(a.sum())))
    asym = float(np.max(np.abs(sigma - sigma.T)))
    if asym > SUM_TOL:
        out.append(Violation("sigma symmetric", asym))
    min_eig = float(np.linalg.eigvalsh(0.5 * (sigma + sigma.T))[0])
    if min_eig < -PSD_TOL:
        out.append(Violation("sigma not non-negative definite", min_eig))
    if np.all(mu > 0) and mu.shape[0] >= 2:
        margin = derive_matrices(params).lemma_margin()
        if margin < -LEMMA_TOL:
            out.append(Violation("M - S non-negative on zero-sum vectors", margin))
    if profile is not None:
        if profile.n_agents < 2:
            out.append(Violation("M >= 2", float(profile.n_agents)))
        row_err = np.abs(profile.b.sum(axis=1))
        if row_err.size and row_err.max() > SUM_TOL:
            out.append(Violation("b rows zero-sum", float(row_err.max())))
    return ValidationResult(tuple(out))


def complete_market_sigma(mu) -> np.ndarray:
    """Covariance of a payoff that is a standard basis vector with probabilities ``mu``."""
    mu = np.asarray(mu, dtype=float)
    return np.diag(mu) - np.outer(mu, mu)


def two_asset_params(sigma2: float, a: float = 0.0) -> MarketParams:
    """Two equally likely assets, ``Var X^1 = sigma2``, drift ``(a, -a)``."""
    sig = sigma2 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return MarketParams(mu=[0.5, 0.5], a=[a, -a], sigma=sig)


def two_asset_profile(*bs: float) -> StrategyProfile:
    """Profile whose agent ``m`` bets ``(b_m, -b_m)`` on the two assets."""
    return StrategyProfile(np.array([[b, -b] for b in bs], dtype=float))
