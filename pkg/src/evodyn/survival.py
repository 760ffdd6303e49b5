"""Survival, dominance and recurrence of a fixed-mix strategy.

For agent 1 facing opponents with strategies ``b_2, ..., b_M`` the long-run
outcome is governed by two numbers, the infima over the opponents' convex hull

    theta0 = inf (a - b1)' M (b1 - bt) + (b1 - bt)' (2M - S) (b1 - bt) / 2
    theta1 = inf (a - b1)' M (b1 - bt) + (b1 - bt)' S (b1 - bt) / 2

which bound the drift of agent 1's log-odds near shares 0 and 1. Both are
convex quadratic programs over the weights of the hull and are solved with
pairwise Frank-Wolfe.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn

from . import _kernels
from .errors import PreconditionError
from .model import MarketParams, StrategyProfile, derive_matrices, validate_params

GAP_TOL = 1e-10
SIGN_TOL = 1e-9
MAX_ITER = 100_000


class Outcome(enum.Enum):
    DOMINATES = "dominates"
    SURVIVES = "survives"
    VANISHES = "vanishes"
    INDETERMINATE = "indeterminate"


class Behavior(enum.Enum):
    TRANSIENT = "transient"
    NULL_RECURRENT = "null-recurrent"
    POSITIVE_RECURRENT = "positive-recurrent"
    DETERMINISTIC_LIMIT = "deterministic-limit"
    CONSTANT = "constant"


@dataclass(frozen=True)
class ThetaResult:
    theta0: float
    theta1: float
    minimizer0: np.ndarray
    minimizer1: np.ndarray
    gap0: float
    gap1: float


@dataclass(frozen=True)
class SurvivalReport:
    """Coefficients and the qualitative long-run outcome for one agent.

    ``behavior`` is only set for two agents. ``limit`` holds the deterministic
    limit of agent 1's share when ``behavior`` is ``DETERMINISTIC_LIMIT``.
    ``positive_limit`` records the pointwise sufficient condition under which
    agent 1's share converges to a positive limit.
    """

    theta0: float
    theta1: float
    outcome: Outcome
    v2: float | None = None
    behavior: Behavior | None = None
    limit: float | None = None
    minimizer0: np.ndarray | None = None
    minimizer1: np.ndarray | None = None
    positive_limit: bool = False
    agent_index: int = 0

    @property
    def beta_params(self):
        """``(2 theta0 / v2, -2 theta1 / v2)`` for a positive recurrent share, else None."""
        if self.behavior is Behavior.POSITIVE_RECURRENT:
            return 2.0 * self.theta0 / self.v2, -2.0 * self.theta1 / self.v2
        return None

    @property
    def survives(self) -> bool:
        return self.outcome in (Outcome.DOMINATES, Outcome.SURVIVES)

    @property
    def label(self) -> str:
        """Region-map code: 1D, 2D, S (both survive), C (constant share) or I (indeterminate)."""
        if self.behavior is Behavior.CONSTANT:
            return "C"
        return {Outcome.DOMINATES: "1D", Outcome.VANISHES: "2D", Outcome.SURVIVES: "S"}.get(
            self.outcome, "I")


# ---------------------------------------------------------------------------
# coefficients


def _hull_minimum(g, H, b1, P):
    """Minimize ``g'c + c'Hc/2`` with ``c = b1 - P'w`` over the simplex in ``w``."""
    Q = P @ H @ P.T
    Q = 0.5 * (Q + Q.T)
    lin = -P @ (g + H @ b1)
    k = P.shape[0]
    vertex_vals = lin + 0.5 * np.diag(Q)
    w0 = np.zeros(k)
    w0[int(np.argmin(vertex_vals))] = 1.0
    if k == 1:
        w, gap = w0, 0.0
    else:
        w, gap, _ = _kernels.pairwise_frank_wolfe(Q, lin, w0, GAP_TOL, MAX_ITER)
    c = b1 - P.T @ w
    return float(g @ c + 0.5 * c @ H @ c), w, float(gap)


def theta_coefficients(params: MarketParams, profile: StrategyProfile,
                       agent_index: int = 0) -> ThetaResult:
    d = derive_matrices(params)
    b = profile.b
    b1 = b[agent_index]
    P = np.delete(b, agent_index, axis=0)
    g = d.M_mat @ (params.a - b1)
    th0, w0, gap0 = _hull_minimum(g, 2.0 * d.M_mat - d.S_mat, b1, P)
    th1, w1, gap1 = _hull_minimum(g, d.S_mat, b1, P)
    return ThetaResult(th0, th1, w0, w1, gap0, gap1)


def two_agent_thetas(params: MarketParams, b1, b2):
    """``(theta0, theta1, v2)`` for two agents, by direct evaluation."""
    d = derive_matrices(params)
    b1 = np.asarray(b1, dtype=float)
    diff = b1 - np.asarray(b2, dtype=float)
    lin = float((params.a - b1) @ d.M_mat @ diff)
    m_form = float(diff @ d.M_mat @ diff)
    v2 = float(diff @ d.S_mat @ diff)
    if -1e-12 < v2 < 0.0:
        v2 = 0.0
    return lin + m_form - 0.5 * v2, lin + 0.5 * v2, v2


# ---------------------------------------------------------------------------
# classification


def _pointwise_condition(params, profile, agent_index):
    d = derive_matrices(params)
    b1 = profile.b[agent_index]
    vals = [(params.a - b1) @ d.M_mat @ (b1 - bm)
            for m, bm in enumerate(profile.b) if m != agent_index]
    return bool(min(vals) >= -SIGN_TOL)


def classify_coefficients(theta0: float, theta1: float, v2: float, *,
                          tol: float = SIGN_TOL, **extra) -> SurvivalReport:
    """Two-agent outcome from ``(theta0, theta1, v2)``.

    Signs are decided with tolerance ``tol``; the raw values are kept in the
    report so callers can re-threshold.
    """
    th0, th1 = theta0, theta1
    common = dict(theta0=th0, theta1=th1, v2=v2, **extra)
    pos0, neg0, zero0 = th0 > tol, th0 < -tol, abs(th0) <= tol
    pos1, neg1, zero1 = th1 > tol, th1 < -tol, abs(th1) <= tol

    if v2 > tol:
        if pos1:
            return SurvivalReport(outcome=Outcome.DOMINATES, behavior=Behavior.TRANSIENT, **common)
        if neg0:
            return SurvivalReport(outcome=Outcome.VANISHES, behavior=Behavior.TRANSIENT, **common)
        behavior = Behavior.POSITIVE_RECURRENT if (pos0 and neg1) else Behavior.NULL_RECURRENT
        return SurvivalReport(outcome=Outcome.SURVIVES, behavior=behavior, **common)

    # v2 == 0: the share solves an ODE
    if zero0 and zero1:
        return SurvivalReport(outcome=Outcome.SURVIVES, behavior=Behavior.CONSTANT, **common)
    if pos0 and not neg1:
        return SurvivalReport(outcome=Outcome.DOMINATES, behavior=Behavior.DETERMINISTIC_LIMIT,
                              limit=1.0, **common)
    if pos0 and neg1:
        return SurvivalReport(outcome=Outcome.SURVIVES, behavior=Behavior.DETERMINISTIC_LIMIT,
                              limit=th0 / (th0 - th1), **common)
    if neg1:
        return SurvivalReport(outcome=Outcome.VANISHES, behavior=Behavior.DETERMINISTIC_LIMIT,
                              limit=0.0, **common)
    # theta0 < 0 <= theta1 contradicts theta0 >= theta1; only reachable through rounding
    return SurvivalReport(outcome=Outcome.INDETERMINATE, **common)


def classify_two_agent(params: MarketParams, b1, b2, *, agent_index: int = 0,
                       tol: float = SIGN_TOL) -> SurvivalReport:
    th0, th1, v2 = two_agent_thetas(params, b1, b2)
    positive_limit = _pointwise_condition(params, StrategyProfile([b1, b2]), 0)
    return classify_coefficients(th0, th1, v2, tol=tol, minimizer0=np.ones(1),
                                 minimizer1=np.ones(1), positive_limit=positive_limit,
                                 agent_index=agent_index)


def classify_many(params: MarketParams, profile: StrategyProfile,
                  agent_index: int = 0, tol: float = SIGN_TOL) -> SurvivalReport:
    """Outcome for ``agent_index``.

    With two agents the full two-agent taxonomy applies. With more agents only
    sufficient conditions are available, so the result is ``INDETERMINATE``
    when none of them holds.
    """
    validate_params(params, profile).raise_if_invalid()
    if profile.n_agents == 2:
        other = 1 - agent_index
        return classify_two_agent(params, profile.b[agent_index], profile.b[other],
                                  agent_index=agent_index, tol=tol)
    res = theta_coefficients(params, profile, agent_index)
    positive_limit = _pointwise_condition(params, profile, agent_index)
    if res.theta1 > tol:
        outcome = Outcome.DOMINATES
    elif res.theta0 > tol or res.theta1 >= -tol or positive_limit:
        outcome = Outcome.SURVIVES
    else:
        outcome = Outcome.INDETERMINATE
    return SurvivalReport(res.theta0, res.theta1, outcome, minimizer0=res.minimizer0,
                          minimizer1=res.minimizer1, positive_limit=positive_limit,
                          agent_index=agent_index)


# ---------------------------------------------------------------------------
# invariant law of the recurrent two-agent share


def _check_recurrent(report):
    if report.v2 is None or report.v2 <= 0:
        raise PreconditionError("invariant density needs two agents with v2 > 0")
    if report.behavior not in (Behavior.NULL_RECURRENT, Behavior.POSITIVE_RECURRENT):
        raise PreconditionError(f"share is {report.behavior.value if report.behavior else 'not classified'}, "
                                "not recurrent")


def invariant_mass(report: SurvivalReport) -> float:
    """Total mass of the unnormalized invariant density; ``inf`` when null recurrent."""
    _check_recurrent(report)
    if report.behavior is Behavior.NULL_RECURRENT:
        return math.inf
    alpha, beta = report.beta_params
    return float(beta_fn(alpha, beta))


def invariant_density(report: SurvivalReport, y, normalized: bool = False):
    """``y^(2 theta0/v2 - 1) (1 - y)^(-2 theta1/v2 - 1)`` on ``(0, 1)``."""
    _check_recurrent(report)
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0.0) | (y >= 1.0)):
        raise ValueError("invariant density is defined on the open interval (0, 1)")
    e0 = 2.0 * report.theta0 / report.v2 - 1.0
    e1 = -2.0 * report.theta1 / report.v2 - 1.0
    rho = y**e0 * (1.0 - y) ** e1
    if normalized:
        mass = invariant_mass(report)
        if math.isinf(mass):
            raise PreconditionError("null recurrent share: invariant measure has infinite mass")
        rho = rho / mass
    return rho


# ---------------------------------------------------------------------------
# stochastic replicator form


def replicator_map(report: SurvivalReport):
    """Payoff matrix and noise variances of the equivalent stochastic replicator equation."""
    if report.v2 is None:
        raise PreconditionError("replicator form exists only for two agents")
    A = np.array([[report.theta1, 0.0], [0.0, -report.theta0]])
    s2 = 0.5 * report.v2
    return A, s2, s2


def replicator_drift(A, s1sq: float, s2sq: float, y):
    """Drift of population 1's share under the stochastic replicator dynamics."""
    y = np.asarray(y, dtype=float)
    const = -A[1, 1] + A[0, 1] + s2sq
    slope = A[0, 0] - A[1, 0] - s1sq + A[1, 1] - A[0, 1] - s2sq
    return y * (1.0 - y) * (const + slope * y)
