"""Two-agent model whose market parameters follow a two-state Markov chain.

Regime ``i`` has its own ``(mu, a, sigma)``; the agents' strategies do not
change with the regime. Long-run behaviour is decided by the coefficients
averaged over the stationary law of the chain,

    pi_1 = g21 / (g12 + g21),   pi_2 = g12 / (g12 + g21).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import _kernels
from .diffusion import CLAMP_EPS, TwoAgentSpec
from .errors import PreconditionError, ValidationError
from .model import StrategyProfile, validate_params
from .paths import WealthPath, n_steps, path_rng
from .survival import SIGN_TOL, two_agent_thetas

NOISE_STREAM = 0
CHAIN_STREAM = 1


class SwitchingOutcome(enum.Enum):
    DOMINATES = "dominates"
    BOTH_SURVIVE_POSITIVE_RECURRENT = "both-survive-positive-recurrent"
    VANISHES = "vanishes"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class SwitchingSpec:
    g12: float
    g21: float
    regimes: tuple
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        if not (self.g12 > 0 and self.g21 > 0):
            raise ValidationError([f"transition rates must be positive, got {self.g12}, {self.g21}"])
        if len(self.regimes) != 2:
            raise ValidationError(["exactly two regimes are supported"])
        b1 = np.array(self.b1, dtype=float)
        b2 = np.array(self.b2, dtype=float)
        if b1.ndim != 1 or b2.shape != b1.shape:
            raise ValidationError(["b1 and b2 must be single strategy rows shared by both regimes"])
        for i, params in enumerate(self.regimes):
            res = validate_params(params, StrategyProfile([b1, b2]))
            if not res.ok:
                raise ValidationError([f"regime {i + 1}: {v}" for v in res.violations])
        b1.setflags(write=False)
        b2.setflags(write=False)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        object.__setattr__(self, "regimes", tuple(self.regimes))

    @property
    def generator(self) -> np.ndarray:
        return np.array([[-self.g12, self.g12], [self.g21, -self.g21]])

    def stationary(self) -> np.ndarray:
        s = self.g12 + self.g21
        return np.array([self.g21 / s, self.g12 / s])

    def regime_specs(self):
        return [TwoAgentSpec(*two_agent_thetas(p, self.b1, self.b2)) for p in self.regimes]


@dataclass(frozen=True)
class SwitchingReport:
    pi: np.ndarray
    theta_bar0: float
    theta_bar1: float
    per_regime: tuple  # ((theta0, theta1, v2), (theta0, theta1, v2))
    classification: SwitchingOutcome | None
    note: str = ""


def stationary_nullspace(G) -> np.ndarray:
    """Invariant law from the left null space of the generator."""
    v = null_space(np.asarray(G, dtype=float).T)[:, 0]
    return v / v.sum()


def switching_report(spec: SwitchingSpec, strict: bool = False,
                     tol: float = SIGN_TOL) -> SwitchingReport:
    """Averaged coefficients and the long-run outcome.

    The classification assumes non-degenerate noise in both regimes. When it
    fails the report keeps the averages and sets ``classification`` to None,
    or raises :class:`PreconditionError` with ``strict=True``.
    """
    pi = spec.stationary()
    per = tuple((s.theta0, s.theta1, s.v2) for s in spec.regime_specs())
    bar0 = float(pi[0] * per[0][0] + pi[1] * per[1][0])
    bar1 = float(pi[0] * per[0][1] + pi[1] * per[1][1])
    if min(per[0][2], per[1][2]) <= tol:
        msg = "v(i) > 0 required in both regimes for classification"
        if strict:
            raise PreconditionError(msg)
        return SwitchingReport(pi, bar0, bar1, per, None, msg)
    if bar1 > tol:
        cls = SwitchingOutcome.DOMINATES
    elif bar0 > tol and bar1 < -tol:
        cls = SwitchingOutcome.BOTH_SURVIVE_POSITIVE_RECURRENT
    elif bar0 < -tol:
        cls = SwitchingOutcome.VANISHES
    else:
        cls = SwitchingOutcome.INDETERMINATE
    return SwitchingReport(pi, bar0, bar1, per, cls)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class RegimePath:
    """Jump times of the chain and the state entered at each jump (0-based)."""

    q0: int
    jump_times: np.ndarray
    horizon: float

    def states_after(self) -> np.ndarray:
        return (self.q0 + np.arange(1, len(self.jump_times) + 1)) % 2

    def state_at(self, t) -> np.ndarray:
        k = np.searchsorted(self.jump_times, np.asarray(t), side="right")
        return (self.q0 + k) % 2

    def occupation(self) -> np.ndarray:
        """Fraction of ``[0, horizon]`` spent in each state."""
        edges = np.concatenate([[0.0], self.jump_times, [self.horizon]])
        lengths = np.diff(edges)
        states = (self.q0 + np.arange(len(lengths))) % 2
        occ = np.array([lengths[states == 0].sum(), lengths[states == 1].sum()])
        return occ / self.horizon


def simulate_chain(g12: float, g21: float, horizon: float, rng: np.random.Generator,
                   q0: int = 0) -> RegimePath:
    """Two-state chain via exponential holding times (rate g12 in state 0, g21 in state 1)."""
    rates = (g12, g21)
    times = []
    t = 0.0
    q = q0
    block = max(16, int(2 * horizon * max(rates)) + 16)
    while True:
        e = rng.standard_exponential(block)
        for x in e:
            t += x / rates[q]
            if t >= horizon:
                return RegimePath(q0, np.array(times), horizon)
            times.append(t)
            q = 1 - q


def simulate_switched(spec: SwitchingSpec, y0: float, horizon: float, dt: float, seed, *,
                      stride: int = 1, path_index: int = 0, q0: int = 0,
                      scheme: str = "euler", splice: bool = True):
    """Agent 1's share under regime switching.

    The chain and the diffusion noise come from separate sub-streams of the
    path's stream, so the regime path does not depend on ``dt``. With
    ``splice`` every step containing a jump is cut at the jump time.
    ``scheme`` is ``"euler"`` (share coordinates, clamped) or ``"logodds"``.
    Returns ``(WealthPath, RegimePath)``; ``info["z_T"]`` is the terminal
    log-odds.
    """
    if not 0.0 < y0 < 1.0:
        raise ValueError("y0 must lie in (0, 1)")
    if scheme not in ("euler", "logodds"):
        raise ValueError(f"unknown scheme {scheme!r}")
    chain = simulate_chain(spec.g12, spec.g21, horizon, path_rng(seed, path_index, CHAIN_STREAM), q0)
    specs = spec.regime_specs()
    k = np.array([s.linear_coeffs for s in specs])
    v = np.array([s.v for s in specs])
    th0 = np.array([s.theta0 for s in specs])
    th1 = np.array([s.theta1 for s in specs])
    n = n_steps(horizon, dt)
    xi = path_rng(seed, path_index, NOISE_STREAM).standard_normal(n + len(chain.jump_times))
    out_y = np.empty(n // stride + 1)
    out_q = np.empty(n // stride + 1, dtype=np.int64)
    y_T, z_T, clamps = _kernels.switched_path(float(y0), int(q0), k[:, 0].copy(), k[:, 1].copy(),
                                              v, th0, th1, dt, n, xi, chain.jump_times,
                                              scheme == "logodds", splice, CLAMP_EPS, stride,
                                              out_y, out_q)
    times = np.arange(out_y.shape[0]) * (stride * dt)
    info = {"clamps": int(clamps), "z_T": float(z_T), "regimes": out_q}
    path = WealthPath(times, np.column_stack([out_y, 1.0 - out_y]), seed, "switched", info)
    return path, chain
