"""Path containers and per-path random streams."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-9


def path_rng(seed: int, path_index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, path_index, stream)``.

    ``stream`` separates sub-streams of one path, e.g. diffusion noise and the
    regime chain, so that one can be reproduced without the other.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


def n_steps(horizon: float, step: float) -> int:
    """``floor(horizon / step)`` robust to representation error."""
    return int(np.floor(horizon / step + 1e-9))


@dataclass
class WealthPath:
    """Relative wealth of the agents sampled at ``times``.

    ``states`` has shape ``(len(times), M)``; each row lies on the simplex.
    ``info`` carries scheme-specific diagnostics (clamp counts, renormalization
    totals and so on).
    """

    times: np.ndarray
    states: np.ndarray
    seed: int | None
    scheme: str
    info: dict = field(default_factory=dict)

    @property
    def y1(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def check(self, tol: float = SIMPLEX_TOL) -> None:
        if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if np.any(self.states < 0):
            raise ValueError("negative wealth share")
        err = np.max(np.abs(self.states.sum(axis=1) - 1.0))
        if err > tol:
            raise ValueError(f"states leave the simplex by {err:.3g}")


@dataclass
class LogOddsPath:
    """Path of ``Z = log(Y^1 / (1 - Y^1))`` for the two-agent model."""

    times: np.ndarray
    z: np.ndarray
    seed: int | None

    @property
    def y1(self) -> np.ndarray:
        return logistic(self.z)

    def to_wealth(self) -> WealthPath:
        y = self.y1
        return WealthPath(self.times, np.column_stack([y, 1.0 - y]), self.seed, "logodds")


def logistic(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-np.logaddexp(0.0, -z))


def coarsen_noise(xi: np.ndarray) -> np.ndarray:
    """Standard normals for step ``2 dt`` from those for step ``dt`` (same Brownian path)."""
    n = xi.shape[0] // 2
    return (xi[0 : 2 * n : 2] + xi[1 : 2 * n : 2]) / np.sqrt(2.0)
