"""
Continuous-time model: a mass-spring-damper system whose damping averages
the curvature of the objective along the segment ``[q, q + beta p]``.

    q' = p
    p' = -(1/L) grad f(q) + f_np(q, p)
    f_np(q, p) = -2 d p - (1/L) (grad f(q + beta p) - grad f(q))

All functions accept batched phase points (``q`` and ``p`` of shape
``(..., n)``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .objectives import Objective


@dataclass(frozen=True)
class PhasePoint:
    """Position ``q`` (the iterate x) and momentum ``p`` (its velocity)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape:
            raise ValueError(f"q and p shapes differ: {q.shape} vs {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def zeros(cls, dim: int) -> "PhasePoint":
        return cls(np.zeros(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.q.shape[-1]

    def norm(self) -> float:
        """``|q| + |p|`` (Euclidean norms), the size used for stopping tests."""
        return float(np.linalg.norm(self.q) + np.linalg.norm(self.p))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p], axis=-1)


class Mode(enum.Enum):
    STRONGLY_CONVEX = "strongly-convex"
    NON_STRONGLY_CONVEX = "non-strongly-convex"


@dataclass(frozen=True)
class DampingSchedule:
    """Damping coefficients ``(d, beta)``.

    Strongly convex mode uses the constants
    ``d = 1/((sqrt(kappa)+1) gamma)``, ``beta = gamma (sqrt(kappa)-1)/(sqrt(kappa)+1)``;
    the non-strongly-convex mode uses ``d(t) = 3/(2(t+2))``,
    ``beta(t) = (t-1)/(t+2)``.  ``gamma`` rescales time.
    """

    mode: Mode = Mode.STRONGLY_CONVEX
    kappa: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.mode is Mode.STRONGLY_CONVEX and not (self.kappa >= 1 and math.isfinite(self.kappa)):
            raise ValueError(f"strongly convex schedule needs finite kappa >= 1, got {self.kappa}")

    @classmethod
    def strongly_convex(cls, kappa: float, gamma: float = 1.0) -> "DampingSchedule":
        return cls(Mode.STRONGLY_CONVEX, float(kappa), float(gamma))

    @classmethod
    def non_strongly_convex(cls, gamma: float = 1.0) -> "DampingSchedule":
        return cls(Mode.NON_STRONGLY_CONVEX, math.inf, float(gamma))

    @property
    def time_varying(self) -> bool:
        return self.mode is Mode.NON_STRONGLY_CONVEX


def coefficients(sched: DampingSchedule, t: float = 0.0) -> tuple[float, float]:
    """Return ``(d, beta)`` at time ``t``."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if sched.mode is Mode.STRONGLY_CONVEX:
        s = math.sqrt(sched.kappa)
        return 1.0 / ((s + 1.0) * sched.gamma), sched.gamma * (s - 1.0) / (s + 1.0)
    return 1.5 / (t + 2.0), (t - 1.0) / (t + 2.0)


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    dissipation_rate: float


def _grad_scale(obj: Objective, sched: DampingSchedule) -> float:
    return 1.0 / (obj.lipschitz * sched.gamma ** 2)


def non_potential_force(obj: Objective, sched: DampingSchedule, z: PhasePoint,
                        t: float = 0.0, *, coeffs: tuple[float, float] | None = None) -> np.ndarray:
    """Damping plus the gradient-difference term; ``coeffs`` overrides ``(d, beta)``."""
    d, beta = coefficients(sched, t) if coeffs is None else coeffs
    c = _grad_scale(obj, sched)
    return -2.0 * d * z.p - c * (obj.gradient(z.q + beta * z.p) - obj.gradient(z.q))


def vector_field(obj: Objective, sched: DampingSchedule, z: PhasePoint, t: float = 0.0,
                 *, coeffs: tuple[float, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``(dq/dt, dp/dt)`` of the first-order system."""
    d, beta = coefficients(sched, t) if coeffs is None else coeffs
    c = _grad_scale(obj, sched)
    dp = -2.0 * d * z.p - c * obj.gradient(z.q + beta * z.p)
    return z.p.copy(), dp


def energy(obj: Objective, sched: DampingSchedule, z: PhasePoint, t: float = 0.0,
           *, coeffs: tuple[float, float] | None = None) -> EnergyReport:
    """Kinetic, potential and total energy plus ``dH/dt = f_np . p``.

    For batched points the fields are arrays over the leading axes.
    """
    kinetic = 0.5 * np.sum(z.p * z.p, axis=-1)
    potential = _grad_scale(obj, sched) * obj.value(z.q)
    rate = np.sum(non_potential_force(obj, sched, z, t, coeffs=coeffs) * z.p, axis=-1)
    if np.ndim(kinetic) == 0:
        kinetic, potential, rate = float(kinetic), float(potential), float(rate)
    return EnergyReport(kinetic, potential, kinetic + potential, rate)


def dissipation_bounds(sched: DampingSchedule, p, t: float = 0.0) -> tuple[float, float]:
    """Lower and upper bounds on ``dH/dt`` for momentum ``p``.

    Strongly convex: ``[-|p|^2, -(2d + beta/kappa)|p|^2]``.  Time-varying:
    ``[-|p|^2, -2d(t)|p|^2]`` once beta(t) >= 0 (t >= 1), and the reversed
    pair ``[-2d(t)|p|^2, -|p|^2]`` before that.
    """
    d, beta = coefficients(sched, t)
    b = beta / sched.gamma ** 2
    p2 = float(np.sum(np.asarray(p) ** 2))
    if sched.mode is Mode.STRONGLY_CONVEX:
        return -(2 * d + b) * p2, -(2 * d + b / sched.kappa) * p2
    if beta >= 0:
        return -(2 * d + b) * p2, -2 * d * p2
    return -2 * d * p2, -(2 * d + b) * p2
