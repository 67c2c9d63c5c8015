"""
Nesterov's constant-momentum accelerated gradient method and its change of
variables to the phase-space iterates (``x = q``, ``y = q + beta p``).

At ``Ts = 1`` the semi-implicit Euler iterates of the damped system are the
Nesterov iterates under this change of variables; :func:`equivalence_check`
measures how far apart the two recursions drift in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DampingSchedule, PhasePoint, coefficients
from .integrators import StepperConfig, simulate
from .objectives import Objective


@dataclass(frozen=True)
class NesterovState:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape:
            raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def nesterov_step(obj: Objective, beta: float, s: NesterovState) -> NesterovState:
    """``x' = y - grad f(y)/L``, ``y' = x' + beta (x' - x)``."""
    x_new = s.y - obj.gradient(s.y) / obj.lipschitz
    return NesterovState(x_new, x_new + beta * (x_new - s.x))


def to_nesterov(z: PhasePoint, beta: float) -> NesterovState:
    return NesterovState(z.q.copy(), z.q + beta * z.p)


def from_nesterov(s: NesterovState, beta: float) -> PhasePoint:
    if beta == 0:
        raise ValueError("beta = 0 collapses y onto x; the momentum cannot be recovered")
    return PhasePoint(s.x.copy(), (s.y - s.x) / beta)


def nesterov_iterates(obj: Objective, beta: float, s0: NesterovState, steps: int) -> np.ndarray:
    """Array of ``x_0 .. x_steps``."""
    xs = [s0.x]
    s = s0
    for _ in range(steps):
        s = nesterov_step(obj, beta, s)
        xs.append(s.x)
    return np.array(xs)


def gradient_descent_iterates(obj: Objective, x0, steps: int) -> np.ndarray:
    """Plain gradient descent with step ``1/L``; the beta = 0 limit of both schemes."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    xs = [x]
    for _ in range(steps):
        x = x - obj.gradient(x) / obj.lipschitz
        xs.append(x)
    return np.array(xs)


def equivalence_check(obj: Objective, kappa: float, z0: PhasePoint, steps: int) -> float:
    """Max over steps of ``|x_k - q_k|`` between Nesterov and the Ts = 1 scheme.

    The comparison covers the steps the discrete trajectory actually took
    (``simulate`` stops early once the state is below 1e-12).
    """
    sched = DampingSchedule.strongly_convex(kappa)
    _, beta = coefficients(sched)
    rec = simulate(obj, sched, z0, steps, StepperConfig(1.0))
    q = rec.q()
    x = nesterov_iterates(obj, beta, to_nesterov(z0, beta), rec.steps)
    return float(np.max(np.linalg.norm(x - q, axis=-1)))
