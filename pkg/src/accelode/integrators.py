"""
Discrete and reference integrators.

The semi-implicit Euler step

    p' = p + Ts * (-(1/L) grad f(q) + f_np(q, p))
    q' = q + Ts * p'

factors into a contraction step (momentum update by ``f_np`` alone) followed
by a symplectic Euler step on the conservative part.  Both halves are
invertible for ``Ts`` in (0, 1); :func:`inverse_step` undoes them.

Steppers broadcast over batched phase points, which the contour code uses to
map every vertex in one call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DampingSchedule,
    EnergyReport,
    PhasePoint,
    coefficients,
    energy,
    non_potential_force,
    vector_field,
)
from .objectives import Objective

CONVERGENCE_NORM = 1e-12


class NonConvergence(RuntimeError):
    """Fixed-point inversion of the contraction step did not converge."""


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_STEPS = "max-steps"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class StepperConfig:
    step_size: float
    divergence_threshold: float = 1e6
    fixed_point_tol: float = 1e-12
    fixed_point_max_iter: int = 200

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if not self.divergence_threshold > 0 or not self.fixed_point_tol > 0:
            raise ValueError("thresholds must be positive")
        if self.fixed_point_max_iter < 1:
            raise ValueError("fixed_point_max_iter must be >= 1")


@dataclass
class TrajectoryRecord:
    points: list[PhasePoint] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    energies: list[EnergyReport] = field(default_factory=list)
    status: Status = Status.MAX_STEPS
    grad_evals: int = 0
    # filled in by Lyapunov monitors (see analysis.check_discrete_decay)
    lyapunov: list[float] | None = None

    def __len__(self) -> int:
        return len(self.points)

    def append(self, z: PhasePoint, t: float, e: EnergyReport) -> None:
        self.points.append(z)
        self.times.append(t)
        self.energies.append(e)

    @property
    def steps(self) -> int:
        """Number of steps taken (0 if the record holds only the start)."""
        return len(self.points) - 1

    def q(self) -> np.ndarray:
        return np.array([z.q for z in self.points])

    def p(self) -> np.ndarray:
        return np.array([z.p for z in self.points])

    def totals(self) -> np.ndarray:
        return np.array([e.total for e in self.energies])


def _coeffs(sched: DampingSchedule, t: float, coeffs):
    return coefficients(sched, t) if coeffs is None else coeffs


def semi_implicit_step(obj: Objective, sched: DampingSchedule, z: PhasePoint, t: float,
                       cfg: StepperConfig, *, coeffs=None) -> PhasePoint:
    """One step of the semi-implicit Euler scheme, coefficients sampled at ``t``."""
    ts = cfg.step_size
    c = _coeffs(sched, t, coeffs)
    scale = 1.0 / (obj.lipschitz * sched.gamma ** 2)
    force = -scale * obj.gradient(z.q) + non_potential_force(obj, sched, z, t, coeffs=c)
    p_new = z.p + ts * force
    return PhasePoint(z.q + ts * p_new, p_new)


def split_step(obj: Objective, sched: DampingSchedule, z: PhasePoint, t: float,
               cfg: StepperConfig, *, coeffs=None) -> tuple[PhasePoint, PhasePoint]:
    """Contraction step then symplectic Euler step.

    Returns ``(intermediate, next)``; ``next`` agrees with
    :func:`semi_implicit_step` up to floating-point reassociation.
    """
    ts = cfg.step_size
    c = _coeffs(sched, t, coeffs)
    mid = PhasePoint(z.q, z.p + ts * non_potential_force(obj, sched, z, t, coeffs=c))
    return mid, symplectic_euler_step(obj, sched, mid, cfg)


def symplectic_euler_step(obj: Objective, sched: DampingSchedule, z: PhasePoint,
                          cfg: StepperConfig) -> PhasePoint:
    """Conservative half: kick with ``-(1/L) grad f(q)`` then drift."""
    ts = cfg.step_size
    scale = 1.0 / (obj.lipschitz * sched.gamma ** 2)
    p_new = z.p - ts * scale * obj.gradient(z.q)
    return PhasePoint(z.q + ts * p_new, p_new)


def solve_contraction(obj: Objective, sched: DampingSchedule, q, p_bar, t: float,
                      cfg: StepperConfig, *, coeffs=None) -> tuple[np.ndarray, int]:
    """Find ``p`` with ``p + Ts * f_np(q, p) = p_bar`` by fixed-point iteration.

    Starts from ``p = 0``.  The iteration map has Lipschitz constant
    ``Ts * (2d + |beta|)``, which equals ``Ts`` for the strongly convex
    schedule.  Returns the solution and the number of iterations used.
    """
    d, beta = _coeffs(sched, t, coeffs)
    ts = cfg.step_size
    scale = 1.0 / (obj.lipschitz * sched.gamma ** 2)
    q = np.asarray(q, dtype=float)
    p_bar = np.asarray(p_bar, dtype=float)
    g_q = obj.gradient(q)
    p = np.zeros_like(p_bar)
    for it in range(1, cfg.fixed_point_max_iter + 1):
        p_next = p_bar + ts * (2.0 * d * p + scale * (obj.gradient(q + beta * p) - g_q))
        delta = np.max(np.abs(p_next - p))
        p = p_next
        if delta <= cfg.fixed_point_tol * max(1.0, float(np.max(np.abs(p)))):
            return p, it
    raise NonConvergence(
        f"fixed-point iteration did not converge in {cfg.fixed_point_max_iter} iterations "
        f"(step size {ts}, last update {delta:.3e})"
    )


def inverse_step(obj: Objective, sched: DampingSchedule, z_next: PhasePoint, t: float,
                 cfg: StepperConfig, *, coeffs=None, return_iterations: bool = False):
    """Invert :func:`semi_implicit_step`.

    The symplectic half is undone in closed form; the contraction half by
    :func:`solve_contraction`.  Guaranteed to converge for step sizes in (0, 1).
    """
    ts = cfg.step_size
    scale = 1.0 / (obj.lipschitz * sched.gamma ** 2)
    q = z_next.q - ts * z_next.p
    p_bar = z_next.p + ts * scale * obj.gradient(q)
    p, iters = solve_contraction(obj, sched, q, p_bar, t, cfg, coeffs=coeffs)
    z = PhasePoint(q, p)
    return (z, iters) if return_iterations else z


def _rk4_step(obj, sched, z: PhasePoint, t: float, h: float, coeffs=None) -> PhasePoint:
    def f(zz, tt):
        # backward integration to t = 0 can land a few ulps below zero
        if -1e-12 < tt < 0:
            tt = 0.0
        return vector_field(obj, sched, zz, tt, coeffs=coeffs)

    k1q, k1p = f(z, t)
    k2q, k2p = f(PhasePoint(z.q + 0.5 * h * k1q, z.p + 0.5 * h * k1p), t + 0.5 * h)
    k3q, k3p = f(PhasePoint(z.q + 0.5 * h * k2q, z.p + 0.5 * h * k2p), t + 0.5 * h)
    k4q, k4p = f(PhasePoint(z.q + h * k3q, z.p + h * k3p), t + h)
    return PhasePoint(
        z.q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        z.p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )


def rk4_flow(obj: Objective, sched: DampingSchedule, z0: PhasePoint, t0: float, t1: float,
             substeps: int, *, coeffs=None) -> PhasePoint:
    """Classical RK4 from ``t0`` to ``t1`` without recording; batched points allowed.

    ``t1 < t0`` integrates backwards.
    """
    h = (t1 - t0) / substeps
    z = z0
    for i in range(substeps):
        z = _rk4_step(obj, sched, z, t0 + i * h, h, coeffs)
    return z


def reference_integrate(obj: Objective, sched: DampingSchedule, z0: PhasePoint, t0: float,
                        t1: float, substeps: int, *, divergence_threshold: float = 1e6,
                        record_every: int = 1, coeffs=None) -> TrajectoryRecord:
    """High-accuracy solution of the continuous dynamics by fixed-step RK4.

    ``record_every`` thins the stored samples (the final state is always kept).
    ``coeffs`` pins ``(d, beta)``, e.g. ``(0, 0)`` for the undamped system.
    """
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if substeps < 1 or record_every < 1:
        raise ValueError("substeps and record_every must be positive")
    h = (t1 - t0) / substeps
    rec = TrajectoryRecord()
    z = z0
    rec.append(z, t0, energy(obj, sched, z, t0, coeffs=coeffs))
    for i in range(1, substeps + 1):
        z = _rk4_step(obj, sched, z, t0 + (i - 1) * h, h, coeffs)
        rec.grad_evals += 4
        t = t0 + i * h
        if not np.all(np.isfinite(z.q)) or z.norm() > divergence_threshold:
            rec.append(z, t, energy(obj, sched, z, t, coeffs=coeffs))
            rec.status = Status.DIVERGED
            return rec
        if i % record_every == 0 or i == substeps:
            rec.append(z, t, energy(obj, sched, z, t, coeffs=coeffs))
    rec.status = Status.MAX_STEPS
    return rec


def simulate(obj: Objective, sched: DampingSchedule, z0: PhasePoint, steps: int,
             cfg: StepperConfig, *, coeffs=None) -> TrajectoryRecord:
    """Iterate :func:`semi_implicit_step` from ``z0``.

    Time-varying coefficients are sampled at ``t_k = k * Ts``.  Stops with
    ``CONVERGED`` once ``|q| + |p| < 1e-12`` and ``DIVERGED`` once the state
    norm exceeds ``cfg.divergence_threshold`` (or becomes non-finite).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    ts = cfg.step_size
    rec = TrajectoryRecord()
    z = z0
    rec.append(z, 0.0, energy(obj, sched, z, 0.0, coeffs=coeffs))
    if z.norm() < CONVERGENCE_NORM:
        rec.status = Status.CONVERGED
        return rec
    for k in range(steps):
        z = semi_implicit_step(obj, sched, z, k * ts, cfg, coeffs=coeffs)
        rec.grad_evals += 2
        t = (k + 1) * ts
        norm = z.norm()
        if not math.isfinite(norm) or norm > cfg.divergence_threshold:
            rec.append(z, t, EnergyReport(math.nan, math.nan, math.nan, math.nan))
            rec.status = Status.DIVERGED
            return rec
        rec.append(z, t, energy(obj, sched, z, t, coeffs=coeffs))
        if norm < CONVERGENCE_NORM:
            rec.status = Status.CONVERGED
            return rec
    rec.status = Status.MAX_STEPS
    return rec
