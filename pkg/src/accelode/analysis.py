"""
Lyapunov monitors and rate estimates.

Three energy-like functions are evaluated along trajectories:

* ``V(q, p) = 0.5 |a q + p|^2 + f(q)/L`` with ``a = 1/sqrt(kappa) - 1/(2 kappa)``,
  which decays like ``exp(-a t)`` under the constant-coefficient flow;
* ``Vbar(t) = 0.5 |abar(t) q + p|^2 + f(q)/L`` with ``abar(t) = 2/(t+2)``,
  for the time-varying flow;
* ``Vhat`` in shifted coordinates for the discrete scheme, which should shrink
  by at least ``1 - d Ts`` per step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DampingSchedule, Mode, PhasePoint, coefficients
from .integrators import StepperConfig, TrajectoryRecord, reference_integrate, simulate
from .objectives import Objective

BOUND_RTOL = 1e-3
FIT_FLOOR = 1e-13
C_BAR = 5.0 / 6.0


@dataclass(frozen=True)
class LyapunovSample:
    t_or_k: float
    value: float
    certified_rate: float


class Observable(enum.Enum):
    DISTANCE_TO_ORIGIN = "distance"
    FUNCTION_VALUE = "function-value"
    VHAT = "vhat"


class UndefinedRate(ValueError):
    """Raised when an observable has too few usable samples to fit a rate."""


def rate_constant(kappa: float) -> float:
    """``a = d + beta/(2 kappa) = 1/sqrt(kappa) - 1/(2 kappa)``."""
    return 1.0 / math.sqrt(kappa) - 0.5 / kappa


def lyapunov_V(obj: Objective, kappa: float, z: PhasePoint) -> float:
    a = rate_constant(kappa)
    w = a * z.q + z.p
    return 0.5 * np.sum(w * w, axis=-1) + obj.value(z.q) / obj.lipschitz


def lyapunov_Vbar(obj: Objective, z: PhasePoint, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    w = (2.0 / (t + 2.0)) * z.q + z.p
    return 0.5 * np.sum(w * w, axis=-1) + obj.value(z.q) / obj.lipschitz


def vhat_coordinates(kappa: float, step_size: float) -> tuple[float, float, float]:
    """Return ``(d, tau, shift)`` so that ``qhat = q + shift * p``.

    ``tau = beta / (1 - 2 d Ts)``.  The quotient is 0/0 only for kappa = 1 at
    Ts = 1, where beta = 0 and we take ``tau = 0``.
    """
    d, beta = coefficients(DampingSchedule.strongly_convex(kappa))
    denom = 1.0 - 2.0 * d * step_size
    tau = 0.0 if beta == 0.0 else beta / denom
    return d, tau, tau - step_size


def lyapunov_Vhat(obj: Objective, kappa: float, step_size: float, z: PhasePoint) -> float:
    if not 0 < step_size <= 1:
        raise ValueError("step_size must lie in (0, 1]")
    d, tau, shift = vhat_coordinates(kappa, step_size)
    qh = z.q + shift * z.p
    w = d * qh + (1.0 - d * tau) * z.p
    return 0.5 * np.sum(w * w, axis=-1) + obj.value(qh) / obj.lipschitz


def _loglinear_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, np.log(y), 1)[0])


def check_exponential_decay(obj: Objective, kappa: float, z0: PhasePoint, horizon: float,
                substeps: int, rtol: float = BOUND_RTOL) -> tuple[float, bool]:
    """Integrate the constant-coefficient flow and test ``V(t) <= V(0) exp(-a t)``.

    Also checks the implied state bound ``|z(t)|^2 <= V(0) exp(-a t) / lam``,
    with ``lam`` the smallest eigenvalue of the quadratic form
    ``0.5 |a q + p|^2 + |q|^2 / (2 kappa)`` that lower-bounds ``V``.
    Returns ``(measured_rate, pass)``; the rate is the negated least-squares
    slope of ``log V`` against ``t``.
    """
    sched = DampingSchedule.strongly_convex(kappa)
    a = rate_constant(kappa)
    rec = reference_integrate(obj, sched, z0, 0.0, horizon, substeps)
    t = np.asarray(rec.times)
    V = np.array([lyapunov_V(obj, kappa, z) for z in rec.points])
    if V[0] == 0.0:
        return math.inf, bool(np.all(V == 0.0))
    bound = V[0] * np.exp(-a * t)
    ok = bool(np.all(V <= bound * (1.0 + rtol)))

    form = np.array([[0.5 * a * a + 0.5 / kappa, 0.5 * a], [0.5 * a, 0.5]])
    lam = float(np.linalg.eigvalsh(form)[0])
    state2 = np.array([np.sum(z.q ** 2) + np.sum(z.p ** 2) for z in rec.points])
    ok = ok and bool(np.all(state2 <= bound / lam * (1.0 + rtol)))

    usable = V > FIT_FLOOR * V[0]
    rate = -_loglinear_slope(t[usable], V[usable]) if usable.sum() >= 2 else math.inf
    return rate, ok


def tail_envelope(values: np.ndarray) -> np.ndarray:
    """``max(values[i:])`` for every ``i``: a monotone envelope of an oscillating decay."""
    return np.maximum.accumulate(np.asarray(values)[::-1])[::-1]


def vanishing_damping_series(obj: Objective, z0: PhasePoint, horizon: float, substeps: int):
    """Times, ``f(q(t))/L`` and ``Vbar(t)`` along the time-varying flow from t = 0."""
    sched = DampingSchedule.non_strongly_convex()
    rec = reference_integrate(obj, sched, z0, 0.0, horizon, substeps)
    t = np.asarray(rec.times)
    fval = np.array([float(obj.value(z.q)) for z in rec.points]) / obj.lipschitz
    vbar = np.array([float(lyapunov_Vbar(obj, z, tt)) for z, tt in zip(rec.points, t)])
    return t, fval, vbar


def loglog_slope(t: np.ndarray, f: np.ndarray, t_lo: float = 10.0, t_hi: float = 100.0) -> float:
    """Slope of ``log(envelope(f))`` against ``log t`` on ``[t_lo, t_hi]``."""
    env = tail_envelope(f)
    sel = (t >= t_lo) & (t <= t_hi) & (env > 0)
    return float(np.polyfit(np.log(t[sel]), np.log(env[sel]), 1)[0])


def check_inverse_square_decay(obj: Objective, z0: PhasePoint, horizon: float, substeps: int,
                rtol: float = BOUND_RTOL) -> bool:
    """Test the O(1/t^2) bounds for the time-varying flow on ``t >= 1``.

    * ``Vbar(t) <= 9 Vbar(1) / (t+2)^2``;
    * ``f(q(t))/L <= 9 C / (t+2)^2 * (|q0|^2 + |p0|^2)`` with ``C = 5/6``.

    ``substeps / horizon`` must be an integer so that t = 1 is a grid point.
    """
    t, fval, vbar = vanishing_damping_series(obj, z0, horizon, substeps)
    i1 = int(np.argmin(np.abs(t - 1.0)))
    if not math.isclose(t[i1], 1.0, abs_tol=1e-9):
        raise ValueError("t = 1 must lie on the integration grid")
    tt, vv, ff = t[i1:], vbar[i1:], fval[i1:]
    r0 = float(np.sum(z0.q ** 2) + np.sum(z0.p ** 2))
    ok_v = np.all(vv <= 9.0 * vbar[i1] / (tt + 2.0) ** 2 * (1.0 + rtol) + 1e-300)
    ok_f = np.all(ff <= 9.0 * C_BAR / (tt + 2.0) ** 2 * r0 * (1.0 + rtol) + 1e-300)
    return bool(ok_v and ok_f)


def vhat_series(obj: Objective, kappa: float, step_size: float, rec: TrajectoryRecord) -> np.ndarray:
    return np.array([float(lyapunov_Vhat(obj, kappa, step_size, z)) for z in rec.points])


def check_discrete_decay(obj: Objective, kappa: float, step_size: float, z0: PhasePoint,
                steps: int, cfg: StepperConfig | None = None) -> tuple[int, bool]:
    """Count steps where ``Vhat`` fails to shrink by the factor ``1 - d Ts``.

    Runs the discrete scheme with the strongly convex schedule and attaches
    the ``Vhat`` series to the record as ``lyapunov``.  Returns
    ``(violations, violations == 0)``.
    """
    cfg = cfg or StepperConfig(step_size)
    sched = DampingSchedule.strongly_convex(kappa)
    d, _ = coefficients(sched)
    rec = simulate(obj, sched, z0, steps, cfg)
    vh = vhat_series(obj, kappa, step_size, rec)
    rec.lyapunov = list(vh)
    factor = 1.0 - d * step_size
    violations = int(np.sum(vh[1:] > factor * vh[:-1] * (1.0 + 1e-12)))
    return violations, violations == 0


def vhat_samples(obj: Objective, kappa: float, step_size: float, rec: TrajectoryRecord) -> list[LyapunovSample]:
    """``Vhat`` per step, each tagged with the promised per-step factor ``1 - d Ts``."""
    d, _ = coefficients(DampingSchedule.strongly_convex(kappa))
    vh = vhat_series(obj, kappa, step_size, rec)
    return [LyapunovSample(k, float(v), 1.0 - d * step_size) for k, v in enumerate(vh)]


def v_samples(obj: Objective, kappa: float, rec: TrajectoryRecord) -> list[LyapunovSample]:
    """``V`` along a continuous-time record; the promised factor per unit time is ``exp(-a)``."""
    r = math.exp(-rate_constant(kappa))
    return [LyapunovSample(t, float(lyapunov_V(obj, kappa, z)), r)
            for t, z in zip(rec.times, rec.points)]


def fit_linear_rate(record: TrajectoryRecord, observable: Observable | str) -> float:
    """Per-step geometric rate from a least-squares fit of ``log(observable)``.

    The first 10% of samples (transient) and samples below 1e-13 are
    discarded.  ``VHAT`` needs ``record.lyapunov`` (see :func:`check_discrete_decay`).
    """
    observable = Observable(observable)
    if observable is Observable.DISTANCE_TO_ORIGIN:
        y = np.array([np.sqrt(np.sum(z.q ** 2) + np.sum(z.p ** 2)) for z in record.points])
    elif observable is Observable.FUNCTION_VALUE:
        y = np.array([e.potential for e in record.energies], dtype=float)
    else:
        if record.lyapunov is None:
            raise UndefinedRate("record carries no Vhat series")
        y = np.asarray(record.lyapunov, dtype=float)
    if not np.any(y != 0):
        raise UndefinedRate("observable is identically zero")
    k = np.arange(len(y), dtype=float)
    start = len(y) // 10
    k, y = k[start:], y[start:]
    keep = np.isfinite(y) & (y >= FIT_FLOOR)
    if keep.sum() < 10:
        raise UndefinedRate(f"only {int(keep.sum())} usable samples (need 10)")
    return math.exp(_loglinear_slope(k[keep], y[keep]))


def monitor_rows(samples: list[LyapunovSample]) -> list[tuple[float, float, float]]:
    """CSV rows ``(t_or_k, value, certified_bound)`` with bound ``value_0 * rate**t_or_k``."""
    if not samples:
        return []
    v0, t0 = samples[0].value, samples[0].t_or_k
    return [(s.t_or_k, s.value, v0 * s.certified_rate ** (s.t_or_k - t0)) for s in samples]


# interface aliases
check_prop1 = check_exponential_decay
check_prop2 = check_inverse_square_decay
check_prop7 = check_discrete_decay
