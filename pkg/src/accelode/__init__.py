"""Damped second-order dynamics behind accelerated gradient methods.

Objectives, the damped ODE and its first-order form, a semi-implicit Euler
discretization (which reproduces Nesterov's method at unit step), Lyapunov
monitors and phase-plane area diagnostics.
"""

from .dynamics import DampingSchedule, EnergyReport, Mode, PhasePoint, coefficients, energy
from .integrators import (
    NonConvergence,
    Status,
    StepperConfig,
    TrajectoryRecord,
    inverse_step,
    reference_integrate,
    semi_implicit_step,
    simulate,
)
from .objectives import Objective, make_huber, make_objective, make_quadratic, make_piecewise

__version__ = "0.1.0"

__all__ = [
    "DampingSchedule",
    "EnergyReport",
    "Mode",
    "NonConvergence",
    "Objective",
    "PhasePoint",
    "Status",
    "StepperConfig",
    "TrajectoryRecord",
    "coefficients",
    "energy",
    "inverse_step",
    "make_huber",
    "make_objective",
    "make_quadratic",
    "make_piecewise",
    "reference_integrate",
    "semi_implicit_step",
    "simulate",
]
