"""Batch checks behind ``accelode verify``.

Each suite returns a list of :class:`Check`; a suite passes when every
non-informational check passes.  Sizes are chosen so that ``verify all``
finishes in well under a minute.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis, geometry, schemes
from .dynamics import DampingSchedule, PhasePoint, coefficients, energy, dissipation_bounds
from .integrators import Status, StepperConfig, inverse_step, semi_implicit_step, simulate, split_step
from .objectives import make_huber, make_quadratic, make_piecewise

SUITES = ("continuous", "discrete", "equivalence", "geometry")


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    informational: bool = False
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return asdict(self)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        out.seconds = round(time.perf_counter() - t0, 3)
        return out
    wrapper.__name__ = fn.__name__
    return wrapper


def _random_points(rng, dim, count, scale=2.0):
    return [PhasePoint(rng.uniform(-scale, scale, dim), rng.uniform(-scale, scale, dim))
            for _ in range(count)]


def strongly_convex_matrix():
    """(objective, kappa) pairs used across suites."""
    return [
        (make_quadratic([1.0]), 1.0),
        (make_quadratic([5.0, 1.0]), 5.0),
        (make_quadratic([100.0, 10.0, 1.0]), 100.0),
        (make_piecewise(5.0), 5.0),
    ]


# --- continuous -----------------------------------------------------------

@_timed
def check_coefficient_identity() -> Check:
    worst = 0.0
    for kappa in np.logspace(0, 6, 61):
        d, b = coefficients(DampingSchedule.strongly_convex(kappa))
        worst = max(worst, abs(2 * d + b - 1))
    nsc = DampingSchedule.non_strongly_convex()
    for t in np.linspace(0, 100, 1001):
        d, b = coefficients(nsc, t)
        worst = max(worst, abs(2 * d + b - 1))
    return Check("coefficient identity 2d+beta=1", worst <= 4 * np.finfo(float).eps, {"max_error": worst})


@_timed
def check_dissipation(seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    cases = [(obj, DampingSchedule.strongly_convex(k)) for obj, k in strongly_convex_matrix()]
    cases += [(make_huber(2), DampingSchedule.non_strongly_convex())]
    for obj, sched in cases:
        for z in _random_points(rng, obj.dim, 200, 3.0):
            t = float(rng.uniform(0, 10))
            rate = energy(obj, sched, z, t).dissipation_rate
            lo, hi = dissipation_bounds(sched, z.p, t)
            slack = 1e-12 * (1 + abs(lo))
            bad += not (lo - slack <= rate <= hi + slack)
    return Check("dissipation sandwich", bad == 0, {"violations": bad})


@_timed
def check_exponential_rate_suite() -> Check:
    rng = np.random.default_rng(1)
    results = []
    objs = [(make_quadratic([4.0, 1.0]), 4.0), (make_quadratic([25.0, 1.0]), 25.0),
            (make_quadratic([100.0, 1.0]), 100.0), (make_piecewise(5.0), 5.0)]
    for obj, kappa in objs:
        horizon = 20 * math.sqrt(kappa)
        for z0 in _random_points(rng, obj.dim, 2):
            rate, ok = analysis.check_exponential_decay(obj, kappa, z0, horizon, int(30 * horizon))
            results.append(ok)
    return Check("continuous exponential rate", all(results), {"runs": len(results)})


@_timed
def check_inverse_square_suite() -> Check:
    ok_all, slopes = [], []
    for obj in (make_quadratic([1.0]), make_quadratic([100.0, 1.0]), make_huber(2)):
        z0 = PhasePoint(np.full(obj.dim, 2.0), np.full(obj.dim, -1.0))
        ok_all.append(analysis.check_inverse_square_decay(obj, z0, 100.0, 5000))
        t, f, _ = analysis.vanishing_damping_series(obj, z0, 100.0, 5000)
        slopes.append(analysis.loglog_slope(t, f))
    passed = all(ok_all) and max(slopes) <= -1.9
    return Check("vanishing damping O(1/t^2) decay", passed, {"max_slope": max(slopes)})


# --- discrete -------------------------------------------------------------

@_timed
def check_split_identity(seed: int = 2) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for obj, kappa in strongly_convex_matrix():
        sched = DampingSchedule.strongly_convex(kappa)
        for ts in (0.3, 1.0):
            cfg = StepperConfig(ts)
            for z in _random_points(rng, obj.dim, 100):
                a = semi_implicit_step(obj, sched, z, 0.0, cfg)
                _, b = split_step(obj, sched, z, 0.0, cfg)
                worst = max(worst, float(np.max(np.abs(a.as_array() - b.as_array()))))
    return Check("split step equals semi-implicit step", worst <= 1e-14, {"max_error": worst})


@_timed
def check_homeomorphism(seed: int = 3) -> Check:
    rng = np.random.default_rng(seed)
    obj, sched = make_piecewise(5.0), DampingSchedule.strongly_convex(5.0)
    worst, iters = 0.0, {}
    for ts in (0.25, 0.5, 0.9):
        cfg = StepperConfig(ts, fixed_point_max_iter=1000)
        n_max = 0
        for z in _random_points(rng, 1, 300, 3.0):
            back, n = inverse_step(obj, sched, semi_implicit_step(obj, sched, z, 0, cfg), 0, cfg,
                                   return_iterations=True)
            fwd = semi_implicit_step(obj, sched, inverse_step(obj, sched, z, 0, cfg), 0, cfg)
            worst = max(worst, float(np.max(np.abs(back.as_array() - z.as_array()))),
                        float(np.max(np.abs(fwd.as_array() - z.as_array()))))
            n_max = max(n_max, n)
        iters[ts] = n_max
    bound_ok = all(n <= math.ceil(math.log(1e-12) / math.log(ts)) + 5 for ts, n in iters.items())
    return Check("inverse step round trips", worst < 1e-10 and bound_ok,
                 {"max_error": worst, "max_iterations": {str(k): v for k, v in iters.items()}})


@_timed
def check_discrete_lyapunov_suite(seed: int = 4) -> Check:
    rng = np.random.default_rng(seed)
    total = 0
    for kappa in (3.0, 5.0, 100.0):
        for obj in (make_quadratic([kappa, 1.0]), make_piecewise(kappa)):
            for ts in (0.5, 1.0):
                for z0 in _random_points(rng, obj.dim, 5, 3.0):
                    v, _ = analysis.check_discrete_decay(obj, kappa, ts, z0, 200)
                    total += v
    return Check("discrete Lyapunov decay", total == 0, {"violations": total})


@_timed
def check_piecewise_sweep() -> Check:
    obj, sched = make_piecewise(5.0), DampingSchedule.strongly_convex(5.0)
    grid = [round(-2.0 + 0.2 * i, 12) for i in range(36)]
    two_step = all(
        simulate(obj, sched, PhasePoint([q0], [0.0]), 500, StepperConfig(1.0)).steps == 2
        for q0 in grid if q0 < 1 and q0 != 0.0
    )
    diverge = all(
        simulate(obj, sched, PhasePoint([q0], [0.0]), 500, StepperConfig(1.3)).status is Status.DIVERGED
        for q0 in grid if q0 >= 4.4
    )
    return Check("kinked example: two-step convergence and divergence", two_step and diverge,
                 {"two_step": two_step, "diverged": diverge})


# --- equivalence ----------------------------------------------------------

@_timed
def check_equivalence(seed: int = 5) -> Check:
    rng = np.random.default_rng(seed)
    worst_quad = worst_kink = 0.0
    for obj, kappa in strongly_convex_matrix():
        for z0 in _random_points(rng, obj.dim, 20):
            dev = schemes.equivalence_check(obj, kappa, z0, 100)
            if obj.name.startswith("quadratic"):
                worst_quad = max(worst_quad, dev)
            else:
                worst_kink = max(worst_kink, dev)
    passed = worst_quad < 1e-12 and worst_kink < 1e-10
    return Check("Nesterov equivalence at Ts=1", passed,
                 {"quadratic_max_dev": worst_quad, "kinked_max_dev": worst_kink})


# --- geometry -------------------------------------------------------------

@_timed
def check_area_identity() -> Check:
    obj, sched = make_piecewise(5.0), DampingSchedule.strongly_convex(5.0)
    c = geometry.circle_contour((0.0, 0.0), 1.0, 4000)
    a0 = geometry.signed_area(c)
    worst = 0.0
    for ts in (0.25, 0.5, 1.0):
        lhs, line, region = geometry.area_contraction_report(obj, sched, c, 0.0, StepperConfig(ts))
        worst = max(worst, abs(lhs - line) / a0, abs(lhs - region) / a0)
    return Check("one-step area identity", worst < 1e-3, {"max_rel_error": worst})


@_timed
def check_sandwich_and_radius() -> Check:
    ok, worst_ratio = True, []
    for diag in ([1.0], [4.0]):
        obj = make_quadratic(diag)
        sched = DampingSchedule.strongly_convex(obj.kappa)
        d, b = coefficients(sched)
        for ts in (0.5, 0.9):
            h = geometry.slowest_trajectory_radii(obj, sched, 1.0, ts, 20)
            ratio = h.area[1:] / h.area[:-1]
            lo, hi = 1 - ts, 1 - ts * (2 * d + b / obj.kappa)
            ok &= bool(np.all((ratio >= lo - 1e-9) & (ratio <= hi + 1e-9)))
            ok &= bool(np.all(h.max_radius >= h.bound * (1 - 1e-4)))
            worst_ratio.append(float(np.max(np.abs(ratio - (1 - ts)))))
    return Check("area sandwich and slow-trajectory radius (quadratics)", ok,
                 {"max_ratio_dev": max(worst_ratio)})


@_timed
def check_radius_bound_piecewise() -> Check:
    obj, sched = make_piecewise(5.0), DampingSchedule.strongly_convex(5.0)
    passed = geometry.slowest_trajectory_bound(obj, sched, 1.0, 0.9, 20)
    return Check("slow-trajectory radius on kinked example (report only)", passed,
                 informational=True)


@_timed
def check_one_step_areas() -> Check:
    margins = []
    for obj in (make_piecewise(5.0), make_quadratic([1.0])):
        sched = DampingSchedule.strongly_convex(obj.kappa)
        for e in (0.5, 1.0, 2.0):
            a0 = geometry.signed_area(geometry.level_set_contour(obj, e, 1000))
            for ts in (0.25, 0.5, 0.9):
                ca, da = geometry.one_step_areas(obj, sched, e, ts, m=1000, substeps=100)
                margins.append((ca - da) / a0)
    return Check("continuous vs discrete one-step area", min(margins) >= -1e-4,
                 {"min_margin": min(margins)})


@_timed
def check_orientation() -> Check:
    obj, sched = make_piecewise(5.0), DampingSchedule.strongly_convex(5.0)
    worst = math.inf
    for ts in (0.1, 0.5, 1.0):
        cfg = StepperConfig(ts)
        for c in (geometry.circle_contour((0.0, 0.0), 1.0, 400),
                  geometry.circle_contour((2.0, 0.5), 1.5, 400),
                  geometry.level_set_contour(obj, 1.0, 400)):
            a0 = geometry.signed_area(c)
            for k in range(5):
                c = geometry.evolve_contour_discrete(obj, sched, c, k * ts, cfg)
                worst = min(worst, geometry.signed_area(c) / a0)
    return Check("orientation preserved for Ts <= 1", worst >= -1e-12, {"min_area_ratio": worst})


def run_suite(name: str) -> list[Check]:
    checks = {
        "continuous": [check_coefficient_identity, check_dissipation, check_exponential_rate_suite, check_inverse_square_suite],
        "discrete": [check_split_identity, check_homeomorphism, check_discrete_lyapunov_suite, check_piecewise_sweep],
        "equivalence": [check_equivalence],
        "geometry": [check_area_identity, check_sandwich_and_radius, check_radius_bound_piecewise, check_one_step_areas,
                     check_orientation],
    }
    if name == "all":
        return [c for s in SUITES for c in run_suite(s)]
    if name not in checks:
        raise ValueError(f"unknown suite {name!r}")
    return [fn() for fn in checks[name]]


def suite_passed(results: list[Check]) -> bool:
    return all(r.passed for r in results if not r.informational)
