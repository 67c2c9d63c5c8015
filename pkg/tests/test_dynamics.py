import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from accelode.dynamics import (
    DampingSchedule,
    Mode,
    PhasePoint,
    coefficients,
    dissipation_bounds,
    energy,
    non_potential_force,
    vector_field,
)
from accelode.integrators import reference_integrate
from accelode.objectives import curvature_average, make_huber, make_piecewise, make_quadratic


def test_coefficient_examples():
    assert coefficients(DampingSchedule.strongly_convex(1.0)) == (0.5, 0.0)
    d, b = coefficients(DampingSchedule.strongly_convex(9.0))
    assert (d, b) == pytest.approx((0.25, 0.5))
    nsc = DampingSchedule.non_strongly_convex()
    assert coefficients(nsc, 1.0) == (0.5, 0.0)
    assert coefficients(nsc, 0.0)[1] == -0.5


def test_coefficients_reject_negative_time():
    with pytest.raises(ValueError):
        coefficients(DampingSchedule.strongly_convex(4.0), -1.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        DampingSchedule.strongly_convex(0.5)
    with pytest.raises(ValueError):
        DampingSchedule.strongly_convex(4.0, gamma=0.0)
    assert DampingSchedule.non_strongly_convex().mode is Mode.NON_STRONGLY_CONVEX


@given(st.floats(1.0, 1e8))
def test_strongly_convex_coefficients_sum_to_one(kappa):
    d, b = coefficients(DampingSchedule.strongly_convex(kappa))
    assert abs(2 * d + b - 1) <= 4e-16
    assert d > 0 and 0 <= b < 1


@given(st.floats(0.0, 1e6))
def test_time_varying_coefficients_sum_to_one(t):
    d, b = coefficients(DampingSchedule.non_strongly_convex(), t)
    assert abs(2 * d + b - 1) <= 4e-16


def test_phase_point_shapes():
    z = PhasePoint(1.0, 2.0)
    assert z.q.shape == (1,) and z.dim == 1
    assert z.norm() == 3.0
    np.testing.assert_array_equal(z.as_array(), [1.0, 2.0])
    with pytest.raises(ValueError):
        PhasePoint([1.0, 2.0], [1.0])


def test_force_examples():
    sched = DampingSchedule.strongly_convex(5.0)
    obj = make_piecewise(5.0)
    assert non_potential_force(obj, sched, PhasePoint(0.7, 0.0))[0] == 0.0

    q = make_quadratic([3.0])
    f = non_potential_force(q, DampingSchedule.strongly_convex(7.0), PhasePoint(0.4, 1.5))
    assert f[0] == pytest.approx(-1.5, rel=1e-14)

    # beta < 1 keeps q + beta p on the first branch, so the force is -(2d + beta) = -1
    assert non_potential_force(obj, sched, PhasePoint(0.0, 1.0))[0] == pytest.approx(-1.0, rel=1e-14)


def test_vector_field_examples():
    obj = make_quadratic([1.0])
    sched = DampingSchedule.strongly_convex(1.0)
    dq, dp = vector_field(obj, sched, PhasePoint(0.0, 0.0))
    assert dq[0] == 0.0 and dp[0] == 0.0
    dq, dp = vector_field(obj, sched, PhasePoint(1.0, 0.0))
    assert dq[0] == 0.0 and dp[0] == -1.0


def test_vector_field_matches_curvature_form():
    rng = np.random.default_rng(0)
    for obj, kappa in [(make_piecewise(5.0), 5.0), (make_quadratic([5.0, 1.0]), 5.0)]:
        sched = DampingSchedule.strongly_convex(kappa)
        d, beta = coefficients(sched)
        for _ in range(20):
            z = PhasePoint(rng.uniform(-3, 3, obj.dim), rng.uniform(-3, 3, obj.dim))
            D = curvature_average(obj, z.q, z.p, beta, nodes=2000)
            expected = -(2 * d * z.p + D @ z.p) - obj.gradient(z.q) / obj.lipschitz
            np.testing.assert_allclose(vector_field(obj, sched, z)[1], expected, atol=2e-3)


def test_energy_examples():
    obj = make_quadratic([5.0, 1.0])
    e = energy(obj, DampingSchedule.strongly_convex(5.0), PhasePoint.zeros(2))
    assert e.total == 0.0 and e.dissipation_rate == 0.0
    e = energy(obj, DampingSchedule.strongly_convex(5.0), PhasePoint([1.0, 0.0], [0.0, 2.0]))
    assert e.kinetic == 2.0 and e.potential == pytest.approx(0.5)


def test_energy_batches():
    obj = make_quadratic([2.0])
    z = PhasePoint(np.ones((5, 1)), np.zeros((5, 1)))
    e = energy(obj, DampingSchedule.strongly_convex(2.0), z)
    assert e.total.shape == (5,)


@pytest.mark.parametrize("obj,kappa", [(make_quadratic([5.0, 1.0]), 5.0), (make_piecewise(5.0), 5.0),
                                       (make_quadratic([100.0, 3.0, 1.0]), 100.0)])
def test_dissipation_sandwich_strongly_convex(obj, kappa):
    rng = np.random.default_rng(3)
    sched = DampingSchedule.strongly_convex(kappa)
    for _ in range(1000):
        z = PhasePoint(rng.uniform(-4, 4, obj.dim), rng.uniform(-4, 4, obj.dim))
        lo, hi = dissipation_bounds(sched, z.p)
        rate = energy(obj, sched, z).dissipation_rate
        assert lo - 1e-12 <= rate <= hi + 1e-12


@pytest.mark.parametrize("t", [0.0, 0.3, 0.9, 1.0, 2.5, 40.0])
def test_dissipation_sandwich_time_varying(t):
    rng = np.random.default_rng(4)
    sched = DampingSchedule.non_strongly_convex()
    for obj in (make_huber(2), make_quadratic([4.0, 1.0])):
        for _ in range(300):
            z = PhasePoint(rng.uniform(-4, 4, obj.dim), rng.uniform(-4, 4, obj.dim))
            lo, hi = dissipation_bounds(sched, z.p, t)
            rate = energy(obj, sched, z, t).dissipation_rate
            assert lo - 1e-12 <= rate <= hi + 1e-12


def test_dissipation_bounds_reverse_before_unit_time():
    sched = DampingSchedule.non_strongly_convex()
    lo, hi = dissipation_bounds(sched, [1.0], 0.5)
    assert lo == -2 * coefficients(sched, 0.5)[0] and hi == -1.0


def test_zero_damping_conserves_energy():
    obj = make_piecewise(5.0)
    sched = DampingSchedule.strongly_convex(5.0)
    rec = reference_integrate(obj, sched, PhasePoint(1.3, -0.4), 0.0, 10.0, 20000, coeffs=(0.0, 0.0))
    H = rec.totals()
    assert np.max(np.abs(H - H[0])) < 1e-6


def test_time_rescaling_by_gamma():
    # gamma rescales time: x_gamma(t) = x_1(t / gamma)
    obj = make_quadratic([5.0])
    z0 = PhasePoint(1.0, 0.0)
    base = reference_integrate(obj, DampingSchedule.strongly_convex(5.0), z0, 0.0, 2.0, 4000)
    slow = reference_integrate(obj, DampingSchedule.strongly_convex(5.0, gamma=2.0), z0, 0.0, 4.0, 4000)
    assert slow.points[-1].q[0] == pytest.approx(base.points[-1].q[0], abs=1e-10)
    assert math.isclose(2 * slow.points[-1].p[0], base.points[-1].p[0], abs_tol=1e-10)
