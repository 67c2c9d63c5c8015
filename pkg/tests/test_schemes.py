import math

import numpy as np
import pytest

from accelode.dynamics import DampingSchedule, PhasePoint, coefficients
from accelode.schemes import (
    NesterovState,
    equivalence_check,
    from_nesterov,
    gradient_descent_iterates,
    nesterov_iterates,
    nesterov_step,
    to_nesterov,
)
from accelode.objectives import make_piecewise, make_quadratic


def test_step_at_origin():
    s = nesterov_step(make_quadratic([5.0, 1.0]), 0.4, NesterovState(np.zeros(2), np.zeros(2)))
    assert np.all(s.x == 0) and np.all(s.y == 0)


def test_zero_momentum_is_gradient_descent():
    s = nesterov_step(make_quadratic([1.0]), 0.0, NesterovState([1.0], [1.0]))
    assert s.x[0] == 0.0 and s.y[0] == 0.0
    obj = make_quadratic([5.0, 1.0])
    x0 = np.array([1.0, 2.0])
    gd = gradient_descent_iterates(obj, x0, 10)
    nag = nesterov_iterates(obj, 0.0, NesterovState(x0, x0), 10)
    np.testing.assert_array_equal(gd, nag)


def test_change_of_variables():
    s = to_nesterov(PhasePoint(1.0, 2.0), 0.5)
    assert (s.x[0], s.y[0]) == (1.0, 2.0)
    s = to_nesterov(PhasePoint(1.0, 2.0), 0.0)
    assert s.x[0] == s.y[0] == 1.0
    z = from_nesterov(to_nesterov(PhasePoint([0.3, -1.0], [2.0, 0.5]), 0.7), 0.7)
    np.testing.assert_allclose(z.as_array(), [0.3, -1.0, 2.0, 0.5], rtol=1e-15)
    with pytest.raises(ValueError):
        from_nesterov(s, 0.0)


def test_accelerated_rate_on_quadratic():
    obj = make_quadratic([5.0, 1.0])
    _, beta = coefficients(DampingSchedule.strongly_convex(5.0))
    x0 = np.array([1.0, 1.0])
    xs = nesterov_iterates(obj, beta, NesterovState(x0, x0), 50)
    assert obj.value(xs[-1]) <= 10 * obj.value(x0) * (1 - 1 / math.sqrt(5)) ** 50


def test_equivalence_quadratic():
    rng = np.random.default_rng(0)
    obj = make_quadratic([5.0, 1.0])
    for _ in range(20):
        z0 = PhasePoint(rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2))
        assert equivalence_check(obj, 5.0, z0, 100) < 1e-12


def test_equivalence_piecewise():
    assert equivalence_check(make_piecewise(5.0), 5.0, PhasePoint(3.0, 0.0), 50) < 1e-10


def test_equivalence_origin():
    assert equivalence_check(make_quadratic([5.0, 1.0]), 5.0, PhasePoint.zeros(2), 10) == 0.0


def test_state_shape_check():
    with pytest.raises(ValueError):
        NesterovState([1.0, 2.0], [1.0])
