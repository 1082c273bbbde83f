import numpy as np
import pytest

from contractive_mpc.errors import DimensionError, NumericOverflowError
from contractive_mpc.systems import (BoxSet, CartSpringSystem, FunctionSystem, LinearSystem,
                                     box_contains, finite_difference_jacobians, linearize,
                                     rollout, rollout_sensitivities, step, system_from_config)


def test_step_scalar(scalar_sys):
    np.testing.assert_allclose(step(scalar_sys, [2.0], [1.0]), [2.0])


def test_step_equilibrium(cart, scalar_sys):
    assert np.all(np.abs(step(cart, [0, 0], [0])) <= 1e-12)
    assert np.all(np.abs(step(scalar_sys, [0], [0])) <= 1e-12)


def test_step_cart_oracle(cart):
    # hand evaluation of the Euler map
    x2 = -0.132 * np.exp(2.0) * (-2.0) + 0.56 * 1.0
    np.testing.assert_allclose(step(cart, [-2, 1], [0]), [-1.6, x2], rtol=1e-14)
    np.testing.assert_allclose(x2, 2.510711, atol=1e-6)


def test_step_dimension_error(cart):
    with pytest.raises(DimensionError):
        step(cart, [1.0], [0.0])
    with pytest.raises(DimensionError):
        step(cart, [1.0, 0.0], [0.0, 1.0])


def test_linearize_cart_origin(cart):
    lin = linearize(cart, [0, 0], [0])
    np.testing.assert_allclose(lin.A, [[1, 0.4], [-0.132, 0.56]], atol=1e-15)
    np.testing.assert_allclose(lin.B, [[0], [0.4]], atol=1e-15)


def test_linearize_cart_offset(cart):
    lin = linearize(cart, [-2, 0], [0])
    np.testing.assert_allclose(lin.A[1, 0], -0.132 * np.exp(2) * 3, rtol=1e-12)
    np.testing.assert_allclose(lin.A[1, 0], -2.926, atol=1e-3)


def test_linearize_linear_unchanged():
    sys = LinearSystem([[1, 2], [3, 4]], [[0], [1]])
    lin = linearize(sys, [5, -1], [2])
    np.testing.assert_array_equal(lin.A, sys.A)
    np.testing.assert_array_equal(lin.B, sys.B)


def test_analytic_jacobian_matches_fd(cart):
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform([-2, -3], [2, 3])
        u = rng.uniform(-4, 4, size=1)
        A, B = cart.jacobians(x, u)
        Af, Bf = finite_difference_jacobians(cart, x, u)
        np.testing.assert_allclose(A, Af, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(B, Bf, rtol=1e-5, atol=1e-8)


def test_function_system_fd_fallback():
    sys = FunctionSystem(1, 1, lambda x, u: np.sin(x) + u)
    assert not sys.has_analytic_jacobians
    A, B = sys.jacobians(np.array([0.3]), np.array([0.0]))
    np.testing.assert_allclose(A, [[np.cos(0.3)]], rtol=1e-8)
    np.testing.assert_allclose(B, [[1.0]], rtol=1e-8)


def test_rollout_examples(scalar_sys, cart):
    np.testing.assert_array_equal(rollout(scalar_sys, [1.0], []), [[1.0]])
    np.testing.assert_allclose(rollout(scalar_sys, [1.0], [[0], [0]]), [[1], [0.5], [0.25]])
    xs = rollout(cart, [-2, 1], [[0]])
    np.testing.assert_allclose(xs[1], step(cart, [-2, 1], [0]))


def test_rollout_stepwise_bitwise(cart):
    rng = np.random.default_rng(2)
    u = rng.uniform(-4, 4, size=(6, 1))
    xs = rollout(cart, [0.5, -1], u)
    x = np.array([0.5, -1.0])
    for i in range(6):
        x = step(cart, x, u[i])
        assert np.array_equal(x, xs[i + 1])


def test_rollout_overflow_names_step():
    sys = LinearSystem([[1e200]], [[1.0]])
    with pytest.raises(NumericOverflowError) as exc:
        rollout(sys, [1e200], [[0], [0]])
    assert exc.value.step == 1


def test_rollout_sensitivities_fd(cart):
    rng = np.random.default_rng(3)
    u = rng.uniform(-1, 1, size=(3, 1))
    x0 = np.array([-1.0, 0.5])
    _, S = rollout_sensitivities(cart, x0, u)
    h = 1e-6
    for j in range(3):
        e = np.zeros((3, 1))
        e[j] = h
        d = (rollout(cart, x0, u + e) - rollout(cart, x0, u - e)) / (2 * h)
        np.testing.assert_allclose(S[:, :, j], d, atol=1e-7)


def test_box_contains():
    X = BoxSet.symmetric([2, 3])
    assert box_contains(X, [-2, 3])
    assert box_contains(X, [0, 0])
    assert not box_contains(BoxSet.symmetric([4]), [4.0001])
    with pytest.raises(DimensionError):
        box_contains(X, [0])


def test_box_validation():
    with pytest.raises(ValueError):
        BoxSet([1.0], [0.0])
    with pytest.raises(ValueError):
        BoxSet([0.0], [1.0]).require_origin_interior()


def test_cart_parameter_validation():
    with pytest.raises(ValueError):
        CartSpringSystem(dt=0.0)
    with pytest.raises(ValueError):
        CartSpringSystem(mass=-1.0)


def test_system_from_config():
    s = system_from_config({"type": "linear", "A": [[0.5]], "B": [[1.0]]})
    assert isinstance(s, LinearSystem) and s.n == 1 and s.m == 1
    c = system_from_config({"type": "cart_spring", "dt": 0.2})
    assert c.dt == 0.2
    with pytest.raises(ValueError):
        system_from_config({"type": "pendulum"})
