import numpy as np
import pytest

from contractive_mpc.costs import AugmentedStageCost, QuadStageCost, QuadTerminalCost
from contractive_mpc.errors import IllPosedError, InfeasibleError
from contractive_mpc.osvf import (BlockMatrixM, OneStepProblem, TerminalSet, assemble_M,
                                  decrease_witness, ellipsoid_inside_box, is_M_positive_definite,
                                  osvf_eval, osvf_matrix, sample_ellipsoid,
                                  schur_positive_definite, sublevel_membership, verify_clf)
from contractive_mpc.synthesis import solve_dare
from contractive_mpc.systems import BoxSet, LinearSystem

from conftest import REF_P_CONV, REF_P_PROP, Q_CART, R_CART, random_instance


def test_assemble_M_scalar(scalar_sys):
    np.testing.assert_allclose(assemble_M(scalar_sys, [[1]], [[1]], [[1]]).M, [[0.25, 0.5], [0.5, 2.0]])


def test_assemble_M_p_zero():
    sys = LinearSystem([[1, 2], [0, 1]], [[0], [1]])
    Q, R = np.diag([2.0, 3.0]), np.array([[5.0]])
    M = assemble_M(sys, Q, R, np.zeros((2, 2)))
    np.testing.assert_array_equal(M.xx, Q)
    np.testing.assert_array_equal(M.uu, R)
    np.testing.assert_array_equal(M.xu, np.zeros((2, 1)))


def test_assemble_M_cart_conventional(cart_lin):
    blk = assemble_M(cart_lin, Q_CART, R_CART, REF_P_CONV)
    A, B, P = cart_lin.A, cart_lin.B, REF_P_CONV
    assert blk.M.shape == (3, 3)
    np.testing.assert_array_equal(blk.M, blk.M.T)
    np.testing.assert_allclose(blk.xx, A.T @ P @ A + Q_CART - P, rtol=1e-14)
    np.testing.assert_allclose(blk.uu, R_CART + B.T @ P @ B, rtol=1e-14)


def test_osvf_matrix_scalar(scalar_sys):
    o = osvf_matrix(scalar_sys, [[1]], [[1]], [[1]])
    np.testing.assert_allclose(o.M_P, [[0.125]])
    np.testing.assert_allclose(o.K_os, [[-0.25]])
    assert osvf_eval(o, [1.0]) == pytest.approx(0.125)
    assert osvf_eval(o, [0.0]) == 0.0


@pytest.mark.parametrize("a,b,q,r", [(0.5, 1, 1, 1), (2, 0.7, 3, 0.2), (-1.3, 2, 0.4, 5)])
def test_osvf_matrix_first_order_special_cases(a, b, q, r):
    sys = LinearSystem([[a]], [[b]])
    o = osvf_matrix(sys, [[q]], [[r]], [[0.0]])
    np.testing.assert_allclose(o.M_P, [[q]])
    np.testing.assert_allclose(o.K_os, [[0.0]])
    o = osvf_matrix(sys, [[q]], [[r]], [[q]])
    np.testing.assert_allclose(o.M_P, [[a * a * q * r / (r + b * b * q)]], rtol=1e-13)


def test_osvf_ill_posed(scalar_sys):
    with pytest.raises(IllPosedError):
        osvf_matrix(scalar_sys, [[1]], [[-1]], [[0.5]])


def test_positive_definite_checks(scalar_sys, cart_lin):
    assert is_M_positive_definite(assemble_M(scalar_sys, [[1]], [[1]], [[1]]))
    assert not is_M_positive_definite(BlockMatrixM(np.diag([1.0, -1.0]), 1, 1))
    P = solve_dare(cart_lin, Q_CART, R_CART)
    assert not is_M_positive_definite(assemble_M(cart_lin, Q_CART, R_CART, P))


def test_schur_consistency_random():
    rng = np.random.default_rng(5)
    agree = 0
    for _ in range(500):
        sys, Q, R = random_instance(rng)
        Q = Q - rng.uniform(0, 2) * np.eye(sys.n)
        L = rng.standard_normal((sys.n, sys.n))
        P = L @ L.T - rng.uniform(0, 2) * np.eye(sys.n)
        blk = assemble_M(sys, Q, R, P)
        if np.linalg.eigvalsh(blk.uu)[0] <= 1e-10:
            continue
        o = osvf_matrix(sys, Q, R, P)
        lam_m = np.linalg.eigvalsh(blk.M)[0]
        lam_p = np.linalg.eigvalsh(o.M_P)[0]
        if min(abs(lam_m), abs(lam_p)) < 1e-9:
            continue
        assert (lam_m > 0) == (lam_p > 0)
        assert schur_positive_definite(blk) == (lam_m > 0)
        agree += 1
    assert agree > 300


def test_dare_boundary_zero_osvf(cart_lin):
    P = solve_dare(cart_lin, Q_CART, R_CART)
    M_P = osvf_matrix(cart_lin, Q_CART, R_CART, P).M_P
    assert np.max(np.abs(M_P).sum(axis=1)) <= 1e-8 * np.max(np.abs(Q_CART).sum(axis=1))


def one_step_problem(sys, Q, R, P, U, omega=None):
    return OneStepProblem(AugmentedStageCost(QuadStageCost(Q, R), QuadTerminalCost(P), sys), U, omega)


def test_numeric_osvf_matches_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(200):
        sys, Q, R = random_instance(rng)
        L = rng.standard_normal((sys.n, sys.n))
        P = L @ L.T
        o = osvf_matrix(sys, Q, R, P)
        x = rng.standard_normal(sys.n)
        u_star = o.K_os @ x
        U = BoxSet.symmetric(np.abs(u_star) + 5)
        rep = one_step_problem(sys, Q, R, P, U).solve(x)
        scale = max(1.0, np.max(np.abs(u_star)))
        np.testing.assert_allclose(rep.z_star, u_star, atol=1e-6 * scale)
        assert rep.value == pytest.approx(o(x), rel=1e-6, abs=1e-9)


def test_numeric_osvf_infeasible(scalar_sys):
    prob = one_step_problem(scalar_sys, [[1]], [[1]], [[1]], BoxSet.symmetric([0.1]),
                            TerminalSet([[1.0]], 0.01))
    with pytest.raises(InfeasibleError):
        osvf_eval(prob, [3.0])


def test_one_step_gradients_fd(cart):
    from contractive_mpc.optim import fd_gradient, fd_jacobian
    from contractive_mpc.systems import linearize

    lin = linearize(cart, np.zeros(2), np.zeros(1))
    M_P = osvf_matrix(lin, Q_CART, R_CART, REF_P_PROP).M_P
    os_ = one_step_problem(cart, Q_CART, R_CART, REF_P_PROP, BoxSet.symmetric([4]),
                           TerminalSet(M_P, 5.0))
    rng = np.random.default_rng(8)
    for _ in range(100):
        prob = os_.problem(rng.uniform([-2, -3], [2, 3]))
        u = rng.uniform(-4, 4, size=1)
        np.testing.assert_allclose(prob.grad(u), fd_gradient(prob.objective, u), rtol=1e-5, atol=1e-7)
        np.testing.assert_allclose(prob.cons_jac(u), fd_jacobian(prob.cons, u), rtol=1e-5, atol=1e-7)


def test_sublevel_membership(cart_lin):
    assert sublevel_membership(TerminalSet(np.eye(2), 0.0), [0, 0])
    assert not sublevel_membership(TerminalSet(np.eye(2), 0.0), [1e-3, 0])
    M_P = osvf_matrix(cart_lin, Q_CART, R_CART, REF_P_PROP).M_P
    v = np.array([0.3, -1.0])
    x = v * np.sqrt(5.4823 / (v @ M_P @ v))
    assert sublevel_membership(TerminalSet(M_P, 5.4823), x)


def test_membership_monotone():
    rng = np.random.default_rng(9)
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    for x in rng.uniform(-3, 3, size=(200, 2)):
        if sublevel_membership(TerminalSet(S, 1.0), x):
            assert sublevel_membership(TerminalSet(S, 2.0), x)


def test_terminal_set_validation():
    with pytest.raises(ValueError):
        TerminalSet(np.eye(2), -1.0)
    with pytest.raises(ValueError):
        TerminalSet(np.diag([1.0, -1.0]), 1.0)


def test_sample_ellipsoid_inside_and_deterministic():
    region = TerminalSet(np.array([[2.0, 0.5], [0.5, 1.0]]), 3.0)
    pts = sample_ellipsoid(region, 500, seed=3)
    assert pts.shape == (500, 2)
    assert np.all(np.einsum("ij,jk,ik->i", pts, region.shape, pts) <= 3.0)
    np.testing.assert_array_equal(pts, sample_ellipsoid(region, 500, seed=3))


def test_ellipsoid_inside_box():
    assert ellipsoid_inside_box(TerminalSet(np.eye(2), 1.0), BoxSet.symmetric([1, 1]))
    assert not ellipsoid_inside_box(TerminalSet(np.eye(2), 1.01), BoxSet.symmetric([1, 1]))


def test_decrease_witness_scalar(scalar_sys):
    d, u = decrease_witness(scalar_sys, [[0.125]], [[-0.25]], [1.0], BoxSet.symmetric([4]))
    np.testing.assert_allclose(u, [-0.25])
    assert d == pytest.approx(0.125 - 0.125 * 0.25**2)


def test_decrease_witness_falls_back_to_search(scalar_sys):
    # the gain pushes the state away; the search over U still finds a decreasing input
    d, u = decrease_witness(scalar_sys, [[1.0]], [[2.0]], [1.0], BoxSet.symmetric([4]))
    assert d > 0.99 and abs(u[0] + 0.5) < 1e-4


def test_verify_clf_scalar(scalar_sys):
    o = osvf_matrix(scalar_sys, [[1]], [[1]], [[1]])
    cert = verify_clf(scalar_sys, o, TerminalSet(o.M_P, 0.125 * 9), BoxSet.symmetric([5]),
                      BoxSet.symmetric([4]), n_samples=200)
    assert cert.verified and cert.decrease_margin > 0 and cert.witness is None
    assert cert.lower_bound == pytest.approx(0.125)
    assert set(cert.to_json()) == {"lambda_min", "lambda_max", "margin", "samples", "verified"}


def test_verify_clf_dare_fails(cart_lin):
    P = solve_dare(cart_lin, Q_CART, R_CART)
    o = osvf_matrix(cart_lin, Q_CART, R_CART, P)
    cert = verify_clf(cart_lin, o, TerminalSet(np.eye(2), 1.0), BoxSet.symmetric([2, 3]),
                      BoxSet.symmetric([4]), n_samples=10)
    assert not cert.verified and cert.samples_checked == 0


def test_verify_clf_reports_witness(scalar_sys):
    # unstable plant with a small input box: large states cannot be pulled inwards
    sys = LinearSystem([[2.0]], [[1.0]])
    o = osvf_matrix(sys, [[1]], [[1]], [[0.0]])
    cert = verify_clf(sys, o, TerminalSet(o.M_P, 4.0), BoxSet.symmetric([3]),
                      BoxSet.symmetric([0.5]), n_samples=100)
    assert not cert.verified
    assert cert.witness is not None and abs(cert.witness[0]) > 0.5
    assert "witness" in cert.to_json()
