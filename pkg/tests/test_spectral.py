import numpy as np
import pytest

from l2rom.spectral import (
    DefectivePencilError,
    diagonalize_pencil,
    kron_pole_residue,
    pole_residue_affine_singular,
    pole_residue_eval,
    pole_residue_lti,
)

rng = np.random.default_rng(7)


def random_pencil(n, shift=-2.0):
    e = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    a = rng.standard_normal((n, n)) + shift * np.eye(n)
    return e, a


def test_diagonalize_pencil_identities():
    e, a = random_pencil(6)
    diag = diagonalize_pencil(e, a)
    assert np.linalg.norm(diag.S.conj().T @ e @ diag.T - np.eye(6)) <= 1e-10
    assert np.linalg.norm(diag.S.conj().T @ a @ diag.T - np.diag(diag.eigenvalues)) <= 1e-9


def test_diagonalize_rejects_jordan_block():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])  # defective
    with pytest.raises(DefectivePencilError):
        diagonalize_pencil(np.eye(2), a)


def test_pole_residue_lti_round_trip():
    n, n_i, n_o = 5, 2, 3
    e, a = random_pencil(n)
    b = rng.standard_normal((n, n_i))
    c = rng.standard_normal((n_o, n))
    pr = pole_residue_lti(e, a, b, c)
    for s in (1.0j, 0.5 + 2.0j, 3.0):
        direct = c @ np.linalg.solve(s * e - a, b)
        assert np.max(np.abs(pole_residue_eval(pr, s) - direct)) <= 1e-10 * np.max(np.abs(direct))


def test_pole_residue_eval_derivative_fd():
    e, a = random_pencil(4)
    pr = pole_residue_lti(e, a, rng.standard_normal((4, 1)), rng.standard_normal((1, 4)))
    s, h = 0.3 + 1.7j, 1e-6
    fd = (pole_residue_eval(pr, s + h) - pole_residue_eval(pr, s - h)) / (2 * h)
    der = pole_residue_eval(pr, s, order=1)
    assert np.max(np.abs(der - fd)) <= 1e-7 * max(np.max(np.abs(der)), 1.0)


def test_pole_residue_eval_guards_pole_collision():
    pr = pole_residue_lti(np.eye(2), np.diag([-1.0, -2.0]), np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        pole_residue_eval(pr, -1.0)


def test_affine_singular_matches_direct_solves():
    n = 8
    a1 = rng.standard_normal((n, n)) + 4 * np.eye(n)
    # rank-deficient second coefficient
    low = rng.standard_normal((n, 3))
    a2 = low @ low.T @ rng.standard_normal((n, n))
    b = rng.standard_normal((n, 2))
    c = rng.standard_normal((1, n))
    pr = pole_residue_affine_singular(a1, a2, b, c)
    assert len(pr.poles) == 3
    for p in (0.5, 1.3, 7.0):
        direct = c @ np.linalg.solve(a1 + p * a2, b)
        assert np.max(np.abs(pole_residue_eval(pr, p) - direct)) <= 1e-8 * np.max(np.abs(direct))


def test_affine_singular_constant_is_large_p_limit():
    # as p -> inf, C (A1 + p A2)^{-1} B tends to the constant term
    n = 6
    a1 = rng.standard_normal((n, n)) + 4 * np.eye(n)
    low = rng.standard_normal((n, 2))
    a2 = low @ rng.standard_normal((2, n))
    b = rng.standard_normal((n, 1))
    c = rng.standard_normal((1, n))
    pr = pole_residue_affine_singular(a1, a2, b, c)
    p = 1e9
    direct = c @ np.linalg.solve(a1 + p * a2, b)
    assert np.max(np.abs(pr.constant_term() - direct)) <= 1e-6 * max(np.max(np.abs(direct)), 1e-12)


def test_affine_singular_symmetric_path():
    # symmetric positive definite A1, symmetric singular A2 with repeated modes
    n = 7
    q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    a1 = q @ np.diag(rng.uniform(1.0, 3.0, n)) @ q.T
    a1 = 0.5 * (a1 + a1.T)
    d2 = np.array([2.0, 2.0, 1.0, 0.5, 0.0, 0.0, 0.0])
    a2 = q @ np.diag(d2) @ q.T
    a2 = 0.5 * (a2 + a2.T)
    # make a rank-one residue at the repeated eigenvalue: share the same output direction
    b = rng.standard_normal((n, 1))
    c = rng.standard_normal((1, n))
    pr = pole_residue_affine_singular(a1, a2, b, c)
    for p in (0.4, 2.0, 9.0):
        direct = c @ np.linalg.solve(a1 + p * a2, b)
        assert np.max(np.abs(pole_residue_eval(pr, p) - direct)) <= 1e-8 * np.max(np.abs(direct))


def test_affine_singular_no_constant_when_a2_invertible():
    n = 5
    a1 = np.diag(rng.uniform(1.0, 2.0, n))
    a2 = np.diag(rng.uniform(0.5, 1.5, n))
    pr = pole_residue_affine_singular(a1, a2, np.ones((n, 1)), np.ones((1, n)))
    assert np.max(np.abs(pr.constant_term())) <= 1e-12
    assert len(pr.poles) == n


def test_kron_pole_residue_round_trip_and_partials():
    rs, rx = 3, 2
    e, a = random_pencil(rs)
    e_xi, a_xi = random_pencil(rx, shift=1.5)
    b = rng.standard_normal((rs * rx, 2))
    c = rng.standard_normal((1, rs * rx))
    pr = kron_pole_residue(e, a, e_xi, a_xi, b, c)
    s, xi = 0.7 + 0.9j, np.exp(0.4j)
    direct = c @ np.linalg.solve(np.kron(s * e - a, xi * e_xi - a_xi), b)
    val = pole_residue_eval(pr, (s, xi))
    assert np.max(np.abs(val - direct)) <= 1e-10 * np.max(np.abs(direct))
    h = 1e-6
    for wrt in (0, 1):
        step = np.array([h, 0.0]) if wrt == 0 else np.array([0.0, h])
        pt = np.array([s, xi])
        fd = (pole_residue_eval(pr, pt + step) - pole_residue_eval(pr, pt - step)) / (2 * h)
        der = pole_residue_eval(pr, pt, order=1, wrt=wrt)
        assert np.max(np.abs(der - fd)) <= 1e-6 * max(np.max(np.abs(der)), 1.0)
