"""Pencil diagonalization and pole-residue representations.

Covers the conversion from state-space data to partial-fraction (pole-residue)
form, including the singular-coefficient case that produces a constant term,
and the two-variable Kronecker-structured case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PoleResidue",
    "PoleResidue2D",
    "PencilDiag",
    "DefectivePencilError",
    "diagonalize_pencil",
    "pole_residue_lti",
    "pole_residue_affine_singular",
    "kron_pole_residue",
    "pole_residue_eval",
]

POLE_SEPARATION_RTOL = 1e-8
POLE_EVAL_SEPARATION = 1e-12


class DefectivePencilError(np.linalg.LinAlgError):
    """The pencil has clustered or defective eigenvalues."""


@dataclass(frozen=True)
class PencilDiag:
    """Diagonalization S^* E T = I, S^* A T = Lambda of a regular pencil."""

    eigenvalues: np.ndarray  # (r,) complex
    T: np.ndarray  # (r, r) right transformation
    S: np.ndarray  # (r, r) left transformation


@dataclass(frozen=True)
class PoleResidue:
    """Rational matrix function Phi0 + sum_j c_j b_j^* / (p - lambda_j)."""

    poles: np.ndarray  # (r,) complex, pairwise distinct
    left_factors: np.ndarray  # (r, n_o)
    right_factors: np.ndarray  # (r, n_i)
    constant: np.ndarray | None = None  # (n_o, n_i), zero if None

    def __post_init__(self):
        object.__setattr__(self, "poles", np.asarray(self.poles, dtype=complex))
        object.__setattr__(self, "left_factors", np.atleast_2d(np.asarray(self.left_factors, dtype=complex)))
        object.__setattr__(self, "right_factors", np.atleast_2d(np.asarray(self.right_factors, dtype=complex)))
        _check_distinct(self.poles)

    @property
    def n_o(self):
        return self.left_factors.shape[1]

    @property
    def n_i(self):
        return self.right_factors.shape[1]

    def constant_term(self):
        if self.constant is None:
            return np.zeros((self.n_o, self.n_i), dtype=complex)
        return np.asarray(self.constant, dtype=complex)


@dataclass(frozen=True)
class PoleResidue2D:
    """Two-variable form sum_ij c_ij b_ij^* / ((s - lambda_i)(xi - pi_j))."""

    s_poles: np.ndarray  # (r_s,)
    xi_poles: np.ndarray  # (r_xi,)
    left_factors: np.ndarray  # (r_s, r_xi, n_o)
    right_factors: np.ndarray  # (r_s, r_xi, n_i)

    def __post_init__(self):
        object.__setattr__(self, "s_poles", np.asarray(self.s_poles, dtype=complex))
        object.__setattr__(self, "xi_poles", np.asarray(self.xi_poles, dtype=complex))
        object.__setattr__(self, "left_factors", np.asarray(self.left_factors, dtype=complex))
        object.__setattr__(self, "right_factors", np.asarray(self.right_factors, dtype=complex))
        _check_distinct(self.s_poles)
        _check_distinct(self.xi_poles)

    @property
    def n_o(self):
        return self.left_factors.shape[2]

    @property
    def n_i(self):
        return self.right_factors.shape[2]


def _check_distinct(poles):
    if len(poles) < 2:
        return
    scale = max(np.max(np.abs(poles)), 1e-300)
    for i in range(len(poles)):
        sep = np.min(np.abs(np.delete(poles, i) - poles[i]))
        if sep < POLE_SEPARATION_RTOL * scale:
            raise DefectivePencilError(
                f"poles not pairwise distinct: separation {sep:.2e} at pole {poles[i]}"
            )


def diagonalize_pencil(E, A):
    """Diagonalize the pencil (E, A): S^* E T = I and S^* A T = Lambda.

    Requires E invertible and E^{-1} A diagonalizable with simple eigenvalues.
    """
    E = np.asarray(E, dtype=complex)
    A = np.asarray(A, dtype=complex)
    lam, T = np.linalg.eig(np.linalg.solve(E, A))
    _check_distinct(lam)
    # S^* = (E T)^{-1} enforces the first identity; the second follows from
    # the eigendecomposition of E^{-1} A.
    S = np.linalg.inv(E @ T).conj().T
    diag = PencilDiag(eigenvalues=lam, T=T, S=S)
    r = len(lam)
    res_e = np.linalg.norm(S.conj().T @ E @ T - np.eye(r))
    res_a = np.linalg.norm(S.conj().T @ A @ T - np.diag(lam))
    if res_e > 1e-10 * max(np.linalg.norm(E), 1e-300) or res_a > 1e-10 * max(np.linalg.norm(A), 1e-300):
        raise DefectivePencilError("pencil diagonalization residual too large (near-defective pencil)")
    return diag


def pole_residue_lti(E, A, B, C):
    """Pole-residue form of C (sE - A)^{-1} B with simple poles."""
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    diag = diagonalize_pencil(E, A)
    left = (C @ diag.T).T  # row j: c_j
    right = (B.T @ diag.S).T  # row j: b_j
    return PoleResidue(poles=diag.eigenvalues, left_factors=left, right_factors=right)


def _pole_residue_affine_symmetric(A1, A2, B, C, rank_rtol):
    """Symmetric-definite specialization of the affine pole-residue map.

    For symmetric A1 > 0 and symmetric A2 the generalized eigenproblem
    A2 X = A1 X D has A1-orthogonal eigenvectors, which stays stable when
    eigenvalues repeat.  Residues of clustered poles are merged; each merged
    residue must remain rank one to fit the c b^* representation.
    """
    import scipy.linalg

    d, X = scipy.linalg.eigh(A2, A1)  # X^T A1 X = I, X^T A2 X = diag(d)
    d_scale = max(np.max(np.abs(d)), 1e-300)
    nonzero = np.abs(d) > rank_rtol * d_scale
    if not np.any(nonzero):
        raise ValueError("A2 is numerically zero; the map has no finite poles")
    cx = C @ X  # (n_o, n)
    xb = X.T @ B  # (n, n_i)
    constant = cx[:, ~nonzero] @ xb[~nonzero, :]

    d_nz = d[nonzero]
    res_left = cx[:, nonzero] / d_nz  # residue of pole -1/d_i is (C x_i)(x_i^T B)/d_i
    res_right = xb[nonzero, :]
    candidates = -1.0 / d_nz

    order = np.argsort(candidates)
    candidates = candidates[order]
    res_left = res_left[:, order]
    res_right = res_right[order, :]
    scale = max(np.max(np.abs(candidates)), 1e-300)
    poles, lefts, rights = [], [], []
    i = 0
    while i < len(candidates):
        j = i + 1
        while j < len(candidates) and candidates[j] - candidates[j - 1] < POLE_SEPARATION_RTOL * scale:
            j += 1
        if j == i + 1:
            poles.append(candidates[i])
            lefts.append(res_left[:, i])
            rights.append(np.conj(res_right[i, :]))
        else:
            phi = res_left[:, i:j] @ res_right[i:j, :]
            u, s, vt = np.linalg.svd(phi)
            if s[0] > 0 and (len(s) > 1 and s[1] > 1e-10 * s[0]):
                raise DefectivePencilError(
                    "clustered poles carry a residue of rank > 1; no rank-1 "
                    "pole-residue form exists"
                )
            poles.append(float(np.mean(candidates[i:j])))
            lefts.append(u[:, 0] * s[0])
            rights.append(np.conj(vt[0, :]))
        i = j
    return PoleResidue(
        poles=np.asarray(poles, dtype=complex),
        left_factors=np.asarray(lefts, dtype=complex),
        right_factors=np.asarray(rights, dtype=complex),
        constant=constant.astype(complex),
    )


def pole_residue_affine_singular(A1, A2, B, C, rank_rtol=None):
    """Pole-residue form (with constant term) of C (A1 + p A2)^{-1} B.

    A2 may be rank-deficient; its numerical rank is determined from the
    singular values at threshold max(n) * eps * sigma_max unless a relative
    threshold is supplied.  Uses a low-rank update identity on A1; symmetric
    pencils with A1 positive definite take a symmetric eigensolver path that
    tolerates repeated eigenvalues.
    """
    A1 = np.asarray(A1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A1.shape[0]
    if rank_rtol is None:
        rank_rtol_eff = max(A2.shape) * np.finfo(float).eps
    else:
        rank_rtol_eff = rank_rtol

    sym_tol = 1e-12 * max(np.max(np.abs(A1)), np.max(np.abs(A2)), 1e-300)
    if np.max(np.abs(A1 - A1.T)) <= sym_tol and np.max(np.abs(A2 - A2.T)) <= sym_tol:
        try:
            np.linalg.cholesky(A1)
        except np.linalg.LinAlgError:
            pass
        else:
            return _pole_residue_affine_symmetric(A1, A2, B, C, rank_rtol_eff)

    W, sigma, Zt = np.linalg.svd(A2)
    n2 = int(np.sum(sigma > rank_rtol_eff * sigma[0]))
    if n2 == 0:
        raise ValueError("A2 is numerically zero; the map has no finite poles")
    U = W[:, :n2] * sigma[:n2]
    V = Zt[:n2, :].T

    A1_inv_B = np.linalg.solve(A1, B)
    A1_inv_U = np.linalg.solve(A1, U)
    C_U = C @ A1_inv_U
    B_V = V.T @ A1_inv_B

    M = V.T @ A1_inv_U
    d, T = np.linalg.eig(M)
    _check_distinct(d)
    if np.any(np.abs(d) < 1e-14 * max(np.max(np.abs(d)), 1e-300)):
        raise ValueError("zero eigenvalue in the reduced coupling matrix (pole at infinity)")

    constant = C @ A1_inv_B - C_U @ np.linalg.solve(M, B_V)
    T_inv_BV = np.linalg.solve(T, B_V)
    left = (C_U @ T).T  # row i: C_U T e_i
    right = np.conj(T_inv_BV / (d[:, None] ** 2))  # row i so that b_i^* = e_i^T T^{-1} B_V / d_i^2
    poles = -1.0 / d
    return PoleResidue(poles=poles, left_factors=left, right_factors=right, constant=constant)


def kron_pole_residue(E, A, E_xi, A_xi, B, C):
    """Two-variable pole-residue form of C [(sE - A) kron (xi E_xi - A_xi)]^{-1} B."""
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    ds = diagonalize_pencil(E, A)
    dxi = diagonalize_pencil(E_xi, A_xi)
    r_s, r_xi = len(ds.eigenvalues), len(dxi.eigenvalues)
    TT = np.kron(ds.T, dxi.T)
    SS = np.kron(ds.S, dxi.S)
    left = (C @ TT).T.reshape(r_s, r_xi, -1)
    right = (B.T @ SS).T.reshape(r_s, r_xi, -1)
    return PoleResidue2D(
        s_poles=ds.eigenvalues, xi_poles=dxi.eigenvalues, left_factors=left, right_factors=right
    )


def _guard_pole_distance(diffs, poles, p):
    scale = max(np.max(np.abs(poles)), 1.0)
    if np.min(np.abs(diffs)) < POLE_EVAL_SEPARATION * scale:
        raise ValueError(f"evaluation point {p} coincides with a pole")


def pole_residue_eval(pr, p, order=0, wrt=0):
    """Evaluate a pole-residue form (order 0) or a first partial (order 1).

    For 2-D forms ``wrt`` selects the variable (0 for s, 1 for xi).
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if isinstance(pr, PoleResidue2D):
        s, xi = p
        ds = s - pr.s_poles  # (r_s,)
        dxi = xi - pr.xi_poles  # (r_xi,)
        _guard_pole_distance(ds, pr.s_poles, s)
        _guard_pole_distance(dxi, pr.xi_poles, xi)
        if order == 0:
            coeff = 1.0 / (ds[:, None] * dxi[None, :])
        elif wrt == 0:
            coeff = -1.0 / (ds[:, None] ** 2 * dxi[None, :])
        else:
            coeff = -1.0 / (ds[:, None] * dxi[None, :] ** 2)
        return np.einsum("kl,klo,klm->om", coeff, pr.left_factors, np.conj(pr.right_factors))
    s = p[0]
    ds = s - pr.poles
    _guard_pole_distance(ds, pr.poles, s)
    coeff = 1.0 / ds if order == 0 else -1.0 / ds**2
    out = np.einsum("k,ko,km->om", coeff, pr.left_factors, np.conj(pr.right_factors))
    if order == 0 and pr.constant is not None:
        out = out + pr.constant_term()
    return out
