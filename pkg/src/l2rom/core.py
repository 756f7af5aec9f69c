"""Data model for structured reduced-order maps and their evaluation.

A structured reduced model (STROM) is a parameter-separable system

    A(p) x(p) = B(p),    y(p) = C(p) x(p),

where each operator is a sum of scalar functions of the parameter times
constant real matrices.  The scalar functions are signed monomials in the
parameter coordinates (constants, s, xi, s*xi, p, ...), which keeps the
family closed under conjugation when coefficients are real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScalarFamily",
    "StructuredRom",
    "KronStructure",
    "SampleSet",
    "FomEvaluator",
    "SingularOperatorError",
    "eval_family",
    "assemble_operator",
    "evaluate_output",
    "evaluate_dual",
    "check_conjugation_closure",
    "lti_rom",
    "stationary_rom",
    "kron_rom",
]

RCOND_FLOOR = 1e-14


class SingularOperatorError(ValueError):
    """A(p) is numerically singular at the requested parameter point.

    Carries the reciprocal condition estimate of the assembled operator.
    """

    def __init__(self, p, rcond):
        self.p = p
        self.rcond = rcond
        super().__init__(
            f"operator singular at p={p} (reciprocal condition estimate {rcond:.2e})"
        )


@dataclass(frozen=True)
class ScalarFamily:
    """Signed-monomial scalar function of the parameter coordinates.

    ``terms`` is a tuple of (coefficient, exponent multi-index) pairs;
    the value at p is sum(coeff * prod(p_d ** e_d)).  Coefficients are
    real so the family is closed under conjugation.
    """

    terms: tuple
    n_p: int = 1

    def __post_init__(self):
        for coeff, exps in self.terms:
            if len(exps) != self.n_p:
                raise ValueError("exponent multi-index length must equal n_p")
            if any(e < 0 or int(e) != e for e in exps):
                raise ValueError("exponents must be non-negative integers")

    @staticmethod
    def constant(value, n_p=1):
        return ScalarFamily(((float(value), (0,) * n_p),), n_p)

    @staticmethod
    def coordinate(d, n_p=1, sign=1.0):
        exps = tuple(1 if i == d else 0 for i in range(n_p))
        return ScalarFamily(((float(sign), exps),), n_p)


def eval_family(family, p):
    """Evaluate a ScalarFamily at one point (shape (n_p,)) or a batch (N, n_p)."""
    p = np.asarray(p, dtype=complex)
    if p.ndim == 0:
        p = p[None]
    if p.shape[-1] != family.n_p:
        raise ValueError(
            f"parameter point has {p.shape[-1]} coordinates, family expects {family.n_p}"
        )
    out = np.zeros(p.shape[:-1], dtype=complex)
    for coeff, exps in family.terms:
        term = np.full(p.shape[:-1], complex(coeff))
        for d, e in enumerate(exps):
            if e:
                term = term * p[..., d] ** e
        out += term
    return out


@dataclass(frozen=True)
class KronStructure:
    """Factors of the Kronecker-structured operator (sE - A) kron (xi*E_xi - A_xi)."""

    E: np.ndarray
    A: np.ndarray
    E_xi: np.ndarray
    A_xi: np.ndarray

    @property
    def r_s(self):
        return self.E.shape[0]

    @property
    def r_xi(self):
        return self.E_xi.shape[0]


@dataclass(frozen=True)
class StructuredRom:
    """Parameter-separable reduced model with real coefficient matrices."""

    A_terms: tuple  # of (ScalarFamily, (r, r) array)
    B_terms: tuple  # of (ScalarFamily, (r, n_i) array)
    C_terms: tuple  # of (ScalarFamily, (n_o, r) array)
    kron: KronStructure | None = None

    def __post_init__(self):
        r = self.r
        for fam, mat in self.A_terms + self.B_terms + self.C_terms:
            if np.iscomplexobj(mat):
                raise ValueError("STROM matrices must be real-valued")
            if fam.n_p != self.n_p:
                raise ValueError("all scalar families must share the same arity")
        for _, mat in self.A_terms:
            if mat.shape != (r, r):
                raise ValueError("A-term matrices must be square of size r")
        if self.kron is not None:
            ks = self.kron
            if ks.r_s * ks.r_xi != r:
                raise ValueError("kron structure size must match reduced order")

    @property
    def r(self):
        return self.A_terms[0][1].shape[0]

    @property
    def n_i(self):
        return self.B_terms[0][1].shape[1]

    @property
    def n_o(self):
        return self.C_terms[0][1].shape[0]

    @property
    def n_p(self):
        return self.A_terms[0][0].n_p


def _terms_batch(terms, pts):
    """Sum_i f_i(p) M_i for a batch of points; returns (N, *M.shape)."""
    vals = None
    for fam, mat in terms:
        coeffs = eval_family(fam, pts)  # (N,)
        contrib = coeffs[:, None, None] * mat[None, :, :]
        vals = contrib if vals is None else vals + contrib
    return vals


def assemble_operator(rom, p, block):
    """Evaluate the A, B or C operator of a STROM at one parameter point."""
    terms = {"A": rom.A_terms, "B": rom.B_terms, "C": rom.C_terms}.get(block)
    if terms is None:
        raise ValueError(f"unknown block {block!r}, expected 'A', 'B' or 'C'")
    pts = np.atleast_1d(np.asarray(p, dtype=complex)).reshape(1, -1)
    return _terms_batch(terms, pts)[0]


def _solve_checked(op, rhs, p):
    rcond = _rcond_estimate(op)
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularOperatorError(p, rcond)
    return np.linalg.solve(op, rhs)


def _rcond_estimate(op):
    norm = np.linalg.norm(op, 1)
    if norm == 0:
        return 0.0
    try:
        inv_norm = np.linalg.norm(np.linalg.inv(op), 1)
    except np.linalg.LinAlgError:
        return 0.0
    return 1.0 / (norm * inv_norm)


def evaluate_output(rom, p, return_state=False):
    """y(p) = C(p) A(p)^{-1} B(p); optionally also the primal state x(p)."""
    op = assemble_operator(rom, p, "A")
    rhs = assemble_operator(rom, p, "B")
    x = _solve_checked(op, rhs, p)
    y = assemble_operator(rom, p, "C") @ x
    if return_state:
        return y, x
    return y


def evaluate_dual(rom, p):
    """Dual state x_d(p) solving A(p)^* x_d = C(p)^*; shape (r, n_o)."""
    op = assemble_operator(rom, p, "A")
    cop = assemble_operator(rom, p, "C")
    return _solve_checked(op.conj().T, cop.conj().T, p)


def batch_states(rom, pts):
    """Primal and dual states plus outputs for a batch of points.

    Returns (x, x_d, y) with shapes (N, r, n_i), (N, r, n_o), (N, n_o, n_i).
    Raises SingularOperatorError if any A(p) is singular.
    """
    pts = np.asarray(pts, dtype=complex)
    ops = _terms_batch(rom.A_terms, pts)
    rhs = _terms_batch(rom.B_terms, pts)
    cops = _terms_batch(rom.C_terms, pts)
    try:
        x = np.linalg.solve(ops, rhs)
        x_d = np.linalg.solve(np.conj(np.swapaxes(ops, -1, -2)), np.conj(np.swapaxes(cops, -1, -2)))
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(pts, 0.0) from exc
    y = cops @ x
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x_d))):
        raise SingularOperatorError(pts, 0.0)
    return x, x_d, y


@dataclass(frozen=True)
class SampleSet:
    """Weighted parameter/output samples defining a discrete measure."""

    points: np.ndarray  # (N, n_p) complex
    values: np.ndarray  # (N, n_o, n_i) complex
    weights: np.ndarray  # (N,) positive real

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=complex)))
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.points) != len(self.values) or len(self.points) != len(self.weights):
            raise ValueError("points, values and weights must have equal length")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    def __len__(self):
        return len(self.points)

    @property
    def n_p(self):
        return self.points.shape[1]

    @property
    def n_o(self):
        return self.values.shape[1]

    @property
    def n_i(self):
        return self.values.shape[2]


def check_conjugation_closure(samples, tol=1e-12):
    """Check that for every sample there is a conjugate partner.

    Returns (ok, violations) where violations lists the offending indices.
    """
    pts, vals, wts = samples.points, samples.values, samples.weights
    scale_p = max(1.0, float(np.max(np.abs(pts))))
    scale_v = max(1.0, float(np.max(np.abs(vals))))
    violations = []
    for i in range(len(samples)):
        dp = np.max(np.abs(pts - np.conj(pts[i])), axis=1)
        candidates = np.nonzero(dp <= tol * scale_p)[0]
        ok = False
        for j in candidates:
            if (
                np.max(np.abs(vals[j] - np.conj(vals[i]))) <= tol * scale_v
                and abs(wts[j] - wts[i]) <= tol * max(1.0, wts[i])
            ):
                ok = True
                break
        if not ok:
            violations.append(i)
    return (not violations), violations


class FomEvaluator:
    """Black-box full-order parameter-to-output map.

    ``evaluate`` maps a parameter point to a complex (n_o, n_i) matrix.
    ``partials``, when available, returns the list of the n_p first
    partial-derivative matrices at a point.  ``realization`` optionally
    carries affine state-space data (used by projection-based initializers).
    """

    def __init__(self, n_i, n_o, n_p, evaluate, partials=None, realization=None):
        self.n_i = n_i
        self.n_o = n_o
        self.n_p = n_p
        self._evaluate = evaluate
        self._partials = partials
        self.realization = realization

    def evaluate(self, p):
        return np.asarray(self._evaluate(np.atleast_1d(np.asarray(p, dtype=complex))), dtype=complex).reshape(self.n_o, self.n_i)

    @property
    def has_partials(self):
        return self._partials is not None

    def partials(self, p):
        if self._partials is None:
            raise ValueError("this full-order map does not provide partial derivatives")
        mats = self._partials(np.atleast_1d(np.asarray(p, dtype=complex)))
        return [np.asarray(m, dtype=complex).reshape(self.n_o, self.n_i) for m in mats]


def _as_real(mat, what):
    mat = np.asarray(mat)
    if np.iscomplexobj(mat):
        if np.max(np.abs(mat.imag)) > 0:
            raise ValueError(f"{what} must be real-valued")
        mat = mat.real
    return np.asarray(mat, dtype=float)


def lti_rom(E, A, B, C):
    """STROM for the LTI transfer function C (sE - A)^{-1} B."""
    E, A, B, C = (_as_real(m, "LTI matrix") for m in (E, A, B, C))
    s = ScalarFamily.coordinate(0)
    one = ScalarFamily.constant(1.0)
    return StructuredRom(
        A_terms=((s, E), (ScalarFamily.constant(-1.0), A)),
        B_terms=((one, np.atleast_2d(B)),),
        C_terms=((one, np.atleast_2d(C)),),
    )


def stationary_rom(A1, A2, B, C):
    """STROM for the stationary map C (A1 + p A2)^{-1} B."""
    A1, A2, B, C = (_as_real(m, "stationary matrix") for m in (A1, A2, B, C))
    one = ScalarFamily.constant(1.0)
    p = ScalarFamily.coordinate(0)
    return StructuredRom(
        A_terms=((one, A1), (p, A2)),
        B_terms=((one, np.atleast_2d(B)),),
        C_terms=((one, np.atleast_2d(C)),),
    )


def kron_rom(E, A, E_xi, A_xi, B, C):
    """STROM with operator (sE - A) kron (xi E_xi - A_xi) in p = (s, xi)."""
    E, A, E_xi, A_xi, B, C = (_as_real(m, "Kronecker factor") for m in (E, A, E_xi, A_xi, B, C))
    sxi = ScalarFamily(((1.0, (1, 1)),), 2)
    neg_s = ScalarFamily.coordinate(0, n_p=2, sign=-1.0)
    neg_xi = ScalarFamily.coordinate(1, n_p=2, sign=-1.0)
    one = ScalarFamily.constant(1.0, n_p=2)
    return StructuredRom(
        A_terms=(
            (sxi, np.kron(E, E_xi)),
            (neg_s, np.kron(E, A_xi)),
            (neg_xi, np.kron(A, E_xi)),
            (one, np.kron(A, A_xi)),
        ),
        B_terms=((one, np.atleast_2d(B)),),
        C_terms=((one, np.atleast_2d(C)),),
        kron=KronStructure(E, A, E_xi, A_xi),
    )
