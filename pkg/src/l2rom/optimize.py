"""L2 fitting of structured reduced models.

Objective and gradient evaluation over weighted sample sets, gradients with
respect to Kronecker factors, a quasi-Newton fitter with Armijo backtracking,
and two initializers (tangential rational Krylov for LTI systems, greedy
reduced basis for stationary affine systems).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    SampleSet,
    SingularOperatorError,
    StructuredRom,
    batch_states,
    check_conjugation_closure,
    eval_family,
    kron_rom,
    lti_rom,
    stationary_rom,
)
from .spectral import pole_residue_lti

__all__ = [
    "GradientBundle",
    "FitOptions",
    "FitTrace",
    "l2_objective",
    "l2_gradients",
    "kron_factor_gradient",
    "l2_gradients_kron",
    "fit",
    "irka_init",
    "greedy_rb_init",
]

# Imaginary parts of the gradient sums must cancel when the sample set is
# closed under conjugation; anything above this (relative) indicates a bug
# or a non-closed measure.
IMAG_CANCEL_RTOL = 1e-10


@dataclass(frozen=True)
class GradientBundle:
    """Gradients of the L2 objective with respect to the rom matrices."""

    dA: list  # real (r, r) arrays, one per A-term
    dB: list  # real (r, n_i) arrays
    dC: list  # real (n_o, r) arrays

    def norm(self):
        sq = 0.0
        for g in self.dA + self.dB + self.dC:
            sq += float(np.sum(g * g))
        return np.sqrt(sq)


@dataclass(frozen=True)
class KronGradientBundle:
    """Gradients with respect to the Kronecker factors and B, C."""

    dE: np.ndarray
    dA: np.ndarray
    dE_xi: np.ndarray
    dA_xi: np.ndarray
    dB: list
    dC: list

    def norm(self):
        sq = 0.0
        for g in [self.dE, self.dA, self.dE_xi, self.dA_xi] + self.dB + self.dC:
            sq += float(np.sum(g * g))
        return np.sqrt(sq)


@dataclass(frozen=True)
class FitOptions:
    max_iters: int = 200
    grad_tol: float = 1e-8  # relative to the initial gradient norm
    step_init: float = 1.0
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    min_step: float = 1e-16
    method: str = "quasi-newton"  # or "steepest-descent"
    memory: int = 10

    def __post_init__(self):
        if self.grad_tol <= 0 or self.step_init <= 0 or self.min_step <= 0:
            raise ValueError("tolerances and steps must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")
        if self.method not in ("quasi-newton", "steepest-descent"):
            raise ValueError("method must be 'quasi-newton' or 'steepest-descent'")


@dataclass
class FitTrace:
    """Per-iteration record of a fit run plus the final model."""

    objectives: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    rom: StructuredRom | None = None
    converged: bool = False
    iterations: int = 0
    message: str = ""


def l2_objective(rom, data):
    """Weighted squared misfit sum_i rho_i ||Y_i - yhat(p_i)||_F^2."""
    _, _, y_hat = batch_states(rom, data.points)
    err = y_hat - data.values
    return float(np.sum(data.weights * np.sum(np.abs(err) ** 2, axis=(1, 2))))


def _realify(grads, closed, what, gross):
    """Drop the imaginary parts after checking that they cancel.

    ``gross`` is the magnitude of the summands before cancellation; the
    leftover imaginary parts are round-off relative to that scale, not to
    the (possibly tiny) gradient itself.
    """
    scale = max(max(np.max(np.abs(g)) for g in grads), gross, 1e-300)
    imag = max(np.max(np.abs(g.imag)) for g in grads)
    if imag > IMAG_CANCEL_RTOL * scale:
        if closed:
            raise ValueError(
                f"{what} gradients have non-cancelling imaginary parts "
                f"({imag:.2e} vs scale {scale:.2e}) despite conjugation-closed data"
            )
        warnings.warn(
            f"{what} gradients have imaginary parts {imag:.2e} (scale {scale:.2e}); "
            "the sample set is not closed under conjugation, taking real parts",
            stacklevel=3,
        )
    return [np.ascontiguousarray(g.real) for g in grads]


def _complex_gradients(rom, data):
    """Per-term complex gradient sums before realification.

    Also returns the magnitude of the largest summand stack (the scale
    against which imaginary-part cancellation is judged).
    """
    x, x_d, y_hat = batch_states(rom, data.points)
    err = y_hat - data.values  # (N, n_o, n_i)
    w = 2.0 * data.weights

    e_mag = np.max(np.abs(err), axis=(1, 2))
    x_mag = np.max(np.abs(x), axis=(1, 2))
    d_mag = np.max(np.abs(x_d), axis=(1, 2))
    gross = 0.0

    dA = []
    for fam, _ in rom.A_terms:
        coeff = w * np.conj(eval_family(fam, data.points))
        # x_d (p) [y - yhat] x(p)^*
        dA.append(np.einsum("n,nro,noi,nsi->rs", coeff, x_d, -err, np.conj(x)))
        gross = max(gross, float(np.sum(np.abs(coeff) * d_mag * e_mag * x_mag)))
    dB = []
    for fam, _ in rom.B_terms:
        coeff = w * np.conj(eval_family(fam, data.points))
        dB.append(np.einsum("n,nro,noi->ri", coeff, x_d, err))
        gross = max(gross, float(np.sum(np.abs(coeff) * d_mag * e_mag)))
    dC = []
    for fam, _ in rom.C_terms:
        coeff = w * np.conj(eval_family(fam, data.points))
        dC.append(np.einsum("n,noi,nri->or", coeff, err, np.conj(x)))
        gross = max(gross, float(np.sum(np.abs(coeff) * e_mag * x_mag)))
    return dA, dB, dC, gross


def l2_gradients(rom, data, closed=None):
    """Gradients of l2_objective with respect to every rom matrix.

    ``closed`` states whether the sample set is conjugation-closed (checked
    here when None).  Closure makes the imaginary parts of the gradient sums
    cancel; they are verified small and dropped.  Non-closed data only earns
    a warning.
    """
    if closed is None:
        closed, _ = check_conjugation_closure(data)
    dA, dB, dC, gross = _complex_gradients(rom, data)
    k = len(dA)
    m = len(dB)
    real = _realify(dA + dB + dC, closed, "matrix", gross)
    return GradientBundle(dA=real[:k], dB=real[k : k + m], dC=real[k + m :])


def kron_factor_gradient(grad_f, side, factor, split=None):
    """Gradient with respect to one Kronecker factor of X = L kron R.

    Given the gradient ``grad_f`` of a scalar function at X, returns the
    gradient with respect to L (side="left", ``factor`` = R held fixed) or
    with respect to R (side="right", ``factor`` = L held fixed).  The left
    case is sum_j (I kron e_j^T B_L^*) grad_f (I kron B_R^* e_j) for any
    factorization factor = B_L B_R; the result is split-independent, and the
    default contracts against the factor directly.
    """
    factor = np.atleast_2d(np.asarray(factor))
    grad_f = np.asarray(grad_f)
    if np.max(np.abs(factor)) == 0:
        raise ValueError("the fixed Kronecker factor must be nonzero")
    m = factor.shape[0]
    if grad_f.shape[0] % m or grad_f.shape[1] % factor.shape[1]:
        raise ValueError("gradient shape is not divisible by the fixed factor shape")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if side == "left":
        n = grad_f.shape[0] // m
        g4 = grad_f.reshape(n, m, grad_f.shape[1] // factor.shape[1], factor.shape[1])
    else:
        n = grad_f.shape[0] // factor.shape[0]
        g4 = grad_f.reshape(factor.shape[0], n, factor.shape[1], grad_f.shape[1] // factor.shape[1])
    if split is not None:
        b_left, b_right = (np.atleast_2d(np.asarray(b)) for b in split)
        if np.max(np.abs(b_left @ b_right - factor)) > 1e-12 * max(np.max(np.abs(factor)), 1.0):
            raise ValueError("split factors do not multiply to the fixed factor")
        # explicit sum over the inner index j of the factorization
        if side == "left":
            return np.einsum("ja,kalb,bj->kl", b_left.conj().T, g4, b_right.conj().T)
        return np.einsum("jk,kalb,lj->ab", b_left.conj().T, g4, b_right.conj().T)
    if side == "left":
        return np.einsum("ab,kalb->kl", np.conj(factor), g4)
    return np.einsum("kl,kalb->ab", np.conj(factor), g4)


def l2_gradients_kron(rom, data, closed=None):
    """Gradients with respect to the Kronecker factors E, A, E_xi, A_xi.

    Chains the four operator-term gradients of the structured operator
    (sE - A) kron (xi E_xi - A_xi) through kron_factor_gradient.
    """
    ks = rom.kron
    if ks is None:
        raise ValueError("rom has no Kronecker structure")
    if closed is None:
        closed, _ = check_conjugation_closure(data)
    dA_big, dB, dC, gross = _complex_gradients(rom, data)
    g_ee, g_ea, g_ae, g_aa = dA_big  # terms s*xi, -s, -xi, 1
    dE = kron_factor_gradient(g_ee, "left", ks.E_xi) + kron_factor_gradient(g_ea, "left", ks.A_xi)
    dA = kron_factor_gradient(g_ae, "left", ks.E_xi) + kron_factor_gradient(g_aa, "left", ks.A_xi)
    dE_xi = kron_factor_gradient(g_ee, "right", ks.E) + kron_factor_gradient(g_ae, "right", ks.A)
    dA_xi = kron_factor_gradient(g_ea, "right", ks.E) + kron_factor_gradient(g_aa, "right", ks.A)
    m = len(dB)
    factor_mag = max(np.max(np.abs(f)) for f in (ks.E, ks.A, ks.E_xi, ks.A_xi))
    real = _realify(
        [dE, dA, dE_xi, dA_xi] + dB + dC, closed, "Kronecker-factor", gross * max(1.0, factor_mag)
    )
    return KronGradientBundle(
        dE=real[0], dA=real[1], dE_xi=real[2], dA_xi=real[3], dB=real[4 : 4 + m], dC=real[4 + m :]
    )


def _pack_rom(rom):
    if rom.kron is not None:
        ks = rom.kron
        mats = [ks.E, ks.A, ks.E_xi, ks.A_xi]
    else:
        mats = [m for _, m in rom.A_terms]
    mats += [m for _, m in rom.B_terms] + [m for _, m in rom.C_terms]
    return np.concatenate([m.ravel() for m in mats])


def _unpack_rom(template, vec):
    mats = []
    if template.kron is not None:
        ks = template.kron
        shapes = [ks.E.shape, ks.A.shape, ks.E_xi.shape, ks.A_xi.shape]
    else:
        shapes = [m.shape for _, m in template.A_terms]
    shapes += [m.shape for _, m in template.B_terms] + [m.shape for _, m in template.C_terms]
    pos = 0
    for shp in shapes:
        size = int(np.prod(shp))
        mats.append(vec[pos : pos + size].reshape(shp))
        pos += size
    if template.kron is not None:
        e, a, e_xi, a_xi = mats[:4]
        b = mats[4]
        c = mats[5]
        return kron_rom(e, a, e_xi, a_xi, b, c)
    n_a = len(template.A_terms)
    n_b = len(template.B_terms)
    return StructuredRom(
        A_terms=tuple((fam, m) for (fam, _), m in zip(template.A_terms, mats[:n_a])),
        B_terms=tuple((fam, m) for (fam, _), m in zip(template.B_terms, mats[n_a : n_a + n_b])),
        C_terms=tuple((fam, m) for (fam, _), m in zip(template.C_terms, mats[n_a + n_b :])),
    )


def _pack_grads(bundle):
    if isinstance(bundle, KronGradientBundle):
        mats = [bundle.dE, bundle.dA, bundle.dE_xi, bundle.dA_xi] + bundle.dB + bundle.dC
    else:
        mats = bundle.dA + bundle.dB + bundle.dC
    return np.concatenate([m.ravel() for m in mats])


def _lbfgs_direction(grad, pairs):
    """Two-loop recursion over (s, y) pairs; falls back to steepest descent."""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def fit(init, data, opts=None):
    """Minimize the weighted L2 misfit over the rom matrices.

    Quasi-Newton (limited-memory) or steepest descent with Armijo
    backtracking; the objective trace is monotone non-increasing.  A trial
    step that makes the operator singular at some sample point is rejected
    by the line search.  Returns a FitTrace carrying the final rom.
    """
    if opts is None:
        opts = FitOptions()
    closed, _ = check_conjugation_closure(data)

    def objective(vec):
        try:
            val = l2_objective(_unpack_rom(init, vec), data)
        except SingularOperatorError:
            return np.inf
        return val if np.isfinite(val) else np.inf

    def gradient(vec):
        rom = _unpack_rom(init, vec)
        if rom.kron is not None:
            return _pack_grads(l2_gradients_kron(rom, data, closed=closed))
        return _pack_grads(l2_gradients(rom, data, closed=closed))

    trace = FitTrace()
    x = _pack_rom(init)
    f_x = objective(x)
    if not np.isfinite(f_x):
        raise SingularOperatorError(data.points, 0.0)
    g = gradient(x)
    g_ref = np.linalg.norm(g)
    trace.objectives.append(f_x)
    trace.grad_norms.append(float(g_ref))

    pairs = []
    best_x, best_f = x, f_x
    for it in range(opts.max_iters):
        g_norm = np.linalg.norm(g)
        if g_norm <= opts.grad_tol * g_ref:
            trace.converged = True
            trace.message = "gradient tolerance reached"
            break

        if opts.method == "quasi-newton":
            d = _lbfgs_direction(g, pairs)
        else:
            d = -g
        slope = np.dot(g, d)
        if slope >= 0:  # not a descent direction: reset curvature memory
            pairs.clear()
            d = -g
            slope = np.dot(g, d)

        t = opts.step_init
        f_new = objective(x + t * d)
        while not (np.isfinite(f_new) and f_new <= f_x + opts.sufficient_decrease * t * slope):
            t *= opts.backtrack
            if t < opts.min_step:
                break
            f_new = objective(x + t * d)
        if t < opts.min_step:
            trace.message = "line search failed; returning best iterate"
            break

        x_new = x + t * d
        g_new = gradient(x_new)
        s, y = x_new - x, g_new - g
        sy = np.dot(s, y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > opts.memory:
                pairs.pop(0)
        x, f_x, g = x_new, f_new, g_new
        if f_x < best_f:
            best_x, best_f = x, f_x
        trace.objectives.append(f_x)
        trace.grad_norms.append(float(np.linalg.norm(g)))
        trace.step_lengths.append(float(t))
        trace.iterations = it + 1
    else:
        trace.message = "maximum iterations reached"

    trace.rom = _unpack_rom(init, best_x if best_f < f_x else x)
    return trace


def _mirror(poles, time_domain):
    if time_domain == "dt":
        sig = 1.0 / np.conj(poles)
        bad = np.abs(sig) <= 1.0
        sig[bad] = 1.0 / np.conj(sig[bad])  # reflect back outside the unit circle
        return sig
    sig = -np.conj(poles)
    bad = sig.real <= 0
    sig[bad] = -np.conj(sig[bad])  # reflect unstable mirror images into the RHP
    return sig


def _realify_basis(shifts, cols):
    """Real basis spanning the columns at a conjugation-closed shift set.

    Real shifts keep their (real) column; each conjugate pair contributes the
    real and imaginary parts of the member with positive imaginary part.
    """
    n, r = cols.shape
    out = np.zeros((n, r))
    used = np.zeros(r, dtype=bool)
    scale = max(np.max(np.abs(shifts)), 1.0)
    j = 0
    for k in range(r):
        if used[k]:
            continue
        if abs(shifts[k].imag) <= 1e-10 * scale:
            out[:, j] = cols[:, k].real
            used[k] = True
            j += 1
            continue
        partner = None
        for l in range(k + 1, r):
            if not used[l] and abs(shifts[l] - np.conj(shifts[k])) <= 1e-8 * scale:
                partner = l
                break
        lead = cols[:, k] if shifts[k].imag > 0 else np.conj(cols[:, k])
        out[:, j] = lead.real
        used[k] = True
        j += 1
        if partner is not None and j < r:
            out[:, j] = lead.imag
            used[partner] = True
            j += 1
    return out[:, :j]


def _orth(mat):
    q, _ = np.linalg.qr(mat)
    return q


def irka_init(E, A, B, C, r, tol=1e-10, max_iters=200, time_domain="ct", seed=0):
    """Tangential rational Krylov fixed-point iteration for LTI systems.

    Iterates Petrov-Galerkin projection at the mirror images of the current
    reduced poles, with tangential directions from the residue factors, until
    the relative pole movement drops below ``tol``.  Returns an order-r LTI
    StructuredRom; a non-converged run returns the last iterate.
    """
    E = np.asarray(E, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if r >= n:
        return lti_rom(E, A, B, C)

    rng = np.random.default_rng(seed)
    # Galerkin projection onto a random subspace seeds the pole iteration.
    v0 = _orth(rng.standard_normal((n, r)))
    lam0 = np.linalg.eigvals(np.linalg.solve(v0.T @ E @ v0, v0.T @ A @ v0))
    shifts = _mirror(lam0, time_domain)
    b_dirs = np.ones((r, B.shape[1]), dtype=complex)
    c_dirs = np.ones((r, C.shape[0]), dtype=complex)

    rom = None
    for _ in range(max_iters):
        v_cols = np.zeros((n, r), dtype=complex)
        w_cols = np.zeros((n, r), dtype=complex)
        for k in range(r):
            op = shifts[k] * E - A
            v_cols[:, k] = np.linalg.solve(op, B @ b_dirs[k])
            w_cols[:, k] = np.linalg.solve(op.conj().T, C.conj().T @ c_dirs[k])
        v = _orth(_realify_basis(shifts, v_cols))
        w = _orth(_realify_basis(shifts, w_cols))
        e_r = w.T @ E @ v
        rom = lti_rom(e_r, w.T @ A @ v, w.T @ B, C @ v)
        pr = pole_residue_lti(e_r, w.T @ A @ v, w.T @ B, C @ v)
        new_shifts = _mirror(pr.poles, time_domain)
        # match old and new shifts greedily for the movement measure
        move = 0.0
        remaining = list(range(r))
        for k in range(r):
            dists = [abs(new_shifts[k] - shifts[l]) for l in remaining]
            l = remaining.pop(int(np.argmin(dists)))
            move = max(move, abs(new_shifts[k] - shifts[l]))
        scale = max(np.max(np.abs(new_shifts)), 1e-300)
        shifts = new_shifts
        b_dirs = pr.right_factors
        c_dirs = pr.left_factors
        if move <= tol * scale:
            break
    return rom


def greedy_rb_init(fom, r, candidates):
    """Greedy reduced-basis initializer for affine stationary systems.

    ``fom`` must expose real matrices A1, A2, B, C with the map
    y(p) = C (A1 + p A2)^{-1} B.  Snapshots are taken at the candidates
    maximizing the current output error; one-sided Galerkin projection.
    """
    a1, a2, b, c = fom.A1, fom.A2, np.atleast_2d(fom.B), np.atleast_2d(fom.C)
    candidates = np.unique(np.asarray(candidates, dtype=float))
    if len(candidates) == 0:
        raise ValueError("at least one candidate parameter point is required")

    y_full = np.stack([c @ np.linalg.solve(a1 + p * a2, b) for p in candidates])

    basis = None
    chosen = []
    for _ in range(r):
        if basis is None:
            errs = np.max(np.abs(y_full), axis=(1, 2))
        else:
            a1_r = basis.T @ a1 @ basis
            a2_r = basis.T @ a2 @ basis
            b_r = basis.T @ b
            c_r = c @ basis
            y_red = np.stack(
                [c_r @ np.linalg.solve(a1_r + p * a2_r, b_r) for p in candidates]
            )
            errs = np.max(np.abs(y_full - y_red), axis=(1, 2))
        errs[chosen] = -1.0
        pick = int(np.argmax(errs))
        snapshot = np.linalg.solve(a1 + candidates[pick] * a2, b)
        chosen.append(pick)
        cols = snapshot if basis is None else np.hstack([basis, snapshot])
        q, rr = np.linalg.qr(cols)
        keep = np.abs(np.diag(rr)) > 1e-12 * max(np.max(np.abs(np.diag(rr))), 1e-300)
        new_basis = q[:, keep]
        if basis is not None and new_basis.shape[1] == basis.shape[1]:
            continue  # snapshot already in span
        basis = new_basis
        if len(chosen) >= len(candidates):
            break
    if basis.shape[1] < r:
        warnings.warn(
            f"only {basis.shape[1]} independent snapshots found; reduced order lowered",
            stacklevel=2,
        )
    return stationary_rom(basis.T @ a1 @ basis, basis.T @ a2 @ basis, basis.T @ b, c @ basis)
