"""Residual certificates for interpolatory optimality conditions.

Each family of L2-optimal approximation problems comes with necessary
bitangential Hermite interpolation conditions.  The functions here evaluate
those conditions as relative residuals and collect them in a Certificate:

- H2_CT / H2_DT: tangential interpolation of the transfer function at the
  mirror images of the reduced poles (half-plane / unit-circle geometry).
- H2xL2: two-variable conditions at mirrored pole pairs, including the
  weighted derivative-sum conditions.
- DISCRETE_LS: Hermite interpolation between the modified transfer
  functions G and Ghat built from the sampling data.
- STATIONARY: Hermite interpolation of modified outputs Y and Yhat at the
  reduced poles themselves (not mirrored).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PoleResidue, PoleResidue2D, pole_residue_eval

__all__ = [
    "Certificate",
    "CertificateRow",
    "Interval",
    "h2_ct_residuals",
    "h2_dt_residuals",
    "h2l2_residuals",
    "modified_ls_tf_eval",
    "ls_residuals",
    "f_sigma_eval",
    "modified_output_eval",
    "stationary_residuals",
]

FAMILIES = ("H2_CT", "H2_DT", "H2xL2", "DISCRETE_LS", "STATIONARY")
NORM_FLOOR = 1e-300
# stationary poles must sit strictly outside [a, b] by this margin
STATIONARY_POLE_MARGIN = 1e-10


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("interval requires a < b")


@dataclass(frozen=True)
class CertificateRow:
    """Residuals of one interpolation condition instance."""

    label: str
    residuals: tuple  # of (condition name, relative residual)

    def max_residual(self):
        return max(v for _, v in self.residuals)


@dataclass(frozen=True)
class Certificate:
    family: str
    rows: tuple
    tolerance: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown certificate family {self.family!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def max_residual(self):
        return max(row.max_residual() for row in self.rows)

    @property
    def passed(self):
        return bool(self.max_residual <= self.tolerance)


def _rel(diff, ref):
    return float(np.linalg.norm(diff) / max(np.linalg.norm(ref), NORM_FLOOR))


def _fom_value(fom, p):
    return fom.evaluate(p)


def _fom_partial(fom, p, wrt=0):
    """First partial of the full-order map; analytic when available."""
    if fom.has_partials:
        return fom.partials(p)[wrt]
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    h = 1e-6 * (1.0 + abs(p[wrt]))

    def at(delta):
        q = p.copy()
        q[wrt] += delta
        return fom.evaluate(q)

    # 5-point central difference
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)


def _tangential_rows(fom, rom_pr, mirror):
    rows = []
    for k in range(len(rom_pr.poles)):
        sig = mirror(rom_pr.poles[k])
        b = rom_pr.right_factors[k]
        c = rom_pr.left_factors[k]
        h = _fom_value(fom, sig)
        h_hat = pole_residue_eval(rom_pr, sig)
        hd = _fom_partial(fom, sig)
        hd_hat = pole_residue_eval(rom_pr, sig, order=1)
        rows.append(
            CertificateRow(
                label=f"k={k}",
                residuals=(
                    ("right", _rel((h - h_hat) @ b, h @ b)),
                    ("left", _rel(c.conj() @ (h - h_hat), c.conj() @ h)),
                    ("hermite", _rel(c.conj() @ (hd - hd_hat) @ b, c.conj() @ hd @ b)),
                ),
            )
        )
    return tuple(rows)


def h2_ct_residuals(fom, rom_pr, tolerance=1e-6):
    """Interpolation residuals at -conj(lambda_k) for continuous-time H2.

    Per pole: right tangential H(sigma) b_k, left tangential c_k^* H(sigma),
    and bitangential Hermite c_k^* H'(sigma) b_k, each relative to the
    full-order-side magnitude.
    """
    if np.any(rom_pr.poles.real >= 0):
        raise ValueError("continuous-time certificate requires poles in the open left half-plane")
    rows = _tangential_rows(fom, rom_pr, lambda lam: -np.conj(lam))
    return Certificate(family="H2_CT", rows=rows, tolerance=tolerance)


def h2_dt_residuals(fom, rom_pr, tolerance=1e-4):
    """Interpolation residuals at 1/conj(lambda_k) for discrete-time h2."""
    if np.any(np.abs(rom_pr.poles) >= 1):
        raise ValueError("discrete-time certificate requires poles inside the open unit disk")
    rows = _tangential_rows(fom, rom_pr, lambda lam: 1.0 / np.conj(lam))
    return Certificate(family="H2_DT", rows=rows, tolerance=tolerance)


def h2l2_residuals(fom, rom2d, tolerance=1e-4):
    """Two-variable interpolation residuals at (-conj lambda_k, 1/conj pi_l).

    Per pole pair: right and left tangential conditions; per s-pole the
    pi-weighted sum of c_kj^* dH/ds b_kj over j; per xi-pole the sum of
    c_il^* dH/dxi b_il over i.
    """
    lam = rom2d.s_poles
    pi = rom2d.xi_poles
    if np.any(lam.real >= 0):
        raise ValueError("s-poles must lie in the open left half-plane")
    if np.any(np.abs(pi) <= 1):
        raise ValueError("xi-poles must lie outside the closed unit disk")
    sig = -np.conj(lam)
    eta = 1.0 / np.conj(pi)

    r_s, r_xi = len(lam), len(pi)
    h = np.empty((r_s, r_xi), dtype=object)
    h_hat = np.empty_like(h)
    hs = np.empty_like(h)
    hs_hat = np.empty_like(h)
    hxi = np.empty_like(h)
    hxi_hat = np.empty_like(h)
    for k in range(r_s):
        for l in range(r_xi):
            pt = np.array([sig[k], eta[l]])
            h[k, l] = _fom_value(fom, pt)
            h_hat[k, l] = pole_residue_eval(rom2d, pt)
            hs[k, l] = _fom_partial(fom, pt, wrt=0)
            hs_hat[k, l] = pole_residue_eval(rom2d, pt, order=1, wrt=0)
            hxi[k, l] = _fom_partial(fom, pt, wrt=1)
            hxi_hat[k, l] = pole_residue_eval(rom2d, pt, order=1, wrt=1)

    rows = []
    for k in range(r_s):
        for l in range(r_xi):
            b = rom2d.right_factors[k, l]
            c = rom2d.left_factors[k, l]
            rows.append(
                CertificateRow(
                    label=f"k={k},l={l}",
                    residuals=(
                        ("right", _rel((h[k, l] - h_hat[k, l]) @ b, h[k, l] @ b)),
                        ("left", _rel(c.conj() @ (h[k, l] - h_hat[k, l]), c.conj() @ h[k, l])),
                    ),
                )
            )
    for k in range(r_s):
        lhs = rhs = 0.0
        for j in range(r_xi):
            b = rom2d.right_factors[k, j]
            c = rom2d.left_factors[k, j]
            w = 1.0 / np.conj(pi[j])
            lhs = lhs + w * (c.conj() @ hs[k, j] @ b)
            rhs = rhs + w * (c.conj() @ hs_hat[k, j] @ b)
        rows.append(
            CertificateRow(label=f"s-sum k={k}", residuals=(("hermite-s", _rel(lhs - rhs, lhs)),))
        )
    for l in range(r_xi):
        lhs = rhs = 0.0
        for i in range(r_s):
            b = rom2d.right_factors[i, l]
            c = rom2d.left_factors[i, l]
            lhs = lhs + c.conj() @ hxi[i, l] @ b
            rhs = rhs + c.conj() @ hxi_hat[i, l] @ b
        rows.append(
            CertificateRow(label=f"xi-sum l={l}", residuals=(("hermite-xi", _rel(lhs - rhs, lhs)),))
        )
    return Certificate(family="H2xL2", rows=tuple(rows), tolerance=tolerance)


def modified_ls_tf_eval(data, rom_pr, s, order=0):
    """Evaluate G (rom_pr None) or Ghat at s for least-squares sampling data.

    G(s) = sum_i rho_i H_i / (s - iw_i); Ghat replaces H_i by the rom
    transfer function evaluated at the data nodes.  Order 1 gives the
    termwise derivative.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    nodes = data.points[:, 0]
    s = complex(s)
    diffs = s - nodes
    scale = max(np.max(np.abs(nodes)), 1.0)
    if np.min(np.abs(diffs)) < 1e-12 * scale:
        raise ValueError(f"evaluation point {s} coincides with a data node")
    if rom_pr is None:
        vals = data.values
    else:
        vals = np.stack([pole_residue_eval(rom_pr, z) for z in nodes])
    coeff = data.weights / diffs if order == 0 else -data.weights / diffs**2
    return np.einsum("n,noi->oi", coeff, vals)


def ls_residuals(data, rom_pr, tolerance=1e-6):
    """Hermite interpolation residuals of Ghat against G at -conj(lambda_k).

    Cross-checks the G/Ghat route against the direct weighted sums over the
    data (the two are algebraically identical and must agree to 1e-12).
    """
    nodes = data.points[:, 0]
    rom_at_nodes = np.stack([pole_residue_eval(rom_pr, z) for z in nodes])
    rows = []
    for k in range(len(rom_pr.poles)):
        sig = -np.conj(rom_pr.poles[k])
        b = rom_pr.right_factors[k]
        c = rom_pr.left_factors[k]
        g = modified_ls_tf_eval(data, None, sig)
        g_hat = modified_ls_tf_eval(data, rom_pr, sig)
        gd = modified_ls_tf_eval(data, None, sig, order=1)
        gd_hat = modified_ls_tf_eval(data, rom_pr, sig, order=1)

        # direct sums over the data, with denominators -iw_i - conj(lambda_k)
        den = -nodes - np.conj(rom_pr.poles[k])
        direct = [
            np.einsum("n,noi->oi", data.weights / den, data.values)
            - np.einsum("n,noi->oi", data.weights / den, rom_at_nodes),
            np.einsum("n,noi->oi", data.weights / den**2, data.values)
            - np.einsum("n,noi->oi", data.weights / den**2, rom_at_nodes),
        ]
        gg = [g - g_hat, -(gd - gd_hat)]  # G' carries the opposite sign of the squared sum
        scale = max(np.max(np.abs(g)), np.max(np.abs(gd)), NORM_FLOOR)
        for d, other in zip(direct, gg):
            if np.max(np.abs(d - other)) > 1e-12 * max(np.max(np.abs(d)), scale):
                raise RuntimeError(
                    "least-squares condition sums disagree between the direct and "
                    "modified-transfer-function forms"
                )
        rows.append(
            CertificateRow(
                label=f"k={k}",
                residuals=(
                    ("right", _rel((g - g_hat) @ b, g @ b)),
                    ("left", _rel(c.conj() @ (g - g_hat), c.conj() @ g)),
                    ("hermite", _rel(c.conj() @ (gd - gd_hat) @ b, c.conj() @ gd @ b)),
                ),
            )
        )
    return Certificate(family="DISCRETE_LS", rows=tuple(rows), tolerance=tolerance)


def f_sigma_eval(a, b, sigma, p, order=0):
    """The interval kernel function f_sigma(p) and its derivative.

    f_sigma(p) = (ln|(p-b)/(p-a)| - ln|(sigma-b)/(sigma-a)|) / (p - sigma)
    with the removable singularity filled in at p = sigma; continuously
    differentiable on R minus {a, b}.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    a, b, sigma, p = float(a), float(b), float(sigma), float(p)
    if not a < b:
        raise ValueError("interval requires a < b")
    guard = 1e-14 * (b - a)
    for name, val in (("sigma", sigma), ("p", p)):
        if min(abs(val - a), abs(val - b)) <= guard:
            raise ValueError(f"{name} must differ from the interval endpoints")

    log_p = np.log(abs((p - b) / (p - a)))
    log_s = np.log(abs((sigma - b) / (sigma - a)))
    near = abs(p - sigma) <= 1e-12 * (1.0 + abs(sigma))
    if order == 0:
        if near:
            return (b - a) / ((sigma - a) * (sigma - b))
        return (log_p - log_s) / (p - sigma)
    if near:
        return (b - a) * (a + b - 2 * sigma) / (2 * (sigma - a) ** 2 * (sigma - b) ** 2)
    return ((b - a) * (p - sigma) / ((p - a) * (p - b)) - log_p + log_s) / (p - sigma) ** 2


def _real_stationary_parts(pr, what):
    poles = pr.poles
    scale = max(np.max(np.abs(poles)), 1.0)
    if np.max(np.abs(poles.imag)) > 1e-8 * scale:
        raise ValueError(f"{what} poles must be real for the stationary certificate")
    residues = np.einsum("ko,ki->koi", pr.left_factors, np.conj(pr.right_factors))
    res_scale = max(np.max(np.abs(residues)), NORM_FLOOR)
    if np.max(np.abs(residues.imag)) > 1e-8 * res_scale:
        raise ValueError(f"{what} residues must be real for the stationary certificate")
    return poles.real, residues.real


def modified_output_eval(fom_pr, rom_pr, interval, p, order=0, which="Y"):
    """Modified stationary outputs Y(p) or Yhat(p) (and first derivatives).

    Y(p) = ln|(p-b)/(p-a)| Phi0 + sum_i f_{nu_i}(p) Phi_i over the fom
    poles/residues; Yhat(p) = sum_j f_{lambda_j}(p) c_j b_j^T over the rom.
    """
    if which not in ("Y", "Yhat"):
        raise ValueError("which must be 'Y' or 'Yhat'")
    a, b = interval.a, interval.b
    p = float(p)
    pr = fom_pr if which == "Y" else rom_pr
    poles, residues = _real_stationary_parts(pr, "full-order" if which == "Y" else "reduced")
    margin = STATIONARY_POLE_MARGIN * (b - a)
    if np.any((poles > a - margin) & (poles < b + margin)):
        raise ValueError("stationary poles must lie strictly outside the interval [a, b]")

    out = np.zeros(residues.shape[1:])
    for nu, phi in zip(poles, residues):
        out = out + f_sigma_eval(a, b, nu, p, order=order) * phi
    if which == "Y" and fom_pr.constant is not None:
        phi0 = np.real(fom_pr.constant_term())
        if order == 0:
            out = out + np.log(abs((p - b) / (p - a))) * phi0
        else:
            out = out + (b - a) / ((p - a) * (p - b)) * phi0
    return out


def stationary_residuals(fom_pr, rom_pr, interval, tolerance=1e-6):
    """Hermite residuals of Yhat against Y at the reduced poles lambda_k.

    Interpolation for the stationary family happens at the poles themselves,
    not their mirror images.
    """
    lam, _ = _real_stationary_parts(rom_pr, "reduced")
    rows = []
    for k in range(len(lam)):
        b = np.real(rom_pr.right_factors[k])
        c = np.real(rom_pr.left_factors[k])
        y = modified_output_eval(fom_pr, rom_pr, interval, lam[k], which="Y")
        y_hat = modified_output_eval(fom_pr, rom_pr, interval, lam[k], which="Yhat")
        yd = modified_output_eval(fom_pr, rom_pr, interval, lam[k], order=1, which="Y")
        yd_hat = modified_output_eval(fom_pr, rom_pr, interval, lam[k], order=1, which="Yhat")
        rows.append(
            CertificateRow(
                label=f"k={k}",
                residuals=(
                    ("right", _rel((y - y_hat) @ b, y @ b)),
                    ("left", _rel(c @ (y - y_hat), c @ y)),
                    ("hermite", _rel(c @ (yd - yd_hat) @ b, c @ yd @ b)),
                ),
            )
        )
    return Certificate(family="STATIONARY", rows=tuple(rows), tolerance=tolerance)
