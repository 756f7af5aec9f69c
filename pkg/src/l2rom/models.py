"""Benchmark and synthetic full-order models, and samplers producing data sets.

Provides the classic order-1006 spiral benchmark system, a parametric
Poisson finite element model, reproducible random stable LTI systems, a
synthetic two-variable rational map, and the samplers that turn them into
weighted sample sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FomEvaluator, SampleSet, check_conjugation_closure

__all__ = [
    "AffineLtiFom",
    "AffineStationaryFom",
    "KronParametricFom",
    "make_penzl",
    "make_poisson",
    "make_random_stable",
    "make_kron_parametric",
    "sample_frequency_response",
    "sample_unit_circle",
    "sample_stationary",
    "sample_h2l2",
]


@dataclass(frozen=True)
class AffineLtiFom:
    """E x' = A x + B u, y = C x, with transfer function C (sE - A)^{-1} B."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    time_domain: str = "ct"  # or "dt"

    def __post_init__(self):
        assert self.time_domain in ("ct", "dt")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_i(self):
        return self.B.shape[1]

    @property
    def n_o(self):
        return self.C.shape[0]

    def transfer(self, s):
        return self.C @ np.linalg.solve(s * self.E - self.A, self.B)

    def transfer_deriv(self, s):
        K_inv_B = np.linalg.solve(s * self.E - self.A, self.B)
        return -self.C @ np.linalg.solve(s * self.E - self.A, self.E @ K_inv_B)

    def evaluator(self):
        return FomEvaluator(
            n_i=self.n_i,
            n_o=self.n_o,
            n_p=1,
            evaluate=lambda p: self.transfer(complex(p[0])),
            partials=lambda p: [self.transfer_deriv(complex(p[0]))],
            realization=self,
        )


@dataclass(frozen=True)
class AffineStationaryFom:
    """(A1 + p A2) x = B, y = C x, over a real parameter interval [a, b]."""

    A1: np.ndarray
    A2: np.ndarray
    B: np.ndarray
    C: np.ndarray
    interval: tuple = (0.1, 10.0)

    @property
    def n(self):
        return self.A1.shape[0]

    @property
    def n_i(self):
        return self.B.shape[1]

    @property
    def n_o(self):
        return self.C.shape[0]

    def output(self, p):
        return self.C @ np.linalg.solve(self.A1 + p * self.A2, self.B)

    def output_deriv(self, p):
        K = self.A1 + p * self.A2
        return -self.C @ np.linalg.solve(K, self.A2 @ np.linalg.solve(K, self.B))

    def evaluator(self):
        return FomEvaluator(
            n_i=self.n_i,
            n_o=self.n_o,
            n_p=1,
            evaluate=lambda p: self.output(complex(p[0])),
            partials=lambda p: [self.output_deriv(complex(p[0]))],
            realization=self,
        )


@dataclass(frozen=True)
class KronParametricFom:
    """Two-variable rational map sum_ij c_ij b_ij^* / ((s - nu_i)(xi - pi_j)).

    Frequency poles nu_i lie in the open left half-plane and parameter poles
    pi_j outside the closed unit disk, so the map is admissible for joint
    frequency/parameter approximation.
    """

    s_poles: np.ndarray  # (q_s,)
    xi_poles: np.ndarray  # (q_xi,)
    left_factors: np.ndarray  # (q_s, q_xi, n_o)
    right_factors: np.ndarray  # (q_s, q_xi, n_i)

    @property
    def n_i(self):
        return self.right_factors.shape[2]

    @property
    def n_o(self):
        return self.left_factors.shape[2]

    def value(self, s, xi, order=0, wrt=0):
        ds = s - self.s_poles
        dxi = xi - self.xi_poles
        if order == 0:
            coeff = 1.0 / (ds[:, None] * dxi[None, :])
        elif wrt == 0:
            coeff = -1.0 / (ds[:, None] ** 2 * dxi[None, :])
        else:
            coeff = -1.0 / (ds[:, None] * dxi[None, :] ** 2)
        return np.einsum("kl,klo,klm->om", coeff, self.left_factors, np.conj(self.right_factors))

    def evaluator(self):
        return FomEvaluator(
            n_i=self.n_i,
            n_o=self.n_o,
            n_p=2,
            evaluate=lambda p: self.value(complex(p[0]), complex(p[1])),
            partials=lambda p: [
                self.value(complex(p[0]), complex(p[1]), order=1, wrt=0),
                self.value(complex(p[0]), complex(p[1]), order=1, wrt=1),
            ],
            realization=self,
        )


def make_penzl():
    """Order-1006 SISO benchmark: three 2x2 spiral blocks plus a diagonal tail.

    E = I; A is block-diagonal with blocks [[-1, w], [-w, -1]] for
    w in {100, 200, 400} and diag(-1, ..., -1000); B = C^T has entries 10 on
    the first six states and 1 elsewhere.
    """
    A = np.zeros((1006, 1006))
    for k, w in enumerate((100.0, 200.0, 400.0)):
        i = 2 * k
        A[i : i + 2, i : i + 2] = [[-1.0, w], [-w, -1.0]]
    A[6:, 6:] = np.diag(-np.arange(1.0, 1001.0))
    B = np.ones((1006, 1))
    B[:6] = 10.0
    return AffineLtiFom(E=np.eye(1006), A=A, B=B, C=B.T)


def _q1_stiffness(cells, weight):
    """Q1 stiffness matrix and unit-load vector on the unit square.

    The diffusion coefficient ``weight`` is affine in z1, so 2-point Gauss
    per direction integrates the element matrices exactly.  Assembled on all
    (cells + 1)^2 grid nodes; boundary conditions are applied by the caller.
    """
    h = 1.0 / cells
    m = cells + 1  # nodes per direction
    gauss = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    gw = np.array([0.5, 0.5])

    # Reference bilinear basis on [0,1]^2, node order (0,0),(1,0),(0,1),(1,1)
    def shape_grads(u, v):
        du = np.array([-(1 - v), (1 - v), -v, v]) / h
        dv = np.array([-(1 - u), -u, (1 - u), u]) / h
        return du, dv

    rows, cols, data = [], [], []
    b_rows, b_data = [], []

    for ex in range(cells):
        for ey in range(cells):
            ke = np.zeros((4, 4))
            fe = np.zeros(4)
            for a, u in enumerate(gauss):
                for b, v in enumerate(gauss):
                    w = gw[a] * gw[b] * h * h
                    z1 = (ex + u) * h
                    du, dv = shape_grads(u, v)
                    d = weight(z1)
                    ke += w * d * (np.outer(du, du) + np.outer(dv, dv))
                    shp = np.array([(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v])
                    fe += w * shp
            glb = [
                ey * m + ex,
                ey * m + ex + 1,
                (ey + 1) * m + ex,
                (ey + 1) * m + ex + 1,
            ]
            for ia, ga in enumerate(glb):
                b_rows.append(ga)
                b_data.append(fe[ia])
                for ib, gb in enumerate(glb):
                    rows.append(ga)
                    cols.append(gb)
                    data.append(ke[ia, ib])

    n = m * m
    K = np.zeros((n, n))
    np.add.at(K, (np.array(rows), np.array(cols)), np.array(data))
    load = np.zeros(n)
    np.add.at(load, np.array(b_rows), np.array(b_data))
    ix, iy = np.meshgrid(np.arange(m), np.arange(m))
    boundary = ((ix == 0) | (ix == cells) | (iy == 0) | (iy == cells)).ravel()
    return K, load, boundary


def make_poisson(cells_per_side=32):
    """Parametric Poisson model: diffusion d(z, p) = z1 + p (1 - z1) on (0,1)^2.

    Q1 finite elements on a uniform mesh; the state vector keeps all grid
    nodes and the homogeneous Dirichlet condition is imposed by identity
    rows in A1 and zero rows in A2 (and zero load) at boundary nodes.  The
    default mesh gives n = 33^2 = 1089 unknowns with A2 of structural rank
    31^2 = 961.  A1 carries the z1-weighted stiffness, A2 the
    (1 - z1)-weighted one; B is the unit-load vector and C = B^T.
    """
    if cells_per_side < 4:
        raise ValueError("cells_per_side must be at least 4")
    A1, load, boundary = _q1_stiffness(cells_per_side, lambda z1: z1)
    A2, _, _ = _q1_stiffness(cells_per_side, lambda z1: 1.0 - z1)
    A1[boundary, :] = 0.0
    A1[:, boundary] = 0.0
    A1[boundary, boundary] = 1.0
    A2[boundary, :] = 0.0
    A2[:, boundary] = 0.0
    load[boundary] = 0.0
    B = load[:, None]
    return AffineStationaryFom(A1=A1, A2=A2, B=B, C=B.T, interval=(0.1, 10.0))


def make_random_stable(n, n_i=1, n_o=1, seed=0, time_domain="ct"):
    """Reproducible random stable LTI system (E = I).

    Continuous time: A = R - (s_max + margin) I with R random, shifted so all
    eigenvalues have negative real part.  Discrete time: random A rescaled to
    spectral radius 0.9.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    if time_domain == "ct":
        shift = np.max(np.linalg.eigvals(A).real) + 0.5
        A = A - shift * np.eye(n)
    else:
        rho = np.max(np.abs(np.linalg.eigvals(A)))
        A = A * (0.9 / max(rho, 1e-12))
    B = rng.standard_normal((n, n_i))
    C = rng.standard_normal((n_o, n))
    return AffineLtiFom(E=np.eye(n), A=A, B=B, C=C, time_domain=time_domain)


def make_kron_parametric(r_s_terms, r_xi_terms, n_i=1, n_o=1, seed=0):
    """Random two-variable rational map with admissible pole placement.

    Frequency poles have real part <= -0.1 and parameter poles modulus
    >= 1.1; conjugate pole pairs carry conjugate factors so the map is real
    on the real-(s, real-xi) restriction.
    """
    rng = np.random.default_rng(seed)
    s_poles = -0.1 - 2.0 * rng.random(r_s_terms) + 1j * rng.standard_normal(r_s_terms)
    s_poles = _conjugate_pairs(s_poles)
    xi_poles = (1.1 + 2.0 * rng.random(r_xi_terms)) * np.exp(2j * np.pi * rng.random(r_xi_terms))
    xi_poles = _conjugate_pairs(xi_poles, keep="modulus")
    left = rng.standard_normal((r_s_terms, r_xi_terms, n_o)) + 1j * rng.standard_normal(
        (r_s_terms, r_xi_terms, n_o)
    )
    right = rng.standard_normal((r_s_terms, r_xi_terms, n_i)) + 1j * rng.standard_normal(
        (r_s_terms, r_xi_terms, n_i)
    )
    # Symmetrize so conjugating both poles conjugates the residue factors.
    left, right = _symmetrize_factors(s_poles, xi_poles, left, right)
    return KronParametricFom(s_poles=s_poles, xi_poles=xi_poles, left_factors=left, right_factors=right)


def _conjugate_pairs(poles, keep="real"):
    """Force the pole set to be closed under conjugation (pair up in order).

    An odd count leaves one pole to realify: ``keep="real"`` takes its real
    part (preserves the real-part bound of half-plane poles), ``keep="modulus"``
    takes a signed modulus (preserves the modulus bound of circle-type poles).
    """
    poles = np.array(poles, dtype=complex)
    n = len(poles)
    for i in range(0, n - 1, 2):
        poles[i + 1] = np.conj(poles[i])
    if n % 2:
        if keep == "modulus":
            sign = 1.0 if poles[-1].real >= 0 else -1.0
            poles[-1] = sign * abs(poles[-1])
        else:
            poles[-1] = poles[-1].real
    return poles

def _conj_index(poles):
    idx = np.empty(len(poles), dtype=int)
    for i, lam in enumerate(poles):
        idx[i] = int(np.argmin(np.abs(poles - np.conj(lam))))
    return idx


def _symmetrize_factors(s_poles, xi_poles, left, right):
    ks = _conj_index(s_poles)
    kxi = _conj_index(xi_poles)
    left_s = 0.5 * (left + np.conj(left[ks][:, kxi]))
    right_s = 0.5 * (right + np.conj(right[ks][:, kxi]))
    return left_s, right_s


def sample_frequency_response(fom, freqs, weights=None):
    """Evaluate H(i w) at positive frequencies and append the conjugate points.

    Returns a conjugation-closed sample set with N = 2 * len(freqs) points.
    """
    freqs = np.asarray(freqs, dtype=float)
    if weights is None:
        weights = np.ones_like(freqs)
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(freqs):
        raise ValueError("freqs and weights must have the same length")
    values = np.array([fom.transfer(1j * w) for w in freqs])
    points = np.concatenate([1j * freqs, -1j * freqs])[:, None]
    values = np.concatenate([values, np.conj(values)])
    weights = np.concatenate([weights, weights])
    samples = SampleSet(points=points, values=values, weights=weights)
    ok, _ = check_conjugation_closure(samples)
    assert ok
    return samples


def sample_unit_circle(fom, num):
    """Uniform trapezoid quadrature of the unit-circle measure (weights 1/num)."""
    if num < 2 or num % 2:
        raise ValueError("node count must be even and at least 2")
    theta = 2.0 * np.pi * np.arange(num) / num
    points = np.exp(1j * theta)[:, None]
    values = np.array([fom.transfer(z) for z in points[:, 0]])
    weights = np.full(num, 1.0 / num)
    return SampleSet(points=points, values=values, weights=weights)


def sample_stationary(fom, num_nodes):
    """Gauss-Legendre quadrature of the Lebesgue measure on the model interval."""
    if num_nodes < 2:
        raise ValueError("node count must be at least 2")
    a, b = fom.interval
    nodes, weights = np.polynomial.legendre.leggauss(num_nodes)
    nodes = 0.5 * (b - a) * nodes + 0.5 * (a + b)
    weights = 0.5 * (b - a) * weights
    values = np.array([fom.output(p) for p in nodes])
    return SampleSet(points=nodes.astype(complex)[:, None], values=values, weights=weights)


def sample_h2l2(fom, n_s=96, n_xi=64, omega_scale=1.0):
    """Quadrature of the product measure (imaginary axis) x (unit circle).

    The infinite frequency integral is mapped through omega = scale * tan(t)
    and discretized with Gauss-Legendre; the circle uses the uniform
    trapezoid rule.  Weights absorb the 1/(4 pi^2) normalization.
    """
    t_nodes, t_weights = np.polynomial.legendre.leggauss(n_s)
    t_nodes = 0.5 * np.pi * t_nodes
    t_weights = 0.5 * np.pi * t_weights
    omega = omega_scale * np.tan(t_nodes)
    w_s = omega_scale * t_weights / np.cos(t_nodes) ** 2 / (2.0 * np.pi)

    if n_xi < 2 or n_xi % 2:
        raise ValueError("circle node count must be even and at least 2")
    theta = 2.0 * np.pi * np.arange(n_xi) / n_xi
    xi = np.exp(1j * theta)
    w_xi = np.full(n_xi, 1.0 / n_xi)

    points, values, weights = [], [], []
    for wk, ok in zip(w_s, omega):
        for wl, xl in zip(w_xi, xi):
            points.append((1j * ok, xl))
            values.append(fom.value(1j * ok, xl))
            weights.append(wk * wl)
    return SampleSet(points=np.array(points), values=np.array(values), weights=np.array(weights))
