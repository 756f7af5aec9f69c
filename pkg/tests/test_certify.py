import numpy as np
import pytest
import scipy.integrate

from l2rom.certify import (
    Certificate,
    CertificateRow,
    Interval,
    f_sigma_eval,
    h2_ct_residuals,
    h2_dt_residuals,
    h2l2_residuals,
    ls_residuals,
    modified_ls_tf_eval,
    modified_output_eval,
    stationary_residuals,
)
from l2rom.core import SampleSet
from l2rom.models import make_kron_parametric, make_random_stable, sample_frequency_response
from l2rom.spectral import PoleResidue, PoleResidue2D, pole_residue_eval, pole_residue_lti

rng = np.random.default_rng(17)


def lti_pr(fom):
    return pole_residue_lti(fom.E, fom.A, fom.B, fom.C)


def real_pr(poles, left, right):
    return PoleResidue(
        poles=np.asarray(poles, dtype=complex),
        left_factors=np.asarray(left, dtype=complex),
        right_factors=np.asarray(right, dtype=complex),
    )


def test_certificate_structure():
    row = CertificateRow(label="k=0", residuals=(("right", 1e-8), ("left", 2e-8)))
    cert = Certificate(family="H2_CT", rows=(row,), tolerance=1e-6)
    assert cert.max_residual == 2e-8 and cert.passed
    with pytest.raises(ValueError):
        Certificate(family="H2", rows=(row,), tolerance=1e-6)
    with pytest.raises(ValueError):
        Certificate(family="H2_CT", rows=(row,), tolerance=0.0)


def test_h2_ct_zero_residuals_on_self():
    fom = make_random_stable(6, 2, 2, seed=40)
    pr = lti_pr(fom)
    cert = h2_ct_residuals(fom.evaluator(), pr)
    assert cert.max_residual <= 1e-10
    assert cert.passed


def test_h2_ct_detects_perturbation():
    fom = make_random_stable(6, seed=41)
    pr = lti_pr(fom)
    pr_bad = PoleResidue(
        poles=pr.poles, left_factors=1.05 * pr.left_factors, right_factors=pr.right_factors
    )
    cert = h2_ct_residuals(fom.evaluator(), pr_bad)
    assert cert.max_residual > 1e-3
    assert not cert.passed


def test_h2_ct_rejects_unstable_poles():
    fom = make_random_stable(4, seed=42)
    pr = real_pr([0.5, -1.0], np.ones((2, 1)), np.ones((2, 1)))
    with pytest.raises(ValueError):
        h2_ct_residuals(fom.evaluator(), pr)


def test_h2_dt_zero_residuals_on_self():
    fom = make_random_stable(6, seed=43, time_domain="dt")
    cert = h2_dt_residuals(fom.evaluator(), lti_pr(fom))
    assert cert.max_residual <= 1e-10


def test_h2_dt_rejects_poles_outside_disk():
    fom = make_random_stable(4, seed=44, time_domain="dt")
    pr = real_pr([1.5, 0.2], np.ones((2, 1)), np.ones((2, 1)))
    with pytest.raises(ValueError):
        h2_dt_residuals(fom.evaluator(), pr)


def test_h2l2_zero_residuals_on_self():
    fom = make_kron_parametric(3, 2, 2, 2, seed=45)
    rom2d = PoleResidue2D(
        s_poles=fom.s_poles,
        xi_poles=fom.xi_poles,
        left_factors=fom.left_factors,
        right_factors=fom.right_factors,
    )
    cert = h2l2_residuals(fom.evaluator(), rom2d)
    assert cert.max_residual <= 1e-10
    names = {name for row in cert.rows for name, _ in row.residuals}
    assert names == {"right", "left", "hermite-s", "hermite-xi"}


def test_h2l2_detects_perturbation():
    fom = make_kron_parametric(3, 2, seed=46)
    rom2d = PoleResidue2D(
        s_poles=fom.s_poles,
        xi_poles=fom.xi_poles,
        left_factors=1.1 * fom.left_factors,
        right_factors=fom.right_factors,
    )
    cert = h2l2_residuals(fom.evaluator(), rom2d)
    assert cert.max_residual > 1e-3


def test_modified_ls_tf_single_sample():
    # one unit-weight sample of value 1 at node iw gives G(s) = 1/(s - iw)
    data = SampleSet(np.array([[2j]]), np.ones((1, 1, 1), dtype=complex), np.ones(1))
    s = 1.0 + 0.5j
    assert np.isclose(modified_ls_tf_eval(data, None, s)[0, 0], 1.0 / (s - 2j))
    assert np.isclose(modified_ls_tf_eval(data, None, s, order=1)[0, 0], -1.0 / (s - 2j) ** 2)
    with pytest.raises(ValueError):
        modified_ls_tf_eval(data, None, 2j)


def test_modified_ls_tf_derivative_fd():
    fom = make_random_stable(5, seed=47)
    data = sample_frequency_response(fom, np.logspace(-1, 1, 6))
    s, h = 0.8, 1e-6
    fd = (
        modified_ls_tf_eval(data, None, s + h) - modified_ls_tf_eval(data, None, s - h)
    ) / (2 * h)
    der = modified_ls_tf_eval(data, None, s, order=1)
    assert np.max(np.abs(der - fd)) <= 1e-7 * max(np.max(np.abs(der)), 1.0)


def test_ls_residuals_zero_when_rom_matches_data_generator():
    # if the rom IS the sampled system, Ghat == G identically
    fom = make_random_stable(5, seed=48)
    data = sample_frequency_response(fom, np.logspace(-1, 1, 8))
    cert = ls_residuals(data, lti_pr(fom))
    assert cert.max_residual <= 1e-10


def test_ls_residuals_detect_mismatch():
    fom = make_random_stable(5, seed=49)
    other = make_random_stable(5, seed=50)
    data = sample_frequency_response(fom, np.logspace(-1, 1, 8))
    cert = ls_residuals(data, lti_pr(other))
    assert cert.max_residual > 1e-3


def test_f_sigma_basic_values():
    a, b, sigma = 0.0, 1.0, 2.0
    # f_sigma(sigma) = (b - a)/((sigma - a)(sigma - b)) = 1/2
    assert np.isclose(f_sigma_eval(a, b, sigma, sigma), 0.5)
    # continuity across the removable singularity
    assert np.isclose(f_sigma_eval(a, b, sigma, sigma + 1e-9), 0.5, atol=1e-6)
    # generic point matches the defining quotient
    p = 3.0
    expected = (np.log(abs((p - b) / (p - a))) - np.log(abs((sigma - b) / (sigma - a)))) / (
        p - sigma
    )
    assert np.isclose(f_sigma_eval(a, b, sigma, p), expected)
    with pytest.raises(ValueError):
        f_sigma_eval(a, b, sigma, a)


def test_f_sigma_derivative_fd():
    a, b, sigma = 0.1, 10.0, -0.5
    for p, h, rtol in ((-2.0, 1e-6, 1e-5), (11.0, 1e-6, 1e-5), (sigma, 1e-4, 1e-4)):
        # near p = sigma the quotient form of f cancels, so the step is larger
        fd = (f_sigma_eval(a, b, sigma, p + h) - f_sigma_eval(a, b, sigma, p - h)) / (2 * h)
        assert np.isclose(f_sigma_eval(a, b, sigma, p, order=1), fd, rtol=rtol, atol=1e-10)


def test_f_sigma_is_interval_integral():
    # f_sigma(p) equals int_a^b dq / ((q - p)(q - sigma)) for p, sigma outside [a, b]
    a, b, sigma, p = 0.1, 10.0, -0.3, -2.0
    quad, _ = scipy.integrate.quad(lambda q: 1.0 / ((q - p) * (q - sigma)), a, b)
    assert np.isclose(f_sigma_eval(a, b, sigma, p), quad, rtol=1e-8)


def test_modified_output_is_interval_integral():
    # Y(p) = int_a^b y(q) / (q - p) dq for a rational y with poles outside [a, b]
    interval = Interval(0.1, 10.0)
    poles = np.array([-0.4, -2.0])
    left = np.array([[1.5], [0.7]])
    right = np.array([[1.0], [1.0]])
    pr = real_pr(poles, left, right)

    def y_scalar(q):
        return sum(
            (left[k, 0] * right[k, 0]) / (q - poles[k]) for k in range(2)
        )

    p = -1.0
    quad, _ = scipy.integrate.quad(
        lambda q: y_scalar(q) / (q - p), interval.a, interval.b, limit=200
    )
    val = modified_output_eval(pr, pr, interval, p, which="Y")[0, 0]
    assert np.isclose(val, quad, rtol=1e-8)
    # and the same route through the rom-side evaluation
    val_hat = modified_output_eval(pr, pr, interval, p, which="Yhat")[0, 0]
    assert np.isclose(val_hat, quad, rtol=1e-8)


def test_modified_output_constant_term_is_interval_integral():
    # with a constant term Phi0, y(q) = Phi0 + rational; the modified output
    # picks up ln|(p-b)/(p-a)| Phi0
    interval = Interval(0.5, 4.0)
    pr = PoleResidue(
        poles=np.array([-1.0], dtype=complex),
        left_factors=np.array([[2.0]], dtype=complex),
        right_factors=np.array([[1.0]], dtype=complex),
        constant=np.array([[3.0]], dtype=complex),
    )
    p = -0.2
    quad, _ = scipy.integrate.quad(
        lambda q: (3.0 + 2.0 / (q + 1.0)) / (q - p), interval.a, interval.b, limit=200
    )
    val = modified_output_eval(pr, pr, interval, p, which="Y")[0, 0]
    assert np.isclose(val, quad, rtol=1e-8)
    # derivative against finite differences
    h = 1e-6
    fd = (
        modified_output_eval(pr, pr, interval, p + h, which="Y")
        - modified_output_eval(pr, pr, interval, p - h, which="Y")
    ) / (2 * h)
    der = modified_output_eval(pr, pr, interval, p, order=1, which="Y")
    assert np.max(np.abs(der - fd)) <= 1e-6 * max(np.max(np.abs(der)), 1.0)


def test_modified_output_rejects_pole_in_interval():
    interval = Interval(0.1, 10.0)
    pr = real_pr([1.0], np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(ValueError):
        modified_output_eval(pr, pr, interval, -1.0, which="Y")


def test_stationary_residuals_zero_on_self():
    interval = Interval(0.1, 10.0)
    pr = real_pr([-0.5, -3.0], [[1.0], [0.4]], [[1.0], [1.0]])
    cert = stationary_residuals(pr, pr, interval)
    assert cert.max_residual <= 1e-12
    assert cert.family == "STATIONARY"


def test_stationary_residuals_detect_perturbation():
    interval = Interval(0.1, 10.0)
    fom_pr = real_pr([-0.5, -3.0, -7.0], [[1.0], [0.4], [0.2]], [[1.0], [1.0], [1.0]])
    rom_pr = real_pr([-0.6, -2.5], [[1.1], [0.5]], [[1.0], [1.0]])
    cert = stationary_residuals(fom_pr, rom_pr, interval)
    assert cert.max_residual > 1e-3


def test_stationary_rejects_complex_poles():
    interval = Interval(0.1, 10.0)
    rom_pr = real_pr([-0.5 + 0.1j, -0.5 - 0.1j], np.ones((2, 1)), np.ones((2, 1)))
    fom_pr = real_pr([-1.0], np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(ValueError):
        stationary_residuals(fom_pr, rom_pr, interval)


def test_residuals_invariant_under_factor_rescaling():
    # c_k -> g c_k, b_k -> b_k / conj(g) leaves residues and residuals unchanged
    fom = make_random_stable(6, 2, 2, seed=51)
    pr = lti_pr(fom)
    g = 2.7
    pr_scaled = PoleResidue(
        poles=pr.poles, left_factors=g * pr.left_factors, right_factors=pr.right_factors / g
    )
    c1 = h2_ct_residuals(fom.evaluator(), pr)
    c2 = h2_ct_residuals(fom.evaluator(), pr_scaled)
    assert np.isclose(c1.max_residual, c2.max_residual, rtol=1e-6, atol=1e-12)


def test_fom_partial_fd_fallback():
    # an evaluator without analytic partials uses finite differences
    from l2rom.core import FomEvaluator

    fom = make_random_stable(5, seed=52)
    ev = FomEvaluator(
        n_i=1, n_o=1, n_p=1, evaluate=lambda p: fom.transfer(complex(p[0]))
    )
    cert = h2_ct_residuals(ev, lti_pr(fom))
    assert cert.max_residual <= 1e-7
