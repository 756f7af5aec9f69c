"""L2-optimal structured reduced-order modeling.

Gradient-based fitting of parameter-separable reduced models to weighted
output samples, with residual certificates for the interpolatory optimality
conditions of the continuous/discrete H2, H2xL2, discrete least-squares and
stationary families.
"""

import os as _os

# Cap BLAS parallelism before numpy initializes its thread pools.
_threads = _os.environ.get("L2ROM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .core import (  # noqa: E402
    FomEvaluator,
    KronStructure,
    SampleSet,
    ScalarFamily,
    SingularOperatorError,
    StructuredRom,
    check_conjugation_closure,
    evaluate_dual,
    evaluate_output,
    kron_rom,
    lti_rom,
    stationary_rom,
)
from .spectral import (  # noqa: E402
    DefectivePencilError,
    PoleResidue,
    PoleResidue2D,
    diagonalize_pencil,
    kron_pole_residue,
    pole_residue_affine_singular,
    pole_residue_eval,
    pole_residue_lti,
)
from .optimize import (  # noqa: E402
    FitOptions,
    FitTrace,
    GradientBundle,
    fit,
    greedy_rb_init,
    irka_init,
    kron_factor_gradient,
    l2_gradients,
    l2_gradients_kron,
    l2_objective,
)
from .certify import (  # noqa: E402
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

__all__ = [
    "FomEvaluator",
    "KronStructure",
    "SampleSet",
    "ScalarFamily",
    "SingularOperatorError",
    "StructuredRom",
    "check_conjugation_closure",
    "evaluate_dual",
    "evaluate_output",
    "kron_rom",
    "lti_rom",
    "stationary_rom",
    "DefectivePencilError",
    "PoleResidue",
    "PoleResidue2D",
    "diagonalize_pencil",
    "kron_pole_residue",
    "pole_residue_affine_singular",
    "pole_residue_eval",
    "pole_residue_lti",
    "FitOptions",
    "FitTrace",
    "GradientBundle",
    "fit",
    "greedy_rb_init",
    "irka_init",
    "kron_factor_gradient",
    "l2_gradients",
    "l2_gradients_kron",
    "l2_objective",
    "Certificate",
    "CertificateRow",
    "Interval",
    "f_sigma_eval",
    "h2_ct_residuals",
    "h2_dt_residuals",
    "h2l2_residuals",
    "ls_residuals",
    "modified_ls_tf_eval",
    "modified_output_eval",
    "stationary_residuals",
]
