"""Reduce a parametric Poisson model over its diffusion parameter.

The full model solves (A1 + p A2) x = B on a 1089-node finite element mesh
for p in [0.1, 10].  A greedy reduced-basis initializer seeds an order-2
structured model, the fit minimizes the Gauss-quadrature L2 misfit, and the
stationary interpolation conditions certify optimality at the reduced poles.

Run:  python3 demos/poisson_stationary.py
"""

import numpy as np

from l2rom import (
    FitOptions,
    Interval,
    fit,
    greedy_rb_init,
    pole_residue_affine_singular,
    stationary_residuals,
)
from l2rom.models import make_poisson, sample_stationary

fom = make_poisson()
print(f"mesh unknowns: {fom.n}, parameter interval: {fom.interval}")

data = sample_stationary(fom, 60)
init = greedy_rb_init(fom, 2, np.logspace(-1, 1, 20))
trace = fit(init, data, FitOptions(max_iters=500))
print(f"fit: {trace.iterations} iterations, objective {trace.objectives[-1]:.3e}")

rom = trace.rom
rom_pr = pole_residue_affine_singular(
    rom.A_terms[0][1], rom.A_terms[1][1], rom.B_terms[0][1], rom.C_terms[0][1]
)
print(f"reduced poles: {np.sort(rom_pr.poles.real)}")

fom_pr = pole_residue_affine_singular(fom.A1, fom.A2, fom.B, fom.C)
cert = stationary_residuals(fom_pr, rom_pr, Interval(*fom.interval), tolerance=1e-6)
print(f"stationary certificate: max residual {cert.max_residual:.3e} "
      f"-> {'PASS' if cert.passed else 'FAIL'}")
