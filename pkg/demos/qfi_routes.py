"""
Three ways to compute the quantum Fisher information
====================================================

The closed form, the spectral (SLD) formula and the Bloch-vector formula must
agree. The symmetric logarithmic derivative itself gives the optimal
measurement.
"""

import numpy as np

from squeezed_qfi import (
    closed_form_rho,
    cramer_rao_bound,
    decay_clock,
    drho_analytic,
    mean_photon_number,
    qfi_report,
    sld,
    solution_coefficients,
)

n = mean_photon_number(0.5)
theta = 0.0
for gamma_t in (0.0, 1.0, 5.0, 10.0):
    c = solution_coefficients(decay_clock(gamma_t, 0.1), n, 1.5)
    rep = qfi_report(0.7, theta, c, n)
    print(f"gamma*t={gamma_t:4.1f}  analytic={rep.qfi_analytic:.10f}  "
          f"eigen={rep.qfi_eigen:.10f}  bloch={rep.qfi_bloch:.10f}  "
          f"spread={rep.max_pairwise_disagreement:.1e}")

# %%
# The SLD solves 2 drho = L rho + rho L; Tr(rho L^2) is the QFI again.
c = solution_coefficients(decay_clock(5.0, 0.1), n, 1.5)
rho, drho = closed_form_rho(0.7, theta, c), drho_analytic(0.7, theta, c)
L = sld(rho, drho)
print("\nSLD =\n", np.round(L.L, 6))
print("Tr(rho L^2) =", L.qfi(rho), " residual =", L.residual(rho, drho))

# Cramer-Rao: the best phase uncertainty after nu repetitions
F = qfi_report(0.7, theta, c, n).qfi
for nu in (1, 10, 100):
    print(f"nu={nu:3d}  delta phi >= {cramer_rao_bound(F, nu):.4f}")
