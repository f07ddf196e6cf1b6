"""
Qubit decay in a squeezed thermal bath
======================================

Prepare (e^{i phi}|e> + |g>)/sqrt(2), let its coherence decay under the
time-local master equation and compare the RK4 trajectory with the closed form.
"""

import numpy as np

from squeezed_qfi import (
    ReservoirSpec,
    closed_form_rho,
    evolve_numeric,
    prepare_output_state,
    solution_coefficients,
    vartheta,
)

# a moderately squeezed, warm bath with a narrow Lorentzian spectrum
spec = ReservoirSpec(lambda_over_gamma=0.1, r=1.0, theta=0.4, kT_over_omega=0.5)
phi = 0.3

traj = evolve_numeric(prepare_output_state(phi), spec, t_end=10.0, dt=1e-3, stride=1000)

print(" gamma*t   rho_ee     |rho_eg|    max |closed - RK4|")
for t, state in traj:
    c = solution_coefficients(vartheta(t, spec), spec.n, spec.r)
    exact = closed_form_rho(phi, spec.theta, c)
    err = np.max(np.abs(exact - state.rho))
    print(f"{t:7.2f}  {state.populations[0]:.6f}  {abs(state.coherence):.6f}   {err:.1e}")

# the population relaxes toward N/(2N+1); the coherence goes to zero
N = spec.coefficients.N
print("\nlong-time excited population N/(2N+1) =", N / (2 * N + 1))

# %%
# Markovian limit: the decay clock is simply gamma*t, so the coherence of an
# unsqueezed zero-temperature bath falls off as exp(-gamma t)/2.
vac = ReservoirSpec()
final = evolve_numeric(prepare_output_state(0.0), vac, "markovian", t_end=1.0).final
print("|rho_eg(1)| =", abs(final.coherence), " vs exp(-1)/2 =", np.exp(-1) / 2)
