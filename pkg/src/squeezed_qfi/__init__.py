"""Phase estimation with a qubit decohering in a squeezed thermal reservoir."""
from .core import (
    BathCoefficients,
    ConfigError,
    DomainError,
    IntegrationError,
    PhaseScenario,
    QubitState,
    ReservoirSpec,
    SingularityError,
    bath_coefficients,
    bloch_vector,
    mean_photon_number,
    prepare_output_state,
    state_from_bloch,
)
from .dynamics import (
    EvolutionMode,
    SolutionCoefficients,
    Trajectory,
    alpha,
    closed_form_rho,
    closed_form_state,
    decay_clock,
    evolve_numeric,
    master_generator,
    solution_coefficients,
    vartheta,
)
from .metrology import (
    QfiReport,
    SldMatrix,
    advantage_threshold,
    printed_threshold,
    cramer_rao_bound,
    drho_analytic,
    drho_finite_difference,
    qfi_analytic,
    qfi_bloch,
    qfi_eigen,
    qfi_report,
    qfi_spectral_terms,
    qfi_thermal,
    sld,
    squeezing_advantage,
)
from .experiments import SweepSpec, SweepTable, figure_preset, run_sweep
from .verification import verify_suite

__version__ = "0.1.0"
