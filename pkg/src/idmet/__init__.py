"""Estimability toolkit for intrinsic-decoherence dynamics.

Two complementary models are implemented end to end: a linear stochastic
dephasing model (parameter mu, units of time) and a deterministic nonlinear
dissipation model (adimensional parameter gamma), each applied to a qubit
(H = omega*sigma_3) and to a harmonic oscillator (H = omega*a^dag*a).  The
package provides closed-form evolutions, exact parameter derivatives,
classical/quantum Fisher information, signal-to-noise surfaces, an
independent RK4 oracle for every evolution equation, optimal-working-point
searches, and a simulated iterative estimation protocol.
"""

from .core import (
    BlochVector,
    CoherentSpec,
    FockDensity,
    ProbeAngles,
    PureFockState,
    QubitDensity,
    bloch_from_angles,
    bloch_to_density,
    coherent_amplitudes,
    density_to_bloch,
    hermitian_eigendecomposition,
    purity,
    truncation_dimension,
)
from .estimation import (
    UNBOUNDED_VARIANCE,
    EstimationReport,
    ProbabilityModel,
    UnboundedVariance,
    cramer_rao_variance,
    fisher_information,
    qfi_bloch,
    qfi_mixed,
    qfi_pure,
    qsnr,
    sld,
)
from .gnd import (
    GndParams,
    gnd_fock_state,
    gnd_fock_state_derivative,
    gnd_osc_qfi,
    gnd_osc_qsnr,
    gnd_qubit_bloch,
    gnd_qubit_bloch_derivative,
    gnd_qubit_density,
    gnd_qubit_density_derivative,
    gnd_qubit_qfi,
    gnd_qubit_qsnr,
    gnd_spin_probabilities,
    gnd_theta_opt,
)
from .mid import (
    MidParams,
    mid_fid_ratio,
    mid_fock_density,
    mid_fock_density_derivative,
    mid_osc_qfi,
    mid_osc_qsnr,
    mid_qubit_bloch,
    mid_qubit_bloch_derivative,
    mid_qubit_density,
    mid_qubit_density_derivative,
    mid_qubit_qfi,
    mid_qubit_qsnr,
    mid_spin_probabilities,
)
from .optimize import (
    FitResult,
    IterationTrace,
    OptimumResult,
    Round,
    fit_g,
    iterate_estimation,
    maximize_1d,
    mid_qubit_optimum,
    optimal_c,
    table1_summary,
)
from .oracle import (
    IntegratorConfig,
    Trajectory,
    compare_trajectories,
    integrate_ensemble,
    integrate_gnd_density,
    integrate_mid,
    integrate_state_vector,
    to_projectors,
)

__version__ = "0.1.0"
