"""Number-state synthesis via alternating exchange-coupling and displacement pulses.

The package provides truncated qubit-oscillator state algebra (``hilbert``),
closed-form propagators and diagnostics (``dynamics``), projection and loss
metrics (``control``), the hybrid genetic/Adam optimizer (``gadam``),
detuning/noise/dissipation analyses (``robustness``) and a batch CLI
(``cli``).
"""

__version__ = "0.1.0"

from .control import ProjectionResult, QualityReport, fidelity, loss, post_select, quality, qubit_state
from .dynamics import (
    DisplacementMatrix,
    JCParams,
    LayerDiagnostics,
    PulseSequence,
    apply_sequence,
    displacement_matrix,
    displacement_safe_dim,
    jc_propagate,
    jc_propagator_oracle,
    revival_time,
    wigner_value,
)
from .gadam import (
    GAdamConfig,
    Individual,
    OptimizationTrace,
    adam_run,
    gaussian_mutate,
    gradient,
    optimize,
    optimize_single_layer,
    rescale_total_time,
    tournament_select,
    transfer_init,
    uniform_crossover,
)
from .hilbert import (
    CavityDensityMatrix,
    CavityState,
    FockCutoff,
    JointState,
    LeakageMonitor,
    coherent_state,
    default_cutoff,
    fock_state,
    initial_joint_state,
    number_distribution,
    partial_trace_qubit,
)
from .robustness import (
    DetuningScan,
    JointDensityMatrix,
    LindbladConfig,
    NoiseModel,
    detuning_scan,
    evolve_lindblad,
    fwhm_from_profile,
    lindblad_propagate_sequence,
    lindblad_rhs,
    noise_monte_carlo,
)

__all__ = [name for name in dir() if not name.startswith("_")]
