"""Variational preparation of spin-chain Gibbs states with a truncated free-energy loss."""

__version__ = "0.1.0"

from .circuits import (
    Gate,
    ParameterizedCircuit,
    RegisterLayout,
    apply_circuit,
    build_ansatz,
    output_state,
)
from .estimators import (
    EstimateResult,
    ShotConfig,
    destructive_swap_overlap,
    estimate_energy,
    higher_order_overlap,
)
from .hamiltonians import (
    PauliHamiltonian,
    PauliString,
    energy_expectation,
    gibbs_state,
    ising_chain,
    spectral_gap,
    spectrum,
    to_dense,
    xy_chain,
)
from .loss import (
    BoundReport,
    TruncationCoefficients,
    delta_star,
    free_energy,
    half_mixture_fidelity_bound,
    trained_fidelity_floor,
    truncated_entropy,
    truncated_free_energy,
    truncation_bound,
    truncation_coefficients,
)
from .states import (
    DensityMatrix,
    PureState,
    fidelity,
    overlap_exact,
    partial_trace,
    relative_entropy,
    tensor_product,
    trace_distance,
    von_neumann_entropy,
)
from .training import (
    AdamState,
    TrainConfig,
    TrainTrace,
    adam_step,
    finite_difference_gradient,
    parameter_shift_gradient,
    train,
)

__all__ = [
    "AdamState",
    "BoundReport",
    "DensityMatrix",
    "EstimateResult",
    "Gate",
    "ParameterizedCircuit",
    "PauliHamiltonian",
    "PauliString",
    "PureState",
    "RegisterLayout",
    "ShotConfig",
    "TrainConfig",
    "TrainTrace",
    "TruncationCoefficients",
    "adam_step",
    "apply_circuit",
    "build_ansatz",
    "delta_star",
    "destructive_swap_overlap",
    "energy_expectation",
    "estimate_energy",
    "fidelity",
    "finite_difference_gradient",
    "free_energy",
    "gibbs_state",
    "half_mixture_fidelity_bound",
    "higher_order_overlap",
    "ising_chain",
    "output_state",
    "overlap_exact",
    "parameter_shift_gradient",
    "partial_trace",
    "relative_entropy",
    "spectral_gap",
    "spectrum",
    "tensor_product",
    "to_dense",
    "trace_distance",
    "trained_fidelity_floor",
    "train",
    "truncated_entropy",
    "truncated_free_energy",
    "truncation_bound",
    "truncation_coefficients",
    "von_neumann_entropy",
    "xy_chain",
]
