"""Assertion-based runtime testing for quantum programs.

Parse an assertion-annotated QASM dialect, translate each assertion into a
measured, independently executable program slice, reduce the slice count
(movement, subset canceling, concatenation), sample counts on a dense
statevector simulator, and statistically verify every assertion from its
measurement counts.
"""

from .circuit import (
    Assertion,
    CircuitError,
    EqualityCircuit,
    EqualityState,
    FlatProgram,
    GATE_SET,
    Instruction,
    Superposition,
    acted_qubits,
    equal_up_to_global_phase,
    invert_circuit,
    invert_instruction,
)
from .device import DeviceModel, DeviceModelError, IDEAL_MODEL, load_device_model, slice_fidelity
from .optimize import (
    ImplicationVerdict,
    OptimizationError,
    OptimizationOptions,
    can_concatenate,
    cancel_subsets,
    implies,
    move_assertions,
    optimize,
)
from .parser import QasmError, SourceProgram, format_program, inline, parse_and_inline, parse_program
from .simulator import (
    MAX_QUBITS,
    MeasurementCounts,
    SampleConfig,
    SimulationError,
    StateVector,
    marginal_distribution,
    outcome_distribution,
    sample_counts,
    sample_distribution,
    simulate,
)
from .translate import (
    AssertionMetadata,
    Slice,
    TranslationOptions,
    build_slices,
)
from .verify import (
    MonteCarloConfig,
    ShotCapExceeded,
    VerificationError,
    VerificationReport,
    VerifierConfig,
    chi2_survival,
    noise_adjust,
    power_divergence,
    recommend_shots,
    verify_all,
)

__version__ = "0.1.0"

__all__ = [
    "Assertion", "AssertionMetadata", "CircuitError", "DeviceModel",
    "DeviceModelError", "EqualityCircuit", "EqualityState", "FlatProgram",
    "GATE_SET", "IDEAL_MODEL", "ImplicationVerdict", "Instruction",
    "MAX_QUBITS", "MeasurementCounts", "MonteCarloConfig",
    "OptimizationError", "OptimizationOptions", "QasmError", "SampleConfig",
    "ShotCapExceeded", "SimulationError", "Slice", "SourceProgram",
    "StateVector", "Superposition", "TranslationOptions",
    "VerificationError", "VerificationReport", "VerifierConfig",
    "acted_qubits", "build_slices", "can_concatenate", "cancel_subsets",
    "chi2_survival", "equal_up_to_global_phase", "format_program",
    "implies", "inline", "invert_circuit", "invert_instruction",
    "load_device_model", "marginal_distribution", "move_assertions",
    "noise_adjust", "optimize", "outcome_distribution", "parse_and_inline",
    "parse_program", "power_divergence", "recommend_shots", "sample_counts",
    "sample_distribution", "simulate", "slice_fidelity", "verify_all",
]
