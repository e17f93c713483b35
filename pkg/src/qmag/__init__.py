"""Two-qubit driven-probe magnetometry toolkit.

Core layers: model (parameters, Hamiltonian, convergence margins), evolution
(first-order and numerically exact propagators), protocol (readout
probabilities, closed forms, shot sampling), metrology (Fisher information,
sensitivity bounds, field estimation), sweeps (figure presets, CSV export,
validation report). An HTTP service and a command-line client wrap the same
handlers.
"""
from ._version import __version__
from .linalg import ContractViolationError, ConvergenceError
from .model import (
    DerivedQuantities,
    SystemParams,
    convergence_margin,
    derived_quantities,
    h_max,
    hamiltonian_at,
    margin_profile,
    truncation_error_bound,
)
from .evolution import (
    PropagatorReport,
    dyson1_propagator,
    exact_propagator,
    propagator_report,
)
from .protocol import (
    MeasurementRecord,
    ProbabilityQuad,
    PropagatorMethod,
    Source,
    closed_form_probabilities,
    closed_form_table,
    printed_variant_closed_form,
    probabilities,
    probability_trace,
    simulate_counts,
    write_probability_trace,
)
from .metrology import (
    DegenerateLimitError,
    QfiPoint,
    SnrPoint,
    UnidentifiableParameterError,
    estimate_field,
    optimal_time,
    qfi_closed_form,
    qfi_long_time_limit,
    qfi_numeric,
    sensitivity_bound,
    signal_to_noise,
    snr_point,
)
from .sweeps import (
    PRESETS,
    SweepKind,
    SweepResult,
    SweepSpec,
    preset_spec,
    run_sweep,
    write_sweep_csv,
)

__all__ = [
    "__version__",
    "ContractViolationError",
    "ConvergenceError",
    "SystemParams",
    "DerivedQuantities",
    "derived_quantities",
    "hamiltonian_at",
    "h_max",
    "convergence_margin",
    "truncation_error_bound",
    "margin_profile",
    "dyson1_propagator",
    "exact_propagator",
    "propagator_report",
    "PropagatorReport",
    "Source",
    "PropagatorMethod",
    "ProbabilityQuad",
    "MeasurementRecord",
    "probabilities",
    "closed_form_probabilities",
    "closed_form_table",
    "printed_variant_closed_form",
    "simulate_counts",
    "probability_trace",
    "write_probability_trace",
    "QfiPoint",
    "SnrPoint",
    "DegenerateLimitError",
    "UnidentifiableParameterError",
    "qfi_closed_form",
    "qfi_numeric",
    "qfi_long_time_limit",
    "optimal_time",
    "sensitivity_bound",
    "snr_point",
    "signal_to_noise",
    "estimate_field",
    "SweepKind",
    "SweepSpec",
    "SweepResult",
    "PRESETS",
    "preset_spec",
    "run_sweep",
    "write_sweep_csv",
]
