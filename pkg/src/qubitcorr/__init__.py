"""Simultaneous continuous measurement of two qubit observables.

Simulate stochastic detector records, evaluate closed-form output-signal
correlators, reconstruct correlators from trace ensembles with experimental
calibration, and fit the residual Rabi rate from the antisymmetrized
cross-correlator.
"""

from .analytic import (
    CorrelatorCurve,
    DecayRates,
    EvolutionGenerator,
    analytic_curves,
    antisym_cross_correlator,
    build_generator,
    correlator_closed_form,
    correlator_collapse_recipe,
    decay_rates,
    propagate_average,
    zeno_jump_rate,
)
from .cavity import (
    ResonatorParams,
    analytic_noise_terms,
    simulate_output_noise,
    steady_state_fields,
)
from .errors import (
    EmptyEnsembleError,
    IntegrationDivergedError,
    InvalidArgumentError,
    InvalidDataError,
    InvalidParameterError,
    InvalidWindowError,
    QubitCorrError,
    TraceFormatError,
    UnidentifiableError,
)
from .estimator import (
    Calibration,
    EstimatorWindow,
    OffsetEstimate,
    ResponseFit,
    bootstrap_stderr,
    calibrate_response,
    estimate_all_pairs,
    estimate_correlator,
    estimate_offsets,
)
from .fit import FitResult, fit_decay_rate, fit_rabi_mismatch
from .kernels import backend_name
from .model import (
    BlochVector,
    MeasurementChannel,
    MeasurementSetup,
    QubitEnvironment,
    SimulationConfig,
    effective_angle_correction,
    load_config,
    setup_config_from_dict,
    setup_config_to_dict,
    validate_setup,
)
from .trajectory import (
    NoiseDraw,
    TraceRecord,
    emit_signals,
    ito_diffusion,
    ito_drift,
    simulate_ensemble,
    simulate_trace,
    step,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
