"""Simulation and analysis of recursive swap-test purification of mixed states."""

__version__ = "0.1.0"

from .bounds import (
    BoundDomainError,
    BoundReport,
    StageLengths,
    levels_upper_bound,
    lower_bound_gap,
    lower_bound_lambda1,
    lower_bound_two_eigs,
    sample_upper_bound_proof1,
    sample_upper_bound_proof2,
    stage_lengths,
)
from .density_oracle import DensityMatrix, spectrum_of, swap_test_channel
from .protocol import (
    ProtocolConfig,
    SampleLedger,
    TrajectoryRecord,
    expected_samples_closed_form,
    monte_carlo,
    run_density,
    run_exact,
    run_to_epsilon,
    streaming_memory_trace,
)
from .spectrum import (
    GeneralizedSpectrum,
    Spectrum,
    SpectrumError,
    dominates,
    eigen_delta_recurrence,
    f_map,
    f_map_generalized,
    gamma,
    progress_measure,
    s_projection,
    success_probability,
)

__all__ = [
    "BoundDomainError", "BoundReport", "DensityMatrix", "GeneralizedSpectrum",
    "ProtocolConfig", "SampleLedger", "Spectrum", "SpectrumError", "StageLengths",
    "TrajectoryRecord", "dominates", "eigen_delta_recurrence", "expected_samples_closed_form",
    "f_map", "f_map_generalized", "gamma", "levels_upper_bound", "lower_bound_gap",
    "lower_bound_lambda1", "lower_bound_two_eigs", "monte_carlo", "progress_measure",
    "run_density", "run_exact", "run_to_epsilon", "s_projection", "sample_upper_bound_proof1",
    "sample_upper_bound_proof2", "spectrum_of", "stage_lengths", "streaming_memory_trace",
    "success_probability", "swap_test_channel",
]
