"""nsrkit: quantum single-parameter estimation via the noise-to-sensibility
ratio, with the phase-diffusion case study and a Monte Carlo harness."""

from .errors import (
    CalibrationRangeWarning,
    ContractViolationError,
    DegenerateObservableError,
    DimensionMismatchError,
    EstimatorDivergenceError,
    InvalidDimensionError,
    NoInformationError,
    NonInvertibleCurveError,
    NumericalConsistencyError,
    SupportTruncationWarning,
    TruncationError,
    UndefinedResidualError,
)
from .operators import (
    DensityMatrix,
    GaussianProbeSpec,
    Operator,
    StateVector,
    default_truncation_dim,
    expectation,
    fock_ladder,
    fock_state,
    gaussian_probe,
    number_operator,
    unitary_from_generator,
    variance,
)
from .estimation import (
    ParamFamily,
    SensitivityReport,
    assess_observable,
    calibration_curvature,
    optimality_residual,
    pure_unitary_family,
    pure_unitary_qfi,
    pure_unitary_sample_size_bound,
    qfi,
    sample_size_bound,
    sld,
)
from .dephasing import (
    DiffusionParams,
    EnhancementScan,
    PhaseFamilySpec,
    analytic_fnsr,
    c_q,
    dephase_channel,
    dephasing_family,
    enhancement_scan,
    enhancement_threshold,
    max_enhancement_ratio,
    no_squeeze_ratio_bound,
    optimal_calibration,
    optimal_fnsr,
    quadrature,
    r_max,
    r_opt,
)
from .montecarlo import (
    CalibrationCurve,
    MeasurementModel,
    TrialReport,
    adaptive_calibrate,
    build_curve,
    invert_mean,
    mean_inversion_condition,
    run_trials,
    sample_outcomes,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationCurve",
    "CalibrationRangeWarning",
    "ContractViolationError",
    "DegenerateObservableError",
    "DensityMatrix",
    "DiffusionParams",
    "DimensionMismatchError",
    "EnhancementScan",
    "EstimatorDivergenceError",
    "GaussianProbeSpec",
    "InvalidDimensionError",
    "MeasurementModel",
    "NoInformationError",
    "NonInvertibleCurveError",
    "NumericalConsistencyError",
    "Operator",
    "ParamFamily",
    "PhaseFamilySpec",
    "SensitivityReport",
    "StateVector",
    "SupportTruncationWarning",
    "TrialReport",
    "TruncationError",
    "UndefinedResidualError",
    "adaptive_calibrate",
    "analytic_fnsr",
    "assess_observable",
    "build_curve",
    "c_q",
    "calibration_curvature",
    "default_truncation_dim",
    "dephase_channel",
    "dephasing_family",
    "enhancement_scan",
    "enhancement_threshold",
    "expectation",
    "fock_ladder",
    "fock_state",
    "gaussian_probe",
    "invert_mean",
    "max_enhancement_ratio",
    "mean_inversion_condition",
    "no_squeeze_ratio_bound",
    "number_operator",
    "optimal_calibration",
    "optimal_fnsr",
    "optimality_residual",
    "pure_unitary_family",
    "pure_unitary_qfi",
    "pure_unitary_sample_size_bound",
    "qfi",
    "quadrature",
    "r_max",
    "r_opt",
    "run_trials",
    "sample_outcomes",
    "sample_size_bound",
    "sld",
    "unitary_from_generator",
    "variance",
]
