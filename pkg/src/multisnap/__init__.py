"""Multi-snapshot subspace spectral estimation on the unit torus.

Estimates point-source locations from snapshots of uniform-array Fourier
measurements via the noise-space correlation (imaging) route and the
shift-invariance (eigenvalue) route, and ships the diagnostics that govern
their stability: subspace distances, steering-matrix conditioning,
super-resolution factors, theoretical bound shapes, unbiased-estimator
floors, and a reproducible Monte-Carlo sweep harness.
"""

from .bounds import (
    CrbResult,
    FisherSingularError,
    TheoryBound,
    bound_shapes,
    crb,
    crb_clumps_scaling,
    sigma_s,
)
from .esprit import (
    EspritSolution,
    EstimatorDegeneracy,
    ShiftInvarianceError,
    esprit_estimate,
    esprit_pipeline,
    matching_distance,
)
from .harness import (
    ExperimentConfig,
    PhaseAxes,
    PhaseGrid,
    SweepAxis,
    SweepResult,
    SweepRow,
    TrialResult,
    config_from_json,
    fit_loglog_slope,
    phase_grid,
    phase_grid_to_csv,
    run_trial,
    sweep,
    sweep_to_csv,
)
from .music import (
    DegeneratePeaksWarning,
    NscProfile,
    default_grid_size,
    extract_support,
    noise_space_correlation,
    nsc_sup_perturbation,
    sample_nsc,
)
from .signal_model import (
    AmplitudeBatch,
    ClumpsSpec,
    ClumpsSpecError,
    GroundTruth,
    NoiseModel,
    SnapshotBatch,
    SupportSet,
    UndefinedSeparationError,
    derivative_steering,
    generate_clumps_support,
    min_separation,
    srf,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
    torus_distance,
)
from .subspace import (
    EigengapWarning,
    SubspaceBasis,
    empirical_covariance,
    projector_distance,
    signal_space,
    sin_theta_distance,
    sin_theta_from_gram,
    true_signal_space,
)

__version__ = "0.1.0"
