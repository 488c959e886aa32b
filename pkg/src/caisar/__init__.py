"""caisar: coded-aperture ISAR imaging simulation and sparse recovery."""

from .config import ConfigError, ExperimentConfig
from .encoding import (
    CoherenceReport,
    EncodedAperture,
    MeasurementSet,
    SensingMatrix,
    add_awgn,
    assemble_sensing_matrix,
    forward_measure,
    generate_encoded_aperture,
    mutual_coherence,
    rip_diagnostics,
)
from .harness import (
    ExperimentReport,
    ImagingOutcome,
    ObservationBudget,
    benchmark_runtime,
    check_observation_budget,
    derive_trial_seed,
    imaging_procedure,
    run_scenario,
    run_trial,
    sweep_snr,
)
from .metrics import AggregateCell, TrialMetrics, aggregate_trials, mse, relative_l2, time_solver
from .phantoms import (
    Rect,
    Scene,
    default_satellite_rects,
    make_combined_phantom,
    make_debris_phantom,
    make_satellite_phantom,
)
from .signal_model import (
    RadarParams,
    RotatingScene,
    Scatterer,
    SlowTimeGrid,
    baseband_echo,
    doppler_bandwidth,
    doppler_frequency,
    occupied_bandwidth,
)
from .solvers import (
    RecoveryResult,
    SolverConfig,
    default_config,
    solve,
    solve_l1,
    solve_sbl,
    solve_sl0,
    solve_tv,
    tv_norm,
)

__version__ = "0.1.0"
