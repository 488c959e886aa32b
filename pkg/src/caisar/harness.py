"""Experiment runner: scenario sweeps, SNR sweeps, runtime benchmarks, the
grow-the-aperture-count imaging procedure, and the observation-time budget.

Every trial's randomness comes from one splitmix64-style hash of
(master_seed, scenario, solver, snapshot count, SNR index, trial index),
so results are bit-reproducible regardless of execution order, including
under trial-level concurrency.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as cio
from .config import ConfigError, ExperimentConfig
from .encoding import (
    MeasurementSet,
    add_awgn,
    assemble_sensing_matrix,
    forward_measure,
    generate_encoded_aperture,
    noise_std_for_snr,
    rip_diagnostics,
)
from .metrics import AggregateCell, TrialMetrics, aggregate_trials, mse, relative_l2, time_solver
from .phantoms import (
    Scene,
    make_combined_phantom,
    make_debris_phantom,
    make_satellite_phantom,
    satellite_support,
)
from .solvers import SolverConfig, solve

TOOL_VERSION = "0.1.0"

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode():
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def seed_chain(*tokens) -> int:
    """Pure 64-bit hash of a mixed int/str token sequence."""
    h = 0x8AC7230489E80000
    for token in tokens:
        value = _fnv1a64(token) if isinstance(token, str) else int(token) & _MASK64
        h = _splitmix64(h ^ value)
    return h


def derive_trial_seed(
    master_seed: int, scenario: str, solver: str, m: int, snr_index: int, trial_index: int
) -> int:
    """Trial seed as a pure function of the cell coordinates."""
    return seed_chain(master_seed, scenario, solver, m, snr_index, trial_index)


# ---------------------------------------------------------------------------
# observation budget

@dataclass(frozen=True)
class ObservationBudget:
    """Snapshot timing against the window a space object stays observable."""

    snapshot_time_s: float = 1e-4
    total_observation_s: float = 3.0

    def __post_init__(self):
        if not (self.snapshot_time_s > 0):
            raise ValueError("snapshot_time_s must be > 0")
        if not (self.total_observation_s > 0):
            raise ValueError("total_observation_s must be > 0")

    @property
    def max_snapshots(self) -> int:
        return int(math.floor(self.total_observation_s / self.snapshot_time_s))


@dataclass(frozen=True)
class BudgetCheck:
    passed: bool
    used_s: float
    margin_s: float


def check_observation_budget(m: int, budget: ObservationBudget) -> BudgetCheck:
    """Pass iff M snapshots fit in the observation window; report the margin."""
    if m < 0:
        raise ValueError("snapshot count must be >= 0")
    used = m * budget.snapshot_time_s
    return BudgetCheck(
        passed=used <= budget.total_observation_s,
        used_s=used,
        margin_s=budget.total_observation_s - used,
    )


# ---------------------------------------------------------------------------
# single trial

def make_phantom(cfg: ExperimentConfig, phantom_seed: int) -> Scene:
    if cfg.scenario == "debris_only":
        return make_debris_phantom(cfg.n, cfg.debris_count, cfg.debris_amp_range, phantom_seed)
    if cfg.scenario == "satellite_only":
        return make_satellite_phantom(cfg.n, cfg.satellite_rects)
    return make_combined_phantom(
        cfg.n, cfg.satellite_rects, cfg.debris_count, cfg.debris_amp_range, phantom_seed
    )


def build_measurement(cfg: ExperimentConfig, scene: Scene, m: int, trial_seed: int):
    """Apertures, sensing matrix, and (possibly noisy) measurements for a trial."""
    aperture_seeds = [seed_chain(trial_seed, "aperture", i) for i in range(m)]
    apertures = [generate_encoded_aperture(cfg.n, cfg.bernoulli_p, s) for s in aperture_seeds]
    phi = assemble_sensing_matrix(apertures)
    y_clean = forward_measure(phi, scene.x)
    return phi, y_clean


# fraction of the expected noise norm allotted to the residual ball; values
# near 1 over-shrink dense scenes while much smaller values fit noise
_EPSILON_NOISE_FRACTION = 0.9


def auto_epsilon(y_clean: np.ndarray, snr_db: float | None) -> float:
    """Residual bound for the L1/TV solvers, from the known noise level."""
    if snr_db is None:
        return 0.0
    m = np.asarray(y_clean).size
    return _EPSILON_NOISE_FRACTION * noise_std_for_snr(y_clean, snr_db) * math.sqrt(m)


def trial_solver_config(
    cfg: ExperimentConfig, solver: str, y_clean: np.ndarray, snr_db: float | None, trial_seed: int
) -> SolverConfig:
    """Per-trial solver config with noise-derived defaults.

    epsilon and the SBL noise variance are derived from the known SNR
    unless the experiment config pinned them explicitly.
    """
    overrides = cfg.solver_overrides.get(solver, {})
    extra: dict = {"seed": seed_chain(trial_seed, "solver")}
    if solver in ("l1", "tv") and "epsilon" not in overrides:
        extra["epsilon"] = auto_epsilon(y_clean, snr_db)
    if solver == "sbl" and "sbl_noise_var" not in overrides:
        extra["sbl_noise_var"] = noise_std_for_snr(y_clean, snr_db) ** 2
    return cfg.solver_config(solver, **extra)


def run_trial(
    cfg: ExperimentConfig,
    solver: str,
    m: int,
    snr_db: float | None,
    snr_index: int,
    trial_index: int,
    keep_image: bool = False,
):
    """Run one (solver, M, snr, trial) cell entry; returns (metrics, image|None)."""
    trial_seed = derive_trial_seed(cfg.master_seed, cfg.scenario, solver, m, snr_index, trial_index)
    scene = make_phantom(cfg, seed_chain(trial_seed, "phantom"))
    phi, y_clean = build_measurement(cfg, scene, m, trial_seed)
    if snr_db is None:
        measurement = MeasurementSet.noiseless(y_clean)
    else:
        measurement = add_awgn(y_clean, snr_db, seed_chain(trial_seed, "noise"))
    scfg = trial_solver_config(cfg, solver, y_clean, snr_db, trial_seed)
    result, runtime_s = time_solver(solve, phi, measurement.y, scfg, cfg.n)
    image = result.image(cfg.n)
    metrics = TrialMetrics(
        mse=mse(image, scene.image),
        relative_l2=relative_l2(image, scene.image),
        runtime_s=runtime_s,
        solver=solver,
        snapshots_m=m,
        snr_db=snr_db,
        trial_seed=trial_seed,
    )
    return metrics, (image if keep_image else None)


def _run_task(args):
    cfg, solver, m, snr_db, snr_index, trial_index = args
    return run_trial(cfg, solver, m, snr_db, snr_index, trial_index, keep_image=trial_index == 0)


# ---------------------------------------------------------------------------
# scenario sweeps

@dataclass(frozen=True)
class FailureRecord:
    solver: str
    snapshots_m: int
    snr_db: float | None
    trial_index: int
    error: str


@dataclass(frozen=True)
class ExperimentReport:
    scenario: str
    cells: tuple[AggregateCell, ...]
    trials: tuple[TrialMetrics, ...]
    failures: tuple[FailureRecord, ...]
    output_dir: str | None = None
    csv_path: str | None = None
    manifest_path: str | None = None
    image_paths: tuple[str, ...] = ()

    def cell(self, solver: str, m: int, snr_db: float | None) -> AggregateCell:
        for c in self.cells:
            if (c.solver, c.snapshots_m, c.snr_db) == (solver, m, snr_db):
                return c
        raise KeyError(f"no cell for ({solver}, {m}, {snr_db})")


def snr_label(snr_db: float | None) -> str:
    if snr_db is None:
        return "noiseless"
    if float(snr_db).is_integer():
        return str(int(snr_db))
    return str(float(snr_db))


def run_scenario(
    cfg: ExperimentConfig,
    output_dir: str | None = None,
    workers: int = 1,
    write_outputs: bool = True,
) -> ExperimentReport:
    """Sweep the full (solver, M, snr, trial) grid of one scenario.

    Writes the aggregated CSV report, the first-trial recovered image of
    every cell as PGM, and a JSON run manifest.  Per-trial failures are
    recorded and do not stop the sweep.
    """
    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    if write_outputs:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            probe = outdir / ".write_probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output_dir: {outdir} is not writable: {exc}") from exc

    tasks = [
        (cfg, solver, m, snr_db, snr_index, trial)
        for solver in cfg.solvers
        for m in cfg.snapshot_counts
        for snr_index, snr_db in enumerate(cfg.snr_db_list)
        for trial in range(cfg.trials)
    ]

    results: dict[tuple, TrialMetrics] = {}
    first_images: dict[tuple, np.ndarray] = {}
    failures: list[FailureRecord] = []

    def record(task, outcome, error=None):
        _, solver, m, snr_db, _, trial = task
        if error is not None:
            failures.append(FailureRecord(solver, m, snr_db, trial, repr(error)))
            return
        metrics, image = outcome
        results[(solver, m, snr_db, trial)] = metrics
        if image is not None:
            first_images[(solver, m, snr_db)] = image

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_task, task): task for task in tasks}
            for future, task in futures.items():
                try:
                    record(task, future.result())
                except Exception as exc:
                    record(task, None, error=exc)
    else:
        for task in tasks:
            try:
                record(task, _run_task(task))
            except Exception as exc:
                record(task, None, error=exc)

    ordered = [results[k] for k in sorted(results, key=_trial_sort_key)]
    cells = aggregate_trials(ordered) if ordered else []

    csv_path = manifest_path = None
    image_paths: list[str] = []
    if write_outputs:
        csv_path = str(outdir / "report.csv")
        cio.write_report_csv(cells, csv_path)
        for (solver, m, snr_db), image in sorted(first_images.items(), key=_cell_sort_key):
            name = f"{cfg.scenario}_{solver}_M{m}_snr{snr_label(snr_db)}.pgm"
            path = outdir / name
            cio.write_pgm(np.maximum(image, 0.0), path)
            image_paths.append(str(path))
        files = {Path(p).name: cio.file_sha256(p) for p in [csv_path, *image_paths]}
        manifest = cio.RunManifest(
            config_digest=cio.config_digest(cfg),
            master_seed=cfg.master_seed,
            tool_version=TOOL_VERSION,
            files=files,
        )
        manifest_path = str(outdir / "manifest.json")
        cio.write_manifest(manifest, manifest_path)

    return ExperimentReport(
        scenario=cfg.scenario,
        cells=tuple(cells),
        trials=tuple(ordered),
        failures=tuple(failures),
        output_dir=str(outdir) if write_outputs else None,
        csv_path=csv_path,
        manifest_path=manifest_path,
        image_paths=tuple(image_paths),
    )


def _trial_sort_key(key):
    solver, m, snr_db, trial = key
    return (solver, m, snr_db is None, snr_db if snr_db is not None else 0.0, trial)


def _cell_sort_key(item):
    (solver, m, snr_db), _ = item
    return (solver, m, snr_db is None, snr_db if snr_db is not None else 0.0)


def sweep_snr(
    cfg: ExperimentConfig,
    m: int | None = None,
    output_dir: str | None = None,
    workers: int = 1,
    write_outputs: bool = True,
) -> ExperimentReport:
    """run_scenario over the SNR grid at one fixed snapshot count."""
    fixed_m = m if m is not None else cfg.snapshot_counts[0]
    return run_scenario(
        cfg.with_updates(snapshot_counts=(fixed_m,)),
        output_dir=output_dir,
        workers=workers,
        write_outputs=write_outputs,
    )


def benchmark_runtime(
    cfg: ExperimentConfig,
    output_dir: str | None = None,
    write_outputs: bool = True,
) -> ExperimentReport:
    """Time each solver across the snapshot grid at the first configured SNR.

    Always runs serially so wall-clock comparisons are not distorted by
    concurrent load.
    """
    bench_cfg = cfg.with_updates(snr_db_list=(cfg.snr_db_list[0],))
    return run_scenario(bench_cfg, output_dir=output_dir, workers=1, write_outputs=write_outputs)


# ---------------------------------------------------------------------------
# iterative imaging procedure

@dataclass(frozen=True)
class ImagingOutcome:
    """Final image and decision record of the grow-M imaging loop."""

    image: np.ndarray
    m_sequence: tuple[int, ...]
    quality_sequence: tuple[float, ...]
    status: str  # "quality_met" or "budget_exhausted"
    solver: str
    quality_threshold: float
    debris_detected: bool
    decision: str  # "launch" or "ground_measures"


def imaging_procedure(
    cfg: ExperimentConfig,
    quality_threshold: float,
    m_step: int,
    solver: str | None = None,
    quality_metric: str = "true_error",
    detection_threshold: float = 0.05,
    output_dir: str | None = None,
) -> ImagingOutcome:
    """Grow the snapshot count until the recovered image is good enough.

    Solves at the starting M; while the quality metric exceeds the
    threshold and another ``m_step`` snapshots fit the observation budget
    (and M stays below the pixel count), grows M and repeats.  Afterwards a
    debris decision is made from the recovered energy outside the known
    satellite silhouette: debris present means the launch must wait.
    """
    if m_step < 1:
        raise ValueError("m_step must be >= 1")
    if quality_metric not in ("true_error", "residual"):
        raise ValueError("quality_metric must be 'true_error' or 'residual'")
    solver = solver if solver is not None else cfg.solvers[0]
    budget = ObservationBudget(cfg.snapshot_time_s, cfg.observation_window_s)
    m_cap = min(budget.max_snapshots, cfg.n * cfg.n - 1)

    m = cfg.snapshot_counts[0]
    snr_db = cfg.snr_db_list[0]
    m_seq: list[int] = []
    qualities: list[float] = []
    status = "budget_exhausted"
    image = np.zeros((cfg.n, cfg.n))

    while True:
        m_seq.append(m)
        trial_seed = derive_trial_seed(cfg.master_seed, cfg.scenario, solver, m, 0, 0)
        scene = make_phantom(cfg, seed_chain(trial_seed, "phantom"))
        phi, y_clean = build_measurement(cfg, scene, m, trial_seed)
        if snr_db is None:
            measurement = MeasurementSet.noiseless(y_clean)
        else:
            measurement = add_awgn(y_clean, snr_db, seed_chain(trial_seed, "noise"))
        scfg = trial_solver_config(cfg, solver, y_clean, snr_db, trial_seed)
        result = solve(phi, measurement.y, scfg, cfg.n)
        image = result.image(cfg.n)
        if quality_metric == "true_error":
            quality = relative_l2(image, scene.image)
        else:
            ynorm = float(np.linalg.norm(measurement.y))
            quality = result.final_residual / ynorm if ynorm > 0 else 0.0
        qualities.append(quality)
        if quality <= quality_threshold:
            status = "quality_met"
            break
        if m + m_step > m_cap:
            break
        m += m_step

    if cfg.scenario == "debris_only":
        support = np.zeros((cfg.n, cfg.n), dtype=bool)
    else:
        support = satellite_support(cfg.n, cfg.satellite_rects)
    energy = float(np.sum(image**2))
    outside = float(np.sum(image[~support] ** 2))
    debris_detected = energy > 0 and outside / energy > detection_threshold
    decision = "ground_measures" if debris_detected else "launch"

    outcome = ImagingOutcome(
        image=image,
        m_sequence=tuple(m_seq),
        quality_sequence=tuple(qualities),
        status=status,
        solver=solver,
        quality_threshold=quality_threshold,
        debris_detected=debris_detected,
        decision=decision,
    )
    if output_dir is not None:
        outdir = Path(output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        cio.write_pgm(np.maximum(image, 0.0), outdir / f"{cfg.scenario}_{solver}_final.pgm")
    return outcome


def validate_matrix(cfg: ExperimentConfig, m: int | None = None):
    """Diagnostics for one sensing matrix drawn per the config."""
    m = m if m is not None else cfg.snapshot_counts[0]
    trial_seed = derive_trial_seed(cfg.master_seed, cfg.scenario, "validate", m, 0, 0)
    seeds = [seed_chain(trial_seed, "aperture", i) for i in range(m)]
    apertures = [generate_encoded_aperture(cfg.n, cfg.bernoulli_p, s) for s in seeds]
    phi = assemble_sensing_matrix(apertures)
    return phi, rip_diagnostics(phi)
