"""Experiment configuration: schema, defaults, and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .phantoms import DEFAULT_DEBRIS_AMP_RANGE, DEFAULT_DEBRIS_COUNT, Rect
from .solvers import MODES, SolverConfig, default_config

SCENARIOS = ("satellite_only", "debris_only", "combined")


class ConfigError(ValueError):
    """Configuration file or value rejected; message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a scenario sweep.

    Only ``scenario`` and ``n`` are required in a config file; everything
    else has the defaults below.
    """

    scenario: str
    n: int
    snapshot_counts: tuple[int, ...] = (100, 200, 300)
    snr_db_list: tuple[float | None, ...] = (5.0,)
    trials: int = 100
    solvers: tuple[str, ...] = ("l1", "tv", "sl0", "sbl")
    bernoulli_p: float = 0.5
    master_seed: int = 0
    output_dir: str = "out"
    debris_count: int = DEFAULT_DEBRIS_COUNT
    debris_amp_range: tuple[float, float] = DEFAULT_DEBRIS_AMP_RANGE
    satellite_rects: tuple[Rect, ...] | None = None
    snapshot_time_s: float = 1e-4
    observation_window_s: float = 3.0
    solver_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "snapshot_counts", tuple(self.snapshot_counts))
        object.__setattr__(self, "snr_db_list", tuple(self.snr_db_list))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        object.__setattr__(self, "debris_amp_range", tuple(self.debris_amp_range))
        if self.satellite_rects is not None:
            object.__setattr__(self, "satellite_rects", tuple(self.satellite_rects))
        _validate(self)

    @property
    def max_snapshots(self) -> int:
        """Snapshot budget implied by the observation window."""
        return int(math.floor(self.observation_window_s / self.snapshot_time_s))

    def solver_config(self, mode: str, **extra) -> SolverConfig:
        """Per-mode SolverConfig: defaults, then file overrides, then extras."""
        params = dict(self.solver_overrides.get(mode, {}))
        params.update(extra)
        return default_config(mode, **params)

    def to_dict(self) -> dict:
        rects = None
        if self.satellite_rects is not None:
            rects = [[r.row, r.col, r.height, r.width, r.amplitude] for r in self.satellite_rects]
        return {
            "scenario": self.scenario,
            "n": self.n,
            "snapshot_counts": list(self.snapshot_counts),
            "snr_db_list": list(self.snr_db_list),
            "trials": self.trials,
            "solvers": list(self.solvers),
            "bernoulli_p": self.bernoulli_p,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "debris_count": self.debris_count,
            "debris_amp_range": list(self.debris_amp_range),
            "satellite_rects": rects,
            "snapshot_time_s": self.snapshot_time_s,
            "observation_window_s": self.observation_window_s,
            "solver_configs": self.solver_overrides,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        known = {
            "scenario", "n", "snapshot_counts", "snr_db_list", "trials", "solvers",
            "bernoulli_p", "master_seed", "output_dir", "debris_count",
            "debris_amp_range", "satellite_rects", "snapshot_time_s",
            "observation_window_s", "solver_configs",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        for key in ("scenario", "n"):
            if key not in raw:
                raise ConfigError(f"{key}: required key is missing")

        kwargs: dict = {
            "scenario": _expect(raw, "scenario", str),
            "n": _expect(raw, "n", int),
        }
        if "snapshot_counts" in raw:
            kwargs["snapshot_counts"] = tuple(
                _expect_list(raw, "snapshot_counts", int, minimum=1)
            )
        if "snr_db_list" in raw:
            vals = raw["snr_db_list"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("snr_db_list: must be a non-empty list")
            parsed = []
            for i, v in enumerate(vals):
                if v is None:
                    parsed.append(None)
                elif isinstance(v, (int, float)) and not isinstance(v, bool):
                    parsed.append(float(v))
                else:
                    raise ConfigError(f"snr_db_list[{i}]: must be a number or null")
            kwargs["snr_db_list"] = tuple(parsed)
        if "trials" in raw:
            kwargs["trials"] = _expect(raw, "trials", int)
        if "solvers" in raw:
            kwargs["solvers"] = tuple(_expect_list(raw, "solvers", str))
        if "bernoulli_p" in raw:
            kwargs["bernoulli_p"] = _expect_number(raw, "bernoulli_p")
        if "master_seed" in raw:
            kwargs["master_seed"] = _expect(raw, "master_seed", int)
        if "output_dir" in raw:
            kwargs["output_dir"] = _expect(raw, "output_dir", str)
        if "debris_count" in raw:
            kwargs["debris_count"] = _expect(raw, "debris_count", int)
        if "debris_amp_range" in raw:
            rng = _expect_list(raw, "debris_amp_range", (int, float))
            if len(rng) != 2:
                raise ConfigError("debris_amp_range: must be [low, high]")
            kwargs["debris_amp_range"] = (float(rng[0]), float(rng[1]))
        if raw.get("satellite_rects") is not None:
            rects = []
            for i, entry in enumerate(raw["satellite_rects"]):
                if not isinstance(entry, list) or len(entry) != 5:
                    raise ConfigError(
                        f"satellite_rects[{i}]: must be [row, col, height, width, amplitude]"
                    )
                try:
                    rects.append(Rect(int(entry[0]), int(entry[1]), int(entry[2]),
                                      int(entry[3]), float(entry[4])))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"satellite_rects[{i}]: {exc}") from exc
            kwargs["satellite_rects"] = tuple(rects)
        if "snapshot_time_s" in raw:
            kwargs["snapshot_time_s"] = _expect_number(raw, "snapshot_time_s")
        if "observation_window_s" in raw:
            kwargs["observation_window_s"] = _expect_number(raw, "observation_window_s")
        if "solver_configs" in raw:
            overrides = raw["solver_configs"]
            if not isinstance(overrides, dict):
                raise ConfigError("solver_configs: must be an object keyed by solver mode")
            for mode, params in overrides.items():
                if mode not in MODES:
                    raise ConfigError(f"solver_configs.{mode}: unknown solver mode")
                if not isinstance(params, dict):
                    raise ConfigError(f"solver_configs.{mode}: must be an object")
                try:
                    default_config(mode, **params)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"solver_configs.{mode}: {exc}") from exc
            kwargs["solver_overrides"] = overrides

        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_updates(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def _expect(raw: dict, key: str, kind):
    v = raw[key]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ConfigError(f"{key}: must be an integer")
    if not isinstance(v, kind):
        raise ConfigError(f"{key}: must be {kind.__name__}")
    return v


def _expect_number(raw: dict, key: str) -> float:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: must be a number")
    return float(v)


def _expect_list(raw: dict, key: str, kind, minimum=None) -> list:
    v = raw[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key}: must be a non-empty list")
    for i, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, kind):
            raise ConfigError(f"{key}[{i}]: wrong type")
        if minimum is not None and item < minimum:
            raise ConfigError(f"{key}[{i}]: must be >= {minimum}")
    return v


def _validate(cfg: ExperimentConfig):
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario: must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if cfg.n < 1:
        raise ConfigError("n: must be >= 1")
    if not cfg.snapshot_counts:
        raise ConfigError("snapshot_counts: must be non-empty")
    if not cfg.snr_db_list:
        raise ConfigError("snr_db_list: must be non-empty")
    if cfg.trials < 1:
        raise ConfigError("trials: must be >= 1")
    if not cfg.solvers:
        raise ConfigError("solvers: must be non-empty")
    for i, s in enumerate(cfg.solvers):
        if s not in MODES:
            raise ConfigError(f"solvers[{i}]: unknown solver {s!r}")
    if not (0 < cfg.bernoulli_p <= 1):
        raise ConfigError("bernoulli_p: must be in (0, 1]")
    if not (cfg.snapshot_time_s > 0):
        raise ConfigError("snapshot_time_s: must be > 0")
    if not (cfg.observation_window_s > 0):
        raise ConfigError("observation_window_s: must be > 0")
    for i, m in enumerate(cfg.snapshot_counts):
        if m < 1:
            raise ConfigError(f"snapshot_counts[{i}]: must be >= 1")
        if m >= cfg.n * cfg.n:
            raise ConfigError(
                f"snapshot_counts[{i}]: {m} must be below the pixel count n**2={cfg.n * cfg.n}"
            )
        if m > cfg.max_snapshots:
            raise ConfigError(
                f"snapshot_counts[{i}]: {m} snapshots need "
                f"{m * cfg.snapshot_time_s:.6g} s, exceeding the "
                f"{cfg.observation_window_s:.6g} s observation window"
            )
    low, high = cfg.debris_amp_range
    if not (0 < low <= high):
        raise ConfigError("debris_amp_range: must satisfy 0 < low <= high")
    if cfg.scenario != "satellite_only" and cfg.debris_count < 1:
        raise ConfigError("debris_count: must be >= 1 for debris scenarios")
