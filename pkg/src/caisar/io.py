"""Stable serialization: config JSON, PGM images, CSV matrices and reports,
run manifests.

All writers are atomic (temp file in the target directory, then rename),
so partially written files never appear under the target name.  CSV floats
use Python's shortest round-trip repr, making matrix round-trips bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .metrics import REPORT_HEADER, AggregateCell, cell_to_row

PGM_MAXVAL = 65535


class FormatError(ValueError):
    """Malformed file content."""


def _atomic_write_text(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# config files

def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; defaults applied."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def save_config(cfg: ExperimentConfig, path):
    _atomic_write_text(path, json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def config_digest(cfg: ExperimentConfig) -> str:
    """Platform-stable sha256 over the canonical config serialization."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# PGM images (plain P2, 16-bit, float scale recorded in a comment)

def write_pgm(image: np.ndarray, path):
    """Write a nonnegative image as plain PGM, max value 65535.

    The linear scale (image max) goes into a ``# scale`` comment so
    ``read_pgm`` can invert the quantization.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {img.shape}")
    if not np.isfinite(img).all():
        raise ValueError("image must be finite")
    if (img < 0).any():
        raise ValueError("image must be nonnegative")
    scale = float(img.max())
    if scale > 0:
        pixels = np.rint(img / scale * PGM_MAXVAL).astype(np.int64)
    else:
        pixels = np.zeros(img.shape, dtype=np.int64)
    lines = [
        "P2",
        f"# scale {scale!r}",
        f"{img.shape[1]} {img.shape[0]}",
        str(PGM_MAXVAL),
    ]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read a plain PGM written by ``write_pgm`` back to a float image."""
    text = Path(path).read_text()
    scale = None
    tokens: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            parts = stripped[1:].split()
            if len(parts) == 2 and parts[0] == "scale":
                try:
                    scale = float(parts[1])
                except ValueError as exc:
                    raise FormatError(f"bad scale comment: {stripped!r}") from exc
            continue
        tokens.extend(stripped.split())
    if not tokens:
        raise FormatError("empty PGM file")
    if tokens[0] != "P2":
        raise FormatError(f"unsupported magic {tokens[0]!r}, expected P2")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        values = np.array([int(t) for t in tokens[4:]], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise FormatError("malformed PGM header or pixel data") from exc
    if maxval < 1:
        raise FormatError(f"bad maxval {maxval}")
    if values.size != width * height:
        raise FormatError(f"expected {width * height} pixels, got {values.size}")
    image = values.reshape(height, width)
    if scale is not None:
        image = image * (scale / maxval)
    return image


# ---------------------------------------------------------------------------
# CSV matrices and reports

def write_csv_matrix(arr: np.ndarray, path):
    """Write a 2-D array as CSV with full-precision (round-trip exact) floats."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-D array, got shape {a.shape}")
    lines = [",".join(repr(float(v)) for v in row) for row in a]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv_matrix(path) -> np.ndarray:
    text = Path(path).read_text()
    rows = []
    for ln, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"line {ln + 1}: bad float") from exc
    if not rows:
        raise FormatError("empty CSV matrix")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"ragged rows: widths {sorted(widths)}")
    return np.array(rows, dtype=np.float64)


def write_report_csv(cells: list[AggregateCell], path):
    """Write aggregated trial metrics in the documented report schema."""
    lines = [",".join(REPORT_HEADER)]
    lines.extend(",".join(cell_to_row(c)) for c in cells)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv_rows(path) -> list[dict[str, str]]:
    """Read a header-line CSV into a list of string-valued dicts."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError("empty CSV file")
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


# ---------------------------------------------------------------------------
# run manifests

@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one harness run."""

    config_digest: str
    master_seed: int
    tool_version: str
    files: dict[str, str] = field(default_factory=dict)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(manifest: RunManifest, path):
    payload = {
        "config_digest": manifest.config_digest,
        "master_seed": manifest.master_seed,
        "tool_version": manifest.tool_version,
        "files": dict(sorted(manifest.files.items())),
    }
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> RunManifest:
    raw = json.loads(Path(path).read_text())
    return RunManifest(
        config_digest=raw["config_digest"],
        master_seed=raw["master_seed"],
        tool_version=raw["tool_version"],
        files=dict(raw.get("files", {})),
    )
