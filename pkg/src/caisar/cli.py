"""Command-line front end for the experiment harness.

Exit codes: 0 full success, 1 partial per-cell failures, 2 config errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, io as cio
from .config import ConfigError
from .signal_model import RadarParams, single_scatterer_spectral_check


def _add_common(parser):
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--output-dir", default=None, help="override the config output_dir")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--trials", type=int, default=None, help="override trial count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caisar",
        description="Coded-aperture ISAR imaging experiments: synthesize scenes, "
        "measure them through Bernoulli spot-beam snapshots, and recover "
        "images with L1 / TV / SL0 / SBL solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-scenario", help="full (solver, M, snr, trial) sweep")
    _add_common(run)
    run.add_argument("--workers", type=int, default=1, help="concurrent trial processes")

    snr = sub.add_parser("sweep-snr", help="SNR sweep at a fixed snapshot count")
    _add_common(snr)
    snr.add_argument("--workers", type=int, default=1)
    snr.add_argument("--snapshots", type=int, default=None,
                     help="fixed M (default: first configured snapshot count)")

    bench = sub.add_parser("benchmark", help="per-solver runtime comparison (serial)")
    _add_common(bench)

    proc = sub.add_parser("imaging-procedure", help="grow M until the image is good enough")
    _add_common(proc)
    proc.add_argument("--quality-threshold", type=float, default=0.1,
                      help="stop once the quality metric drops below this")
    proc.add_argument("--m-step", type=int, default=50, help="snapshot increment per round")
    proc.add_argument("--metric", choices=("true_error", "residual"), default="true_error")

    phys = sub.add_parser("physics-check", help="echo-model self checks")
    phys.add_argument("--seed", type=int, default=0)
    phys.add_argument("--pairs", type=int, default=10)
    phys.add_argument("--tolerance", type=float, default=0.15)

    val = sub.add_parser("validate-matrix", help="sensing-matrix diagnostics")
    val.add_argument("--config", default=None)
    val.add_argument("--matrix", default=None, help="CSV matrix file to inspect instead")
    val.add_argument("--snapshots", type=int, default=None)
    return parser


def _load(args) -> "harness.ExperimentConfig":
    cfg = cio.load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if updates:
        cfg = cfg.with_updates(**updates)
    return cfg


def _report_outcome(report) -> int:
    for cell in report.cells:
        print(
            f"{cell.solver:>4s}  M={cell.snapshots_m:<4d} snr={harness.snr_label(cell.snr_db):>9s}  "
            f"trials={cell.trials:<4d} mse={cell.mse_mean:.6g}  rel_l2={cell.rel_l2_mean:.4g}  "
            f"runtime={cell.runtime_mean_s:.3g}s"
        )
    if report.csv_path:
        print(f"report: {report.csv_path}")
    if report.failures:
        print(f"{len(report.failures)} trial(s) failed:", file=sys.stderr)
        for f in report.failures:
            print(f"  {f.solver} M={f.snapshots_m} snr={f.snr_db} "
                  f"trial={f.trial_index}: {f.error}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run-scenario":
            report = harness.run_scenario(_load(args), output_dir=args.output_dir,
                                          workers=args.workers)
            return _report_outcome(report)

        if args.command == "sweep-snr":
            report = harness.sweep_snr(_load(args), m=args.snapshots,
                                       output_dir=args.output_dir, workers=args.workers)
            return _report_outcome(report)

        if args.command == "benchmark":
            report = harness.benchmark_runtime(_load(args), output_dir=args.output_dir)
            return _report_outcome(report)

        if args.command == "imaging-procedure":
            outcome = harness.imaging_procedure(
                _load(args), quality_threshold=args.quality_threshold,
                m_step=args.m_step, quality_metric=args.metric,
                output_dir=args.output_dir,
            )
            print(json.dumps({
                "status": outcome.status,
                "solver": outcome.solver,
                "m_sequence": list(outcome.m_sequence),
                "quality_sequence": list(outcome.quality_sequence),
                "debris_detected": outcome.debris_detected,
                "decision": outcome.decision,
            }, indent=2))
            return 0

        if args.command == "physics-check":
            return _physics_check(args)

        if args.command == "validate-matrix":
            return _validate_matrix(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


def _physics_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    radar = RadarParams.from_center_frequency(10.2e9)
    print(f"radar: f_c=10.2 GHz, wavelength={radar.wavelength_m:.6f} m")
    print(f"{'r [m]':>8s} {'omega [rad/s]':>14s} {'predicted [Hz]':>15s} "
          f"{'measured [Hz]':>14s} {'rel err':>8s}")
    ok = True
    for _ in range(args.pairs):
        r = float(rng.uniform(0.2, 2.0))
        omega = float(rng.uniform(0.5, 2 * np.pi))
        measured, predicted = single_scatterer_spectral_check(r, omega, radar)
        rel = abs(measured - predicted) / predicted
        ok = ok and rel <= args.tolerance
        print(f"{r:8.3f} {omega:14.3f} {predicted:15.2f} {measured:14.2f} {rel:8.4f}")
    print("physics-check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _validate_matrix(args) -> int:
    from .encoding import SensingMatrix

    if args.matrix is not None:
        data = cio.read_csv_matrix(args.matrix)
        side = int(round(data.shape[1] ** 0.5))
        if side * side != data.shape[1]:
            print(f"config error: matrix has {data.shape[1]} columns, not a square grid",
                  file=sys.stderr)
            return 2
        phi = SensingMatrix(data=data, side=side)
        from .encoding import rip_diagnostics
        report = rip_diagnostics(phi)
    elif args.config is not None:
        cfg = cio.load_config(args.config)
        phi, report = harness.validate_matrix(cfg, m=args.snapshots)
    else:
        print("config error: pass --config or --matrix", file=sys.stderr)
        return 2
    print(f"matrix: {phi.rows} x {phi.cols} (aperture side {phi.side})")
    print(f"underdetermined (M < N): {report.is_underdetermined}")
    print(f"mutual coherence: {report.mutual_coherence:.6f}")
    print(f"max normalized row inner product: {report.max_row_inner_product:.6f}")
    print(f"duplicate rows: {report.duplicate_row_count}")
    print(f"zero columns: {report.zero_column_count}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
