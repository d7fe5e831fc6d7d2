"""tactile-bench command line front end.

Subcommands:

    simulate    generate a synthetic run (or spatial sweep) on disk
    resilience  cyclic-wear MAE analysis of a recorded run
    force       force-sensitivity curve + saturation summary
    spatial     spatial-sensitivity SNR sweep

Exit codes are a stable contract: 0 success, 2 input/validation error,
3 I/O error.  All analysis parameters are explicit (config file + flags);
no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import report as report_mod
from .core import (
    Protocol,
    ProtocolKind,
    TactileBenchError,
    ValidationError,
    preset_protocol,
)
from .manifest import load_manifest, save_manifest
from .metrics import (
    SATURATION_WINDOW_N,
    force_curve,
    mae_series,
    saturation_force,
)
from .simulator import (
    MATERIAL_PRESETS,
    WearEvent,
    child_seed,
    default_mm_per_pixel,
    generate_run,
    spatial_sweep_surfaces,
)
from .spatial import PipelineConfig, SnrRecord, sweep, write_sweep_csv
from .svgchart import Series, write_line_chart

SATURATION_RATIO_THRESHOLD = 0.5


def _input_provenance(manifest_dir: Path) -> tuple[str, int | None, str | None]:
    """(digest, seed, timestamp) drawn from the input's manifest + sidecar."""
    digest = report_mod.file_digest(manifest_dir / "manifest.json")
    doc = json.loads((manifest_dir / "manifest.json").read_text())
    timestamp = doc.get("recorded_utc")
    seed = None
    truth_path = manifest_dir / "truth.json"
    if truth_path.is_file():
        truth = json.loads(truth_path.read_text())
        if isinstance(truth, dict) and isinstance(truth.get("seed"), int):
            seed = truth["seed"]
    return digest, seed, timestamp


# -- resilience ------------------------------------------------------------


def cmd_resilience(input_dir: str, out_dir: str, jobs: int = 1) -> int:
    run = load_manifest(input_dir)
    series = mae_series(run, jobs=jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series.write_csv(out / "mae_series.csv")

    chart = [Series("unloaded", series.cycle_indices, series.mae_unloaded)]
    if series.mae_loaded is not None:
        chart.append(Series("loaded", series.cycle_indices, series.mae_loaded))
    write_line_chart(
        out / "mae_vs_cycle.svg",
        chart,
        title=f"Wear MAE vs cycle — {run.material_label} {run.sample_id}".strip(),
        x_label="cycle",
        y_label="MAE (intensity/pixel)",
    )

    max_idx = int(np.argmax(series.mae_unloaded))
    results = {
        "cycle_count": len(series.cycle_indices),
        "mae_unloaded_final": series.mae_unloaded[-1],
        "mae_loaded_final": series.mae_loaded[-1] if series.mae_loaded is not None else None,
        "max_mae_unloaded": series.mae_unloaded[max_idx],
        "max_mae_cycle": series.cycle_indices[max_idx],
        "series_csv": "mae_series.csv",
    }
    digest, seed, timestamp = _input_provenance(Path(input_dir))
    doc = report_mod.build_report(
        command="resilience",
        material_label=run.material_label,
        sample_id=run.sample_id,
        protocol_kind=run.protocol.kind.value,
        protocol_params=run.protocol.params,
        config={},
        results=results,
        input_path=str(input_dir),
        input_digest=digest,
        seed=seed,
        timestamp=timestamp,
    )
    report_mod.write_report(doc, out / "report.json")
    return 0


# -- force -----------------------------------------------------------------


def cmd_force(input_dir: str, out_dir: str) -> int:
    run = load_manifest(input_dir)
    if run.protocol.kind is not ProtocolKind.FORCE_SENSITIVITY:
        raise ValidationError(
            f"force analysis expects a force_sensitivity run, got {run.protocol.kind.value}"
        )
    assert run.frames is not None and run.forces is not None
    curve = force_curve(run.frames, run.forces)
    try:
        sat = saturation_force(curve, SATURATION_RATIO_THRESHOLD)
    except ValidationError:
        sat = None  # ramp too short for a saturation estimate

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve.write_csv(out / "force_curve.csv")

    phases = np.asarray(curve.phase)
    force = np.asarray(curve.force_n)
    values = np.asarray(curve.mae)
    chart = [
        Series("loading", force[phases == "loading"], values[phases == "loading"]),
        Series("unloading", force[phases == "unloading"], values[phases == "unloading"]),
    ]
    write_line_chart(
        out / "mae_vs_force.svg",
        chart,
        title=f"MAE vs force — {run.material_label} {run.sample_id}".strip(),
        x_label="normal force (N)",
        y_label="MAE (intensity/pixel)",
    )

    config = {
        "saturation_ratio_threshold": SATURATION_RATIO_THRESHOLD,
        "saturation_window_n": SATURATION_WINDOW_N,
    }
    results = {
        "sample_count": len(curve.t_s),
        "max_force_n": float(np.max(force)) if len(force) else None,
        "saturation_force_n": sat,
        "saturation_ratio_threshold": SATURATION_RATIO_THRESHOLD,
        "curve_csv": "force_curve.csv",
    }
    digest, seed, timestamp = _input_provenance(Path(input_dir))
    doc = report_mod.build_report(
        command="force",
        material_label=run.material_label,
        sample_id=run.sample_id,
        protocol_kind=run.protocol.kind.value,
        protocol_params=run.protocol.params,
        config=config,
        results=results,
        input_path=str(input_dir),
        input_digest=digest,
        seed=seed,
        timestamp=timestamp,
    )
    report_mod.write_report(doc, out / "report.json")
    return 0


# -- spatial ---------------------------------------------------------------


def _spatial_panels(records: list[SnrRecord], out: Path) -> None:
    loads = sorted({rec.load_n for rec in records})
    for load in loads:
        subset = [r for r in records if r.load_n == load]
        periods = [r.ridge.period_mm for r in subset]
        amplitudes = [r.ridge.amplitude_mm for r in subset]
        modal_period = max(set(periods), key=periods.count)
        modal_amp = max(set(amplitudes), key=amplitudes.count)
        amp_series = sorted(
            ((r.ridge.amplitude_mm, r.snr_db) for r in subset if r.ridge.period_mm == modal_period)
        )
        per_series = sorted(
            ((r.ridge.period_mm, r.snr_db) for r in subset if r.ridge.amplitude_mm == modal_amp)
        )
        write_line_chart(
            out / f"snr_vs_amplitude_{load:g}N.svg",
            [Series(f"{load:g} N", [p[0] for p in amp_series], [p[1] for p in amp_series])],
            title=f"SNR vs ridge amplitude ({load:g} N, period {modal_period:g} mm)",
            x_label="ridge amplitude (mm)",
            y_label="SNR (dB)",
        )
        write_line_chart(
            out / f"snr_vs_period_{load:g}N.svg",
            [Series(f"{load:g} N", [p[0] for p in per_series], [p[1] for p in per_series])],
            title=f"SNR vs ridge period ({load:g} N, amplitude {modal_amp:g} mm)",
            x_label="ridge period (mm)",
            y_label="SNR (dB)",
        )


def cmd_spatial(
    input_dir: str,
    out_dir: str,
    config: PipelineConfig | None = None,
    jobs: int = 1,
) -> int:
    root = Path(input_dir)
    if not root.is_dir():
        raise ValidationError(f"sweep directory not found: {root}")
    run_dirs = sorted(d for d in root.iterdir() if (d / "manifest.json").is_file())
    if (root / "manifest.json").is_file():
        run_dirs.insert(0, root)
    if not run_dirs:
        raise ValidationError(f"no run manifests found under {root}")
    runs = [load_manifest(d) for d in run_dirs]
    cfg = config if config is not None else PipelineConfig()
    records = sweep(runs, config=cfg, jobs=jobs)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(records, out / "snr_sweep.csv")
    _spatial_panels(records, out)

    results = {
        "record_count": len(records),
        "sweep_csv": "snr_sweep.csv",
        "records": [
            {
                "period_mm": rec.ridge.period_mm,
                "amplitude_mm": rec.ridge.amplitude_mm,
                "load_n": rec.load_n,
                "p_signal": rec.p_signal,
                "p_noise": rec.p_noise,
                "snr_db": rec.snr_db,
            }
            for rec in records
        ],
    }
    first = runs[0]
    combined = hashlib.sha256()
    seed = None
    for d in run_dirs:
        combined.update(report_mod.file_digest(d / "manifest.json").encode())
        _, run_seed, _ = _input_provenance(d)
        if seed is None:
            seed = run_seed
    doc = report_mod.build_report(
        command="spatial",
        material_label=first.material_label,
        sample_id=first.sample_id,
        protocol_kind=first.protocol.kind.value,
        protocol_params=first.protocol.params,
        config=cfg.to_dict(),
        results=results,
        input_path=str(input_dir),
        input_digest="sha256:" + combined.hexdigest(),
        seed=seed,
        timestamp=None,
    )
    report_mod.write_report(doc, out / "report.json")
    return 0


# -- simulate ----------------------------------------------------------------


def _parse_wear(specs: list[str]) -> list[WearEvent]:
    events = []
    for spec in specs:
        parts = spec.split(":")
        if len(parts) not in (3, 4):
            raise ValidationError(
                f"bad --wear spec {spec!r}; expected mode:onset_cycle:severity[:x,y]"
            )
        location = None
        if len(parts) == 4:
            try:
                x, y = (float(v) for v in parts[3].split(","))
            except ValueError:
                raise ValidationError(f"bad --wear location in {spec!r}") from None
            location = (x, y)
        try:
            onset = int(parts[1])
            severity = float(parts[2])
        except ValueError:
            raise ValidationError(f"bad --wear numbers in {spec!r}") from None
        events.append(WearEvent(mode=parts[0], onset_cycle=onset, severity=severity, location=location))
    return events


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.material not in MATERIAL_PRESETS:
        raise ValidationError(
            f"unknown material preset {args.material!r}; available: "
            + ", ".join(sorted(MATERIAL_PRESETS))
        )
    material = MATERIAL_PRESETS[args.material]
    protocol = preset_protocol(args.protocol)
    params = protocol.params
    if args.cycles is not None:
        params["cycles"] = args.cycles
    if args.frames_per_stack is not None:
        params["frames_per_stack"] = args.frames_per_stack
    if args.resolution is not None:
        try:
            w, h = (int(v) for v in args.resolution.lower().split("x"))
        except ValueError:
            raise ValidationError(f"bad --resolution {args.resolution!r}; expected WxH") from None
        params["resolution"] = [w, h]
    if args.n_samples is not None:
        params["n_samples"] = args.n_samples
    if args.sweep_points is not None:
        params["sweep_points"] = args.sweep_points
    if args.mm_per_pixel is not None:
        params["mm_per_pixel"] = args.mm_per_pixel
    wear = _parse_wear(args.wear)

    out = Path(args.out)
    kind = protocol.kind
    if kind is ProtocolKind.SPATIAL_SENSITIVITY:
        if wear:
            raise ValidationError("--wear applies to resilience protocols only")
        surfaces = spatial_sweep_surfaces(params)
        resolution = params.get("resolution", [640, 480])
        mpp = params.get("mm_per_pixel") or default_mm_per_pixel(tuple(resolution))
        for j, (name, ridge, load_n) in enumerate(surfaces):
            surf_params = {
                k: v
                for k, v in params.items()
                if k
                not in (
                    "loads_n",
                    "amplitude_range_mm",
                    "period_range_mm",
                    "sweep_points",
                    "constant_period_mm",
                    "constant_amplitude_mm",
                )
            }
            surf_params["ridge"] = {
                "period_mm": ridge.period_mm,
                "amplitude_mm": ridge.amplitude_mm,
                "orientation": ridge.orientation,
            }
            surf_params["load_n"] = load_n
            surf_params["mm_per_pixel"] = mpp
            run = generate_run(
                protocol=Protocol(kind=kind, params=surf_params),
                material=material,
                seed=child_seed(args.seed, j),
                sample_id=f"sim-{name}",
            )
            save_manifest(run, out / name)
        return 0

    run = generate_run(protocol=protocol, material=material, wear=wear, seed=args.seed)
    save_manifest(run, out)
    return 0


# -- entry point -------------------------------------------------------------


def _pipeline_config_from_args(args: argparse.Namespace) -> PipelineConfig | None:
    doc: dict = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
    if args.dog_sigmas is not None:
        try:
            low, high = (float(v) for v in args.dog_sigmas.split(","))
        except ValueError:
            raise ValidationError(
                f"bad --dog-sigmas {args.dog_sigmas!r}; expected LOW,HIGH"
            ) from None
        doc["dog_sigma_low"] = low
        doc["dog_sigma_high"] = high
    if args.crop is not None:
        try:
            crop = tuple(int(v) for v in args.crop.split(","))
        except ValueError:
            raise ValidationError(f"bad --crop {args.crop!r}; expected X,Y,W,H") from None
        if len(crop) != 4:
            raise ValidationError(f"bad --crop {args.crop!r}; expected X,Y,W,H")
        doc["crop"] = crop
    if not doc:
        return None
    known = {"dog_sigma_low", "dog_sigma_high", "crop", "rows_axis"}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    base = PipelineConfig()
    return PipelineConfig(
        dog_sigma_low=doc.get("dog_sigma_low", base.dog_sigma_low),
        dog_sigma_high=doc.get("dog_sigma_high", base.dog_sigma_high),
        crop=tuple(doc["crop"]) if doc.get("crop") is not None else None,
        rows_axis=doc.get("rows_axis", base.rows_axis),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactile-bench",
        description="Model-free benchmark suite for vision-based tactile sensor gels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic run on disk")
    sim.add_argument("--protocol", required=True, choices=[k.value for k in ProtocolKind])
    sim.add_argument("--material", default="si_like", help="material preset name")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--cycles", type=int, default=None, help="override preset cycle count")
    sim.add_argument("--frames-per-stack", type=int, default=None)
    sim.add_argument("--resolution", default=None, help="WxH, e.g. 320x240")
    sim.add_argument("--n-samples", type=int, default=None, help="force ramp frame count")
    sim.add_argument("--sweep-points", type=int, default=None, help="spatial sweep points per axis")
    sim.add_argument("--mm-per-pixel", type=float, default=None)
    sim.add_argument(
        "--wear",
        action="append",
        default=[],
        metavar="MODE:ONSET:SEVERITY[:X,Y]",
        help="inject a wear event (repeatable)",
    )

    for name, helptext in (
        ("resilience", "cyclic-wear MAE analysis"),
        ("force", "force-sensitivity curve"),
        ("spatial", "spatial-sensitivity SNR sweep"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--input", required=True)
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--jobs", type=int, default=1)
        cmd.add_argument("--config", default=None, help="JSON pipeline config file")
        if name == "spatial":
            cmd.add_argument("--dog-sigmas", default=None, metavar="LOW,HIGH")
            cmd.add_argument("--crop", default=None, metavar="X,Y,W,H")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command in ("resilience", "force") and args.config is not None:
            raise ValidationError(
                f"{args.command} has no configurable pipeline parameters; "
                "--config applies to spatial analysis"
            )
        if args.command == "resilience":
            return cmd_resilience(args.input, args.out, jobs=args.jobs)
        if args.command == "force":
            return cmd_force(args.input, args.out)
        config = _pipeline_config_from_args(args)
        return cmd_spatial(args.input, args.out, config=config, jobs=args.jobs)
    except TactileBenchError as exc:
        print(f"tactile-bench: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tactile-bench: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
