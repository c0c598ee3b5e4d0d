"""Command-line front end.

Subcommands: generate (synthetic dataset), pipeline (end to end),
evaluate (against ground truth), plus match and score for debugging
single stages. Every knob can also come from a flat key=value config
file; explicit flags win. Every run writes a manifest.json recording
inputs, parameters, and per-stage counts.

Exit codes: 0 success, 2 configuration or usage error, 3 empty
pipeline, 4 evaluation mismatch, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .evaluate import DriverSetMismatch, confusion, metrics, read_truth, write_metrics_json
from .features import read_feature_table
from .iforest import load_model, save_model, score_vectors
from .matching import MatchRejected, match_trip
from .model import AnalysisConfig, Trip
from .pipeline import EmptyPipelineError, run_pipeline
from .scoring import (TripScore, aggregate_drivers, read_driver_classifications,
                      score_trips, write_driver_report, write_trip_scores)
from .synth import SynthSpec, generate_dataset
from .ingest import parse_road_network, parse_trips
from .tripgraph import build_trip_graph, detect_events, write_matrix_csv

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_EMPTY = 3
EXIT_MISMATCH = 4

# option name -> (type, default); shared by flags and config files
GENERATE_OPTIONS: dict[str, tuple[type, Any]] = {
    "seed": (int, 0),
    "rows": (int, 6),
    "cols": (int, 6),
    "spacing": (float, 500.0),
    "drivers": (int, 18),
    "trips_per_driver": (int, 20),
    "abnormal_fraction": (float, 3 / 18),
    "injection_rate": (float, 0.5),
    "loop_prob": (float, 0.25),
    "detour_prob": (float, 0.25),
    "brake_burst_prob": (float, 0.25),
    "accel_burst_prob": (float, 0.25),
    "base_speed": (float, 12.0),
}

PIPELINE_OPTIONS: dict[str, tuple[type, Any]] = {
    "alpha": (float, 0.0),
    "seed": (int, 0),
    "trip_threshold": (float, 0.6),
    "contamination": (float, 0.2),
    "top_fraction": (float, 0.2),
    "trees": (int, 100),
    "subsample": (int, 256),
    "max_snap": (float, 50.0),
    "min_matched_fraction": (float, 0.8),
    "accel_threshold": (float, 3.0),
    "workers": (int, 1),
    "per_category": (bool, False),
    "save_model": (bool, False),
}

MATCH_OPTIONS: dict[str, tuple[type, Any]] = {
    "max_snap": (float, 50.0),
    "min_matched_fraction": (float, 0.8),
    "accel_threshold": (float, 3.0),
}

SCORE_OPTIONS: dict[str, tuple[type, Any]] = {
    "seed": (int, 0),
    "trees": (int, 100),
    "subsample": (int, 256),
    "trip_threshold": (float, 0.6),
    "contamination": (float, 0.2),
    "top_fraction": (float, 0.2),
    "per_category": (bool, False),
    "save_model": (bool, False),
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat key=value file; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: expected key=value at line {lineno}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def resolve_options(args: argparse.Namespace, options: dict[str, tuple[type, Any]]) -> dict[str, Any]:
    """Merge flag values over config-file values over defaults."""
    file_cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(file_cfg) - set(options))
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    resolved: dict[str, Any] = {}
    for name, (typ, default) in options.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            resolved[name] = flag_value
        elif name in file_cfg:
            try:
                resolved[name] = _parse_bool(file_cfg[name]) if typ is bool else typ(file_cfg[name])
            except ValueError:
                raise ValueError(f"config key {name}: cannot parse {file_cfg[name]!r} as {typ.__name__}") from None
        else:
            resolved[name] = default
    return resolved


def _add_option_flags(parser: argparse.ArgumentParser, options: dict[str, tuple[type, Any]]) -> None:
    for name, (typ, default) in options.items():
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            parser.add_argument(flag, action="store_true", default=None,
                                help=f"(default {default})")
        else:
            parser.add_argument(flag, type=typ, default=None, metavar=name.upper(),
                                help=f"(default {default})")


def _analysis_config(vals: dict[str, Any]) -> AnalysisConfig:
    return AnalysisConfig(
        alpha=vals.get("alpha", 0.0),
        rng_seed=vals.get("seed", 0),
        trip_score_threshold=vals.get("trip_threshold", 0.6),
        contamination=vals.get("contamination", 0.2),
        top_fraction=vals.get("top_fraction", 0.2),
        n_trees=vals.get("trees", 100),
        subsample_size=vals.get("subsample", 256),
        max_snap_distance_m=vals.get("max_snap", 50.0),
        min_matched_fraction=vals.get("min_matched_fraction", 0.8),
        hard_event_accel_threshold=vals.get("accel_threshold", 3.0),
    )


def _network_paths(args: argparse.Namespace) -> tuple[Path, Path]:
    if args.network is not None:
        base = Path(args.network)
        return base / "nodes.csv", base / "segments.csv"
    if args.nodes is not None and args.segments is not None:
        return Path(args.nodes), Path(args.segments)
    raise ValueError("provide --network DIR or both --nodes and --segments")


def _sha256(path: Path) -> Optional[str]:
    try:
        digest = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
        return digest.hexdigest()
    except OSError:
        return None


def _write_manifest(
    path: Path,
    command: str,
    params: dict[str, Any],
    inputs: list[Path],
    outcome: str,
    error: Optional[str],
    wall_clock_s: float,
    counts: Optional[dict[str, Any]] = None,
    stages: Optional[dict[str, float]] = None,
) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "params": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outcome": outcome,
        "error": error,
        "wall_clock_s": wall_clock_s,
    }
    if counts is not None:
        doc["counts"] = counts
    if stages is not None:
        doc["stages"] = stages
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


class _ManifestWriter:
    """Collects run facts and guarantees the manifest lands, success or not."""

    def __init__(self, path: Path, command: str, params: dict[str, Any], inputs: list[Path]):
        self.path = path
        self.command = command
        self.params = params
        self.inputs = inputs
        self.counts: Optional[dict[str, Any]] = None
        self.stages: Optional[dict[str, float]] = None
        self.t0 = time.perf_counter()

    def __enter__(self) -> "_ManifestWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _write_manifest(
            self.path, self.command, self.params, self.inputs,
            outcome="success" if exc is None else "error",
            error=None if exc is None else str(exc),
            wall_clock_s=time.perf_counter() - self.t0,
            counts=self.counts,
            stages=self.stages,
        )


def cmd_generate(args: argparse.Namespace) -> int:
    vals = resolve_options(args, GENERATE_OPTIONS)
    out = Path(args.out)
    spec = SynthSpec(
        rows=vals["rows"],
        cols=vals["cols"],
        spacing_m=vals["spacing"],
        n_drivers=vals["drivers"],
        trips_per_driver=vals["trips_per_driver"],
        abnormal_driver_fraction=vals["abnormal_fraction"],
        injection_rate=vals["injection_rate"],
        loop_prob=vals["loop_prob"],
        detour_prob=vals["detour_prob"],
        brake_burst_prob=vals["brake_burst_prob"],
        accel_burst_prob=vals["accel_burst_prob"],
        base_speed_mps=vals["base_speed"],
        rng_seed=vals["seed"],
    )
    out.mkdir(parents=True, exist_ok=True)
    with _ManifestWriter(out / "manifest.json", "generate", vals, []) as manifest:
        summary = generate_dataset(spec, out)
        manifest.counts = {
            "n_trips": summary.n_trips,
            "n_drivers": summary.n_drivers,
            "abnormal_drivers": summary.abnormal_drivers,
            "kind_counts": dict(summary.kind_counts),
        }
        log.info("generated %d trips for %d drivers (%d abnormal) in %s",
                 summary.n_trips, summary.n_drivers, len(summary.abnormal_drivers), out)
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    vals = resolve_options(args, PIPELINE_OPTIONS)
    nodes_path, segments_path = _network_paths(args)
    trips_path = Path(args.trips)
    out = Path(args.out)
    config = _analysis_config(vals)
    out.mkdir(parents=True, exist_ok=True)
    with _ManifestWriter(out / "manifest.json", "pipeline", vals,
                         [nodes_path, segments_path, trips_path]) as manifest:
        result = run_pipeline(
            nodes_path, segments_path, trips_path, out, config,
            per_category=vals["per_category"],
            workers=vals["workers"],
            save_model_json=vals["save_model"],
        )
        manifest.counts = result.counts
        manifest.stages = result.stage_seconds
        log.info("pipeline complete: outputs in %s", out)
    return EXIT_OK


def cmd_match(args: argparse.Namespace) -> int:
    vals = resolve_options(args, MATCH_OPTIONS)
    nodes_path, segments_path = _network_paths(args)
    trips_path = Path(args.trips)
    out = Path(args.out)
    config = AnalysisConfig(
        alpha=0.0,
        max_snap_distance_m=vals["max_snap"],
        min_matched_fraction=vals["min_matched_fraction"],
        hard_event_accel_threshold=vals["accel_threshold"],
    )
    out.mkdir(parents=True, exist_ok=True)
    with _ManifestWriter(out / "manifest.json", "match", vals,
                         [nodes_path, segments_path, trips_path]) as manifest:
        network = parse_road_network(nodes_path, segments_path)
        trips, report = parse_trips(trips_path)
        if not report.has_event_columns:
            trips = [Trip(t.driver_id, t.trip_id,
                          detect_events(t.points, config.hard_event_accel_threshold))
                     for t in trips]
        matrices_dir = out / "matrices"
        matrices_dir.mkdir(exist_ok=True)
        n_matched = 0
        with open(out / "matched_trips.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["driver_id", "trip_id", "n_points", "n_matched",
                             "matched_fraction", "status"])
            for trip in trips:
                try:
                    matched = match_trip(trip, network, config)
                except MatchRejected as exc:
                    writer.writerow([trip.driver_id, trip.trip_id, len(trip.points),
                                     0, f"{exc.matched_fraction:.4f}", exc.reason])
                    continue
                graph = build_trip_graph(matched, network)
                write_matrix_csv(graph, matrices_dir / f"trip_{trip.driver_id}_{trip.trip_id}.csv")
                writer.writerow([trip.driver_id, trip.trip_id, len(trip.points),
                                 len(matched.points), f"{matched.matched_fraction:.4f}", "matched"])
                n_matched += 1
        manifest.counts = {"trips": len(trips), "matched": n_matched,
                           **{f"points_{k}": v for k, v in report.rejection_reasons.items()}}
        log.info("matched %d of %d trips; matrices in %s", n_matched, len(trips), matrices_dir)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    vals = resolve_options(args, SCORE_OPTIONS)
    out = Path(args.out)
    config = _analysis_config(vals)
    if args.model and vals["per_category"]:
        raise ValueError("--per-category requires fitting and cannot be used with --model")
    out.mkdir(parents=True, exist_ok=True)
    inputs = [Path(args.features)] + ([Path(args.model)] if args.model else [])
    with _ManifestWriter(out / "manifest.json", "score", vals, inputs) as manifest:
        table = read_feature_table(args.features)
        if len(table) < 2:
            raise EmptyPipelineError("fewer than 2 trips available to score")
        if args.model:
            model = load_model(args.model)
            scores = score_vectors(model, table.to_matrix())
            trip_scores = [
                TripScore(driver_id=d, trip_id=t, score=float(s),
                          abnormal=s >= config.trip_score_threshold)
                for (d, t), s in zip(table.keys, scores)
            ]
        else:
            trip_scores, model = score_trips(table, config, per_category=vals["per_category"])
        reports = aggregate_drivers(trip_scores, config)
        write_trip_scores(trip_scores, out / "trip_scores.csv")
        write_driver_report(reports, out / "driver_report.csv")
        if vals["save_model"]:
            save_model(model, out / "model.json")
        manifest.counts = {"trips_scored": len(trip_scores), "drivers": len(reports)}
        log.info("scored %d trips, %d drivers; outputs in %s", len(trip_scores), len(reports), out)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    out_path = Path(args.out)
    with _ManifestWriter(out_path.parent / "manifest.json", "evaluate", {},
                         [Path(args.pred), Path(args.truth)]) as manifest:
        predicted = read_driver_classifications(args.pred)
        truth = read_truth(args.truth)
        counts = confusion(predicted, truth)
        m = metrics(counts)
        write_metrics_json(m, counts, out_path)
        manifest.counts = {"tp": counts.tp, "tn": counts.tn, "fp": counts.fp, "fn": counts.fn}
        print(f"accuracy {m.accuracy:.4f}")
        print(f"precision {m.precision:.4f}")
        print(f"recall {m.recall:.4f}")
        print(f"f1 {m.f1:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripsift",
        description="Detect anomalous driving in GPS trajectories over a road network.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset with planted anomalies")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="flat key=value config file")
    _add_option_flags(p, GENERATE_OPTIONS)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pipeline", help="run the full pipeline on a dataset")
    p.add_argument("--network", help="directory holding nodes.csv and segments.csv")
    p.add_argument("--nodes", help="nodes CSV (alternative to --network)")
    p.add_argument("--segments", help="segments CSV (alternative to --network)")
    p.add_argument("--trips", required=True, help="trajectory CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="flat key=value config file")
    _add_option_flags(p, PIPELINE_OPTIONS)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("match", help="debug map matching: per-trip matrices and match stats")
    p.add_argument("--network", help="directory holding nodes.csv and segments.csv")
    p.add_argument("--nodes", help="nodes CSV (alternative to --network)")
    p.add_argument("--segments", help="segments CSV (alternative to --network)")
    p.add_argument("--trips", required=True, help="trajectory CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="flat key=value config file")
    _add_option_flags(p, MATCH_OPTIONS)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("score", help="debug scoring: read a feature table, write scores")
    p.add_argument("--features", required=True, help="feature table CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model", help="reuse a fitted model JSON instead of fitting")
    p.add_argument("--config", help="flat key=value config file")
    _add_option_flags(p, SCORE_OPTIONS)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="compare a driver report to ground truth")
    p.add_argument("--pred", required=True, help="driver report CSV from the pipeline")
    p.add_argument("--truth", required=True, help="truth CSV (driver_id,label)")
    p.add_argument("--out", default="metrics.json", help="metrics JSON path (default metrics.json)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.func(args)
    except EmptyPipelineError as exc:
        log.error("empty pipeline: %s", exc)
        return EXIT_EMPTY
    except DriverSetMismatch as exc:
        log.error("evaluation mismatch: %s", exc)
        return EXIT_MISMATCH
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except Exception:
        log.exception("unexpected failure")
        return EXIT_UNEXPECTED


def entrypoint() -> None:
    raise SystemExit(main())
