"""End-to-end batch pipeline: ingest, match, build graphs, score, report.

Outputs land in one directory: features.csv, trip_scores.csv,
driver_report.csv, summary.json (and model.json on request). On any
failure the partially written data files are removed; logging goes to
stderr, data only to files.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

from .features import FeatureTable, extract_feature_table, write_feature_table
from .iforest import IForestModel, save_model, threshold_from_contamination
from .ingest import IngestReport, parse_road_network, parse_trips
from .matching import MatchedTrip, MatchRejected, match_trip
from .model import AnalysisConfig, Trip
from .scoring import (DriverReport, TripScore, aggregate_drivers, score_trips,
                      write_driver_report, write_trip_scores)
from .tripgraph import build_trip_graph, detect_events, filter_by_min_length

log = logging.getLogger(__name__)


class EmptyPipelineError(RuntimeError):
    """The pipeline ran out of trips before anything could be scored."""


@dataclass
class PipelineResult:
    config: AnalysisConfig
    ingest_report: IngestReport
    n_match_rejected: int
    match_rejections: dict[str, int]
    n_alpha_dropped: int
    table: FeatureTable
    trip_scores: list[TripScore]
    driver_reports: list[DriverReport]
    model: IForestModel
    contamination_threshold: float
    stage_seconds: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, Path] = field(default_factory=dict)

    @property
    def counts(self) -> dict[str, int]:
        return {
            "points_read": self.ingest_report.n_points_read,
            "points_rejected": self.ingest_report.n_points_rejected,
            "trips_parsed": self.ingest_report.n_trips,
            "trips_match_rejected": self.n_match_rejected,
            "trips_alpha_dropped": self.n_alpha_dropped,
            "trips_scored": len(self.trip_scores),
            "drivers": len(self.driver_reports),
        }


def run_pipeline(
    nodes_path: Union[str, Path],
    segments_path: Union[str, Path],
    trips_path: Union[str, Path],
    out_dir: Union[str, Path],
    config: AnalysisConfig,
    per_category: bool = False,
    workers: int = 1,
    save_model_json: bool = False,
) -> PipelineResult:
    """Run the whole pipeline and write its outputs.

    Matching can fan out over a thread pool (workers > 1); results are
    reassembled in input order so output is byte-identical either way.

    Raises:
        EmptyPipelineError: nothing survived to be scored.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        return _run(Path(nodes_path), Path(segments_path), Path(trips_path), out,
                    config, per_category, workers, save_model_json, written)
    except BaseException:
        for path in written:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                log.warning("could not remove partial output %s", path)
        raise


def _run(
    nodes_path: Path,
    segments_path: Path,
    trips_path: Path,
    out: Path,
    config: AnalysisConfig,
    per_category: bool,
    workers: int,
    save_model_json: bool,
    written: list[Path],
) -> PipelineResult:
    stage_seconds: dict[str, float] = {}
    t0 = time.perf_counter()
    network = parse_road_network(nodes_path, segments_path)
    trips, report = parse_trips(trips_path)
    stage_seconds["ingest"] = time.perf_counter() - t0
    log.info("ingest: %d points read, %d rejected, %d trips, %d segments",
             report.n_points_read, report.n_points_rejected, report.n_trips,
             len(network.segments))
    if not trips:
        raise EmptyPipelineError("no trips parsed from input")

    t0 = time.perf_counter()
    if not report.has_event_columns:
        log.info("no event columns in input; deriving hard events at %.1f m/s^2",
                 config.hard_event_accel_threshold)
        trips = [
            Trip(t.driver_id, t.trip_id,
                 detect_events(t.points, config.hard_event_accel_threshold))
            for t in trips
        ]
    stage_seconds["events"] = time.perf_counter() - t0

    t0 = time.perf_counter()

    def match_one(trip: Trip) -> Union[MatchedTrip, MatchRejected]:
        try:
            return match_trip(trip, network, config)
        except MatchRejected as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(match_one, trips))
    else:
        results = [match_one(t) for t in trips]
    matched = [r for r in results if isinstance(r, MatchedTrip)]
    rejections: dict[str, int] = {}
    for r in results:
        if isinstance(r, MatchRejected):
            rejections[r.reason] = rejections.get(r.reason, 0) + 1
            log.debug("match rejected (%s): driver %d trip %d", r.reason, r.driver_id, r.trip_id)
    stage_seconds["match"] = time.perf_counter() - t0
    log.info("match: %d trips matched, %d rejected %s",
             len(matched), len(results) - len(matched), rejections or "")
    if not matched:
        raise EmptyPipelineError("no trips matched the network")

    t0 = time.perf_counter()
    graphs = [build_trip_graph(m, network) for m in matched]
    kept, dropped = filter_by_min_length(graphs, config.alpha)
    stage_seconds["graphs"] = time.perf_counter() - t0
    log.info("graphs: %d trips kept, %d below min length %.1f m",
             len(kept), len(dropped), config.alpha)
    if not kept:
        raise EmptyPipelineError(f"no trips pass the minimum length filter (alpha={config.alpha})")
    if len(kept) < 2:
        raise EmptyPipelineError("fewer than 2 trips available to score")

    t0 = time.perf_counter()
    table = extract_feature_table(kept)
    stage_seconds["features"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    trip_scores, model = score_trips(table, config, per_category=per_category)
    reports = aggregate_drivers(trip_scores, config)
    threshold = threshold_from_contamination([ts.score for ts in trip_scores],
                                             config.contamination)
    stage_seconds["score"] = time.perf_counter() - t0
    log.info("score: %d trips, %d drivers, %d drivers classified abnormal",
             len(trip_scores), len(reports), sum(1 for r in reports if r.abnormal))

    t0 = time.perf_counter()
    outputs: dict[str, Path] = {
        "features": out / "features.csv",
        "trip_scores": out / "trip_scores.csv",
        "driver_report": out / "driver_report.csv",
        "summary": out / "summary.json",
    }
    if save_model_json:
        outputs["model"] = out / "model.json"
    for path in outputs.values():
        written.append(path)
    write_feature_table(table, outputs["features"])
    write_trip_scores(trip_scores, outputs["trip_scores"])
    write_driver_report(reports, outputs["driver_report"])
    if save_model_json:
        save_model(model, outputs["model"])

    result = PipelineResult(
        config=config,
        ingest_report=report,
        n_match_rejected=len(results) - len(matched),
        match_rejections=rejections,
        n_alpha_dropped=len(dropped),
        table=table,
        trip_scores=trip_scores,
        driver_reports=reports,
        model=model,
        contamination_threshold=threshold,
        stage_seconds=stage_seconds,
        outputs=outputs,
    )
    _write_summary(result, outputs["summary"])
    stage_seconds["write"] = time.perf_counter() - t0
    return result


def _write_summary(result: PipelineResult, path: Path) -> None:
    doc = {
        "config": asdict(result.config),
        "counts": result.counts,
        "match_rejections": result.match_rejections,
        "rejection_reasons": dict(result.ingest_report.rejection_reasons),
        "contamination_threshold": result.contamination_threshold,
        "trips": [
            {
                "driver_id": ts.driver_id,
                "trip_id": ts.trip_id,
                "score": ts.score,
                "label": "abnormal" if ts.abnormal else "normal",
                "contamination_flag": ts.score >= result.contamination_threshold,
                **({"category_scores": ts.category_scores} if ts.category_scores else {}),
            }
            for ts in result.trip_scores
        ],
        "drivers": [
            {
                "driver_id": r.driver_id,
                "mean_score": r.mean_score,
                "n_trips": r.n_trips,
                "n_abnormal_trips": r.n_abnormal_trips,
                "rank": r.rank,
                "classification": "abnormal" if r.abnormal else "normal",
                **({"category_means": r.category_means} if r.category_means else {}),
            }
            for r in result.driver_reports
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
