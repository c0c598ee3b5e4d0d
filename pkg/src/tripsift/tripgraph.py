"""Edge-attributed trip matrices.

A matched trip becomes a directed multigraph over the road network:
one row per (segment_id, direction) key, carrying averaged speed and
direction, the segment length, hard-event totals, and traversal
counts. A traversal is a maximal consecutive run of points on the
same directed edge.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .geo import circular_mean_deg, haversine_m, mean_resultant_length
from .matching import MatchedTrip
from .model import TrajectoryPoint

EdgeKey = tuple[int, int]  # (segment_id, direction)

MATRIX_CSV_COLUMNS = [
    "segment_id", "direction", "avg_speed_mps", "avg_dir_deg",
    "length_m", "n_brakes", "n_accels", "n_traversals", "n_points",
]


@dataclass
class EdgeAttributeRow:
    segment_id: int
    direction: int
    avg_speed_mps: float
    avg_direction_deg: float
    length_m: float
    n_hard_brakes: int
    n_hard_accels: int
    n_traversals: int
    n_points: int


@dataclass
class EdgeAttributedMatrix:
    driver_id: int
    trip_id: int
    rows: list[EdgeAttributeRow]
    trip_length_m: float
    net_displacement_m: float


@dataclass
class TripGraph:
    """Matrix plus the traversal order and the trip-wide course statistics."""

    driver_id: int
    trip_id: int
    matrix: EdgeAttributedMatrix
    row_index: dict[EdgeKey, int]
    traversal_sequence: list[EdgeKey]   # one entry per maximal run, in time order
    cog_resultant: float                # mean resultant length of all point courses

    @property
    def trip_length_m(self) -> float:
        return self.matrix.trip_length_m


def detect_events(
    points: Sequence[TrajectoryPoint], accel_threshold: float
) -> list[TrajectoryPoint]:
    """Derive hard-event flags from speed differences.

    Only for inputs whose file lacked event columns: the acceleration
    over each consecutive pair is (v2 - v1) / (t2 - t1); the later
    point is flagged hard_accel when it reaches +accel_threshold and
    hard_brake when it reaches -accel_threshold. The first point gets
    zeros, and pairs with zero time delta are skipped.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points to derive events")
    out = [replace(points[0], hard_accel=0, hard_brake=0)]
    for prev, cur in zip(points, points[1:]):
        dt = cur.timestamp - prev.timestamp
        if dt == 0:
            out.append(replace(cur, hard_accel=0, hard_brake=0))
            continue
        a = (cur.speed_mps - prev.speed_mps) / dt
        out.append(replace(
            cur,
            hard_accel=1 if a >= accel_threshold else 0,
            hard_brake=1 if a <= -accel_threshold else 0,
        ))
    return out


def build_trip_graph(matched: MatchedTrip, network) -> TripGraph:
    """Aggregate a matched trip into its edge-attributed matrix.

    Rows appear in order of first traversal. Trip length sums the full
    segment length once per traversal; net displacement is the
    great-circle distance between the first and last snapped points.
    """
    if not matched.points:
        raise ValueError(f"trip ({matched.driver_id},{matched.trip_id}) has no matched points")

    order: list[EdgeKey] = []
    speeds: dict[EdgeKey, float] = {}
    cogs: dict[EdgeKey, list[float]] = {}
    brakes: dict[EdgeKey, int] = {}
    accels: dict[EdgeKey, int] = {}
    counts: dict[EdgeKey, int] = {}
    runs: dict[EdgeKey, int] = {}
    sequence: list[EdgeKey] = []

    prev_key: EdgeKey | None = None
    for mp in matched.points:
        key = (mp.segment_id, mp.direction)
        if key not in counts:
            order.append(key)
            speeds[key] = 0.0
            cogs[key] = []
            brakes[key] = 0
            accels[key] = 0
            counts[key] = 0
            runs[key] = 0
        speeds[key] += mp.point.speed_mps
        cogs[key].append(mp.point.cog_deg)
        brakes[key] += mp.point.hard_brake
        accels[key] += mp.point.hard_accel
        counts[key] += 1
        if key != prev_key:
            runs[key] += 1
            sequence.append(key)
            prev_key = key

    trip_length = 0.0
    for key in sequence:
        trip_length += network.segments[key[0]].length_m

    rows = [
        EdgeAttributeRow(
            segment_id=key[0],
            direction=key[1],
            avg_speed_mps=speeds[key] / counts[key],
            avg_direction_deg=circular_mean_deg(cogs[key]),
            length_m=network.segments[key[0]].length_m,
            n_hard_brakes=brakes[key],
            n_hard_accels=accels[key],
            n_traversals=runs[key],
            n_points=counts[key],
        )
        for key in order
    ]

    first = matched.points[0]
    last = matched.points[-1]
    matrix = EdgeAttributedMatrix(
        driver_id=matched.driver_id,
        trip_id=matched.trip_id,
        rows=rows,
        trip_length_m=trip_length,
        net_displacement_m=haversine_m(first.lat, first.lon, last.lat, last.lon),
    )
    return TripGraph(
        driver_id=matched.driver_id,
        trip_id=matched.trip_id,
        matrix=matrix,
        row_index={key: i for i, key in enumerate(order)},
        traversal_sequence=sequence,
        cog_resultant=mean_resultant_length(mp.point.cog_deg for mp in matched.points),
    )


def filter_by_min_length(
    graphs: Sequence[TripGraph], alpha: float
) -> tuple[list[TripGraph], list[TripGraph]]:
    """Split trips into (kept, dropped) by the strict minimum-length rule.

    A trip is kept iff trip_length > alpha; a trip exactly alpha long
    is dropped.
    """
    kept = [g for g in graphs if g.trip_length_m > alpha]
    dropped = [g for g in graphs if not g.trip_length_m > alpha]
    return kept, dropped


def write_matrix_csv(graph: TripGraph, path: str | Path) -> None:
    """Debug export of one trip's matrix."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATRIX_CSV_COLUMNS)
        for row in graph.matrix.rows:
            writer.writerow([
                row.segment_id, row.direction,
                repr(row.avg_speed_mps), repr(row.avg_direction_deg), repr(row.length_m),
                row.n_hard_brakes, row.n_hard_accels, row.n_traversals, row.n_points,
            ])
