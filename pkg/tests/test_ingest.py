"""Reader behavior: strict network validation, row-level trip rejection."""

import pytest

from tripsift.ingest import (
    DEFAULT_GAP_THRESHOLD_S,
    parse_road_network,
    parse_trips,
    segment_stream_into_trips,
    write_network,
    write_trips,
)
from tripsift.model import TrajectoryPoint, Trip


def write(path, text):
    path.write_text(text)
    return path


NODES_OK = """node_id,lat,lon
1,40.0,-86.0
2,40.0,-85.99
3,40.0,-85.98
4,40.01,-86.0
"""

SEGMENTS_OK = """segment_id,from_node,to_node
10,1,2
11,2,3
12,1,4
"""


@pytest.fixture
def network_paths(tmp_path):
    nodes = write(tmp_path / "nodes.csv", NODES_OK)
    segments = write(tmp_path / "segments.csv", SEGMENTS_OK)
    return nodes, segments


def test_parse_network_ok(network_paths):
    net = parse_road_network(*network_paths)
    assert set(net.nodes) == {1, 2, 3, 4}
    assert set(net.segments) == {10, 11, 12}
    assert net.index is not None
    # lengths computed from coordinates: ~852 m per 0.01 deg lon at lat 40
    assert net.segments[10].length_m == pytest.approx(851.7, abs=1.0)


def test_parse_network_reads_length_column(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK)
    segments = write(tmp_path / "s.csv",
                     "segment_id,from_node,to_node,length_m\n10,1,2,900.0\n")
    net = parse_road_network(nodes, segments)
    assert net.segments[10].length_m == 900.0


def test_parse_network_length_sanity(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK)
    segments = write(tmp_path / "s.csv",
                     "segment_id,from_node,to_node,length_m\n10,1,2,5000.0\n")
    with pytest.raises(ValueError, match="sanity"):
        parse_road_network(nodes, segments)


def test_parse_network_duplicate_node(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK + "1,41.0,-86.0\n")
    segments = write(tmp_path / "s.csv", SEGMENTS_OK)
    with pytest.raises(ValueError, match="duplicate node id 1 at line 6"):
        parse_road_network(nodes, segments)


def test_parse_network_dangling_endpoint(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK)
    segments = write(tmp_path / "s.csv", "segment_id,from_node,to_node\n10,1,99\n")
    with pytest.raises(ValueError, match="dangling endpoint 99 in segment 10"):
        parse_road_network(nodes, segments)


def test_parse_network_self_loop(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK)
    segments = write(tmp_path / "s.csv", "segment_id,from_node,to_node\n10,2,2\n")
    with pytest.raises(ValueError, match="coincide"):
        parse_road_network(nodes, segments)


def test_parse_network_no_edges(tmp_path):
    nodes = write(tmp_path / "n.csv", NODES_OK)
    segments = write(tmp_path / "s.csv", "segment_id,from_node,to_node\n")
    with pytest.raises(ValueError, match="no edges"):
        parse_road_network(nodes, segments)


def test_parse_network_missing_header(tmp_path):
    nodes = write(tmp_path / "n.csv", "node_id,lat\n1,40.0\n")
    segments = write(tmp_path / "s.csv", SEGMENTS_OK)
    with pytest.raises(ValueError, match="missing columns"):
        parse_road_network(nodes, segments)


TRIP_HEADER = "driver_id,trip_id,point_id,timestamp,lat,lon,speed_mps,cog_deg\n"


def trip_rows(*rows):
    return TRIP_HEADER + "".join(r + "\n" for r in rows)


def test_parse_trips_groups_and_sorts(tmp_path):
    # second trip's rows arrive out of timestamp order
    path = write(tmp_path / "t.csv", trip_rows(
        "1,1,0,100,40.0,-86.0,10.0,90.0",
        "1,1,1,101,40.0,-85.999,10.0,90.0",
        "2,1,1,201,40.1,-86.0,8.0,180.0",
        "2,1,0,200,40.1,-86.001,8.0,180.0",
    ))
    trips, report = parse_trips(path)
    assert [(t.driver_id, t.trip_id) for t in trips] == [(1, 1), (2, 1)]
    assert [p.timestamp for p in trips[1].points] == [200, 201]
    assert report.n_points_read == 4
    assert report.n_points_rejected == 0
    assert report.n_trips == 2
    assert not report.has_event_columns


def test_parse_trips_event_columns(tmp_path):
    path = write(tmp_path / "t.csv",
                 TRIP_HEADER.rstrip("\n") + ",hard_accel,hard_brake\n"
                 + "1,1,0,100,40.0,-86.0,10.0,90.0,0,1\n"
                 + "1,1,1,101,40.0,-85.999,10.0,90.0,1,0\n")
    trips, report = parse_trips(path)
    assert report.has_event_columns
    assert trips[0].points[0].hard_brake == 1
    assert trips[0].points[1].hard_accel == 1


def test_parse_trips_one_sided_event_column_rejected(tmp_path):
    path = write(tmp_path / "t.csv",
                 TRIP_HEADER.rstrip("\n") + ",hard_accel\n"
                 + "1,1,0,100,40.0,-86.0,10.0,90.0,0\n")
    with pytest.raises(ValueError, match="both"):
        parse_trips(path)


@pytest.mark.parametrize("row,reason", [
    ("1,1,0,100,40.0,-86.0,10.0", "bad_field_count"),
    ("1,1,0,abc,40.0,-86.0,10.0,90.0", "non_numeric"),
    ("1,1,0,100,95.0,-86.0,10.0,90.0", "lat_out_of_range"),
    ("1,1,0,100,40.0,-186.0,10.0,90.0", "lon_out_of_range"),
    ("1,1,0,100,40.0,-86.0,-1.0,90.0", "speed_out_of_range"),
    ("1,1,0,100,40.0,-86.0,10.0,360.0", "direction_out_of_range"),
    ("1,1,0,100,40.0,-86.0,10.0,-0.5", "direction_out_of_range"),
    ("1,1,0,100,40.0,-86.0,nan,90.0", "speed_out_of_range"),
])
def test_parse_trips_rejection_reasons(tmp_path, row, reason):
    path = write(tmp_path / "t.csv", trip_rows(
        row,
        "1,1,1,110,40.0,-86.0,10.0,90.0",
        "1,1,2,111,40.0,-85.999,10.0,90.0",
    ))
    trips, report = parse_trips(path)
    assert report.rejection_reasons == {reason: 1}
    assert report.n_points_rejected == 1
    assert len(trips) == 1 and len(trips[0].points) == 2


def test_parse_trips_negative_event_count(tmp_path):
    path = write(tmp_path / "t.csv",
                 TRIP_HEADER.rstrip("\n") + ",hard_accel,hard_brake\n"
                 + "1,1,0,100,40.0,-86.0,10.0,90.0,-1,0\n"
                 + "1,1,1,110,40.0,-86.0,10.0,90.0,0,0\n"
                 + "1,1,2,111,40.0,-85.999,10.0,90.0,0,0\n")
    _, report = parse_trips(path)
    assert report.rejection_reasons == {"negative_event_count": 1}


def test_parse_trips_duplicate_timestamp_keeps_first(tmp_path):
    path = write(tmp_path / "t.csv", trip_rows(
        "1,1,0,100,40.0,-86.0,10.0,90.0",
        "1,1,1,100,41.0,-86.0,10.0,90.0",
        "1,1,2,110,40.0,-85.999,10.0,90.0",
    ))
    trips, report = parse_trips(path)
    assert report.rejection_reasons == {"duplicate_timestamp": 1}
    assert trips[0].points[0].lat == 40.0


def test_parse_trips_short_trip_dropped(tmp_path):
    path = write(tmp_path / "t.csv", trip_rows(
        "1,1,0,100,40.0,-86.0,10.0,90.0",
        "2,1,0,100,40.0,-86.0,10.0,90.0",
        "2,1,1,110,40.0,-85.999,10.0,90.0",
    ))
    trips, report = parse_trips(path)
    assert [(t.driver_id, t.trip_id) for t in trips] == [(2, 1)]
    assert report.rejection_reasons == {"trip_too_short": 1}
    assert report.n_points_read == report.n_points_accepted + report.n_points_rejected


def test_parse_trips_empty_file(tmp_path):
    path = write(tmp_path / "t.csv", "")
    with pytest.raises(ValueError, match="empty file"):
        parse_trips(path)


def make_point(driver, trip, pid, ts):
    return TrajectoryPoint(driver, trip, pid, ts, 40.0, -86.0 + pid * 1e-4, 10.0, 90.0)


def test_segment_stream_splits_on_gap():
    pts = [make_point(1, 0, i, ts) for i, ts in enumerate([0, 10, 20, 400, 410, 420])]
    trips = segment_stream_into_trips(pts, gap_threshold_s=300.0)
    assert [(t.trip_id, len(t.points)) for t in trips] == [(1, 3), (2, 3)]
    assert all(p.trip_id == 1 for p in trips[0].points)


def test_segment_stream_gap_equal_threshold_no_split():
    pts = [make_point(1, 0, i, ts) for i, ts in enumerate([0, 300, 600])]
    trips = segment_stream_into_trips(pts, gap_threshold_s=300.0)
    assert len(trips) == 1 and len(trips[0].points) == 3


def test_segment_stream_drops_singletons():
    pts = [make_point(1, 0, i, ts) for i, ts in enumerate([0, 10, 1000, 2000, 2010])]
    trips = segment_stream_into_trips(pts, gap_threshold_s=DEFAULT_GAP_THRESHOLD_S)
    assert [(t.trip_id, len(t.points)) for t in trips] == [(1, 2), (2, 2)]


def test_write_trips_roundtrip(tmp_path):
    pts = [
        TrajectoryPoint(3, 7, 0, 1000, 40.123456789, -86.000000123, 12.5, 359.25, 0, 1),
        TrajectoryPoint(3, 7, 1, 1001, 40.123457, -86.0000002, 12.25, 0.0, 1, 0),
    ]
    path = tmp_path / "out.csv"
    write_trips([Trip(3, 7, pts)], path)
    trips, report = parse_trips(path)
    assert report.has_event_columns
    assert trips[0].points == pts


def test_write_network_roundtrip(tmp_path, network_paths):
    net = parse_road_network(*network_paths)
    nodes_out, segments_out = tmp_path / "n2.csv", tmp_path / "s2.csv"
    write_network(net, nodes_out, segments_out)
    again = parse_road_network(nodes_out, segments_out)
    assert again.nodes == net.nodes
    assert again.segments == net.segments
