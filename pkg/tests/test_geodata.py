import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topomap.errors import DatasetError
from topomap.geodata import (attach_pois, network_to_raw, parse_dataset, project,
                             segment_roads, unproject)

from conftest import SQUARE_DATASET, make_raw


# --- parse_dataset ---------------------------------------------------------

def test_parse_minimal_square(square_dataset_text):
    raw = parse_dataset(square_dataset_text)
    assert raw.node_xy.shape == (4, 2)
    assert len(raw.ways) == 4
    assert len(raw.pois) == 2
    assert raw.crs == "local-meters"


def test_parse_dangling_node_reference():
    doc = dict(SQUARE_DATASET)
    doc["ways"] = [[0, [0, 99], False, 30.0]]
    with pytest.raises(DatasetError, match="99"):
        parse_dataset(json.dumps(doc))


def test_parse_zero_speed_rejected():
    doc = dict(SQUARE_DATASET)
    doc["ways"] = [[0, [0, 1], False, 0.0]]
    with pytest.raises(DatasetError, match="non-positive speed"):
        parse_dataset(json.dumps(doc))


def test_parse_duplicate_node_id():
    doc = dict(SQUARE_DATASET)
    doc["nodes"] = SQUARE_DATASET["nodes"] + [[0, 5.0, 5.0]]
    with pytest.raises(DatasetError, match="duplicate node id"):
        parse_dataset(json.dumps(doc))


def test_parse_syntax_error_reports_position():
    with pytest.raises(DatasetError, match="line"):
        parse_dataset("{ not json")


def test_parse_bad_period_rejected():
    doc = dict(SQUARE_DATASET)
    doc["speed_overrides"] = [[0, 0, "25:00-26:00", 20.0]]
    with pytest.raises(DatasetError, match="period"):
        parse_dataset(json.dumps(doc))


# --- project ---------------------------------------------------------------

def wgs_raw(points, pois=()):
    doc = {
        "crs": "wgs84-degrees",
        "nodes": [[i, lon, lat] for i, (lon, lat) in enumerate(points)],
        "ways": [[0, list(range(len(points))), False, 30.0]] if len(points) >= 2 else [],
        "speed_overrides": [],
        "pois": [[i, f"p{i}", lon, lat] for i, (lon, lat) in enumerate(pois)],
    }
    return parse_dataset(json.dumps(doc))


def test_project_centroid_maps_to_origin():
    raw = wgs_raw([(114.0, 22.5), (114.0, 22.5)])
    out = project(raw)
    assert np.allclose(out.node_xy, 0.0)


def test_project_latitude_step():
    # analytic: R * pi/180 * 0.001 with R = 6,371,000
    raw = wgs_raw([(114.0, -0.0005), (114.0, 0.0005)])
    out = project(raw)
    dy = out.node_xy[1, 1] - out.node_xy[0, 1]
    assert dy == pytest.approx(111.19492664455873, rel=1e-12)


def test_project_longitude_step_at_lat_22_5():
    # analytic: R * cos(22.5 deg) * pi/180 * 0.003
    raw = wgs_raw([(113.9985, 22.5), (114.0015, 22.5)])
    out = project(raw)
    dx = out.node_xy[1, 0] - out.node_xy[0, 0]
    # double representation of the input longitudes limits this to ~1e-9 rel
    assert dx == pytest.approx(308.19215053800525, rel=1e-9)


def test_project_rejects_bad_latitude():
    raw = wgs_raw([(114.0, 95.0), (114.0, 22.0)])
    with pytest.raises(DatasetError, match="latitude"):
        project(raw)


def test_project_requires_wgs84(square_dataset_text):
    with pytest.raises(DatasetError):
        project(parse_dataset(square_dataset_text))


@given(st.lists(st.tuples(st.floats(113.5, 114.5), st.floats(22.0, 23.0)),
                min_size=2, max_size=20))
@settings(max_examples=50, deadline=None)
def test_project_round_trip(points):
    raw = wgs_raw(points)
    out = project(raw)
    back = unproject(out.node_xy, out.origin)
    assert np.all(np.abs(back - raw.node_xy) < 1e-9)


# --- segment_roads ---------------------------------------------------------

def test_single_way_interior_nodes_collapse():
    raw = make_raw([(0, 0), (100, 0), (200, 0), (300, 0)],
                   [((0, 1, 2, 3), False, 30.0)])
    net = segment_roads(raw)
    assert net.n_intersections == 2
    assert len(net.segments) == 1
    assert net.segments[0].length == pytest.approx(300.0)


def test_crossing_ways_split_at_shared_node():
    # two ways crossing at the shared center node -> 4 segments at it
    raw = make_raw([(0, 0), (100, 0), (200, 0), (100, -100), (100, 100)],
                   [((0, 1, 2), False, 30.0), ((3, 1, 4), False, 30.0)])
    net = segment_roads(raw)
    assert len(net.segments) == 4
    center = [i for i, k in enumerate(net.intersection_keys) if k == 1][0]
    incident = sum(1 for s in net.segments if center in (s.from_node, s.to_node))
    assert incident == 4


def test_five_node_way_split_by_shared_interior_node():
    # way 0 has 5 nodes; node 2 is also used by way 1 -> split into 2 segments
    raw = make_raw([(0, 0), (50, 0), (100, 0), (150, 0), (200, 0), (100, 80)],
                   [((0, 1, 2, 3, 4), False, 30.0), ((5, 2), False, 30.0)])
    net = segment_roads(raw)
    by_way = [s for s in net.segments if s.way_id == 0]
    assert len(by_way) == 2
    # brute-force degree oracle: interior nodes of way 0 with >= 2 way refs
    counts = {}
    for w in raw.ways:
        for nid in set(w.node_ids):
            counts[nid] = counts.get(nid, 0) + 1
    interior_cuts = [n for n in raw.ways[0].node_ids[1:-1] if counts[n] >= 2]
    assert len(interior_cuts) == 1
    assert {s.index_in_way for s in by_way} == {0, 1}


def test_speed_override_requires_period_match():
    raw = make_raw([(0, 0), (100, 0)], [((0, 1), False, 30.0)],
                   overrides=[(0, 0, "08:00-09:00", 10.0)])
    net_peak = segment_roads(raw, "08:00-09:00")
    net_off = segment_roads(raw, "12:00-13:00")
    net_none = segment_roads(raw, None)
    assert net_peak.segments[0].speed == 10.0
    assert net_off.segments[0].speed == 30.0
    assert net_none.segments[0].speed == 30.0


def test_partition_preserves_way_lengths():
    # multiset of way lengths == multiset of their segments' summed lengths
    raw = make_raw([(0, 0), (80, 60), (160, 120), (240, 60), (160, 0)],
                   [((0, 1, 2, 3), False, 30.0), ((4, 2), False, 30.0)])
    net = segment_roads(raw)
    for w in raw.ways:
        pts = raw.node_xy[list(w.node_ids)]
        expect = float(np.sum(np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))))
        got = sum(s.length for s in net.segments if s.way_id == w.way_id)
        assert got == pytest.approx(expect, rel=1e-6)


def test_segmentation_idempotent():
    raw = make_raw([(0, 0), (50, 10), (100, 0), (150, -10), (200, 0), (100, 80)],
                   [((0, 1, 2, 3, 4), False, 30.0), ((5, 2), True, 40.0)])
    net1 = segment_roads(raw)
    net2 = segment_roads(network_to_raw(net1))
    assert net2.n_intersections == net1.n_intersections
    sig1 = sorted((round(s.length, 9), s.oneway, s.speed) for s in net1.segments)
    sig2 = sorted((round(s.length, 9), s.oneway, s.speed) for s in net2.segments)
    assert sig1 == sig2


def test_zero_length_segment_dropped():
    raw = make_raw([(0, 0), (0, 0), (100, 0)],
                   [((0, 1), False, 30.0), ((1, 2), False, 30.0)])
    net = segment_roads(raw)
    assert len(net.segments) == 1


# --- attach_pois -----------------------------------------------------------

def test_attach_coincident_poi(fig4_scenario):
    from topomap.geodata import Poi

    net = fig4_scenario.net
    [att] = attach_pois(net, [Poi(0, "at7", *net.intersection_xy[2])])
    assert att.intersection == 2
    assert att.connector_length == 0.0
    assert att.connector_time == 0.0


def test_attach_tie_breaks_to_lowest_id():
    raw = make_raw([(0, 0), (100, 0)], [((0, 1), False, 30.0)])
    net = segment_roads(raw)
    from topomap.geodata import Poi

    [att] = attach_pois(net, [Poi(0, "mid", 50.0, 40.0)])
    assert att.intersection == 0


def test_attach_connector_time_is_distance_over_walkspeed():
    raw = make_raw([(0, 0), (100, 0)], [((0, 1), False, 30.0)])
    net = segment_roads(raw)
    from topomap.geodata import Poi

    [att] = attach_pois(net, [Poi(0, "p", 0.0, 140.0)], walk_speed=1.4)
    assert att.connector_time == pytest.approx(100.0)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_attach_matches_exhaustive_scan(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    nodes = rng.uniform(0, 1000, (n, 2))
    ways = [((i, i + 1), False, 30.0) for i in range(n - 1)]
    raw = make_raw(nodes, ways)
    net = segment_roads(raw)
    from topomap.geodata import Poi

    pois = [Poi(i, f"p{i}", *rng.uniform(0, 1000, 2)) for i in range(5)]
    atts = attach_pois(net, pois)
    for p, a in zip(pois, atts):
        d = np.sqrt((net.intersection_xy[:, 0] - p.x) ** 2
                    + (net.intersection_xy[:, 1] - p.y) ** 2)
        assert d[a.intersection] == pytest.approx(float(d.min()), abs=1e-9)


def test_attach_empty_network_errors():
    raw = make_raw([(0, 0), (100, 0)], [])
    net = segment_roads(raw)
    from topomap.geodata import Poi

    with pytest.raises(DatasetError):
        attach_pois(net, [Poi(0, "p", 0, 0)])
