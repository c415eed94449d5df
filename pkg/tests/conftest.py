import json

import numpy as np
import pytest

from topomap.field import FieldParams, Viewport
from topomap.geodata import Poi, RawDataset, Way, parse_dataset
from topomap.scenario import build_base


def make_raw(nodes, ways, pois=(), overrides=()):
    """Build a local-meters RawDataset from plain tuples.

    nodes: [(x, y), ...]; ways: [(node_ids, oneway, speed_kmh), ...];
    pois: [(name, x, y), ...].
    """
    from topomap.geodata import SpeedOverride

    node_xy = np.asarray(nodes, float)
    way_objs = tuple(Way(i, tuple(nids), bool(ow), float(sp))
                     for i, (nids, ow, sp) in enumerate(ways))
    poi_objs = tuple(Poi(i, name, float(x), float(y))
                     for i, (name, x, y) in enumerate(pois))
    ov = tuple(SpeedOverride(w, s, p, v) for (w, s, p, v) in overrides)
    return RawDataset(crs="local-meters", node_xy=node_xy, ways=way_objs,
                      overrides=ov, pois=poi_objs,
                      node_keys=tuple(range(len(nodes))),
                      way_keys=tuple(range(len(way_objs))),
                      poi_keys=tuple(range(len(poi_objs))))


SQUARE_DATASET = {
    "crs": "local-meters",
    "nodes": [[0, 0.0, 0.0], [1, 100.0, 0.0], [2, 100.0, 100.0], [3, 0.0, 100.0]],
    "ways": [
        [0, [0, 1], True, 36.0],
        [1, [1, 2], True, 36.0],
        [2, [2, 3], True, 36.0],
        [3, [3, 0], True, 36.0],
    ],
    "speed_overrides": [],
    "pois": [[0, "H1", -20.0, 0.0], [1, "H2", 120.0, 100.0]],
}


@pytest.fixture
def square_dataset_text():
    return json.dumps(SQUARE_DATASET)


@pytest.fixture
def fig4_scenario(square_dataset_text):
    """One-way ring A->B->C->D->A with H1 attached at A and H2 at C.

    Arc times are 10 s per side (100 m at 36 km/h); connector times are
    20 m / 1.4 m/s. Reproduces the two-POI square desk instance: {A, B}
    assigned to H1, {C, D} to H2.
    """
    raw = parse_dataset(square_dataset_text)
    return build_base("square", raw, None, FieldParams(), "s0")


def grid5_raw(express=True):
    """5x5 grid, 100 m spacing, ids r*5+c. All ways two-way at 30 km/h,
    except an express pair (12-13), (13-14) at 120 km/h when express=True.
    H1 west of node 10, H2 east of node 14 (slightly farther out)."""
    nodes = [(100.0 * c, 100.0 * r) for r in range(5) for c in range(5)]
    ways = []
    for r in range(5):
        for c in range(4):
            a, b = r * 5 + c, r * 5 + c + 1
            speed = 120.0 if express and r == 2 and c >= 2 else 30.0
            ways.append(((a, b), False, speed))
    for r in range(4):
        for c in range(5):
            ways.append(((r * 5 + c, (r + 1) * 5 + c), False, 30.0))
    pois = [("H1", -20.0, 200.0), ("H2", 425.0, 200.0)]
    return make_raw(nodes, ways, pois)


@pytest.fixture
def grid5_scenario():
    return build_base("grid5", grid5_raw(), None, FieldParams(), "g0")


def segment_by_nodes(net, a, b):
    """Locate the segment joining intersections a and b (either direction)."""
    for s in net.segments:
        if {s.from_node, s.to_node} == {a, b}:
            return s.segment_id
    raise AssertionError(f"no segment between {a} and {b}")


@pytest.fixture
def square_viewport():
    return Viewport(-40.0, -40.0, 64, 64, 180.0 / 64)
