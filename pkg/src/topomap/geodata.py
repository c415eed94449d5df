"""Dataset parsing, projection, road segmentation, and POI attachment.

The canonical dataset file is JSON with top-level fields ``crs``, ``nodes``,
``ways``, ``speed_overrides``, ``pois``:

    {
      "crs": "local-meters",                     # or "wgs84-degrees"
      "nodes": [[id, x, y], ...],
      "ways": [[id, [node ids], oneway, default_speed_kmh], ...],
      "speed_overrides": [[way_id, segment_index, "HH:MM-HH:MM", speed_kmh], ...],
      "pois": [[id, "name", x, y], ...]
    }

Ids may be ints or strings; they are normalized to dense ordinals with the
original keys retained for diagnostics.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_WALK_SPEED = 1.4  # m/s, pedestrian
_PERIOD_RE = re.compile(r"^([01]\d|2[0-3]):[0-5]\d-([01]\d|2[0-3]):[0-5]\d$")


@dataclass(frozen=True)
class Poi:
    poi_id: int
    name: str
    x: float
    y: float


@dataclass(frozen=True)
class Way:
    way_id: int
    node_ids: tuple[int, ...]
    oneway: bool
    default_speed: float  # km/h


@dataclass(frozen=True)
class SpeedOverride:
    way_id: int
    segment_index: int
    period: str
    speed: float  # km/h


@dataclass(frozen=True)
class RawDataset:
    crs: str  # "local-meters" | "wgs84-degrees"
    node_xy: np.ndarray  # (N, 2) float64
    ways: tuple[Way, ...]
    overrides: tuple[SpeedOverride, ...]
    pois: tuple[Poi, ...]
    node_keys: tuple = ()  # original node ids by dense ordinal
    way_keys: tuple = ()
    poi_keys: tuple = ()
    origin: tuple[float, float] | None = None  # (lat0, lon0) once projected


@dataclass(frozen=True)
class Segment:
    segment_id: int
    way_id: int
    index_in_way: int
    from_node: int  # intersection id
    to_node: int
    geometry: np.ndarray  # (k, 2) float64, endpoints at intersections
    length: float  # meters
    speed: float  # km/h for the active period
    oneway: bool


@dataclass(frozen=True)
class SegmentedNetwork:
    intersection_xy: np.ndarray  # (V, 2) float64, dense intersection ids 0..V-1
    intersection_keys: tuple  # original node ids
    segments: tuple[Segment, ...]
    period: str | None

    @property
    def n_intersections(self) -> int:
        return int(self.intersection_xy.shape[0])

    def bbox(self):
        pts = self.intersection_xy
        for s in self.segments:
            pts = np.vstack([pts, s.geometry])
        return (
            float(pts[:, 0].min()), float(pts[:, 1].min()),
            float(pts[:, 0].max()), float(pts[:, 1].max()),
        )


@dataclass(frozen=True)
class PoiAttachment:
    poi_id: int
    intersection: int
    connector_length: float  # meters
    connector_time: float  # seconds


def _require(cond, message, where=None):
    if not cond:
        raise DatasetError(message, where=where)


def _row(value, n, what, idx):
    _require(isinstance(value, (list, tuple)) and len(value) == n,
             f"{what} entry must be a {n}-element array", where=f"{what}[{idx}]")
    return value


def parse_dataset(text: str) -> RawDataset:
    """Parse and validate a dataset file, normalizing ids to dense ordinals."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetError(f"syntax error: {e.msg}", where=f"line {e.lineno} column {e.colno}") from e
    _require(isinstance(doc, dict), "top level must be an object")
    crs = doc.get("crs")
    _require(crs in ("local-meters", "wgs84-degrees"),
             f"crs must be 'local-meters' or 'wgs84-degrees', got {crs!r}", where="crs")

    node_index: dict = {}
    node_keys = []
    xs, ys = [], []
    for i, row in enumerate(doc.get("nodes", [])):
        nid, x, y = _row(row, 3, "nodes", i)
        _require(nid not in node_index, f"duplicate node id {nid!r}", where=f"nodes[{i}]")
        node_index[nid] = len(node_keys)
        node_keys.append(nid)
        xs.append(float(x))
        ys.append(float(y))

    ways = []
    way_index: dict = {}
    for i, row in enumerate(doc.get("ways", [])):
        wid, nids, oneway, speed = _row(row, 4, "ways", i)
        _require(wid not in way_index, f"duplicate way id {wid!r}", where=f"ways[{i}]")
        _require(isinstance(nids, (list, tuple)) and len(nids) >= 2,
                 f"way {wid!r} must list at least 2 nodes", where=f"ways[{i}]")
        for nid in nids:
            _require(nid in node_index, f"way {wid!r} references missing node {nid!r}",
                     where=f"ways[{i}]")
        speed = float(speed)
        _require(speed > 0, f"way {wid!r} has non-positive speed {speed}", where=f"ways[{i}]")
        way_index[wid] = len(ways)
        ways.append(Way(len(ways), tuple(node_index[n] for n in nids), bool(oneway), speed))

    overrides = []
    for i, row in enumerate(doc.get("speed_overrides", [])):
        wid, seg_idx, period, speed = _row(row, 4, "speed_overrides", i)
        _require(wid in way_index, f"speed override references missing way {wid!r}",
                 where=f"speed_overrides[{i}]")
        _require(_PERIOD_RE.match(str(period)), f"bad period {period!r}, expected HH:MM-HH:MM",
                 where=f"speed_overrides[{i}]")
        speed = float(speed)
        _require(speed > 0, f"non-positive override speed {speed}", where=f"speed_overrides[{i}]")
        overrides.append(SpeedOverride(way_index[wid], int(seg_idx), str(period), speed))

    pois = []
    poi_keys = []
    seen_pois = set()
    for i, row in enumerate(doc.get("pois", [])):
        pid, name, x, y = _row(row, 4, "pois", i)
        _require(pid not in seen_pois, f"duplicate poi id {pid!r}", where=f"pois[{i}]")
        seen_pois.add(pid)
        pois.append(Poi(len(pois), str(name), float(x), float(y)))
        poi_keys.append(pid)

    node_xy = np.column_stack([np.asarray(xs, float), np.asarray(ys, float)]) \
        if xs else np.zeros((0, 2))
    return RawDataset(
        crs=crs, node_xy=node_xy, ways=tuple(ways), overrides=tuple(overrides),
        pois=tuple(pois), node_keys=tuple(node_keys),
        way_keys=tuple(way_index.keys()), poi_keys=tuple(poi_keys),
    )


def project(raw: RawDataset) -> RawDataset:
    """Equirectangular projection about the dataset centroid, to local meters."""
    _require(raw.crs == "wgs84-degrees", "project() expects wgs84-degrees input", where="crs")
    lons = list(raw.node_xy[:, 0]) + [p.x for p in raw.pois]
    lats = list(raw.node_xy[:, 1]) + [p.y for p in raw.pois]
    _require(len(lats) > 0, "nothing to project")
    for lat in lats:
        _require(-90.0 <= lat <= 90.0, f"latitude {lat} outside [-90, 90]")
    lon0 = float(np.mean(lons))
    lat0 = float(np.mean(lats))
    kx = EARTH_RADIUS_M * math.cos(math.radians(lat0)) * math.pi / 180.0
    ky = EARTH_RADIUS_M * math.pi / 180.0
    node_xy = np.column_stack([(raw.node_xy[:, 0] - lon0) * kx,
                               (raw.node_xy[:, 1] - lat0) * ky])
    pois = tuple(Poi(p.poi_id, p.name, (p.x - lon0) * kx, (p.y - lat0) * ky)
                 for p in raw.pois)
    return RawDataset(
        crs="local-meters", node_xy=node_xy, ways=raw.ways, overrides=raw.overrides,
        pois=pois, node_keys=raw.node_keys, way_keys=raw.way_keys, poi_keys=raw.poi_keys,
        origin=(lat0, lon0),
    )


def unproject(xy: np.ndarray, origin: tuple[float, float]) -> np.ndarray:
    """Inverse of project() for round-trip checks; xy is (n, 2) meters."""
    lat0, lon0 = origin
    kx = EARTH_RADIUS_M * math.cos(math.radians(lat0)) * math.pi / 180.0
    ky = EARTH_RADIUS_M * math.pi / 180.0
    return np.column_stack([xy[:, 0] / kx + lon0, xy[:, 1] / ky + lat0])


def _polyline_length(pts: np.ndarray) -> float:
    d = np.diff(pts, axis=0)
    return float(np.sum(np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)))


def segment_roads(raw: RawDataset, period: str | None = None) -> SegmentedNetwork:
    """Split ways at intersections into road segments with per-period speeds.

    An intersection is any way endpoint, or an interior node shared by two or
    more ways. Speed overrides apply when (way, segment index, period) match
    exactly; otherwise the way default speed is used.
    """
    _require(raw.crs == "local-meters", "segment_roads() expects local-meters input", where="crs")
    if period is not None:
        _require(_PERIOD_RE.match(period), f"bad period {period!r}, expected HH:MM-HH:MM")

    way_count = np.zeros(raw.node_xy.shape[0], dtype=np.int64)
    is_intersection = np.zeros(raw.node_xy.shape[0], dtype=bool)
    for w in raw.ways:
        is_intersection[w.node_ids[0]] = True
        is_intersection[w.node_ids[-1]] = True
        for nid in set(w.node_ids):
            way_count[nid] += 1
    is_intersection |= way_count >= 2

    override_map = {(o.way_id, o.segment_index): o.speed
                    for o in raw.overrides if o.period == period}

    inter_ids = np.nonzero(is_intersection)[0]
    dense = {int(n): i for i, n in enumerate(inter_ids)}
    intersection_xy = raw.node_xy[inter_ids].copy()
    intersection_keys = tuple(raw.node_keys[int(n)] for n in inter_ids) \
        if raw.node_keys else tuple(int(n) for n in inter_ids)

    segments = []
    for w in raw.ways:
        cut = [0] + [i for i in range(1, len(w.node_ids) - 1) if is_intersection[w.node_ids[i]]] \
            + [len(w.node_ids) - 1]
        for k in range(len(cut) - 1):
            run = w.node_ids[cut[k]:cut[k + 1] + 1]
            pts = raw.node_xy[list(run)]
            length = _polyline_length(pts)
            if length <= 0.0:
                log.warning("dropping zero-length segment (way %s, index %d)", w.way_id, k)
                continue
            speed = override_map.get((w.way_id, k), w.default_speed)
            segments.append(Segment(
                segment_id=len(segments), way_id=w.way_id, index_in_way=k,
                from_node=dense[run[0]], to_node=dense[run[-1]],
                geometry=pts, length=length, speed=speed, oneway=w.oneway,
            ))
    return SegmentedNetwork(
        intersection_xy=intersection_xy, intersection_keys=intersection_keys,
        segments=tuple(segments), period=period,
    )


def attach_pois(net: SegmentedNetwork, pois, walk_speed: float = DEFAULT_WALK_SPEED,
                tie_tol: float = 1e-9):
    """Attach each POI to its Euclidean-nearest intersection (ties: lowest id)."""
    _require(net.n_intersections > 0, "cannot attach POIs: empty intersection set")
    if walk_speed <= 0:
        raise ValueError("walk_speed must be positive")
    out = []
    xy = net.intersection_xy
    for p in pois:
        d = np.sqrt((xy[:, 0] - p.x) ** 2 + (xy[:, 1] - p.y) ** 2)
        dmin = float(d.min())
        best = int(np.nonzero(d <= dmin + tie_tol)[0][0])
        dist = float(d[best])
        out.append(PoiAttachment(p.poi_id, best, dist, dist / walk_speed))
    return out


def network_to_raw(net: SegmentedNetwork) -> RawDataset:
    """Re-encode a segmented network as a raw dataset (each segment one way).

    Interior polyline points become interior way nodes; used for the
    segmentation idempotence property and by the OSM adapter round trip.
    """
    nodes = [(float(x), float(y)) for x, y in net.intersection_xy]
    index = {i: i for i in range(len(nodes))}

    def node_for(pt):
        key = (float(pt[0]), float(pt[1]))
        nodes.append(key)
        return len(nodes) - 1

    ways = []
    for s in net.segments:
        ids = [index[s.from_node]]
        for pt in s.geometry[1:-1]:
            ids.append(node_for(pt))
        ids.append(index[s.to_node])
        ways.append(Way(len(ways), tuple(ids), s.oneway, s.speed))
    node_xy = np.asarray(nodes, float) if nodes else np.zeros((0, 2))
    return RawDataset(crs="local-meters", node_xy=node_xy, ways=tuple(ways),
                      overrides=(), pois=(), node_keys=tuple(range(len(nodes))),
                      way_keys=tuple(range(len(ways))), poi_keys=())
