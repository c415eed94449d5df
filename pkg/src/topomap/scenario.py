"""Immutable scenario snapshots, what-if edits, incremental raster
recomputation, and scenario comparison metrics.

Scenarios are value-immutable: every edit derives a new snapshot with fully
rebuilt caches (graph, trees, assignment), leaving the parent untouched.
Face geometry never changes under the supported edits, so the face set is
shared down each lineage.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ScenarioError
from .faces import FaceSet, extract_faces
from .field import (DensityRaster, EvalContext, FieldParams, Viewport,
                    build_eval_context, eval_pixels, rasterize)
from .geodata import (Poi, PoiAttachment, RawDataset, SegmentedNetwork,
                      attach_pois, segment_roads)
from .netgraph import (AccessTree, AssignmentTable, DirectedRoadGraph,
                       assign_intersections, build_graph, remove_segment,
                       set_segment_speed, shortest_path_tree)

EDIT_KINDS = ("add_poi", "remove_poi", "block_segment", "set_speed", "set_params")


@dataclass(frozen=True)
class Edit:
    kind: str
    poi_id: int | None = None
    name: str | None = None
    x: float | None = None
    y: float | None = None
    segment_id: int | None = None
    speed_kmh: float | None = None
    params: FieldParams | None = None

    def __post_init__(self):
        if self.kind not in EDIT_KINDS:
            raise ScenarioError(f"unknown edit kind {self.kind!r}")

    def to_obj(self) -> dict:
        obj = {"kind": self.kind}
        for k in ("poi_id", "name", "x", "y", "segment_id", "speed_kmh"):
            v = getattr(self, k)
            if v is not None:
                obj[k] = v
        if self.params is not None:
            obj["params"] = params_to_obj(self.params)
        return obj

    @staticmethod
    def from_obj(obj: dict) -> "Edit":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ScenarioError("edit must be an object with a 'kind' field")
        params = params_from_obj(obj["params"]) if "params" in obj else None
        try:
            return Edit(
                kind=obj["kind"],
                poi_id=obj.get("poi_id"), name=obj.get("name"),
                x=obj.get("x"), y=obj.get("y"),
                segment_id=obj.get("segment_id"), speed_kmh=obj.get("speed_kmh"),
                params=params,
            )
        except TypeError as e:
            raise ScenarioError(f"malformed edit: {e}") from e


def params_to_obj(p: FieldParams) -> dict:
    return {
        "kernel": p.kernel, "bandwidth": p.bandwidth, "alpha": p.alpha,
        "walk_speed": p.walk_speed, "mode": p.mode, "aggregate": p.aggregate,
        "cutoff_multiple": p.cutoff_multiple, "acc_bandwidth": p.acc_bandwidth,
    }


def params_from_obj(obj: dict) -> FieldParams:
    allowed = set(params_to_obj(FieldParams()))
    bad = set(obj) - allowed
    if bad:
        raise ScenarioError(f"unknown params fields: {sorted(bad)}")
    return FieldParams(**obj)


def _empty_assignment(n_vertices: int) -> AssignmentTable:
    return AssignmentTable(poi_ids=(), winner=np.full(n_vertices, -1, np.int32),
                           best_time=np.full(n_vertices, np.inf),
                           accessibility=np.zeros(n_vertices))


@dataclass(eq=False)
class Scenario:
    scenario_id: str
    dataset_id: str
    net: SegmentedNetwork
    pois: tuple[Poi, ...]
    attachments: tuple[PoiAttachment, ...]
    params: FieldParams
    graph: DirectedRoadGraph
    trees: tuple[AccessTree, ...]
    assign: AssignmentTable
    faces: FaceSet
    parent_id: str | None = None
    edit: Edit | None = None
    depth: int = 0
    _ctx: EvalContext | None = field(default=None, repr=False)

    def context(self) -> EvalContext:
        # idempotent lazy build; racing threads compute equal contexts
        if self._ctx is None:
            self._ctx = build_eval_context(self.net, self.trees, self.assign, self.faces)
        return self._ctx

    def poi_by_id(self, poi_id: int) -> Poi | None:
        for p in self.pois:
            if p.poi_id == poi_id:
                return p
        return None


def _derive(net, pois, params, graph, faces, **kw) -> dict:
    attachments = tuple(attach_pois(net, pois, params.walk_speed)) if pois else ()
    trees = tuple(shortest_path_tree(graph, a) for a in attachments)
    assign = assign_intersections(trees, params.alpha) if trees \
        else _empty_assignment(net.n_intersections)
    return dict(net=net, pois=tuple(pois), attachments=attachments, params=params,
                graph=graph, trees=trees, assign=assign, faces=faces, **kw)


def build_base(dataset_id: str, raw: RawDataset, period: str | None,
               params: FieldParams, scenario_id: str) -> Scenario:
    """Ingest a parsed (local-meters) dataset into a base scenario."""
    net = segment_roads(raw, period)
    graph = build_graph(net)
    fset = extract_faces(net)
    return Scenario(scenario_id=scenario_id, dataset_id=dataset_id,
                    **_derive(net, raw.pois, params, graph, fset))


def apply_edit(parent: Scenario, edit: Edit, scenario_id: str) -> Scenario:
    """Derive a child scenario; the parent is never mutated."""
    pois = list(parent.pois)
    params = parent.params
    graph = parent.graph

    if edit.kind == "add_poi":
        if edit.x is None or edit.y is None:
            raise ScenarioError("add_poi requires x and y")
        new_id = max((p.poi_id for p in pois), default=-1) + 1
        pois.append(Poi(new_id, edit.name or f"poi-{new_id}", float(edit.x), float(edit.y)))
    elif edit.kind == "remove_poi":
        if parent.poi_by_id(edit.poi_id) is None:
            raise ScenarioError(f"unknown poi id {edit.poi_id}")
        pois = [p for p in pois if p.poi_id != edit.poi_id]
    elif edit.kind == "block_segment":
        if edit.segment_id is None or not graph.has_segment(int(edit.segment_id)):
            raise ScenarioError(f"unknown segment id {edit.segment_id}")
        graph = remove_segment(graph, int(edit.segment_id))
    elif edit.kind == "set_speed":
        if edit.segment_id is None or not graph.has_segment(int(edit.segment_id)):
            raise ScenarioError(f"unknown segment id {edit.segment_id}")
        if edit.speed_kmh is None or edit.speed_kmh <= 0:
            raise ScenarioError(f"set_speed requires a positive speed, got {edit.speed_kmh}")
        graph = set_segment_speed(graph, int(edit.segment_id), float(edit.speed_kmh))
    elif edit.kind == "set_params":
        if edit.params is None:
            raise ScenarioError("set_params requires params")
        params = edit.params

    return Scenario(scenario_id=scenario_id, dataset_id=parent.dataset_id,
                    parent_id=parent.scenario_id, edit=edit, depth=parent.depth + 1,
                    **_derive(parent.net, pois, params, graph, parent.faces))


def value_equal(a: Scenario, b: Scenario) -> bool:
    """Deep value equality over everything that affects evaluation."""
    if a.params != b.params or [p for p in a.pois] != [p for p in b.pois]:
        return False
    if a.attachments != b.attachments:
        return False
    ga, gb = a.graph, b.graph
    if not (np.array_equal(ga.arc_from, gb.arc_from) and np.array_equal(ga.arc_to, gb.arc_to)
            and np.array_equal(ga.arc_time, gb.arc_time) and np.array_equal(ga.arc_seg, gb.arc_seg)):
        return False
    if len(a.trees) != len(b.trees):
        return False
    for ta, tb in zip(a.trees, b.trees):
        if ta.poi_id != tb.poi_id or not np.array_equal(ta.time_to, tb.time_to):
            return False
    return (np.array_equal(a.assign.winner, b.assign.winner)
            and np.array_equal(a.assign.accessibility, b.assign.accessibility))


class ScenarioStore:
    """Append-only scenario registry; creation serialized, reads lock-free."""

    def __init__(self):
        self._lock = threading.RLock()
        self._scenarios: dict[str, Scenario] = {}
        self._counter = 0

    def _next_id(self) -> str:
        sid = f"s{self._counter}"
        self._counter += 1
        return sid

    def add_base(self, dataset_id, raw, period, params, scenario_id=None) -> Scenario:
        with self._lock:
            sid = scenario_id or self._next_id()
            if sid in self._scenarios:
                raise ScenarioError(f"scenario id {sid} already exists")
            sc = build_base(dataset_id, raw, period, params, sid)
            self._scenarios[sid] = sc
            return sc

    def create_child(self, parent_id: str, edit: Edit, scenario_id=None) -> Scenario:
        with self._lock:
            parent = self.get(parent_id)
            sid = scenario_id or self._next_id()
            if sid in self._scenarios:
                raise ScenarioError(f"scenario id {sid} already exists")
            sc = apply_edit(parent, edit, sid)
            self._scenarios[sid] = sc
            return sc

    def get(self, scenario_id: str) -> Scenario:
        sc = self._scenarios.get(scenario_id)
        if sc is None:
            raise KeyError(scenario_id)
        return sc

    def __contains__(self, scenario_id: str) -> bool:
        return scenario_id in self._scenarios

    def ids(self):
        return list(self._scenarios)


def edit_log_line(scenario: Scenario) -> str:
    """One edit-log line reproducing this (non-base) scenario."""
    if scenario.edit is None:
        raise ScenarioError("base scenarios carry no edit")
    return json.dumps({"scenario": scenario.scenario_id,
                       "parent": scenario.parent_id,
                       "edit": scenario.edit.to_obj()}, sort_keys=True)


def replay_edit_log(store: ScenarioStore, lines) -> list[Scenario]:
    """Replay edit-log lines (in order) against scenarios already in the store."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        out.append(store.create_child(obj["parent"], Edit.from_obj(obj["edit"]),
                                      scenario_id=obj["scenario"]))
    return out


# --- change detection + incremental rasters -------------------------------


def _changed_vertices(parent_raster: DensityRaster, child_ctx: EvalContext,
                      mode: str) -> np.ndarray:
    """Vertex indices whose influence on any pixel may differ (exact compare)."""
    V = parent_raster.assign_winner.shape[0]
    if child_ctx.n_vertices != V:
        raise ScenarioError("scenarios span different networks")
    if mode == "amplitude-decay":
        child_winner = np.full(V, -1, np.int32)
        if child_ctx.poi_ids:
            poi_arr = np.asarray(child_ctx.poi_ids, np.int32)
            has = child_ctx.winner_ord >= 0
            child_winner[has] = poi_arr[child_ctx.winner_ord[has]]
        changed = (parent_raster.assign_winner != child_winner) \
            | (parent_raster.assign_acc != child_ctx.acc)
        return np.nonzero(changed)[0]
    # eq4-literal: any per-POI time difference, including added/removed POIs
    parent_rows = {pid: parent_raster.times[i] for i, pid in enumerate(parent_raster.poi_ids)}
    child_rows = {pid: child_ctx.times[i] for i, pid in enumerate(child_ctx.poi_ids)}
    changed = np.zeros(V, bool)
    for pid in set(parent_rows) | set(child_rows):
        a = parent_rows.get(pid)
        b = child_rows.get(pid)
        if a is None:
            changed |= np.isfinite(b)
        elif b is None:
            changed |= np.isfinite(a)
        else:
            changed |= (a != b) & ~(np.isinf(a) & np.isinf(b))
    return np.nonzero(changed)[0]


def incremental_raster(parent_raster: DensityRaster, parent: Scenario, child: Scenario,
                       viewport: Viewport, params: FieldParams, workers=None):
    """Child raster recomputing only pixels whose candidates changed.

    Returns (raster, changed_bbox) where changed_bbox is
    (min_col, min_row, max_col, max_row) in pixel indices, or None when no
    pixel needed recomputation. Bitwise equal to rasterize(child, ...).
    """
    if parent_raster.viewport != viewport:
        raise ScenarioError("parent raster viewport does not match")
    if child.dataset_id != parent.dataset_id:
        raise ScenarioError("scenarios belong to different datasets")
    ctx = child.context()
    if parent_raster.params != params:
        ras = rasterize(ctx, viewport, params, workers=workers)
        return ras, (0, 0, viewport.width - 1, viewport.height - 1)

    changed = _changed_vertices(parent_raster, ctx, params.mode)
    H, W = viewport.height, viewport.width
    mask = np.zeros((H, W), bool)
    if changed.size:
        changed_set = set(int(c) for c in changed)
        affected_faces = [f.face_id for f in ctx.faces.faces
                          if not changed_set.isdisjoint(int(v) for v in f.vertices)]
        if affected_faces:
            mask |= np.isin(parent_raster.face_id, np.asarray(affected_faces, np.int32))
        outer = parent_raster.face_id == -1
        if outer.any():
            xs, ys = viewport.pixel_centers()
            jj, ii = np.nonzero(outer)
            pts = np.column_stack([xs[ii], ys[jj]])
            tree = cKDTree(np.column_stack([ctx.ix[changed], ctx.iy[changed]]))
            d, _ = tree.query(pts, k=1, distance_upper_bound=params.max_radius)
            mask[jj[np.isfinite(d)], ii[np.isfinite(d)]] = True

    value = parent_raster.value.copy()
    dominant = parent_raster.dominant.copy()
    via = parent_raster.via.copy()
    if mask.any():
        jj, ii = np.nonzero(mask)
        xs, ys = viewport.pixel_centers()
        px = np.ascontiguousarray(xs[ii])
        py = np.ascontiguousarray(ys[jj])
        fid = parent_raster.face_id[jj, ii]
        v, dom_ord, w, _ = eval_pixels(ctx, params, px, py, fid)
        value[jj, ii] = v
        if ctx.poi_ids:
            poi_arr = np.asarray(ctx.poi_ids, np.int32)
            dominant[jj, ii] = np.where(dom_ord >= 0, poi_arr[np.maximum(dom_ord, 0)],
                                        np.int32(-1))
        else:
            dominant[jj, ii] = -1
        via[jj, ii] = w
        bbox = (int(ii.min()), int(jj.min()), int(ii.max()), int(jj.max()))
    else:
        bbox = None

    winner_id = np.full(ctx.n_vertices, -1, np.int32)
    if ctx.poi_ids:
        poi_arr = np.asarray(ctx.poi_ids, np.int32)
        has = ctx.winner_ord >= 0
        winner_id[has] = poi_arr[ctx.winner_ord[has]]
    ras = DensityRaster(
        viewport=viewport, params=params, value=value, dominant=dominant, via=via,
        face_id=parent_raster.face_id.copy(), poi_ids=ctx.poi_ids,
        assign_winner=winner_id, assign_acc=ctx.acc.copy(), times=ctx.times.copy(),
    )
    return ras, bbox


def query_point(sc: Scenario, x: float, y: float, params: FieldParams | None = None) -> dict:
    """Point lookup: per-POI access times and densities at (x, y).

    Densities are exactly field.topo_density_at on this scenario.
    """
    from .field import access_times_at, candidate_intersections, topo_density_at

    params = params or sc.params
    ctx = sc.context()
    p = np.array([float(x), float(y)])
    cand = candidate_intersections(p, sc.faces, sc.net, max_radius=params.max_radius,
                                   kdtree=ctx.kdtree)
    pd = topo_density_at(p, sc.assign, sc.trees, cand, params, ctx=ctx)
    times = access_times_at(p, sc.net.intersection_xy, sc.trees, cand, params.walk_speed)
    per_poi = {}
    for pid in ctx.poi_ids:
        t, via_t = times[pid]
        per_poi[pid] = {
            "access_time": t if np.isfinite(t) else None,
            "density": pd.per_poi[pid],
            "via": pd.via[pid],
        }
    return {
        "point": [float(x), float(y)],
        "dominant": pd.dominant,
        "value": pd.value,
        "per_poi": per_poi,
        "candidates": [int(c) for c in cand],
    }


# --- scenario comparison ---------------------------------------------------


@dataclass(frozen=True)
class DiffSummary:
    changed_intersections: int
    area_share_before: dict
    area_share_after: dict
    mean_density_before: float
    mean_density_after: float
    balance_before: float
    balance_after: float
    changed_bbox: tuple | None

    def to_obj(self) -> dict:
        return {
            "changed_intersections": self.changed_intersections,
            "area_share_before": {str(k): v for k, v in self.area_share_before.items()},
            "area_share_after": {str(k): v for k, v in self.area_share_after.items()},
            "mean_density_before": self.mean_density_before,
            "mean_density_after": self.mean_density_after,
            "balance_before": self.balance_before,
            "balance_after": self.balance_after,
            "changed_bbox": list(self.changed_bbox) if self.changed_bbox else None,
        }


def _area_shares(raster: DensityRaster) -> dict:
    total = raster.dominant.size
    return {int(pid): float(np.count_nonzero(raster.dominant == pid)) / total
            for pid in raster.poi_ids}


def balance_metric(raster: DensityRaster) -> float:
    """Coefficient of variation of per-pixel density; lower = more balanced."""
    v = raster.value
    mean = float(v.mean())
    if mean == 0.0:
        return 0.0
    return float(v.std()) / mean


def diff(a: DensityRaster, b: DensityRaster) -> DiffSummary:
    """Compare two rasters of the same viewport."""
    if a.value.shape != b.value.shape:
        raise ValueError(f"raster shape mismatch: {a.value.shape} vs {b.value.shape}")
    if a.assign_winner.shape[0] != b.assign_winner.shape[0]:
        raise ValueError("rasters come from different networks")
    changed_i = int(np.count_nonzero((a.assign_winner != b.assign_winner)
                                     | (a.assign_acc != b.assign_acc)))
    delta = (a.value != b.value) | (a.dominant != b.dominant)
    if delta.any():
        jj, ii = np.nonzero(delta)
        bbox = (int(ii.min()), int(jj.min()), int(ii.max()), int(jj.max()))
    else:
        bbox = None
    return DiffSummary(
        changed_intersections=changed_i,
        area_share_before=_area_shares(a), area_share_after=_area_shares(b),
        mean_density_before=float(a.value.mean()), mean_density_after=float(b.value.mean()),
        balance_before=balance_metric(a), balance_after=balance_metric(b),
        changed_bbox=bbox,
    )
