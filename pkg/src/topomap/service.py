"""HTTP interface: dataset ingestion, map/grid rendering, point queries,
scenario edits, and scenario comparison.

All served state is immutable scenario snapshots; scenario creation is
serialized by the store while readers run concurrently. Renders run behind a
bounded semaphore. With ``data_dir`` set, each dataset persists as its
original file plus an append-only edit log, replayed on startup.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import grid_io, render
from .errors import DatasetError, ScenarioError, TopomapError, ViewportError
from .field import FieldParams, Viewport, rasterize
from .geodata import parse_dataset, project
from .scenario import (Edit, Scenario, ScenarioStore, diff, edit_log_line,
                       params_from_obj, params_to_obj, query_point,
                       replay_edit_log)

MAX_BODY_BYTES = 64 * 1024 * 1024
MAX_RASTER_PIXELS = 16_000_000
MAX_CONCURRENT_RENDERS = 32


@dataclass
class DatasetRecord:
    dataset_id: str
    name: str
    base_scenario: str
    period: str | None
    intersections: int
    segments: int
    pois: int
    bbox: tuple

    def to_obj(self):
        return {
            "dataset_id": self.dataset_id, "name": self.name,
            "base_scenario": self.base_scenario, "period": self.period,
            "intersections": self.intersections, "segments": self.segments,
            "pois": self.pois, "bbox": list(self.bbox),
        }


class ServerState:
    def __init__(self, data_dir: str | None = None):
        self.store = ScenarioStore()
        self.datasets: dict[str, DatasetRecord] = {}
        self.render_slots = threading.Semaphore(MAX_CONCURRENT_RENDERS)
        self.lock = threading.RLock()
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._replay()

    def _next_dataset_id(self) -> str:
        n = len(self.datasets)
        while f"d{n}" in self.datasets:
            n += 1
        return f"d{n}"

    def ingest(self, text: str, name: str | None, period: str | None,
               dataset_id: str | None = None, base_id: str | None = None,
               persist: bool = True) -> DatasetRecord:
        raw = parse_dataset(text)
        if raw.crs == "wgs84-degrees":
            raw = project(raw)
        with self.lock:
            did = dataset_id or self._next_dataset_id()
            base = self.store.add_base(did, raw, period, FieldParams(), scenario_id=base_id)
            rec = DatasetRecord(
                dataset_id=did, name=name or did, base_scenario=base.scenario_id,
                period=period, intersections=base.net.n_intersections,
                segments=len(base.net.segments), pois=len(base.pois),
                bbox=base.net.bbox(),
            )
            self.datasets[did] = rec
            if persist and self.data_dir:
                (self.data_dir / f"{did}.dataset.json").write_text(text)
                meta = {"dataset_id": did, "name": rec.name, "period": period,
                        "base_scenario": base.scenario_id}
                (self.data_dir / f"{did}.meta.json").write_text(json.dumps(meta))
                (self.data_dir / f"{did}.edits.jsonl").touch()
            return rec

    def apply_edit(self, parent_id: str, edit: Edit) -> Scenario:
        with self.lock:
            child = self.store.create_child(parent_id, edit)
            if self.data_dir:
                did = child.dataset_id
                path = self.data_dir / f"{did}.edits.jsonl"
                with path.open("a") as f:
                    f.write(edit_log_line(child) + "\n")
            return child

    def _replay(self):
        metas = sorted(self.data_dir.glob("*.meta.json"))
        for meta_path in metas:
            meta = json.loads(meta_path.read_text())
            did = meta["dataset_id"]
            text = (self.data_dir / f"{did}.dataset.json").read_text()
            self.ingest(text, meta.get("name"), meta.get("period"), dataset_id=did,
                        base_id=meta["base_scenario"], persist=False)
            log = self.data_dir / f"{did}.edits.jsonl"
            if log.exists():
                replay_edit_log(self.store, log.read_text().splitlines())


def _scenario_meta(sc: Scenario) -> dict:
    return {
        "scenario_id": sc.scenario_id, "dataset_id": sc.dataset_id,
        "parent": sc.parent_id, "depth": sc.depth,
        "edit": sc.edit.to_obj() if sc.edit else None,
        "params": params_to_obj(sc.params),
        "pois": [{"poi_id": p.poi_id, "name": p.name, "x": p.x, "y": p.y}
                 for p in sc.pois],
    }


def _params_from_query(sc: Scenario, q: dict) -> FieldParams:
    obj = params_to_obj(sc.params)
    for k in list(obj):
        if q.get(k) is not None:
            obj[k] = q[k]
    for num in ("bandwidth", "alpha", "walk_speed", "cutoff_multiple", "acc_bandwidth"):
        obj[num] = float(obj[num])
    return params_from_obj(obj)


def _viewport_from_query(sc: Scenario, minx, miny, maxx, maxy, width, height) -> Viewport:
    b = sc.net.bbox()
    pad = 0.05 * max(b[2] - b[0], b[3] - b[1], 1.0)
    if minx is None:
        minx = b[0] - pad
    if miny is None:
        miny = b[1] - pad
    if maxx is None:
        maxx = b[2] + pad
    if maxy is None:
        maxy = b[3] + pad
    if width * height > MAX_RASTER_PIXELS:
        raise ViewportError(f"raster {width}x{height} exceeds {MAX_RASTER_PIXELS} pixels")
    return Viewport.from_bbox(float(minx), float(miny), float(maxx), float(maxy),
                              int(width), int(height))


def _default_diff_viewport(sc: Scenario) -> Viewport:
    b = sc.net.bbox()
    pad = 0.05 * max(b[2] - b[0], b[3] - b[1], 1.0)
    w = 256
    aspect = (b[3] - b[1] + 2 * pad) / (b[2] - b[0] + 2 * pad)
    h = max(1, int(round(w * aspect)))
    return Viewport.from_bbox(b[0] - pad, b[1] - pad, b[2] + pad, b[3] + pad, w, h)


def _etag(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x00")
    return '"' + h.hexdigest()[:32] + '"'


def create_app(data_dir: str | None = None, cors_origin: str = "*") -> FastAPI:
    app = FastAPI(title="topomap", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=[cors_origin], allow_methods=["*"],
        allow_headers=["*"],
    )
    state = ServerState(data_dir)
    app.state.topomap = state

    @app.exception_handler(TopomapError)
    async def _topomap_error(request, exc):
        code = 400 if isinstance(exc, DatasetError) else 422
        return JSONResponse(status_code=code, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    def get_scenario(scenario_id: str) -> Scenario | None:
        try:
            return state.store.get(scenario_id)
        except KeyError:
            return None

    @app.post("/datasets", status_code=201)
    async def post_dataset(request: Request, name: str | None = None,
                           period: str | None = None):
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return JSONResponse(status_code=413,
                                content={"error": f"body exceeds {MAX_BODY_BYTES} bytes"})
        try:
            text = body.decode("utf-8")
            rec = state.ingest(text, name, period)
        except (DatasetError, UnicodeDecodeError) as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        return rec.to_obj()

    @app.get("/datasets")
    def list_datasets():
        return [r.to_obj() for r in state.datasets.values()]

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        rec = state.datasets.get(dataset_id)
        if rec is None:
            return JSONResponse(status_code=404, content={"error": "unknown dataset"})
        return rec.to_obj()

    @app.get("/scenarios")
    def list_scenarios():
        return [_scenario_meta(state.store.get(sid)) for sid in state.store.ids()]

    @app.get("/scenarios/{scenario_id}")
    def get_scenario_meta(scenario_id: str):
        sc = get_scenario(scenario_id)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        return _scenario_meta(sc)

    @app.get("/scenarios/{scenario_id}/network")
    def get_network(scenario_id: str):
        sc = get_scenario(scenario_id)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        present = set(int(s) for s in np.unique(sc.graph.arc_seg))
        return {
            "intersections": [[i, float(x), float(y)]
                              for i, (x, y) in enumerate(sc.net.intersection_xy)],
            "segments": [{
                "segment_id": s.segment_id, "from": s.from_node, "to": s.to_node,
                "geometry": [[float(x), float(y)] for x, y in s.geometry],
                "length": s.length, "speed": s.speed, "oneway": s.oneway,
                "blocked": s.segment_id not in present,
            } for s in sc.net.segments],
            "pois": [{"poi_id": p.poi_id, "name": p.name, "x": p.x, "y": p.y}
                     for p in sc.pois],
            "bbox": list(sc.net.bbox()),
        }

    def _render_query(scenario_id, minx, miny, maxx, maxy, width, height,
                      kernel, bandwidth, mode, aggregate, alpha, walk_speed,
                      cutoff_multiple, acc_bandwidth):
        sc = get_scenario(scenario_id)
        if sc is None:
            return None, None, None
        params = _params_from_query(sc, {
            "kernel": kernel, "bandwidth": bandwidth, "mode": mode,
            "aggregate": aggregate, "alpha": alpha, "walk_speed": walk_speed,
            "cutoff_multiple": cutoff_multiple, "acc_bandwidth": acc_bandwidth,
        })
        vp = _viewport_from_query(sc, minx, miny, maxx, maxy, width, height)
        return sc, params, vp

    @app.get("/scenarios/{scenario_id}/map")
    def get_map(scenario_id: str, request: Request,
                minx: float | None = None, miny: float | None = None,
                maxx: float | None = None, maxy: float | None = None,
                width: int = 512, height: int = 384,
                kernel: str | None = None, bandwidth: float | None = None,
                mode: str | None = None, aggregate: str | None = None,
                alpha: float | None = None, walk_speed: float | None = None,
                cutoff_multiple: float | None = None, acc_bandwidth: float | None = None):
        sc, params, vp = _render_query(scenario_id, minx, miny, maxx, maxy, width,
                                       height, kernel, bandwidth, mode, aggregate,
                                       alpha, walk_speed, cutoff_multiple, acc_bandwidth)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        etag = _etag("map", scenario_id, vp, params)
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304)
        with state.render_slots:
            png = render.compose_map(sc, vp, params)
        return Response(content=png, media_type="image/png", headers={"ETag": etag})

    @app.get("/scenarios/{scenario_id}/grid")
    def get_grid(scenario_id: str, request: Request,
                 minx: float | None = None, miny: float | None = None,
                 maxx: float | None = None, maxy: float | None = None,
                 width: int = 512, height: int = 384,
                 kernel: str | None = None, bandwidth: float | None = None,
                 mode: str | None = None, aggregate: str | None = None,
                 alpha: float | None = None, walk_speed: float | None = None,
                 cutoff_multiple: float | None = None, acc_bandwidth: float | None = None):
        sc, params, vp = _render_query(scenario_id, minx, miny, maxx, maxy, width,
                                       height, kernel, bandwidth, mode, aggregate,
                                       alpha, walk_speed, cutoff_multiple, acc_bandwidth)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        etag = _etag("grid", scenario_id, vp, params)
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304)
        with state.render_slots:
            ras = rasterize(sc.context(), vp, params)
            payload = grid_io.encode_grid(ras)
        return Response(content=payload, media_type="application/octet-stream",
                        headers={"ETag": etag})

    @app.post("/scenarios/{scenario_id}/edits", status_code=201)
    async def post_edit(scenario_id: str, request: Request):
        sc = get_scenario(scenario_id)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        try:
            obj = json.loads(await request.body())
            edit = Edit.from_obj(obj)
            child = state.apply_edit(scenario_id, edit)
        except (json.JSONDecodeError, ScenarioError) as e:
            return JSONResponse(status_code=422, content={"error": str(e)})
        return _scenario_meta(child)

    @app.get("/scenarios/{scenario_id}/query")
    def get_query(scenario_id: str, x: float, y: float):
        sc = get_scenario(scenario_id)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        result = query_point(sc, x, y)
        per = {str(pid): {
            "access_time": v["access_time"], "density": v["density"], "via": v["via"],
        } for pid, v in result["per_poi"].items()}
        return {"point": result["point"], "dominant": result["dominant"],
                "value": result["value"], "per_poi": per,
                "candidates": result["candidates"]}

    @app.get("/scenarios/{scenario_id}/assignments")
    def get_assignments(scenario_id: str):
        sc = get_scenario(scenario_id)
        if sc is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        rows = []
        for i, (x, y) in enumerate(sc.net.intersection_xy):
            w = int(sc.assign.winner[i])
            t = float(sc.assign.best_time[i])
            rows.append({
                "intersection": i, "x": float(x), "y": float(y),
                "winner": w if w >= 0 else None,
                "best_time": t if math.isfinite(t) else None,
                "accessibility": float(sc.assign.accessibility[i]),
            })
        return {"assignments": rows}

    @app.get("/scenarios/{a}/diff/{b}")
    def get_diff(a: str, b: str):
        sa, sb = get_scenario(a), get_scenario(b)
        if sa is None or sb is None:
            return JSONResponse(status_code=404, content={"error": "unknown scenario"})
        if sa.dataset_id != sb.dataset_id:
            return JSONResponse(status_code=409,
                                content={"error": "scenarios belong to different datasets"})
        vp = _default_diff_viewport(sa)
        with state.render_slots:
            ra = rasterize(sa.context(), vp, sa.params)
            rb = rasterize(sb.context(), vp, sa.params)
        return diff(ra, rb).to_obj()

    return app


def serve(port: int = 8000, data_dir: str | None = None, host: str = "127.0.0.1"):
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")
