#!/usr/bin/env python3
"""Record real service responses into frontend test fixtures.

Drives the HTTP app in-process through the same what-if flow the UI
exercises (place POI low/high, block the express segment, compare), and
writes every response body under frontend/tests/fixtures/ plus an
index.json mapping method+path -> file + ETag. The frontend test suite
replays these, so UI behavior is checked against genuine server output,
including the /diff balance ordering.
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import grid5_raw  # noqa: E402

from topomap.service import create_app  # noqa: E402

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

GRID_Q = "minx=-50&miny=-50&maxx=450&maxy=450&width=64&height=64"


def dataset_doc():
    raw = grid5_raw()
    return {
        "crs": "local-meters",
        "nodes": [[i, float(x), float(y)] for i, (x, y) in enumerate(raw.node_xy)],
        "ways": [[w.way_id, list(w.node_ids), w.oneway, w.default_speed]
                 for w in raw.ways],
        "speed_overrides": [],
        "pois": [[p.poi_id, p.name, p.x, p.y] for p in raw.pois],
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app())
    index = {}

    def record(name, method, path, response):
        fname = name + (".bin" if "octet" in response.headers.get("content-type", "")
                        or "png" in response.headers.get("content-type", "") else ".json")
        (OUT / fname).write_bytes(response.content)
        index[name] = {
            "method": method,
            "path": path,
            "file": fname,
            "status": response.status_code,
            "etag": response.headers.get("etag"),
            "content_type": response.headers.get("content-type"),
        }
        return response

    doc = json.dumps(dataset_doc())
    up = client.post("/datasets", content=doc)
    assert up.status_code == 201, up.text
    handle = up.json()
    record("dataset", "POST", "/datasets", up)
    base = handle["base_scenario"]

    record("scenario_base", "GET", f"/scenarios/{base}",
           client.get(f"/scenarios/{base}"))
    record("network_base", "GET", f"/scenarios/{base}/network",
           client.get(f"/scenarios/{base}/network"))
    record("grid_base", "GET", f"/scenarios/{base}/grid?{GRID_Q}",
           client.get(f"/scenarios/{base}/grid?{GRID_Q}"))
    record("map_base", "GET", f"/scenarios/{base}/map?{GRID_Q}",
           client.get(f"/scenarios/{base}/map?{GRID_Q}"))

    # place a POI in the low-density north-west, then one mid-grid (high)
    low_edit = {"kind": "add_poi", "x": 0.0, "y": 380.0, "name": "low"}
    low = client.post(f"/scenarios/{base}/edits", content=json.dumps(low_edit))
    record("edit_low", "POST", f"/scenarios/{base}/edits", low)
    low_id = low.json()["scenario_id"]
    record("scenario_low", "GET", f"/scenarios/{low_id}",
           client.get(f"/scenarios/{low_id}"))
    record("grid_low", "GET", f"/scenarios/{low_id}/grid?{GRID_Q}",
           client.get(f"/scenarios/{low_id}/grid?{GRID_Q}"))
    record("map_low", "GET", f"/scenarios/{low_id}/map?{GRID_Q}",
           client.get(f"/scenarios/{low_id}/map?{GRID_Q}"))

    high_edit = {"kind": "add_poi", "x": 205.0, "y": 205.0, "name": "high"}
    high = client.post(f"/scenarios/{base}/edits", content=json.dumps(high_edit))
    record("edit_high", "POST", f"/scenarios/{base}/edits", high)
    high_id = high.json()["scenario_id"]
    record("grid_high", "GET", f"/scenarios/{high_id}/grid?{GRID_Q}",
           client.get(f"/scenarios/{high_id}/grid?{GRID_Q}"))

    # block one express segment on the low-POI child (the UI recolor flow)
    net = client.get(f"/scenarios/{low_id}/network").json()
    express = [s["segment_id"] for s in net["segments"]
               if s["speed"] == 120.0][0]
    block_edit = {"kind": "block_segment", "segment_id": express}
    blocked = client.post(f"/scenarios/{low_id}/edits", content=json.dumps(block_edit))
    record("edit_block", "POST", f"/scenarios/{low_id}/edits", blocked)
    blocked_id = blocked.json()["scenario_id"]
    record("grid_blocked", "GET", f"/scenarios/{blocked_id}/grid?{GRID_Q}",
           client.get(f"/scenarios/{blocked_id}/grid?{GRID_Q}"))
    record("map_blocked", "GET", f"/scenarios/{blocked_id}/map?{GRID_Q}",
           client.get(f"/scenarios/{blocked_id}/map?{GRID_Q}"))

    record("diff_low", "GET", f"/scenarios/{base}/diff/{low_id}",
           client.get(f"/scenarios/{base}/diff/{low_id}"))
    record("diff_high", "GET", f"/scenarios/{base}/diff/{high_id}",
           client.get(f"/scenarios/{base}/diff/{high_id}"))

    record("query_mid", "GET", f"/scenarios/{low_id}/query?x=60.0&y=340.0",
           client.get(f"/scenarios/{low_id}/query", params={"x": 60.0, "y": 340.0}))
    record("scenarios_list", "GET", "/scenarios", client.get("/scenarios"))

    meta = {
        "base": base, "low": low_id, "high": high_id, "blocked": blocked_id,
        "grid_query": GRID_Q, "express_segment": express,
        "bbox": handle["bbox"],
    }
    (OUT / "index.json").write_text(json.dumps({"responses": index, "meta": meta},
                                               indent=1))
    print(f"wrote {len(index)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
