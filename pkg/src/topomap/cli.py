"""Command-line driver.

Exit codes: 0 success, 2 usage/validation problems, 3 runtime errors.
``TOPOMAP_THREADS`` caps rasterizer worker threads.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import render
from .errors import TopomapError
from .field import AGGREGATES, KERNELS, MODES, FieldParams, Viewport, rasterize
from .geodata import parse_dataset, project
from .osm_import import osm_to_dataset
from .scenario import build_base, query_point


def _add_param_flags(p: argparse.ArgumentParser):
    p.add_argument("--kernel", choices=KERNELS, default="gaussian")
    p.add_argument("--bandwidth", type=float, default=300.0, help="meters")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--walk-speed", type=float, default=1.4, help="m/s")
    p.add_argument("--mode", choices=MODES, default="amplitude-decay")
    p.add_argument("--aggregate", choices=AGGREGATES, default="max")
    p.add_argument("--cutoff-multiple", type=float, default=3.0)
    p.add_argument("--acc-bandwidth", type=float, default=0.003)


def _params(args) -> FieldParams:
    return FieldParams(kernel=args.kernel, bandwidth=args.bandwidth, alpha=args.alpha,
                       walk_speed=args.walk_speed, mode=args.mode,
                       aggregate=args.aggregate, cutoff_multiple=args.cutoff_multiple,
                       acc_bandwidth=args.acc_bandwidth)


def _add_viewport_flags(p: argparse.ArgumentParser):
    p.add_argument("--bbox", help="minx,miny,maxx,maxy in dataset meters (default: data bbox)")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=384)


def _load_scenario(path: str, period: str | None, params: FieldParams):
    text = Path(path).read_text()
    raw = parse_dataset(text)
    if raw.crs == "wgs84-degrees":
        raw = project(raw)
    return build_base(Path(path).stem, raw, period, params, "cli")


def _viewport(args, sc) -> Viewport:
    if args.bbox:
        parts = [float(v) for v in args.bbox.split(",")]
        if len(parts) != 4:
            raise ValueError("--bbox needs 4 comma-separated numbers")
        minx, miny, maxx, maxy = parts
    else:
        b = sc.net.bbox()
        pad = 0.05 * max(b[2] - b[0], b[3] - b[1], 1.0)
        minx, miny, maxx, maxy = b[0] - pad, b[1] - pad, b[2] + pad, b[3] + pad
    return Viewport.from_bbox(minx, miny, maxx, maxy, args.width, args.height)


def cmd_ingest(args) -> int:
    text = Path(args.input).read_text()
    if args.from_osm:
        doc = osm_to_dataset(text)
        text = json.dumps(doc)
    raw = parse_dataset(text)
    projected = False
    if raw.crs == "wgs84-degrees":
        raw = project(raw)
        projected = True
    net_preview = _load_scenario_text(text, args.period)
    print(f"nodes: {raw.node_xy.shape[0]}  ways: {len(raw.ways)}  pois: {len(raw.pois)}"
          f"  intersections: {net_preview.n_intersections}"
          f"  segments: {len(net_preview.segments)}"
          + ("  (projected to local meters)" if projected else ""))
    if args.out:
        doc = {
            "crs": "local-meters",
            "nodes": [[i, float(x), float(y)] for i, (x, y) in enumerate(raw.node_xy)],
            "ways": [[w.way_id, list(w.node_ids), w.oneway, w.default_speed]
                     for w in raw.ways],
            "speed_overrides": [[o.way_id, o.segment_index, o.period, o.speed]
                                for o in raw.overrides],
            "pois": [[p.poi_id, p.name, p.x, p.y] for p in raw.pois],
        }
        Path(args.out).write_text(json.dumps(doc, indent=1))
        print(f"wrote {args.out}")
    return 0


def _load_scenario_text(text: str, period: str | None):
    from .geodata import segment_roads

    raw = parse_dataset(text)
    if raw.crs == "wgs84-degrees":
        raw = project(raw)
    return segment_roads(raw, period)


def cmd_render(args) -> int:
    sc = _load_scenario(args.dataset, args.period, _params(args))
    vp = _viewport(args, sc)
    png = render.compose_map(sc, vp, _params(args), workers=args.workers)
    Path(args.out).write_bytes(png)
    print(f"wrote {args.out} ({vp.width}x{vp.height})")
    return 0


def cmd_sweep(args) -> int:
    kernels = [k.strip() for k in args.kernels.split(",") if k.strip()]
    bandwidths = [float(b) for b in args.bandwidths.split(",") if b.strip()]
    if not kernels or not bandwidths:
        raise ValueError("--kernels and --bandwidths must be nonempty")
    for k in kernels:
        if k not in KERNELS:
            raise ValueError(f"unknown kernel {k!r}")
    sc = _load_scenario(args.dataset, args.period, _params(args))
    if args.tile_size:
        tw, th = (int(v) for v in args.tile_size.lower().split("x"))
        args.width, args.height = tw, th
    vp = _viewport(args, sc)
    img = render.render_sweep(sc.context(), vp, _params(args), kernels, bandwidths,
                              workers=args.workers)
    Path(args.out).write_bytes(render.png_bytes(img))
    print(f"wrote {args.out} ({len(kernels)}x{len(bandwidths)} tiles)")
    return 0


def cmd_bench(args) -> int:
    sizes = []
    for token in args.sizes.split(","):
        w, h = token.lower().split("x")
        sizes.append((int(w), int(h)))
    poi_counts = [int(v) for v in args.pois.split(",")]
    methods = [m.strip() for m in args.methods.split(",")]
    rows = bench_mod.run_bench(sizes, poi_counts, methods, repeats=args.repeats,
                               seed=args.seed, params=_params(args), workers=args.workers)
    csv = bench_mod.rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_query(args) -> int:
    sc = _load_scenario(args.dataset, args.period, _params(args))
    result = query_point(sc, args.x, args.y, _params(args))
    print(json.dumps(result, indent=1, default=str))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(port=args.port, data_dir=args.data_dir, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topomap",
                                 description="Road-network-aware density maps")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate/convert a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--from-osm", action="store_true", help="input is an OSM XML extract")
    p.add_argument("--validate", action="store_true", help="parse and report only")
    p.add_argument("--period", default=None)
    p.add_argument("--out", default=None, help="write normalized local-meters dataset")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("render", help="render a map PNG")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--period", default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_viewport_flags(p)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("sweep", help="kernel x bandwidth montage")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kernels", default="gaussian,sigmoid")
    p.add_argument("--bandwidths", default="100,200,300,400,500")
    p.add_argument("--tile-size", default=None, help="WxH per tile")
    p.add_argument("--period", default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_viewport_flags(p)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("bench", help="topology vs planar benchmark CSV")
    p.add_argument("--sizes", default="640x400,1280x800,1920x1200")
    p.add_argument("--pois", default="10,50,100")
    p.add_argument("--methods", default="topology,planar")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("query", help="point lookup")
    p.add_argument("dataset")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--period", default=None)
    _add_param_flags(p)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=None)
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (TopomapError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - runtime failures get a distinct code
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
