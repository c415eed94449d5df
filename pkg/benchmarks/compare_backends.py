#!/usr/bin/env python3
"""Compare the compiled density kernel against the numpy fallback.

Spawns one subprocess per backend (the choice is fixed at import time via
TOPOMAP_BACKEND) and prints a table of rasterization times on the synthetic
benchmark scene.

Usage: python benchmarks/compare_backends.py [--sizes 640x400,1280x800] [--pois 10,100]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER_SNIPPET = """
import json, sys, time
from topomap import accel
from topomap.bench import synthetic_scenario, scene_viewport
from topomap.field import rasterize

sizes = json.loads(sys.argv[1])
poi_counts = json.loads(sys.argv[2])
repeats = int(sys.argv[3])
rows = []
for n in poi_counts:
    sc = synthetic_scenario(n)
    ctx = sc.context()
    for (w, h) in sizes:
        vp = scene_viewport(sc, w, h)
        rasterize(ctx, vp, sc.params)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            rasterize(ctx, vp, sc.params)
            times.append((time.perf_counter() - t0) * 1000)
        rows.append({"backend": accel.BACKEND, "width": w, "height": h,
                     "pois": n, "ms": sorted(times)[len(times) // 2]})
print(json.dumps(rows))
"""


def run_backend(backend, sizes, pois, repeats):
    env = {**os.environ, "TOPOMAP_BACKEND": backend}
    out = subprocess.run(
        [sys.executable, "-c", WORKER_SNIPPET, json.dumps(sizes), json.dumps(pois),
         str(repeats)],
        env=env, capture_output=True, text=True)
    if out.returncode != 0:
        raise SystemExit(f"{backend} run failed:\n{out.stderr}")
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="640x400,1280x800")
    ap.add_argument("--pois", default="10,100")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    sizes = [[int(v) for v in s.split("x")] for s in args.sizes.split(",")]
    pois = [int(v) for v in args.pois.split(",")]

    results = {}
    for backend in ("cext", "numpy"):
        try:
            results[backend] = {(r["width"], r["height"], r["pois"]): r["ms"]
                                for r in run_backend(backend, sizes, pois, args.repeats)}
        except SystemExit as e:
            print(f"skipping {backend}: {e}", file=sys.stderr)

    print(f"{'size':>12} {'pois':>5} {'cext ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for (w, h) in sizes:
        for n in pois:
            key = (w, h, n)
            c = results.get("cext", {}).get(key)
            p = results.get("numpy", {}).get(key)
            ratio = f"{p / c:8.2f}" if c and p else "     n/a"
            print(f"{w:>7}x{h:<4} {n:>5} {c if c else float('nan'):>10.1f} "
                  f"{p if p else float('nan'):>10.1f} {ratio}")


if __name__ == "__main__":
    main()
