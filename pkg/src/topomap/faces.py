"""Planar subdivision induced by road segments.

Faces are traced over half-edges (two per segment, regardless of travel
direction): from an arrival at a vertex, the next half-edge is the outgoing
one found first when rotating clockwise from the back-direction, which walks
every bounded face counter-clockwise. Cycles with positive signed area are
bounded faces; everything else belongs to the outer region.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import PlanarityError
from .geodata import SegmentedNetwork


@dataclass(frozen=True)
class Face:
    face_id: int
    vertices: np.ndarray  # unique boundary intersection ids, cycle order, int32
    ring: np.ndarray  # (k, 2) float64 boundary polygon (open, follows geometry)
    area: float


@dataclass(frozen=True)
class FaceSet:
    faces: tuple[Face, ...]
    _locate_order: np.ndarray  # face indices by ascending area (nested faces first)

    def candidates(self, face_id: int) -> np.ndarray:
        return self.faces[face_id].vertices

    def locate(self, pts: np.ndarray) -> np.ndarray:
        """Face id per point, -1 for the outer region. pts is (n, 2).

        Nested faces resolve to the smallest containing face (area order,
        face id breaking exact ties), matching locate_grid.
        """
        pts = np.atleast_2d(np.asarray(pts, float))
        out = np.full(pts.shape[0], -1, np.int32)
        for fi in self._locate_order:
            face = self.faces[fi]
            open_idx = np.nonzero(out == -1)[0]
            if open_idx.size == 0:
                break
            p = pts[open_idx]
            bb = face.ring
            inside_bb = ((p[:, 0] >= bb[:, 0].min()) & (p[:, 0] <= bb[:, 0].max())
                         & (p[:, 1] >= bb[:, 1].min()) & (p[:, 1] <= bb[:, 1].max()))
            cand = open_idx[inside_bb]
            if cand.size == 0:
                continue
            hit = _ray_cast(pts[cand], face.ring)
            out[cand[hit]] = face.face_id
        return out

    def locate_grid(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """locate() for a raster of pixel centers, windowed per face.

        xs and ys must be ascending; returns (len(ys), len(xs)) int32 with
        exactly the values locate() would give each center.
        """
        H, W = ys.shape[0], xs.shape[0]
        out = np.full((H, W), -1, np.int32)
        # overwrite from largest to smallest so the smallest containing face
        # wins, as in locate()
        for fi in self._locate_order[::-1]:
            face = self.faces[fi]
            ring = face.ring
            i0 = int(np.searchsorted(xs, ring[:, 0].min(), "left"))
            i1 = int(np.searchsorted(xs, ring[:, 0].max(), "right"))
            j0 = int(np.searchsorted(ys, ring[:, 1].min(), "left"))
            j1 = int(np.searchsorted(ys, ring[:, 1].max(), "right"))
            if i1 <= i0 or j1 <= j0:
                continue
            gx, gy = np.meshgrid(xs[i0:i1], ys[j0:j1])
            hit = _ray_cast(np.column_stack([gx.ravel(), gy.ravel()]), ring)
            window = out[j0:j1, i0:i1]
            window[hit.reshape(window.shape)] = face.face_id
        return out


def _ray_cast(p: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over points."""
    x, y = p[:, 0][:, None], p[:, 1][:, None]
    x1, y1 = ring[:, 0][None, :], ring[:, 1][None, :]
    x2 = np.roll(ring[:, 0], -1)[None, :]
    y2 = np.roll(ring[:, 1], -1)[None, :]
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = (x2 - x1) * (y - y1) / (y2 - y1) + x1
    crossing = straddle & (x < xi)
    return crossing.sum(axis=1) % 2 == 1


def _sub_edges(net: SegmentedNetwork):
    segs, p1, p2 = [], [], []
    for s in net.segments:
        g = s.geometry
        for i in range(g.shape[0] - 1):
            segs.append(s.segment_id)
            p1.append(g[i])
            p2.append(g[i + 1])
    return np.asarray(segs, np.int32), np.asarray(p1, float), np.asarray(p2, float)


def _validate_planarity(net: SegmentedNetwork):
    seg_id, a, b = _sub_edges(net)
    n = seg_id.shape[0]
    if n < 2:
        return
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    ii, jj = np.triu_indices(n, k=1)
    # bounding boxes must overlap for any contact
    ok = ((lo[ii, 0] <= hi[jj, 0]) & (lo[jj, 0] <= hi[ii, 0])
          & (lo[ii, 1] <= hi[jj, 1]) & (lo[jj, 1] <= hi[ii, 1]))
    # consecutive sub-edges of one segment legitimately share a point
    same_seg = seg_id[ii] == seg_id[jj]
    adjacent = same_seg & (jj == ii + 1)
    ok &= ~adjacent
    ii, jj = ii[ok], jj[ok]
    if ii.size == 0:
        return

    def cross(o, p, q):
        return (p[:, 0] - o[:, 0]) * (q[:, 1] - o[:, 1]) - (p[:, 1] - o[:, 1]) * (q[:, 0] - o[:, 0])

    p1, p2, p3, p4 = a[ii], b[ii], a[jj], b[jj]
    d1 = cross(p3, p4, p1)
    d2 = cross(p3, p4, p2)
    d3 = cross(p1, p2, p3)
    d4 = cross(p1, p2, p4)
    proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) & (d1 != 0) & (d2 != 0)

    def on_seg(o, p, q):
        # q collinear with o-p and within its bbox
        return ((np.minimum(o[:, 0], p[:, 0]) <= q[:, 0]) & (q[:, 0] <= np.maximum(o[:, 0], p[:, 0]))
                & (np.minimum(o[:, 1], p[:, 1]) <= q[:, 1]) & (q[:, 1] <= np.maximum(o[:, 1], p[:, 1])))

    shared_end = ((p1 == p3).all(axis=1) | (p1 == p4).all(axis=1)
                  | (p2 == p3).all(axis=1) | (p2 == p4).all(axis=1))
    touch = (((d1 == 0) & on_seg(p3, p4, p1)) | ((d2 == 0) & on_seg(p3, p4, p2))
             | ((d3 == 0) & on_seg(p1, p2, p3)) | ((d4 == 0) & on_seg(p1, p2, p4)))
    bad = proper | (touch & ~shared_end)
    if bad.any():
        k = int(np.nonzero(bad)[0][0])
        raise PlanarityError(int(seg_id[ii[k]]), int(seg_id[jj[k]]))


def extract_faces(net: SegmentedNetwork) -> FaceSet:
    """Trace the planar subdivision; raises PlanarityError on crossing input."""
    _validate_planarity(net)
    segs = net.segments
    n_he = 2 * len(segs)
    origin = np.zeros(n_he, np.int32)
    leave_angle = np.zeros(n_he)
    for s in segs:
        g = s.geometry
        f, bck = 2 * s.segment_id, 2 * s.segment_id + 1
        origin[f] = s.from_node
        origin[bck] = s.to_node
        leave_angle[f] = math.atan2(g[1, 1] - g[0, 1], g[1, 0] - g[0, 0])
        leave_angle[bck] = math.atan2(g[-2, 1] - g[-1, 1], g[-2, 0] - g[-1, 0])

    # per-vertex outgoing half-edges sorted by angle (he id breaks exact ties)
    by_vertex: dict[int, list[tuple[float, int]]] = {}
    for he in range(n_he):
        by_vertex.setdefault(int(origin[he]), []).append((float(leave_angle[he]), he))
    for v in by_vertex:
        by_vertex[v].sort()

    nxt = np.full(n_he, -1, np.int64)
    for he in range(n_he):
        twin = he ^ 1
        v = int(origin[twin])  # vertex this half-edge arrives at
        entries = by_vertex[v]
        angles = [e[0] for e in entries]
        back = float(leave_angle[twin])
        k = bisect.bisect_left(angles, back) - 1  # largest angle strictly below back
        nxt[he] = entries[k][1] if k >= 0 else entries[-1][1]

    visited = np.zeros(n_he, bool)
    faces = []
    for start in range(n_he):
        if visited[start]:
            continue
        cycle = []
        he = start
        while not visited[he]:
            visited[he] = True
            cycle.append(he)
            he = int(nxt[he])
        ring_pts = []
        verts = []
        seen = set()
        for he in cycle:
            s = segs[he // 2]
            g = s.geometry if he % 2 == 0 else s.geometry[::-1]
            ring_pts.append(g[:-1])
            v = int(origin[he])
            if v not in seen:
                seen.add(v)
                verts.append(v)
        ring = np.vstack(ring_pts)
        x, y = ring[:, 0], ring[:, 1]
        area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        if area > 0.0:
            faces.append(Face(face_id=len(faces), vertices=np.asarray(verts, np.int32),
                              ring=ring, area=area))
    order = np.argsort([f.area for f in faces], kind="stable")
    return FaceSet(faces=tuple(faces), _locate_order=np.asarray(order, np.int64))
