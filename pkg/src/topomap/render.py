"""Map rendering: density colorization, tapered road strokes, NKDE line
widths, parameter-sweep montages, and final PNG composition.

Strokes are rasterized at 4x supersampling and box-downsampled, with no
system font or GPU dependency, so output bytes are deterministic for fixed
inputs.
"""

from __future__ import annotations

import colorsys
import io
import math
from dataclasses import dataclass

import numpy as np

from . import fonts
from .field import DensityRaster, FieldParams, Viewport, rasterize

SS = 4  # supersample factor for stroke rasterization

_GRAY = (120, 120, 120)


def _hue_wheel(n=12):
    cols = []
    for i in range(n):
        r, g, b = colorsys.hsv_to_rgb((i * 0.618033988749895) % 1.0, 0.72, 0.86)
        cols.append((int(round(r * 255)), int(round(g * 255)), int(round(b * 255))))
    return tuple(cols)


@dataclass(frozen=True)
class Palette:
    poi_rgb: tuple = _hue_wheel()
    background: tuple = (252, 252, 250, 255)

    def color(self, ordinal: int):
        if ordinal < 0:
            return _GRAY
        return self.poi_rgb[ordinal % len(self.poi_rgb)]


DEFAULT_PALETTE = Palette()


@dataclass(frozen=True)
class TaperStyle:
    w_max: float = 6.0
    w_min: float = 1.0

    def __post_init__(self):
        if not self.w_max > self.w_min >= 1:
            raise ValueError("taper widths must satisfy w_max > w_min >= 1")


def colorize(raster: DensityRaster, palette: Palette = DEFAULT_PALETTE) -> np.ndarray:
    """Density layer as an (H, W, 4) uint8 RGBA image, top row first.

    Hue encodes the dominant POI; alpha is the per-image max-normalized
    density. Pixels with no dominant POI stay fully transparent.
    """
    H, W = raster.value.shape
    img = np.zeros((H, W, 4), np.uint8)
    value = raster.value[::-1]
    dom = raster.dominant[::-1]
    vmax = float(raster.value.max())
    if vmax <= 0:
        return img
    alpha = np.rint(255.0 * np.clip(value / vmax, 0.0, 1.0)).astype(np.uint8)
    alpha[(dom < 0) | (value <= 0)] = 0
    for o, pid in enumerate(raster.poi_ids):
        sel = (dom == pid) & (alpha > 0)
        img[sel] = (*palette.color(o), 0)
    img[..., 3] = alpha
    return img


def world_to_img(viewport: Viewport, pts: np.ndarray) -> np.ndarray:
    """Dataset meters -> image pixel coordinates (x right, y down)."""
    pts = np.atleast_2d(pts)
    x = (pts[:, 0] - viewport.origin_x) / viewport.scale
    y = viewport.height - (pts[:, 1] - viewport.origin_y) / viewport.scale
    return np.column_stack([x, y])


def _draw_capsule(buf, a, b, wa, wb, rgba):
    """Overwrite pixels within the linearly tapered stroke from a to b."""
    Hs, Ws = buf.shape[:2]
    pad = max(wa, wb) / 2.0 + 1.0
    x0 = max(int(math.floor(min(a[0], b[0]) - pad)), 0)
    x1 = min(int(math.ceil(max(a[0], b[0]) + pad)), Ws - 1)
    y0 = max(int(math.floor(min(a[1], b[1]) - pad)), 0)
    y1 = min(int(math.ceil(max(a[1], b[1]) + pad)), Hs - 1)
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    px = xs + 0.5
    py = ys + 0.5
    vx, vy = b[0] - a[0], b[1] - a[1]
    L2 = vx * vx + vy * vy
    if L2 == 0:
        t = np.zeros(px.shape)
    else:
        t = np.clip(((px - a[0]) * vx + (py - a[1]) * vy) / L2, 0.0, 1.0)
    qx = a[0] + t * vx
    qy = a[1] + t * vy
    dist = np.sqrt((px - qx) ** 2 + (py - qy) ** 2)
    w = wa + (wb - wa) * t
    mask = dist <= w / 2.0
    buf[y0:y1 + 1, x0:x1 + 1][mask] = rgba


def _draw_disc(buf, c, radius, rgba):
    _draw_capsule(buf, c, c, 2 * radius, 2 * radius, rgba)


def _polyline_params(pts_img):
    """Cumulative arc-length parameter t in [0, 1] per polyline point."""
    d = np.sqrt(np.sum(np.diff(pts_img, axis=0) ** 2, axis=1))
    total = float(d.sum())
    if total == 0:
        return np.linspace(0, 1, pts_img.shape[0])
    return np.concatenate([[0.0], np.cumsum(d) / total])


def _stroke_polyline(buf, pts_ss, w_start, w_end, rgba, offset=0.0):
    t = _polyline_params(pts_ss)
    widths = w_start + (w_end - w_start) * t
    for i in range(pts_ss.shape[0] - 1):
        a, b = pts_ss[i], pts_ss[i + 1]
        if offset != 0.0:
            vx, vy = b[0] - a[0], b[1] - a[1]
            L = math.hypot(vx, vy)
            if L > 0:
                nx, ny = -vy / L, vx / L
                a = (a[0] + nx * offset, a[1] + ny * offset)
                b = (b[0] + nx * offset, b[1] + ny * offset)
        _draw_capsule(buf, a, b, widths[i], widths[i + 1], rgba)


def _downsample(buf_ss):
    H = buf_ss.shape[0] // SS
    W = buf_ss.shape[1] // SS
    return buf_ss.reshape(H, SS, W, SS, 4).mean(axis=(1, 3))


def _composite_over(base, layer):
    """src-over; both (H, W, 4) float or uint8, returns float64."""
    base = base.astype(np.float64)
    layer = layer.astype(np.float64)
    la = layer[..., 3:4] / 255.0
    out = np.empty_like(base)
    out[..., :3] = layer[..., :3] * la + base[..., :3] * (1 - la)
    out[..., 3:4] = np.maximum(base[..., 3:4], layer[..., 3:4])
    return out


def _strokes_layer(viewport):
    return np.zeros((viewport.height * SS, viewport.width * SS, 4), np.float64)


def draw_tapered_segments(image, net, assign, style: TaperStyle, viewport: Viewport,
                          palette: Palette = DEFAULT_PALETTE, poi_ids=()) -> np.ndarray:
    """Composite tapered road strokes over an image.

    Width runs from w_max at the higher-accessibility endpoint linearly down
    to w_min at the other; hue follows that endpoint's winning POI. Two-way
    segments draw one offset stroke per direction.
    """
    ord_of = {pid: i for i, pid in enumerate(poi_ids)}
    buf = _strokes_layer(viewport)
    for s in net.segments:
        acc_f = float(assign.accessibility[s.from_node])
        acc_t = float(assign.accessibility[s.to_node])
        if acc_f > acc_t:
            w_start, w_end = style.w_max, style.w_min
            owner = s.from_node
        elif acc_t > acc_f:
            w_start, w_end = style.w_min, style.w_max
            owner = s.to_node
        else:
            mid = (style.w_max + style.w_min) / 2.0
            w_start = w_end = mid
            owner = min(s.from_node, s.to_node)
        win = int(assign.winner[owner])
        rgba = (*palette.color(ord_of.get(win, -1)), 255.0)
        pts = world_to_img(viewport, s.geometry) * SS
        if s.oneway:
            _stroke_polyline(buf, pts, w_start * SS, w_end * SS, rgba)
        else:
            off = style.w_max * SS / 2.0
            _stroke_polyline(buf, pts, w_start * SS, w_end * SS, rgba, offset=off)
            _stroke_polyline(buf, pts, w_start * SS, w_end * SS, rgba, offset=-off)
    layer = _downsample(buf)
    return np.rint(_composite_over(image, layer)).astype(np.uint8)


NKDE_COLOR = (46, 104, 156)


def render_nkde(samples, net, viewport: Viewport, style: TaperStyle = TaperStyle(),
                width_scale: float | None = None,
                background=(252, 252, 250, 255)) -> np.ndarray:
    """Render NKDE samples as polyline strokes with density-proportional width.

    Widths are width_scale * density clamped to [1, w_max] pixels; by default
    width_scale maps the maximum sample to w_max.
    """
    if not samples:
        raise ValueError("render_nkde needs at least one sample")
    vmax = max(v for _, _, v in samples)
    if width_scale is None:
        width_scale = style.w_max / vmax if vmax > 0 else 1.0
    by_seg: dict[int, list] = {}
    for sid, pos, val in samples:
        by_seg.setdefault(int(sid), []).append((float(pos), float(val)))
    seg_geo = {s.segment_id: s for s in net.segments}
    buf = _strokes_layer(viewport)
    rgba = (*NKDE_COLOR, 255.0)
    for sid in sorted(by_seg):
        rows = sorted(by_seg[sid])
        s = seg_geo[sid]
        pts = world_to_img(viewport, s.geometry) * SS
        t = _polyline_params(pts)
        total = s.length

        def point_at(arclen):
            u = 0.0 if total == 0 else min(max(arclen / total, 0.0), 1.0)
            i = int(np.searchsorted(t, u, side="right")) - 1
            i = min(max(i, 0), pts.shape[0] - 2)
            span = t[i + 1] - t[i]
            f = 0.0 if span == 0 else (u - t[i]) / span
            return pts[i] + f * (pts[i + 1] - pts[i])

        for (p0, v0), (p1, v1) in zip(rows, rows[1:]):
            w0 = min(max(width_scale * v0, 1.0), style.w_max) * SS
            w1 = min(max(width_scale * v1, 1.0), style.w_max) * SS
            _draw_capsule(buf, point_at(p0), point_at(p1), w0, w1, rgba)
    base = np.zeros((viewport.height, viewport.width, 4), np.float64)
    base[:] = background
    return np.rint(_composite_over(base, _downsample(buf))).astype(np.uint8)


LABEL_STRIP = 11  # pixels above each montage tile


def render_sweep(ctx, viewport: Viewport, base_params: FieldParams, kernels, bandwidths,
                 palette: Palette = DEFAULT_PALETTE, workers=None, return_rasters=False):
    """Montage of |kernels| rows x |bandwidths| columns of colorized rasters.

    Every tile's pixel block is byte-identical to a standalone
    colorize(rasterize(...)) with that kernel/bandwidth; labels live in a
    margin strip above each tile.
    """
    if not kernels or not bandwidths:
        raise ValueError("kernel and bandwidth lists must be nonempty")
    th, tw = viewport.height, viewport.width
    rows, cols = len(kernels), len(bandwidths)
    H = rows * (th + LABEL_STRIP)
    W = cols * tw
    img = np.zeros((H, W, 4), np.uint8)
    img[:] = (255, 255, 255, 255)
    rasters = []
    for i, kern in enumerate(kernels):
        row_rasters = []
        for j, bw in enumerate(bandwidths):
            params = base_params.with_(kernel=kern, bandwidth=float(bw))
            ras = rasterize(ctx, viewport, params, workers=workers)
            tile = colorize(ras, palette)
            y0 = i * (th + LABEL_STRIP) + LABEL_STRIP
            x0 = j * tw
            img[y0:y0 + th, x0:x0 + tw] = tile
            mask = fonts.text_mask(f"{kern} r={bw:g}")
            my = y0 - LABEL_STRIP + 2
            mh, mw = mask.shape
            mw = min(mw, tw - 4)
            img[my:my + mh, x0 + 2:x0 + 2 + mw][mask[:, :mw]] = (40, 40, 40, 255)
            row_rasters.append(ras)
        rasters.append(row_rasters)
    if return_rasters:
        return img, rasters
    return img


def png_bytes(img: np.ndarray) -> bytes:
    from PIL import Image

    out = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img), "RGBA").save(out, format="PNG")
    return out.getvalue()


def compose_map(scenario, viewport: Viewport, params: FieldParams,
                style: TaperStyle = TaperStyle(), palette: Palette = DEFAULT_PALETTE,
                workers=None) -> bytes:
    """Full map: background + density layer + tapered segments + POI markers."""
    ctx = scenario.context()
    raster = rasterize(ctx, viewport, params, workers=workers)
    base = np.zeros((viewport.height, viewport.width, 4), np.float64)
    base[:] = palette.background
    base = _composite_over(base, colorize(raster, palette))
    img = np.rint(base).astype(np.uint8)
    img = draw_tapered_segments(img, scenario.net, scenario.assign, style, viewport,
                                palette, ctx.poi_ids)
    ord_of = {pid: i for i, pid in enumerate(ctx.poi_ids)}
    buf = _strokes_layer(viewport)
    for p in scenario.pois:
        c = world_to_img(viewport, np.array([[p.x, p.y]]))[0] * SS
        rgba = (*palette.color(ord_of.get(p.poi_id, -1)), 255.0)
        _draw_disc(buf, c, style.w_max * 1.4 * SS, (255.0, 255.0, 255.0, 255.0))
        _draw_disc(buf, c, style.w_max * 1.1 * SS, rgba)
    img = np.rint(_composite_over(img, _downsample(buf))).astype(np.uint8)
    return png_bytes(img)
