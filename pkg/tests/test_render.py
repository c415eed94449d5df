import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from topomap import accel
from topomap.field import FieldParams, Viewport, rasterize
from topomap.render import (DEFAULT_PALETTE, TaperStyle, colorize, compose_map,
                            draw_tapered_segments, render_nkde, render_sweep,
                            world_to_img)

GOLDEN_DIR = Path(__file__).parent / "golden"


# --- colorize --------------------------------------------------------------

def test_colorize_all_zero_raster_transparent(fig4_scenario, square_viewport):
    ras = rasterize(fig4_scenario.context(), square_viewport, fig4_scenario.params)
    ras.value[:] = 0.0
    img = colorize(ras)
    assert img.shape == (64, 64, 4)
    assert np.all(img[..., 3] == 0)


def test_colorize_single_poi_alpha_proportional(fig4_scenario, square_viewport):
    ras = rasterize(fig4_scenario.context(), square_viewport, fig4_scenario.params)
    ras.dominant[:] = 0  # force single hue; alpha must scale with value
    img = colorize(ras)
    vmax = ras.value.max()
    expect = np.rint(255.0 * ras.value[::-1] / vmax).astype(np.uint8)
    assert np.array_equal(img[..., 3][ras.value[::-1] > 0], expect[ras.value[::-1] > 0])


def test_colorize_two_hue_regions(fig4_scenario, square_viewport):
    ras = rasterize(fig4_scenario.context(), square_viewport, fig4_scenario.params)
    img = colorize(ras)
    opaque = img[..., 3] > 0
    rgb = img[opaque][:, :3]
    assert len(np.unique(rgb, axis=0)) == 2


def test_colorize_pixel_local(fig4_scenario, square_viewport):
    ras = rasterize(fig4_scenario.context(), square_viewport, fig4_scenario.params)
    before = colorize(ras)
    # lower one interior non-max pixel; per-image max is untouched
    j, i = 10, 10
    assert ras.value[j, i] < ras.value.max()
    ras.value[j, i] *= 0.5
    after = colorize(ras)
    differ = np.any(before != after, axis=2)
    assert differ.sum() == 1
    assert differ[63 - j, i]


def test_rendering_leaves_raster_untouched(fig4_scenario, square_viewport):
    sc = fig4_scenario
    ras = rasterize(sc.context(), square_viewport, sc.params)
    v = ras.value.copy()
    d = ras.dominant.copy()
    img = colorize(ras)
    draw_tapered_segments(img, sc.net, sc.assign, TaperStyle(), square_viewport,
                          poi_ids=sc.context().poi_ids)
    assert np.array_equal(ras.value, v)
    assert np.array_equal(ras.dominant, d)


# --- tapered segments ------------------------------------------------------

def _stroke_widths(img, viewport, x_world, background):
    """Measure the vertical extent of non-background pixels at a world x."""
    col = int(world_to_img(viewport, np.array([[x_world, 0.0]]))[0, 0])
    column = img[:, col]
    hit = np.any(column[:, :3] != background, axis=1) & (column[:, 3] > 0)
    return int(hit.sum())


def test_taper_wide_at_higher_accessibility_end(fig4_scenario):
    # segment B->C: Acc(C) > Acc(B); stroke must be wider near C, hue = C's POI
    sc = fig4_scenario
    vp = Viewport(-20.0, -20.0, 140, 140, 1.0)
    base = np.zeros((140, 140, 4), np.uint8)
    img = draw_tapered_segments(base, sc.net, sc.assign, TaperStyle(w_max=9, w_min=1),
                                vp, poi_ids=sc.context().poi_ids)
    # BC is the vertical segment at world x=100 (image column 120); measure its
    # stroke width in a window that excludes the other segments
    row_near_c = int(world_to_img(vp, np.array([[100.0, 92.0]]))[0, 1])
    row_near_b = int(world_to_img(vp, np.array([[100.0, 8.0]]))[0, 1])
    window = slice(105, 136)
    width_c = int(np.count_nonzero(img[row_near_c, window, 3]))
    width_b = int(np.count_nonzero(img[row_near_b, window, 3]))
    assert width_c > width_b
    # hue near C equals H2's palette color
    h2_rgb = np.array(DEFAULT_PALETTE.color(1))
    cols = 105 + np.nonzero(img[row_near_c, window, 3])[0]
    assert np.array_equal(img[row_near_c, cols[len(cols) // 2], :3], h2_rgb)


def test_taper_equal_accessibility_uniform_width():
    from topomap.netgraph import AssignmentTable
    from topomap.geodata import segment_roads
    from conftest import make_raw

    raw = make_raw([(0, 0), (100, 0)], [((0, 1), True, 30.0)])
    net = segment_roads(raw)
    assign = AssignmentTable(poi_ids=(0,), winner=np.zeros(2, np.int32),
                             best_time=np.full(2, 50.0),
                             accessibility=np.full(2, 0.02))
    vp = Viewport(-10.0, -20.0, 120, 40, 1.0)
    base = np.zeros((40, 120, 4), np.uint8)
    img = draw_tapered_segments(base, net, assign, TaperStyle(w_max=7, w_min=1),
                                vp, poi_ids=(0,))
    w_left = int(np.count_nonzero(img[:, 20, 3]))
    w_right = int(np.count_nonzero(img[:, 100, 3]))
    assert w_left == w_right


def test_oneway_draws_single_stroke_two_way_draws_pair():
    from topomap.netgraph import AssignmentTable
    from topomap.geodata import segment_roads
    from conftest import make_raw

    assign = AssignmentTable(poi_ids=(0,), winner=np.zeros(2, np.int32),
                             best_time=np.full(2, 50.0), accessibility=np.full(2, 0.02))
    vp = Viewport(-10.0, -30.0, 120, 60, 1.0)
    style = TaperStyle(w_max=6, w_min=2)
    imgs = {}
    for oneway in (True, False):
        raw = make_raw([(0, 0), (100, 0)], [((0, 1), oneway, 30.0)])
        net = segment_roads(raw)
        base = np.zeros((60, 120, 4), np.uint8)
        imgs[oneway] = draw_tapered_segments(base, net, assign, style, vp, poi_ids=(0,))
    covered_one = int(np.count_nonzero(imgs[True][:, 60, 3]))
    covered_two = int(np.count_nonzero(imgs[False][:, 60, 3]))
    assert covered_two > covered_one
    # two-way: offset strokes leave the centerline area split or widened
    assert covered_two >= 2 * style.w_min


def test_taper_width_function_is_linear():
    # w(t) = w_max + (w_min - w_max) * t, checked through the stroke helper
    from topomap.render import _polyline_params

    pts = np.array([[0.0, 0.0], [30.0, 0.0], [100.0, 0.0]])
    t = _polyline_params(pts)
    assert t == pytest.approx([0.0, 0.3, 1.0])
    w_max, w_min = 6.0, 1.0
    widths = w_max + (w_min - w_max) * t
    assert widths == pytest.approx([6.0, 4.5, 1.0])


# --- NKDE rendering --------------------------------------------------------

def _nkde_setup():
    from topomap.field import EventSet, NetworkAnchor, nkde
    from topomap.geodata import segment_roads
    from topomap.netgraph import build_graph
    from conftest import make_raw

    raw = make_raw([(0, 0), (100, 0), (200, 0), (300, 0)],
                   [((0, 1), False, 30.0), ((1, 2), False, 30.0), ((2, 3), False, 30.0)])
    net = segment_roads(raw)
    g = build_graph(net)
    ev = EventSet(points=np.array([[0.0, 0.0]]),
                  anchors=(NetworkAnchor(segment_id=0, offset=0.0),))
    samples = nkde(g, ev, 25.0, "gaussian", 120.0)
    return net, samples


def test_render_nkde_zero_density_hairline():
    net, samples = _nkde_setup()
    zeroed = [(sid, pos, 0.0) for sid, pos, _ in samples]
    vp = Viewport(-20.0, -40.0, 340, 80, 1.0)
    img = render_nkde(zeroed, net, vp, TaperStyle(w_max=8, w_min=1), width_scale=1.0)
    covered = int(np.count_nonzero(np.any(img[:, 160, :3] != (252, 252, 250), axis=-1)))
    assert 1 <= covered <= 3  # hairline plus antialiasing fringe


def test_render_nkde_width_proportional_until_clamp():
    net, samples = _nkde_setup()
    vp = Viewport(-20.0, -40.0, 340, 80, 1.0)
    img1 = render_nkde(samples, net, vp, TaperStyle(w_max=30, w_min=1), width_scale=200.0)
    img2 = render_nkde([(s, p, 2 * v) for s, p, v in samples], net, vp,
                       TaperStyle(w_max=30, w_min=1), width_scale=200.0)
    col = 40  # near the event, well under the clamp
    w1 = int(np.count_nonzero(img1[:, col, :3].sum(axis=1) != 252 * 3 - 2))
    w1 = int(np.count_nonzero(np.any(img1[:, col, :3] != (252, 252, 250), axis=-1)))
    w2 = int(np.count_nonzero(np.any(img2[:, col, :3] != (252, 252, 250), axis=-1)))
    assert w2 == pytest.approx(2 * w1, abs=3)


def test_render_nkde_monotone_thinning_away_from_event():
    net, samples = _nkde_setup()
    vp = Viewport(-20.0, -40.0, 340, 80, 1.0)
    img = render_nkde(samples, net, vp, TaperStyle(w_max=20, w_min=1))
    widths = []
    for x in (20, 120, 220, 300):
        widths.append(int(np.count_nonzero(
            np.any(img[:, x, :3] != (252, 252, 250), axis=-1))))
    assert all(a >= b for a, b in zip(widths, widths[1:]))
    assert widths[0] > widths[-1]


# --- sweep -----------------------------------------------------------------

def test_sweep_grid_shape_and_tile_identity(fig4_scenario):
    sc = fig4_scenario
    vp = Viewport(-20.0, -20.0, 48, 36, 140.0 / 48)
    img, rasters = render_sweep(sc.context(), vp, sc.params, ["gaussian", "sigmoid"],
                                [150.0, 300.0, 450.0], return_rasters=True)
    from topomap.render import LABEL_STRIP

    assert img.shape == ((36 + LABEL_STRIP) * 2, 48 * 3, 4)
    # tile (1, 2) byte-identical to a standalone render
    standalone = colorize(rasterize(sc.context(), vp,
                                    sc.params.with_(kernel="sigmoid", bandwidth=450.0)))
    y0 = (36 + LABEL_STRIP) + LABEL_STRIP
    x0 = 2 * 48
    assert np.array_equal(img[y0:y0 + 36, x0:x0 + 48], standalone)


def test_sweep_single_tile(fig4_scenario):
    sc = fig4_scenario
    vp = Viewport(-20.0, -20.0, 32, 24, 140.0 / 32)
    img = render_sweep(sc.context(), vp, sc.params, ["gaussian"], [300.0])
    standalone = colorize(rasterize(sc.context(), vp, sc.params))
    from topomap.render import LABEL_STRIP

    assert np.array_equal(img[LABEL_STRIP:, :32], standalone)


def test_sweep_mean_density_increases_with_bandwidth():
    # single-POI scene, gaussian: larger bandwidth -> larger mean density
    from topomap.scenario import build_base
    from conftest import make_raw

    raw = make_raw([(0, 0), (100, 0), (100, 100), (0, 100)],
                   [((0, 1), False, 36.0), ((1, 2), False, 36.0),
                    ((2, 3), False, 36.0), ((3, 0), False, 36.0)],
                   pois=[("H", -20.0, 0.0)])
    sc = build_base("one", raw, None, FieldParams(), "s")
    vp = Viewport(-20.0, -20.0, 40, 40, 140.0 / 40)
    _, rasters = render_sweep(sc.context(), vp, sc.params, ["gaussian"],
                              [100.0, 200.0, 300.0, 400.0, 500.0], return_rasters=True)
    means = [r.value.mean() for r in rasters[0]]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_sweep_rejects_empty_lists(fig4_scenario):
    vp = Viewport(0, 0, 16, 16, 10.0)
    with pytest.raises(ValueError):
        render_sweep(fig4_scenario.context(), vp, fig4_scenario.params, [], [300.0])


# --- compose_map -----------------------------------------------------------

def test_compose_map_deterministic(fig4_scenario, square_viewport):
    a = compose_map(fig4_scenario, square_viewport, fig4_scenario.params)
    b = compose_map(fig4_scenario, square_viewport, fig4_scenario.params)
    assert a == b
    assert a[:8] == b"\x89PNG\r\n\x1a\n"


def test_compose_map_empty_poi_list():
    from topomap.scenario import build_base
    from conftest import make_raw

    raw = make_raw([(0, 0), (100, 0), (100, 100), (0, 100)],
                   [((0, 1), False, 36.0), ((1, 2), False, 36.0),
                    ((2, 3), False, 36.0), ((3, 0), False, 36.0)])
    sc = build_base("empty", raw, None, FieldParams(), "s")
    vp = Viewport(-20.0, -20.0, 48, 48, 140.0 / 48)
    png = compose_map(sc, vp, sc.params)
    img = np.asarray(Image.open(io.BytesIO(png)))
    # network strokes drawn in neutral gray over the background
    assert img.shape == (48, 48, 4)
    assert len(np.unique(img.reshape(-1, 4), axis=0)) > 1


def test_compose_map_golden(fig4_scenario, square_viewport):
    GOLDEN_DIR.mkdir(exist_ok=True)
    golden = GOLDEN_DIR / f"fig4_{accel.BACKEND}.png"
    png = compose_map(fig4_scenario, square_viewport, fig4_scenario.params)
    if not golden.exists():
        golden.write_bytes(png)
    assert png == golden.read_bytes()
