"""Parity between the compiled kernel and the numpy fallback.

The two backends may differ in the final ULP of exp/pow, so densities are
compared to 1e-12 relative while integer outputs (dominant POI, via) must
match exactly on non-degenerate inputs.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from topomap import _density_np

cext = pytest.importorskip("topomap._density_cy")


def random_inputs(seed, n_pix=40, n_vert=25, n_pois=4):
    rng = np.random.default_rng(seed)
    px = rng.uniform(0, 500, n_pix)
    py = rng.uniform(0, 500, n_pix)
    ix = rng.uniform(0, 500, n_vert)
    iy = rng.uniform(0, 500, n_vert)
    acc = rng.uniform(0.001, 0.1, n_vert)
    poi = rng.integers(-1, n_pois, n_vert).astype(np.int32)
    times = rng.uniform(10, 2000, (n_pois, n_vert))
    times[rng.random((n_pois, n_vert)) < 0.1] = np.inf
    cand = np.sort(rng.choice(n_vert, size=6, replace=False)).astype(np.int32)
    pad = np.full((n_pix, 5), -1, np.int32)
    for i in range(n_pix):
        k = int(rng.integers(0, 6))
        pad[i, :k] = np.sort(rng.choice(n_vert, size=k, replace=False))
    return px, py, ix, iy, acc, poi, times, cand, pad


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
@pytest.mark.parametrize("kernel_id", [0, 1, 2, 3])
@pytest.mark.parametrize("agg", [False, True])
def test_amplitude_parity(seed, kernel_id, agg):
    px, py, ix, iy, acc, poi, times, cand, pad = random_inputs(seed)
    for fn_np, fn_cy, candarg in (
        (_density_np.eval_amplitude_shared, cext.eval_amplitude_shared, cand),
        (_density_np.eval_amplitude_ragged, cext.eval_amplitude_ragged, pad),
    ):
        a = fn_np(px, py, candarg, ix, iy, acc, poi, 4, kernel_id, 150.0, agg, True)
        b = fn_cy(px, py, candarg, ix, iy, acc, poi, 4, kernel_id, 150.0, agg, True)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-300)
        assert np.array_equal(a[1], b[1])
        assert np.array_equal(a[2], b[2])
        np.testing.assert_allclose(a[3], b[3], rtol=1e-12, atol=1e-300)
        assert np.array_equal(a[4], b[4])


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("kernel_id", [0, 2])
def test_eq4_parity(seed, kernel_id):
    px, py, ix, iy, acc, poi, times, cand, pad = random_inputs(seed)
    for fn_np, fn_cy, candarg in (
        (_density_np.eval_eq4_shared, cext.eval_eq4_shared, cand),
        (_density_np.eval_eq4_ragged, cext.eval_eq4_ragged, pad),
    ):
        a = fn_np(px, py, candarg, ix, iy, times, kernel_id, 0.003, 1.0, 1.4, 3.0,
                  False, True)
        b = fn_cy(px, py, candarg, ix, iy, times, kernel_id, 0.003, 1.0, 1.4, 3.0,
                  False, True)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-300)
        assert np.array_equal(a[1], b[1])
        assert np.array_equal(a[2], b[2])


def test_backend_env_override():
    code = ("import topomap.accel as a; print(a.BACKEND)")
    for want in ("numpy", "cext"):
        out = subprocess.run([sys.executable, "-c", code],
                             env={**os.environ, "TOPOMAP_BACKEND": want},
                             capture_output=True, text=True)
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == want


def test_worker_count_env(monkeypatch):
    from topomap.accel import worker_count

    monkeypatch.setenv("TOPOMAP_THREADS", "6")
    assert worker_count() == 6
    assert worker_count(2) == 2
    monkeypatch.delenv("TOPOMAP_THREADS")
    assert worker_count() == 1


def test_empty_inputs():
    z = np.zeros(0)
    zi = np.zeros(0, np.int32)
    out = cext.eval_amplitude_shared(z, z, zi, z, z, z, zi, 0, 0, 100.0, False, False)
    assert out[0].shape == (0,)
    v, d, w, per, pvia = cext.eval_amplitude_shared(
        np.array([1.0]), np.array([1.0]), zi, z, z, z, zi, 0, 0, 100.0, False, True)
    assert v[0] == 0.0 and d[0] == -1 and w[0] == -1
