"""Pure-numpy density evaluation kernels (fallback backend).

Semantics are identical to the compiled backend in ``_density_cy.pyx``;
only last-ULP rounding of exp/pow may differ because numpy ships its own
vectorized transcendentals. Candidate order never affects results: maxima
ties resolve to the lowest intersection id via a min-id reduction.

Two candidate layouts per mode:
  *_shared  — one candidate list applied to every pixel (face interiors),
  *_ragged  — per-pixel candidate rows padded with -1 (outer-face fallback).
"""

import numpy as np

BACKEND_NAME = "numpy"

T_MIN = 1.0  # seconds; clamp for the access-time singularity
_ID_SENTINEL = np.int32(2**31 - 1)


def _kernel(kernel_id, u):
    if kernel_id == 0:
        return np.exp(-0.5 * u * u)
    if kernel_id == 1:
        return 2.0 / (1.0 + np.exp(u))
    if kernel_id == 2:
        return np.maximum(0.0, 1.0 - u * u)
    if kernel_id == 3:
        return np.exp(-u)
    raise ValueError(f"unknown kernel id {kernel_id}")


def _finish(h, dens, v_h, best, total, dom, via, per, pvia):
    """Fold POI h's per-pixel density plane into the running aggregates."""
    pos = dens > 0.0
    if per is not None:
        per[:, h] = dens
        pvia[:, h] = v_h
    upd = dens > best
    np.copyto(dom, np.int32(h), where=upd & pos)
    np.copyto(via, v_h, where=upd & pos)
    np.maximum(best, dens, out=best)
    total += dens


def eval_amplitude_shared(px, py, cand, ix, iy, iacc, ipoi, n_pois, kernel_id, r,
                          aggregate_sum, want_per_poi):
    P = px.shape[0]
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else None
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else None
    best = np.zeros(P)
    total = np.zeros(P)
    if cand.shape[0] and n_pois:
        dx = ix[cand][None, :] - px[:, None]
        dy = iy[cand][None, :] - py[:, None]
        k = _kernel(kernel_id, np.sqrt(dx * dx + dy * dy) / r)
        contrib = iacc[cand][None, :] * k
        cpoi = ipoi[cand]
        contrib = np.where(cpoi[None, :] >= 0, contrib, 0.0)
        # only POIs winning some candidate can contribute; keeps cost
        # proportional to the candidate count, not the POI count
        for h in np.unique(cpoi[cpoi >= 0]):
            cols = np.nonzero(cpoi == h)[0]
            sub = contrib[:, cols]
            m = sub.max(axis=1)
            ids = np.where(sub == m[:, None], cand[cols][None, :], _ID_SENTINEL)
            v_h = np.where(m > 0.0, ids.min(axis=1).astype(np.int32), np.int32(-1))
            _finish(h, m, v_h, best, total, dom, via, per, pvia)
    value = total if aggregate_sum else best
    return value, dom, via, per, pvia


def _amplitude_ragged_chunk(px, py, cand_pad, ix, iy, iacc, ipoi, kernel_id, r,
                            best, total, dom, via, per, pvia):
    mask = cand_pad >= 0
    safe = np.where(mask, cand_pad, 0)
    dx = ix[safe] - px[:, None]
    dy = iy[safe] - py[:, None]
    k = _kernel(kernel_id, np.sqrt(dx * dx + dy * dy) / r)
    contrib = iacc[safe] * k
    cpoi = np.where(mask, ipoi[safe], -1)
    contrib = np.where(cpoi >= 0, contrib, 0.0)
    for h in np.unique(cpoi[cpoi >= 0]):
        sel = cpoi == h
        sub = np.where(sel, contrib, 0.0)
        m = sub.max(axis=1)
        ids = np.where(sel & (sub == m[:, None]), safe, _ID_SENTINEL)
        v_h = np.where(m > 0.0, ids.min(axis=1).astype(np.int32), np.int32(-1))
        _finish(h, m, v_h, best, total, dom, via, per, pvia)


_RAGGED_CHUNK = 1024  # pixels per chunk; bounds the per-chunk winner set


def eval_amplitude_ragged(px, py, cand_pad, ix, iy, iacc, ipoi, n_pois, kernel_id, r,
                          aggregate_sum, want_per_poi):
    P = px.shape[0]
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else None
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else None
    best = np.zeros(P)
    total = np.zeros(P)
    if cand_pad.shape[1] and n_pois:
        # chunked so the per-POI loop only visits winners local to the chunk;
        # per-pixel results are independent of the chunking
        for a in range(0, P, _RAGGED_CHUNK):
            b = min(a + _RAGGED_CHUNK, P)
            _amplitude_ragged_chunk(
                px[a:b], py[a:b], cand_pad[a:b], ix, iy, iacc, ipoi, kernel_id, r,
                best[a:b], total[a:b], dom[a:b], via[a:b],
                per[a:b] if want_per_poi else None,
                pvia[a:b] if want_per_poi else None)
    value = total if aggregate_sum else best
    return value, dom, via, per, pvia


def _eq4_density(kernel_id, T, fin, r_acc, alpha, cutoff):
    Tc = np.maximum(np.where(fin, T, 1.0), T_MIN)
    a = np.power(Tc, -alpha) / r_acc
    dens = (1.0 / r_acc) * _kernel(kernel_id, a)
    return np.where(fin & (a <= cutoff), dens, 0.0)


def eval_eq4_shared(px, py, cand, ix, iy, times, kernel_id, r_acc, alpha, walk_speed,
                    cutoff, aggregate_sum, want_per_poi):
    P = px.shape[0]
    n_pois = times.shape[0]
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else None
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else None
    best = np.zeros(P)
    total = np.zeros(P)
    if cand.shape[0] and n_pois:
        dx = ix[cand][None, :] - px[:, None]
        dy = iy[cand][None, :] - py[:, None]
        walk = np.sqrt(dx * dx + dy * dy) / walk_speed
        for h in range(n_pois):
            tot = times[h, cand][None, :] + walk
            T = tot.min(axis=1)
            fin = np.isfinite(T)
            ids = np.where(tot == T[:, None], cand[None, :], _ID_SENTINEL)
            v_h = np.where(fin, ids.min(axis=1).astype(np.int32), np.int32(-1))
            dens = _eq4_density(kernel_id, T, fin, r_acc, alpha, cutoff)
            _finish(h, dens, v_h, best, total, dom, via, per, pvia)
    value = total if aggregate_sum else best
    return value, dom, via, per, pvia


def eval_eq4_ragged(px, py, cand_pad, ix, iy, times, kernel_id, r_acc, alpha, walk_speed,
                    cutoff, aggregate_sum, want_per_poi):
    P = px.shape[0]
    n_pois = times.shape[0]
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else None
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else None
    best = np.zeros(P)
    total = np.zeros(P)
    if cand_pad.shape[1] and n_pois:
        mask = cand_pad >= 0
        safe = np.where(mask, cand_pad, 0)
        dx = ix[safe] - px[:, None]
        dy = iy[safe] - py[:, None]
        walk = np.sqrt(dx * dx + dy * dy) / walk_speed
        for h in range(n_pois):
            tot = np.where(mask, times[h, safe], np.inf) + walk
            T = tot.min(axis=1)
            fin = np.isfinite(T)
            ids = np.where(mask & (tot == T[:, None]), safe, _ID_SENTINEL)
            v_h = np.where(fin, ids.min(axis=1).astype(np.int32), np.int32(-1))
            dens = _eq4_density(kernel_id, T, fin, r_acc, alpha, cutoff)
            _finish(h, dens, v_h, best, total, dom, via, per, pvia)
    value = total if aggregate_sum else best
    return value, dom, via, per, pvia
