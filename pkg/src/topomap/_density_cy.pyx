# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled density evaluation kernels.

Same contract as ``_density_np``; per-pixel loops with libc math. The GIL is
released inside the pixel loops so callers can drive several row blocks from
worker threads concurrently (every call owns its scratch buffers).
"""

from libc.math cimport exp, sqrt, pow, isfinite, INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cext"

cdef double T_MIN = 1.0  # seconds; clamp for the access-time singularity


cdef inline double _kern(int kid, double u) noexcept nogil:
    cdef double v
    if kid == 0:
        return exp(-0.5 * u * u)
    elif kid == 1:
        return 2.0 / (1.0 + exp(u))
    elif kid == 2:
        v = 1.0 - u * u
        return v if v > 0.0 else 0.0
    else:
        return exp(-u)


cdef void _amplitude_px(double x, double y, const cnp.int32_t* cand, Py_ssize_t ncand,
                        const double* ix, const double* iy, const double* iacc,
                        const cnp.int32_t* ipoi, int n_pois, int kid, double r,
                        bint aggregate_sum, bint want_pp,
                        double* bestp, cnp.int32_t* viap,
                        double* out_val, cnp.int32_t* out_dom, cnp.int32_t* out_via,
                        double* pp_row, cnp.int32_t* pv_row) noexcept nogil:
    cdef Py_ssize_t j
    cdef int h, p
    cdef cnp.int32_t v
    cdef double dx, dy, c, m, bv, tv
    for h in range(n_pois):
        bestp[h] = 0.0
        viap[h] = -1
    for j in range(ncand):
        v = cand[j]
        if v < 0:
            continue
        p = ipoi[v]
        if p < 0:
            continue
        dx = ix[v] - x
        dy = iy[v] - y
        c = iacc[v] * _kern(kid, sqrt(dx * dx + dy * dy) / r)
        if c > bestp[p]:
            bestp[p] = c
            viap[p] = v
        elif c == bestp[p] and c > 0.0 and v < viap[p]:
            viap[p] = v
    bv = 0.0
    tv = 0.0
    out_dom[0] = -1
    out_via[0] = -1
    for h in range(n_pois):
        m = bestp[h]
        if want_pp:
            pp_row[h] = m
            pv_row[h] = viap[h]
        if m > bv:
            bv = m
            out_dom[0] = h
            out_via[0] = viap[h]
        tv = tv + m
    out_val[0] = tv if aggregate_sum else bv


def eval_amplitude_shared(double[::1] px, double[::1] py, cnp.int32_t[::1] cand,
                          double[::1] ix, double[::1] iy, double[::1] iacc,
                          cnp.int32_t[::1] ipoi, int n_pois, int kernel_id, double r,
                          bint aggregate_sum, bint want_per_poi):
    cdef Py_ssize_t P = px.shape[0]
    value = np.zeros(P)
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else np.zeros((1, max(n_pois, 1)))
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else np.full((1, max(n_pois, 1)), -1, np.int32)
    scratch_b = np.zeros(max(n_pois, 1))
    scratch_v = np.full(max(n_pois, 1), -1, np.int32)
    if P == 0 or n_pois == 0 or ix.shape[0] == 0:
        if not want_per_poi:
            return value, dom, via, None, None
        return value, dom, via, per, pvia
    cdef double[::1] val_v = value
    cdef cnp.int32_t[::1] dom_v = dom
    cdef cnp.int32_t[::1] via_v = via
    cdef double[:, ::1] per_v = per
    cdef cnp.int32_t[:, ::1] pvia_v = pvia
    cdef double[::1] bp = scratch_b
    cdef cnp.int32_t[::1] vp = scratch_v
    cdef Py_ssize_t i, C = cand.shape[0]
    cdef bint wpp = want_per_poi
    with nogil:
        for i in range(P):
            _amplitude_px(px[i], py[i], &cand[0] if C else NULL, C,
                          &ix[0], &iy[0], &iacc[0], &ipoi[0], n_pois, kernel_id, r,
                          aggregate_sum, wpp, &bp[0], &vp[0],
                          &val_v[i], &dom_v[i], &via_v[i],
                          &per_v[i, 0] if wpp else &per_v[0, 0],
                          &pvia_v[i, 0] if wpp else &pvia_v[0, 0])
    if not want_per_poi:
        return value, dom, via, None, None
    return value, dom, via, per, pvia


def eval_amplitude_ragged(double[::1] px, double[::1] py, cnp.int32_t[:, ::1] cand_pad,
                          double[::1] ix, double[::1] iy, double[::1] iacc,
                          cnp.int32_t[::1] ipoi, int n_pois, int kernel_id, double r,
                          bint aggregate_sum, bint want_per_poi):
    cdef Py_ssize_t P = px.shape[0]
    cdef Py_ssize_t K = cand_pad.shape[1]
    value = np.zeros(P)
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else np.zeros((1, max(n_pois, 1)))
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else np.full((1, max(n_pois, 1)), -1, np.int32)
    scratch_b = np.zeros(max(n_pois, 1))
    scratch_v = np.full(max(n_pois, 1), -1, np.int32)
    if P == 0 or n_pois == 0 or ix.shape[0] == 0:
        if not want_per_poi:
            return value, dom, via, None, None
        return value, dom, via, per, pvia
    cdef double[::1] val_v = value
    cdef cnp.int32_t[::1] dom_v = dom
    cdef cnp.int32_t[::1] via_v = via
    cdef double[:, ::1] per_v = per
    cdef cnp.int32_t[:, ::1] pvia_v = pvia
    cdef double[::1] bp = scratch_b
    cdef cnp.int32_t[::1] vp = scratch_v
    cdef Py_ssize_t i
    cdef bint wpp = want_per_poi
    with nogil:
        for i in range(P):
            _amplitude_px(px[i], py[i], &cand_pad[i, 0] if K else NULL, K,
                          &ix[0], &iy[0], &iacc[0], &ipoi[0], n_pois, kernel_id, r,
                          aggregate_sum, wpp, &bp[0], &vp[0],
                          &val_v[i], &dom_v[i], &via_v[i],
                          &per_v[i, 0] if wpp else &per_v[0, 0],
                          &pvia_v[i, 0] if wpp else &pvia_v[0, 0])
    if not want_per_poi:
        return value, dom, via, None, None
    return value, dom, via, per, pvia


cdef void _eq4_px(double x, double y, const cnp.int32_t* cand, Py_ssize_t ncand,
                  const double* ix, const double* iy,
                  const double* times, Py_ssize_t nverts, int n_pois,
                  int kid, double r_acc, double alpha, double walk_speed,
                  double cutoff, bint aggregate_sum, bint want_pp,
                  double* wkbuf,
                  double* out_val, cnp.int32_t* out_dom, cnp.int32_t* out_via,
                  double* pp_row, cnp.int32_t* pv_row) noexcept nogil:
    cdef Py_ssize_t j
    cdef int h
    cdef cnp.int32_t v, vmin
    cdef double dx, dy, t, T, Tc, a, dens, bv, tv
    for j in range(ncand):
        v = cand[j]
        if v < 0:
            wkbuf[j] = INFINITY
            continue
        dx = ix[v] - x
        dy = iy[v] - y
        wkbuf[j] = sqrt(dx * dx + dy * dy) / walk_speed
    bv = 0.0
    tv = 0.0
    out_dom[0] = -1
    out_via[0] = -1
    for h in range(n_pois):
        T = INFINITY
        vmin = -1
        for j in range(ncand):
            v = cand[j]
            if v < 0:
                continue
            t = times[h * nverts + v] + wkbuf[j]
            if t < T:
                T = t
                vmin = v
            elif t == T and isfinite(t) and v < vmin:
                vmin = v
        if isfinite(T):
            Tc = T if T > T_MIN else T_MIN
            a = pow(Tc, -alpha) / r_acc
            dens = (1.0 / r_acc) * _kern(kid, a)
            if a > cutoff:
                dens = 0.0
        else:
            dens = 0.0
            vmin = -1
        if want_pp:
            pp_row[h] = dens
            pv_row[h] = vmin
        if dens > bv:
            bv = dens
            out_dom[0] = h
            out_via[0] = vmin
        tv = tv + dens
    out_val[0] = tv if aggregate_sum else bv


def eval_eq4_shared(double[::1] px, double[::1] py, cnp.int32_t[::1] cand,
                    double[::1] ix, double[::1] iy, double[:, ::1] times,
                    int kernel_id, double r_acc, double alpha, double walk_speed,
                    double cutoff, bint aggregate_sum, bint want_per_poi):
    cdef Py_ssize_t P = px.shape[0]
    cdef int n_pois = times.shape[0]
    cdef Py_ssize_t nverts = times.shape[1]
    value = np.zeros(P)
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else np.zeros((1, max(n_pois, 1)))
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else np.full((1, max(n_pois, 1)), -1, np.int32)
    cdef Py_ssize_t C = cand.shape[0]
    wk = np.zeros(max(C, 1))
    if P == 0 or n_pois == 0 or ix.shape[0] == 0:
        if not want_per_poi:
            return value, dom, via, None, None
        return value, dom, via, per, pvia
    cdef double[::1] val_v = value
    cdef cnp.int32_t[::1] dom_v = dom
    cdef cnp.int32_t[::1] via_v = via
    cdef double[:, ::1] per_v = per
    cdef cnp.int32_t[:, ::1] pvia_v = pvia
    cdef double[::1] wk_v = wk
    cdef Py_ssize_t i
    cdef bint wpp = want_per_poi
    cdef const double* tptr = &times[0, 0] if n_pois and nverts else NULL
    with nogil:
        for i in range(P):
            _eq4_px(px[i], py[i], &cand[0] if C else NULL, C,
                    &ix[0], &iy[0], tptr, nverts, n_pois,
                    kernel_id, r_acc, alpha, walk_speed, cutoff, aggregate_sum, wpp,
                    &wk_v[0], &val_v[i], &dom_v[i], &via_v[i],
                    &per_v[i, 0] if wpp else &per_v[0, 0],
                    &pvia_v[i, 0] if wpp else &pvia_v[0, 0])
    if not want_per_poi:
        return value, dom, via, None, None
    return value, dom, via, per, pvia


def eval_eq4_ragged(double[::1] px, double[::1] py, cnp.int32_t[:, ::1] cand_pad,
                    double[::1] ix, double[::1] iy, double[:, ::1] times,
                    int kernel_id, double r_acc, double alpha, double walk_speed,
                    double cutoff, bint aggregate_sum, bint want_per_poi):
    cdef Py_ssize_t P = px.shape[0]
    cdef Py_ssize_t K = cand_pad.shape[1]
    cdef int n_pois = times.shape[0]
    cdef Py_ssize_t nverts = times.shape[1]
    value = np.zeros(P)
    dom = np.full(P, -1, np.int32)
    via = np.full(P, -1, np.int32)
    per = np.zeros((P, n_pois)) if want_per_poi else np.zeros((1, max(n_pois, 1)))
    pvia = np.full((P, n_pois), -1, np.int32) if want_per_poi else np.full((1, max(n_pois, 1)), -1, np.int32)
    wk = np.zeros(max(K, 1))
    if P == 0 or n_pois == 0 or ix.shape[0] == 0:
        if not want_per_poi:
            return value, dom, via, None, None
        return value, dom, via, per, pvia
    cdef double[::1] val_v = value
    cdef cnp.int32_t[::1] dom_v = dom
    cdef cnp.int32_t[::1] via_v = via
    cdef double[:, ::1] per_v = per
    cdef cnp.int32_t[:, ::1] pvia_v = pvia
    cdef double[::1] wk_v = wk
    cdef Py_ssize_t i
    cdef bint wpp = want_per_poi
    cdef const double* tptr = &times[0, 0] if n_pois and nverts else NULL
    with nogil:
        for i in range(P):
            _eq4_px(px[i], py[i], &cand_pad[i, 0] if K else NULL, K,
                    &ix[0], &iy[0], tptr, nverts, n_pois,
                    kernel_id, r_acc, alpha, walk_speed, cutoff, aggregate_sum, wpp,
                    &wk_v[0], &val_v[i], &dom_v[i], &via_v[i],
                    &per_v[i, 0] if wpp else &per_v[0, 0],
                    &pvia_v[i, 0] if wpp else &pvia_v[0, 0])
    if not want_per_poi:
        return value, dom, via, None, None
    return value, dom, via, per, pvia
