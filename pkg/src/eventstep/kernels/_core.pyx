# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend; expression-identical to kernels._fallback."""

from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF LAW_BURGERS = 0
DEF LAW_SWE = 1
DEF FLUX_LLF = 0
DEF FLUX_GODUNOV = 1

cdef double _G = 1.0


cdef inline double _max2(double a, double b) nogil:
    return a if a > b else b


cdef inline double _min2(double a, double b) nogil:
    return a if a < b else b


cdef inline double _burgers_llf(double ul, double ur) nogil:
    cdef double fl = 0.5 * ul * ul
    cdef double fr = 0.5 * ur * ur
    cdef double a = _max2(fabs(ul), fabs(ur))
    return 0.5 * (fl + fr) - 0.5 * a * (ur - ul)


cdef inline double _burgers_godunov(double ul, double ur) nogil:
    cdef double cl = _max2(ul, 0.0)
    cdef double cr = _min2(ur, 0.0)
    return _max2(0.5 * cl * cl, 0.5 * cr * cr)


cdef inline double _swe_wave(double h, double q) nogil:
    return sqrt(_G * h) + fabs(q / h)


def interior_fluxes(int law, int flux, cnp.ndarray[cnp.float64_t, ndim=2] states):
    cdef Py_ssize_t m = states.shape[0]
    cdef Py_ssize_t v = states.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m - 1, v))
    cdef Py_ssize_t i
    cdef double ul, ur, hl, ql, hr, qr, a
    cdef double fl0, fl1, fr0, fr1
    if law == LAW_BURGERS:
        if flux == FLUX_LLF:
            for i in range(m - 1):
                out[i, 0] = _burgers_llf(states[i, 0], states[i + 1, 0])
        else:
            for i in range(m - 1):
                out[i, 0] = _burgers_godunov(states[i, 0], states[i + 1, 0])
    else:
        if flux != FLUX_LLF:
            raise ValueError("Godunov flux is scalar-only")
        for i in range(m - 1):
            hl = states[i, 0]
            ql = states[i, 1]
            hr = states[i + 1, 0]
            qr = states[i + 1, 1]
            fl0 = ql
            fl1 = ql * ql / hl + 0.5 * _G * hl * hl
            fr0 = qr
            fr1 = qr * qr / hr + 0.5 * _G * hr * hr
            a = _max2(_swe_wave(hl, ql), _swe_wave(hr, qr))
            out[i, 0] = 0.5 * (fl0 + fr0) - 0.5 * a * (hr - hl)
            out[i, 1] = 0.5 * (fl1 + fr1) - 0.5 * a * (qr - ql)
    return out


def internal_k_max(int law, int flux, cnp.ndarray[cnp.float64_t, ndim=2] states,
                   cnp.ndarray[cnp.float64_t, ndim=1] dx):
    cdef Py_ssize_t m = states.shape[0]
    if m < 3:
        return 0.0
    cdef Py_ssize_t j
    cdef double best = 0.0
    cdef double lo, mid, hi, dxm, c, d, f_lo_hi, f_mid_hi, f_lo_mid, w3, kj
    if law == LAW_SWE:
        for j in range(1, m - 1):
            w3 = _max2(_max2(_swe_wave(states[j - 1, 0], states[j - 1, 1]),
                             _swe_wave(states[j, 0], states[j, 1])),
                       _swe_wave(states[j + 1, 0], states[j + 1, 1]))
            kj = w3 / dx[j]
            if j == 1 or kj > best:
                best = kj
        return best
    for j in range(1, m - 1):
        lo = states[j - 1, 0]
        mid = states[j, 0]
        hi = states[j + 1, 0]
        dxm = dx[j]
        if flux == FLUX_LLF:
            f_lo_hi = _burgers_llf(lo, hi)
            f_mid_hi = _burgers_llf(mid, hi)
            f_lo_mid = _burgers_llf(lo, mid)
        else:
            f_lo_hi = _burgers_godunov(lo, hi)
            f_mid_hi = _burgers_godunov(mid, hi)
            f_lo_mid = _burgers_godunov(lo, mid)
        if mid != lo:
            c = (f_lo_hi - f_mid_hi) / (dxm * (mid - lo))
        else:
            c = -_max2(fabs(mid), fabs(hi)) / dxm
        if hi != mid:
            d = (f_lo_mid - f_lo_hi) / (dxm * (hi - mid))
        else:
            d = _max2(fabs(lo), fabs(mid)) / dxm
        kj = _max2(-c, d)
        if j == 1 or kj > best:
            best = kj
    return best
