"""Pure-numpy kernel backend.

Expressions mirror the compiled core term for term; do not "simplify" one
without changing the other, or cross-backend traces stop being bit-identical.
"""

from __future__ import annotations

import numpy as np

LAW_BURGERS = 0
LAW_SWE = 1
FLUX_LLF = 0
FLUX_GODUNOV = 1
_G = 1.0


def _burgers_llf(ul, ur):
    fl = 0.5 * ul * ul
    fr = 0.5 * ur * ur
    a = np.maximum(np.abs(ul), np.abs(ur))
    return 0.5 * (fl + fr) - 0.5 * a * (ur - ul)


def _burgers_godunov(ul, ur):
    # exact flux for a convex f with its minimum at u = 0
    cl = np.maximum(ul, 0.0)
    cr = np.minimum(ur, 0.0)
    return np.maximum(0.5 * cl * cl, 0.5 * cr * cr)


def _swe_wave(h, q):
    return np.sqrt(_G * h) + np.abs(q / h)


def _swe_llf(hl, ql, hr, qr):
    fl0 = ql
    fl1 = ql * ql / hl + 0.5 * _G * hl * hl
    fr0 = qr
    fr1 = qr * qr / hr + 0.5 * _G * hr * hr
    a = np.maximum(_swe_wave(hl, ql), _swe_wave(hr, qr))
    f0 = 0.5 * (fl0 + fr0) - 0.5 * a * (hr - hl)
    f1 = 0.5 * (fl1 + fr1) - 0.5 * a * (qr - ql)
    return f0, f1


def interior_fluxes(law: int, flux: int, states):
    m = states.shape[0]
    out = np.empty((m - 1, states.shape[1]))
    if law == LAW_BURGERS:
        ul = states[:-1, 0]
        ur = states[1:, 0]
        if flux == FLUX_LLF:
            out[:, 0] = _burgers_llf(ul, ur)
        else:
            out[:, 0] = _burgers_godunov(ul, ur)
    else:
        if flux != FLUX_LLF:
            raise ValueError("Godunov flux is scalar-only")
        f0, f1 = _swe_llf(states[:-1, 0], states[:-1, 1], states[1:, 0], states[1:, 1])
        out[:, 0] = f0
        out[:, 1] = f1
    return out


def internal_k_max(law: int, flux: int, states, dx) -> float:
    m = states.shape[0]
    if m < 3:
        return 0.0
    dxm = dx[1:-1]
    if law == LAW_SWE:
        w = _swe_wave(states[:, 0], states[:, 1])
        w3 = np.maximum(np.maximum(w[:-2], w[1:-1]), w[2:])
        return float(np.max(w3 / dxm))
    lo = states[:-2, 0]
    mid = states[1:-1, 0]
    hi = states[2:, 0]
    fh = _burgers_llf if flux == FLUX_LLF else _burgers_godunov
    f_lo_hi = fh(lo, hi)
    f_mid_hi = fh(mid, hi)
    f_lo_mid = fh(lo, mid)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (f_lo_hi - f_mid_hi) / (dxm * (mid - lo))
        d = (f_lo_mid - f_lo_hi) / (dxm * (hi - mid))
    deg_c = mid == lo
    deg_d = hi == mid
    if np.any(deg_c):
        c = np.where(deg_c, -np.maximum(np.abs(mid), np.abs(hi)) / dxm, c)
    if np.any(deg_d):
        d = np.where(deg_d, np.maximum(np.abs(lo), np.abs(mid)) / dxm, d)
    return float(np.max(np.maximum(-c, d)))
