"""Conservation laws, numerical fluxes, and flux-coefficient bounds.

The solver and the trace verifier share every formula in this module; both
sides must agree exactly on flux values and on the divided-difference
coefficients that drive the CFL machinery, including the degenerate
(equal-state) fallbacks.
"""

from __future__ import annotations

import math

import numpy as np

GRAVITY = 1.0


class InadmissibleState(ValueError):
    """A state violated the law's admissibility predicate (e.g. h <= 0)."""


class BurgersLaw:
    """Inviscid Burgers' equation, f(u) = u^2 / 2."""

    name = "burgers"
    n_vars = 1

    def flux(self, u):
        return 0.5 * u * u

    def wave_speed(self, u) -> float:
        return abs(float(u[0]))

    def admissible(self, u) -> bool:
        return bool(np.all(np.isfinite(u)))

    def flux_critical_points(self):
        # interior extrema of f, needed by the exact scalar Riemann flux
        return (0.0,)

    # scalar fast path (hot loops); expressions mirror the array forms
    def flux1(self, u: float) -> float:
        return 0.5 * u * u

    def wave1(self, u: float) -> float:
        return abs(u)

    def flux_arr(self, states):
        return 0.5 * states * states

    def wave_speed_arr(self, states):
        return np.abs(states[:, 0])


class ShallowWaterLaw:
    """1D shallow water with flat bed, g = 1: (h, q) with q = h u."""

    name = "swe"
    n_vars = 2

    def __init__(self, g: float = GRAVITY):
        self.g = g

    def flux(self, u):
        h = float(u[0])
        if h <= 0.0:
            raise InadmissibleState(f"dry state h={h!r}")
        q = float(u[1])
        return np.array([q, q * q / h + 0.5 * self.g * h * h])

    def wave_speed(self, u) -> float:
        h = float(u[0])
        if h <= 0.0:
            raise InadmissibleState(f"dry state h={h!r}")
        return math.sqrt(self.g * h) + abs(float(u[1]) / h)

    def admissible(self, u) -> bool:
        return bool(np.all(np.isfinite(u))) and float(u[0]) > 0.0

    def flux_arr(self, states):
        h = states[:, 0]
        if np.any(h <= 0.0):
            raise InadmissibleState("dry state in batch flux")
        q = states[:, 1]
        out = np.empty_like(states)
        out[:, 0] = q
        out[:, 1] = q * q / h + 0.5 * self.g * h * h
        return out

    def wave_speed_arr(self, states):
        h = states[:, 0]
        if np.any(h <= 0.0):
            raise InadmissibleState("dry state in batch wave speed")
        return np.sqrt(self.g * h) + np.abs(states[:, 1] / h)


class LocalLaxFriedrichs:
    """F(uL, uR) = (f(uL)+f(uR))/2 - max(|L|(uL), |L|(uR)) (uR-uL)/2."""

    name = "llf"

    def __call__(self, law, u_left, u_right):
        a = max(law.wave_speed(u_left), law.wave_speed(u_right))
        return 0.5 * (law.flux(u_left) + law.flux(u_right)) - 0.5 * a * (u_right - u_left)

    def scalar(self, law, ul: float, ur: float) -> float:
        a = max(law.wave1(ul), law.wave1(ur))
        return 0.5 * (law.flux1(ul) + law.flux1(ur)) - 0.5 * a * (ur - ul)


class GodunovScalar:
    """Exact scalar Godunov flux: min of f over [uL, uR] (or max over [uR, uL]).

    Interior extrema are supplied by the law so the min/max is exact for
    piecewise-monotone fluxes, not sampled.
    """

    name = "godunov"

    def __call__(self, law, u_left, u_right):
        if law.n_vars != 1:
            raise ValueError("Godunov flux is scalar-only")
        return np.array([self.scalar(law, float(u_left[0]), float(u_right[0]))])

    def scalar(self, law, ul: float, ur: float) -> float:
        lo, hi = (ul, ur) if ul <= ur else (ur, ul)
        vals = [law.flux1(ul), law.flux1(ur)]
        vals += [law.flux1(c) for c in law.flux_critical_points() if lo < c < hi]
        return min(vals) if ul <= ur else max(vals)


_FLUXES = {"llf": LocalLaxFriedrichs(), "godunov": GodunovScalar()}
_LAWS = {"burgers": BurgersLaw(), "swe": ShallowWaterLaw()}


def get_law(name: str):
    try:
        return _LAWS[name]
    except KeyError:
        raise ValueError(f"unknown conservation law {name!r}") from None


def get_flux(name: str):
    try:
        return _FLUXES[name]
    except KeyError:
        raise ValueError(f"unknown numerical flux {name!r}") from None


def flux_burgers(u: float) -> float:
    return 0.5 * u * u


def flux_swe(h: float, q: float):
    """Mass and momentum flux for shallow water; rejects dry states."""
    return tuple(ShallowWaterLaw().flux(np.array([h, q])))


def wave_speed(law, u) -> float:
    return law.wave_speed(np.asarray(u, dtype=float))


def llf_flux(law, u_left, u_right):
    return LocalLaxFriedrichs()(law, np.asarray(u_left, float), np.asarray(u_right, float))


def godunov_flux_scalar(law, u_left, u_right) -> float:
    return float(GodunovScalar()(law, np.atleast_1d(np.asarray(u_left, float)),
                                 np.atleast_1d(np.asarray(u_right, float)))[0])


def _pair_speed_bound(law, a: float, b: float) -> float:
    return max(law.wave_speed(np.array([a])), law.wave_speed(np.array([b])))


def harten_coefficients(law, flux, u_lo: float, u_mid: float, u_hi: float, dx: float):
    """Divided-difference coefficients (C, D) of the cell holding u_mid.

    C <= 0 scales the jump to the left neighbor, D >= 0 the jump to the right.
    Degenerate jumps fall back to the signed wave-speed bound of the flux at
    that state divided by dx, so callers always receive finite values:
    C from the first flux argument, D from the second.
    """
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    if hasattr(law, "flux1") and hasattr(flux, "scalar"):
        fh = flux.scalar
        if u_mid != u_lo:
            C = (fh(law, u_lo, u_hi) - fh(law, u_mid, u_hi)) / (dx * (u_mid - u_lo))
        else:
            C = -max(law.wave1(u_mid), law.wave1(u_hi)) / dx
        if u_hi != u_mid:
            D = (fh(law, u_lo, u_mid) - fh(law, u_lo, u_hi)) / (dx * (u_hi - u_mid))
        else:
            D = max(law.wave1(u_lo), law.wave1(u_mid)) / dx
        return C, D
    a = np.array([u_lo])
    b = np.array([u_mid])
    c = np.array([u_hi])
    if u_mid != u_lo:
        num = float(flux(law, a, c)[0]) - float(flux(law, b, c)[0])
        C = num / (dx * (u_mid - u_lo))
    else:
        C = -_pair_speed_bound(law, u_mid, u_hi) / dx
    if u_hi != u_mid:
        num = float(flux(law, a, b)[0]) - float(flux(law, a, c)[0])
        D = num / (dx * (u_hi - u_mid))
    else:
        D = _pair_speed_bound(law, u_lo, u_mid) / dx
    return C, D


def lipschitz_K(law, flux, u_left, u_right, dx: float):
    """Wave-speed Lipschitz bounds (K1, K2) of the flux pair, scaled by 1/dx."""
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    k = max(law.wave_speed(np.atleast_1d(np.asarray(u_left, float))),
            law.wave_speed(np.atleast_1d(np.asarray(u_right, float)))) / dx
    return k, k


def flux_pairs_arr(law, flux, u_left, u_right):
    """Vectorized numerical flux over arbitrary (m, v) state pairs.

    Reference numpy path used by the verifiers; kept independent of the
    kernels backends.
    """
    u_left = np.atleast_2d(u_left)
    u_right = np.atleast_2d(u_right)
    if isinstance(flux, GodunovScalar) or getattr(flux, "name", "") == "godunov":
        if law.n_vars != 1:
            raise ValueError("Godunov flux is scalar-only")
        ul = u_left[:, 0]
        ur = u_right[:, 0]
        lo = np.minimum(ul, ur)
        hi = np.maximum(ul, ur)
        fl = law.flux_arr(u_left)[:, 0]
        fr = law.flux_arr(u_right)[:, 0]
        best_min = np.minimum(fl, fr)
        best_max = np.maximum(fl, fr)
        for c in law.flux_critical_points():
            inside = (lo < c) & (c < hi)
            fc = float(law.flux(np.array([c]))[0])
            best_min = np.where(inside, np.minimum(best_min, fc), best_min)
            best_max = np.where(inside, np.maximum(best_max, fc), best_max)
        out = np.where(ul <= ur, best_min, best_max)
        return out[:, None]
    a = np.maximum(law.wave_speed_arr(u_left), law.wave_speed_arr(u_right))
    return (0.5 * (law.flux_arr(u_left) + law.flux_arr(u_right))
            - 0.5 * a[:, None] * (u_right - u_left))


def harten_arrays(law, flux, u_lo, u_mid, u_hi, dx):
    """Vectorized divided-difference coefficients over scalar triples."""
    if law.n_vars != 1:
        raise ValueError("divided-difference coefficients are scalar-only")
    lo = np.asarray(u_lo, float).reshape(-1, 1)
    mid = np.asarray(u_mid, float).reshape(-1, 1)
    hi = np.asarray(u_hi, float).reshape(-1, 1)
    dx = np.asarray(dx, float)
    f_lo_hi = flux_pairs_arr(law, flux, lo, hi)[:, 0]
    f_mid_hi = flux_pairs_arr(law, flux, mid, hi)[:, 0]
    f_lo_mid = flux_pairs_arr(law, flux, lo, mid)[:, 0]
    lo0, mid0, hi0 = lo[:, 0], mid[:, 0], hi[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (f_lo_hi - f_mid_hi) / (dx * (mid0 - lo0))
        d = (f_lo_mid - f_lo_hi) / (dx * (hi0 - mid0))
    w_lo = law.wave_speed_arr(lo)
    w_mid = law.wave_speed_arr(mid)
    w_hi = law.wave_speed_arr(hi)
    deg_c = mid0 == lo0
    if np.any(deg_c):
        c = np.where(deg_c, -np.maximum(w_mid, w_hi) / dx, c)
    deg_d = hi0 == mid0
    if np.any(deg_d):
        d = np.where(deg_d, np.maximum(w_lo, w_mid) / dx, d)
    return c, d


def coefficient_bounds(law, flux, u_lo, u_mid, u_hi, dx: float):
    """Upper bounds (on -C and on D) for the cell holding u_mid.

    Scalar laws take the exact divided differences maxed with the wave-speed
    bound over the triple; systems fall back to the wave-speed bound alone.
    The wave-speed term keeps the bound stable when a jump is about to open
    up; the exact term dominates where secants exceed the local wave speed.
    """
    if law.n_vars == 1 and hasattr(law, "wave1"):
        lo = float(u_lo[0]) if not isinstance(u_lo, float) else u_lo
        mid = float(u_mid[0]) if not isinstance(u_mid, float) else u_mid
        hi = float(u_hi[0]) if not isinstance(u_hi, float) else u_hi
        w = max(law.wave1(lo), law.wave1(mid), law.wave1(hi)) / dx
        C, D = harten_coefficients(law, flux, lo, mid, hi, dx)
        return max(-C, w), max(D, w)
    w = max(law.wave_speed(np.atleast_1d(u_lo)),
            law.wave_speed(np.atleast_1d(u_mid)),
            law.wave_speed(np.atleast_1d(u_hi))) / dx
    if law.n_vars != 1:
        return w, w
    C, D = harten_coefficients(law, flux, float(np.atleast_1d(u_lo)[0]),
                               float(np.atleast_1d(u_mid)[0]),
                               float(np.atleast_1d(u_hi)[0]), dx)
    return max(-C, w), max(D, w)
