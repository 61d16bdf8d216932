"""Closed-form reference solutions and wave-speed profiles.

Used for reference-timestep selection, work-model profiles, and convergence
oracles.  The dam-break solution is the classic wet-bed Riemann fan: left
rarefaction, constant middle state, right shock.
"""

from __future__ import annotations

import math

import numpy as np

DAM_BREAK_H_RIGHT = 1.0 / 16.1


def burgers_shock(x, t):
    """Step data advecting at speed 1/2: u = 1 left of the jump, 0 right."""
    return (np.asarray(x, dtype=float) < 0.5 * t).astype(float)


def burgers_rarefaction(x, t):
    """Mirrored step (0 left, 1 right) opening into a fan from the origin."""
    x = np.asarray(x, dtype=float)
    if t <= 0.0:
        return (x > 0).astype(float)
    return np.clip(x / t, 0.0, 1.0)


def dam_break_star(h_left: float = 1.0, h_right: float = DAM_BREAK_H_RIGHT,
                   g: float = 1.0):
    """Middle state (h*, u*) and shock speed of the wet dam-break problem.

    Solves the rarefaction/shock matching condition by bisection on
    (h_right, h_left); accurate to ~1e-15 in h*.
    """
    cl = math.sqrt(g * h_left)

    def mismatch(h):
        ray = (h - h_right) * math.sqrt(g * (h + h_right) / (2.0 * h * h_right))
        return 2.0 * (cl - math.sqrt(g * h)) - ray

    lo, hi = h_right, h_left
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mismatch(lo) * mismatch(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    h_star = 0.5 * (lo + hi)
    u_star = 2.0 * (cl - math.sqrt(g * h_star))
    shock_speed = h_star * u_star / (h_star - h_right)
    return h_star, u_star, shock_speed


def dam_break_state(x, t, h_left: float = 1.0,
                    h_right: float = DAM_BREAK_H_RIGHT, g: float = 1.0):
    """(h, u) of the dam-break solution at points x, time t."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h_star, u_star, shock = dam_break_star(h_left, h_right, g)
    cl = math.sqrt(g * h_left)
    cs = math.sqrt(g * h_star)
    h = np.empty_like(x)
    u = np.empty_like(x)
    if t <= 0.0:
        left = x < 0.0
        h[left], u[left] = h_left, 0.0
        h[~left], u[~left] = h_right, 0.0
        return h, u
    xi = x / t
    left = xi <= -cl
    fan = (~left) & (xi < u_star - cs)
    mid = (~left) & (~fan) & (xi < shock)
    right = xi >= shock
    h[left], u[left] = h_left, 0.0
    c_fan = (2.0 * cl - xi[fan]) / 3.0
    h[fan] = c_fan * c_fan / g
    u[fan] = (2.0 / 3.0) * (xi[fan] + cl)
    h[mid], u[mid] = h_star, u_star
    h[right], u[right] = h_right, 0.0
    return h, u


def wave_speed_profile(problem: str, ics: str, g: float = 1.0):
    """Callable lam(t, x) giving the local wave speed of the exact solution."""
    if problem == "swe":
        if ics in ("lake-at-rest", "constant"):
            return lambda t, x: np.full_like(np.asarray(x, dtype=float),
                                             math.sqrt(g))
        if ics == "dambreak":
            def lam(t, x):
                h, u = dam_break_state(x, t, g=g)
                return np.sqrt(g * h) + np.abs(u)
            return lam
        raise ValueError(f"no analytic profile for swe ics {ics!r}")
    if problem == "burgers":
        if ics == "constant":
            return lambda t, x: np.ones_like(np.asarray(x, dtype=float))
        if ics == "shockwave":
            return lambda t, x: np.abs(burgers_shock(x, t))
        if ics == "rarefaction":
            return lambda t, x: np.abs(burgers_rarefaction(x, t))
        raise ValueError(f"no analytic profile for burgers ics {ics!r}")
    raise ValueError(f"unknown problem {problem!r}")


def reference_timestep(mesh, lam_fn, t_end: float, n_samples: int = 64,
                       cfl: float = 0.5) -> float:
    """Synchronous reference step: cfl / max over (t, x) of lam / dx.

    The maximum runs over the analytic solution sampled at cell centers on a
    uniform grid of times, matching a reference run that fixes its timestep
    from a priori knowledge rather than a runtime reduction.
    """
    centers = mesh.centers
    dx = mesh.cell_sizes
    worst = 0.0
    for t in np.linspace(0.0, t_end, n_samples):
        lam = np.asarray(lam_fn(float(t), centers), dtype=float)
        worst = max(worst, float(np.max(lam / dx)))
    if worst <= 0.0:
        raise ValueError("wave speed profile is identically zero")
    return cfl / worst
