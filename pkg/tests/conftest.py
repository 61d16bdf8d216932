import numpy as np
import pytest

from eventstep import lts, physics
from eventstep.mesh import build_mesh, partition_balanced


def initial_profile(ics, centers):
    if ics == "shock":
        return (centers < 0.0).astype(float)[:, None]
    if ics == "rarefaction":
        return (centers > 0.0).astype(float)[:, None]
    if ics == "constant":
        return np.ones((centers.size, 1))
    raise ValueError(ics)


def make_world(ics="shock", n=40, n_sbmsh=4, warp="uniform", flux="llf",
               t_end_s=0.3, detail="full", periodic=None, dt_scale=0.25,
               heuristics=True, cap_ticks=lts.DEFAULT_CAP_TICKS):
    periodic = (ics == "constant") if periodic is None else periodic
    m = build_mesh(n, warp, domain=(-1.0, 1.0), periodic=periodic)
    part = partition_balanced(np.ones(n), n_sbmsh)
    law = physics.get_law("burgers")
    fl = physics.get_flux(flux)
    u0 = initial_profile(ics, m.centers)
    dt_min = dt_scale * m.dx_min
    t_end = max(1, round(t_end_s / dt_min))
    return lts.World(m, part, law, fl, u0, dt_min, t_end, detail=detail,
                     heuristics=heuristics, cap_ticks=cap_ticks)


@pytest.fixture
def shock_world():
    return make_world()
