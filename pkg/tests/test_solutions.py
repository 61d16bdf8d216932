import math

import numpy as np
import pytest

from eventstep.mesh import build_mesh
from eventstep.solutions import (
    burgers_rarefaction, burgers_shock, dam_break_star, dam_break_state,
    reference_timestep, wave_speed_profile,
)


def test_burgers_shock_translates_at_half_speed():
    x = np.array([-0.5, 0.1, 0.3])
    assert list(burgers_shock(x, 0.0)) == [1.0, 0.0, 0.0]
    assert list(burgers_shock(x, 0.5)) == [1.0, 1.0, 0.0]


def test_burgers_rarefaction_fan():
    x = np.array([-0.5, 0.25, 2.0])
    assert list(burgers_rarefaction(x, 1.0)) == [0.0, 0.25, 1.0]


def test_dam_break_star_satisfies_both_wave_relations():
    g = 1.0
    h_r = 1.0 / 16.1
    h_star, u_star, shock = dam_break_star()
    # rarefaction invariant from the left state
    assert u_star == pytest.approx(2.0 * (1.0 - math.sqrt(h_star)), rel=1e-12)
    # jump conditions across the right shock
    mass = h_star * (u_star - shock) - h_r * (0.0 - shock)
    mom = (h_star * u_star * (u_star - shock) + 0.5 * g * h_star ** 2
           - 0.5 * g * h_r ** 2)
    assert mass == pytest.approx(0.0, abs=1e-12)
    assert mom == pytest.approx(0.0, abs=1e-10)


def test_dam_break_state_regions():
    h, u = dam_break_state(np.array([-5.0, 5.0]), 1.0)
    assert h[0] == 1.0 and u[0] == 0.0
    assert h[1] == pytest.approx(1.0 / 16.1) and u[1] == 0.0
    h_star, u_star, shock = dam_break_star()
    h, u = dam_break_state(np.array([0.5 * (u_star - math.sqrt(h_star) + shock)]),
                           1.0)
    assert h[0] == pytest.approx(h_star, rel=1e-12)
    assert u[0] == pytest.approx(u_star, rel=1e-12)


def test_dam_break_peak_wave_speed_exceeds_initial():
    lam = wave_speed_profile("swe", "dambreak")
    x = np.linspace(-1, 1, 2001)
    peak = max(float(np.max(lam(t, x))) for t in np.linspace(0, 0.5, 20))
    h_star, u_star, _ = dam_break_star()
    assert peak == pytest.approx(math.sqrt(h_star) + u_star, rel=1e-6)
    assert peak > 1.0


def test_reference_timestep_lake_at_rest():
    m = build_mesh(100, "uniform", periodic=True)
    lam = wave_speed_profile("swe", "lake-at-rest")
    dt = reference_timestep(m, lam, 1.0)
    assert dt == pytest.approx(0.5 * m.dx_min, rel=1e-12)


def test_reference_timestep_uses_transient_peak():
    m = build_mesh(100, "uniform")
    dt_db = reference_timestep(m, wave_speed_profile("swe", "dambreak"), 0.5)
    h_star, u_star, _ = dam_break_star()
    assert dt_db == pytest.approx(0.5 * m.dx_min / (math.sqrt(h_star) + u_star),
                                  rel=1e-3)


def test_profiles_reject_unknown():
    with pytest.raises(ValueError):
        wave_speed_profile("swe", "shockwave")
    with pytest.raises(ValueError):
        wave_speed_profile("burgers", "dambreak")
