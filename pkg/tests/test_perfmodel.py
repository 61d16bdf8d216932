import itertools
import math

import numpy as np
import pytest

from eventstep import perfmodel, solutions
from eventstep.mesh import build_mesh
from eventstep.perfmodel import (
    assign_ranks, assignment_cost, build_work_profile, cell_timestep_estimate,
    iterate_partition, theoretical_speedup, work_speedup,
)


def lam_unit(t, x):
    return np.ones_like(np.asarray(x, dtype=float))


def test_cell_timestep_examples():
    assert cell_timestep_estimate(0.02, 1.0, 0.005) == pytest.approx(0.01)
    # ratio exactly one: the minimum step itself
    assert cell_timestep_estimate(0.01, 1.0, 0.005) == 0.005
    assert cell_timestep_estimate(0.02, 0.0, 0.005, cap_ticks=16) == 0.08


def test_cell_timestep_is_power_of_two_multiple():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        dx = rng.uniform(1e-4, 1.0)
        lam = rng.uniform(0.0, 3.0)
        dt_min = rng.uniform(1e-5, 1e-2)
        dt = cell_timestep_estimate(dx, lam, dt_min)
        ratio = dt / dt_min
        assert ratio >= 1.0
        assert math.log2(ratio) == pytest.approx(round(math.log2(ratio)),
                                                 abs=1e-9)


def test_theoretical_speedup_uniform_lake_is_exactly_one():
    m = build_mesh(100, "uniform", periodic=True)
    lam = solutions.wave_speed_profile("swe", "lake-at-rest")
    dt_ref = solutions.reference_timestep(m, lam, 1.0)
    prof = build_work_profile(m, lam, 0.5 * dt_ref, dt_ref, 1.0)
    assert theoretical_speedup(prof) == 1.0


def test_theoretical_speedup_polynomial_lake_range():
    for n in (100, 400, 1600):
        m = build_mesh(n, "polynomial", periodic=True)
        lam = solutions.wave_speed_profile("swe", "lake-at-rest")
        dt_ref = solutions.reference_timestep(m, lam, 1.0)
        prof = build_work_profile(m, lam, 0.5 * dt_ref, dt_ref, 1.0)
        assert 2.5 <= theoretical_speedup(prof) <= 4.5


def test_iterate_partition_uniform_fixed_point():
    m = build_mesh(100, "uniform")
    p = iterate_partition(m, 20)
    assert all(hi - lo == 5 for lo, hi in p.ranges())


def test_iterate_partition_polynomial_shape():
    # coarse-cell regions absorb more cells; the finest blocks stay minimal
    m = build_mesh(100, "polynomial")
    p = iterate_partition(m, 20)
    widths = np.array([hi - lo for lo, hi in p.ranges()])
    centers = np.array([0.5 * (m.nodes[lo] + m.nodes[hi])
                        for lo, hi in p.ranges()])
    assert widths.min() == 2
    assert abs(centers[np.argmin(widths)]) < 0.3
    assert widths.max() >= 8
    assert abs(centers[np.argmax(widths)]) > 0.5
    assert all(hi - lo >= 2 for lo, hi in p.ranges())


def test_iterate_partition_close_to_exhaustive_on_toy():
    dx = np.array([1.0] * 6 + [2.0] * 6)
    nodes = np.concatenate(([0.0], np.cumsum(dx)))
    from eventstep.mesh import Mesh1D
    m = Mesh1D(nodes=nodes)
    p = iterate_partition(m, 3, dt_min=0.25 * m.dx_min)
    # weights consistent with the returned partition
    own_dt = np.array([cell_timestep_estimate(d, 1.0, 0.25 * m.dx_min)
                       for d in m.cell_sizes])
    w = np.empty(12)
    for lo, hi in p.ranges():
        w[lo:hi] = 1.0 / own_dt[lo:hi].min()
    got = p.max_load(w)

    best = math.inf
    for cuts in itertools.combinations(range(2, 11), 2):
        bounds = [0, *cuts, 12]
        if any(b - a < 2 for a, b in zip(bounds, bounds[1:])):
            continue
        wc = np.empty(12)
        for a, b in zip(bounds, bounds[1:]):
            wc[a:b] = 1.0 / own_dt[a:b].min()
        best = min(best, max(wc[a:b].sum()
                             for a, b in zip(bounds, bounds[1:])))
    assert got <= best * (1.0 + 1e-12)


def test_assign_ranks_equal_blocks():
    work = np.ones((4, 6))
    rho, cost = assign_ranks(work, np.full(4, 0.25), 3)
    counts = np.bincount(rho, minlength=3)
    assert np.all(counts == 2)
    assert cost == pytest.approx(2.0)


def test_assign_ranks_constant_example():
    work = np.array([[3.0, 3.0, 2.0, 2.0]])
    rho, cost = assign_ranks(work, np.array([1.0]), 2)
    loads = [sum(work[0][i] for i in range(4) if rho[i] == k)
             for k in range(2)]
    assert sorted(loads) == [5.0, 5.0]
    assert cost == pytest.approx(5.0)


def test_assign_ranks_time_varying_reaches_exhaustive_optimum():
    # averages prefer pairing (0,1)+(2,3), but the peaks say otherwise
    work = np.array([
        [9.0, 1.0, 8.0, 2.0],
        [1.0, 9.0, 2.0, 8.0],
    ])
    lengths = np.array([0.5, 0.5])
    rho, cost = assign_ranks(work, lengths, 2)
    best = math.inf
    for assign in itertools.product(range(2), repeat=4):
        if len(set(assign)) < 2:
            continue
        best = min(best, assignment_cost(work, lengths, list(assign)))
    assert cost == pytest.approx(best, rel=1e-12)


def test_work_speedup():
    assert work_speedup(100, 100) == 1.0
    assert work_speedup(200, 100) == 2.0
    with pytest.raises(ValueError):
        work_speedup(10, 0)


def test_profile_exports(tmp_path):
    m = build_mesh(20, "uniform", periodic=True)
    prof = build_work_profile(m, lam_unit, 0.005, 0.01, 1.0, n_windows=4)
    p = iterate_partition(m, 4)
    work = prof.submesh_work(p)
    rho, _ = assign_ranks(work, prof.window_lengths(), 2)
    ppath = tmp_path / "profile.csv"
    apath = tmp_path / "assign.csv"
    perfmodel.export_profile_csv(ppath, work, prof.window_edges, rho)
    perfmodel.export_assignment_csv(apath, rho)
    lines = ppath.read_text().strip().splitlines()
    assert lines[0] == "window_start,rank,work"
    assert len(lines) == 1 + 4 * 2
    alines = apath.read_text().strip().splitlines()
    assert alines[0] == "submesh_id,rank"
    assert len(alines) == 1 + 4
