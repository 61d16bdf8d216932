import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventstep.mesh import (
    Mesh1D, Partition, build_mesh, partition_balanced, read_mesh,
    read_splitters, warp_polynomial, write_mesh, write_splitters,
)


def brute_force_min_max(weights, n_sbmsh):
    """Enumerate every contiguous split with blocks of >= 2 cells."""
    n = len(weights)
    best = None
    positions = range(2, n - 1)
    for cuts in itertools.combinations(positions, n_sbmsh - 1):
        bounds = [0, *cuts, n]
        if any(b - a < 2 for a, b in zip(bounds, bounds[1:])):
            continue
        load = max(sum(weights[a:b]) for a, b in zip(bounds, bounds[1:]))
        if best is None or load < best:
            best = load
    return best


def test_warp_values():
    assert warp_polynomial(0.0) == 0.0
    assert warp_polynomial(1.0, 0.02) == pytest.approx(1.0, abs=1e-15)
    assert warp_polynomial(-1.0, 0.02) == pytest.approx(-1.0, abs=1e-15)
    expected = (0.125 / 3 + 0.02 * 0.5) / (1 / 3 + 0.02)
    assert warp_polynomial(0.5, 0.02) == pytest.approx(expected, rel=1e-15)


def test_warp_rejects_bad_inputs():
    with pytest.raises(ValueError):
        warp_polynomial(0.5, 0.0)
    with pytest.raises(ValueError):
        warp_polynomial(1.5, 0.02)


def test_warp_monotone_on_fine_grid():
    xs = np.linspace(-1.0, 1.0, 10_000)
    ws = np.array([warp_polynomial(x, 0.02) for x in xs])
    assert np.all(np.diff(ws) > 0.0)


def test_build_mesh_uniform():
    m = build_mesh(4, "uniform", domain=(-1.0, 1.0))
    assert np.allclose(m.nodes, [-1.0, -0.5, 0.0, 0.5, 1.0], atol=1e-15)
    m2 = build_mesh(2, "uniform", domain=(0.0, 1.0))
    assert np.allclose(m2.cell_sizes, [0.5, 0.5], atol=1e-16)


def test_build_mesh_polynomial_refines_origin():
    m = build_mesh(100, "polynomial", eps=0.02)
    sizes = m.cell_sizes
    mid = np.argmin(sizes)
    assert abs(m.centers[mid]) < 0.05
    assert sizes[0] > 5 * sizes.min()


def test_build_mesh_rejects_small():
    with pytest.raises(ValueError):
        build_mesh(1)


@pytest.mark.parametrize("warp,n", [("uniform", 7), ("uniform", 1000),
                                    ("polynomial", 7), ("polynomial", 1000)])
def test_cell_sizes_sum_to_domain_length(warp, n):
    m = build_mesh(n, warp)
    assert abs(m.cell_sizes.sum() - m.length) <= 1e-12 * m.length


def test_mesh_requires_increasing_nodes():
    with pytest.raises(ValueError):
        Mesh1D(nodes=np.array([0.0, 0.5, 0.5, 1.0]))


def test_partition_uniform_weights():
    p = partition_balanced(np.ones(100), 20)
    assert all(hi - lo == 5 for lo, hi in p.ranges())
    assert np.array_equal(p.assignment()[:12],
                          [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2])


def test_partition_example_split():
    w = np.array([1.0, 1.0, 1.0, 1.0, 4.0, 4.0])
    p = partition_balanced(w, 2)
    assert p.ranges() == [(0, 4), (4, 6)]
    assert p.max_load(w) == brute_force_min_max(list(w), 2)


def test_partition_rejects_infeasible():
    with pytest.raises(ValueError):
        partition_balanced(np.ones(3), 2)


def test_partition_two_cell_floor_beats_naive_greedy():
    # a maximal greedy prefix scan mis-handles this instance
    w = [1.0, 1.0, 1.0, 9.0, 2.0, 1.0, 1.0, 1.0]
    p = partition_balanced(np.array(w), 3)
    assert p.max_load(w) == pytest.approx(brute_force_min_max(w, 3), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(min_value=0.05, max_value=10.0,
                          allow_nan=False, allow_infinity=False),
                min_size=4, max_size=12),
       st.integers(min_value=1, max_value=5))
def test_partition_optimal_against_brute_force(weights, n_sbmsh):
    if len(weights) < 2 * n_sbmsh:
        return
    p = partition_balanced(np.array(weights), n_sbmsh)
    opt = brute_force_min_max(weights, n_sbmsh)
    assert p.max_load(weights) <= opt * (1.0 + 1e-9)


def test_partition_invariants():
    p = Partition(10, np.array([0, 4, 10]))
    assert p.n_submeshes == 2
    assert list(p.splitters) == [4]
    with pytest.raises(ValueError):
        Partition(10, np.array([0, 1, 10]))
    with pytest.raises(ValueError):
        Partition(10, np.array([0, 4, 9]))


def test_mesh_file_round_trip(tmp_path):
    m = build_mesh(37, "polynomial", periodic=True)
    path = tmp_path / "mesh.txt"
    write_mesh(path, m)
    m2 = read_mesh(path)
    assert m2.periodic == m.periodic
    assert np.array_equal(m2.nodes, m.nodes)


def test_splitter_file_round_trip(tmp_path):
    p = partition_balanced(np.ones(20), 4)
    path = tmp_path / "splitters.txt"
    write_splitters(path, p)
    p2 = read_splitters(path, 20)
    assert np.array_equal(p2.boundaries, p.boundaries)


def test_read_mesh_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("nonsense\n0.0\n1.0\n")
    with pytest.raises(ValueError):
        read_mesh(path)
