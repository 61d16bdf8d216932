import numpy as np
import pytest

from eventstep import lts, physics
from eventstep.des import Simulator
from eventstep.lts import TraceRecord
from eventstep.verify import (
    EventTrace, InvariantChecker, check_cfl, check_fsm_transitions,
    check_locally_ordered, check_max_principle, check_tvd, classify_state,
    replay_oracle, total_variation,
)

from conftest import make_world


def run_debug(**kw):
    world = make_world(detail="debug", **kw)
    checker = InvariantChecker(world)
    trace = lts.run_sequential(world)
    return world, trace, checker


def synthetic_trace(times_by_sid, n_cells=4, t_end=10):
    """Trace skeleton with two 2-cell blocks and given update ticks."""
    nodes = np.linspace(-1, 1, n_cells + 1)
    records = []
    for sid in range(len(times_by_sid)):
        lo, hi = 2 * sid, 2 * sid + 2
        records.append(TraceRecord("init", 0, sid, cell_lo=lo, cell_hi=hi,
                                   states=np.zeros((2, 1))))
    for sid, ts in enumerate(times_by_sid):
        lo, hi = 2 * sid, 2 * sid + 2
        prev = 0
        for t in ts:
            records.append(TraceRecord("update", t, sid, cell_lo=lo,
                                       cell_hi=hi, states=np.zeros((2, 1)),
                                       pre_tick=prev))
            prev = t
    boundaries = np.arange(0, n_cells + 1, 2)
    return EventTrace(records, nodes, boundaries, False, "burgers", "llf",
                      0.1, t_end)


def test_locally_ordered_synchronous_trace_passes():
    trace = synthetic_trace([[2, 4, 6], [2, 4, 6]])
    assert check_locally_ordered(trace).ok


def test_locally_ordered_nested_refinement_passes():
    # right block refines strictly between the joint times
    trace = synthetic_trace([[4, 8], [1, 2, 3, 4, 5, 6, 7, 8]])
    assert check_locally_ordered(trace).ok


def test_locally_ordered_straddling_fails():
    # both blocks step strictly inside (0, 8)
    trace = synthetic_trace([[3, 8], [5, 8]])
    rep = check_locally_ordered(trace)
    assert not rep.ok
    assert "0" in rep.violations[0].detail


def test_tvd_constant_zero_variation():
    _, trace, _ = run_debug(ics="constant", t_end_s=0.2)
    states = trace.initial_states()
    assert total_variation(states, True) == 0.0
    assert check_tvd(trace).ok


def test_tvd_shock_initial_variation_is_one():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    assert total_variation(trace.initial_states(), False) == 1.0
    assert check_tvd(trace).ok


def test_tvd_detects_seeded_growth():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    bad = None
    for rec in trace.records:
        if rec.kind == "update":
            bad = rec
    bad.states = bad.states + np.linspace(0, 0.01, bad.states.size)[:, None]
    assert not check_tvd(trace).ok


def test_max_principle_shock_bounded_by_one():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.2)
    assert check_max_principle(trace).ok


def test_max_principle_random_bv_data():
    rng = np.random.default_rng(3)
    for seed in range(50):
        world = make_world(ics="constant", n=16, n_sbmsh=2, t_end_s=0.05,
                           periodic=False)
        world.submeshes  # built with constant data; overwrite with random BV
        u0 = rng.uniform(-1.0, 1.0, size=(16, 1))
        from eventstep.mesh import build_mesh, partition_balanced
        m = build_mesh(16, "uniform", domain=(-1, 1), periodic=False)
        part = partition_balanced(np.ones(16), 2)
        w = lts.World(m, part, physics.get_law("burgers"),
                      physics.get_flux("llf"), u0, 0.25 * m.dx_min, 16)
        trace = lts.run_sequential(w)
        assert check_max_principle(trace).ok, f"seed {seed}"


def test_max_principle_detects_seeded_violation():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    for rec in trace.records:
        if rec.kind == "update":
            rec.states = rec.states * 1.5
            break
    assert not check_max_principle(trace).ok


def test_cfl_passes_on_conservative_synchronous_run():
    world = make_world(ics="shock", n=32, n_sbmsh=4, t_end_s=0.2, cap_ticks=1)
    trace = lts.run_sequential(world)
    assert check_cfl(trace).ok


def test_cfl_detects_inflated_next_update():
    _, trace, _ = run_debug(ics="shock", n=40, n_sbmsh=4, t_end_s=0.2)
    # delay one mid-run update of the block holding the jump: its windows
    # double while the coefficients stay put
    ups = [r for r in trace.records
           if r.kind == "update" and r.tick < trace.t_end // 2]
    target = ups[len(ups) // 2]
    sid = target.sid
    later = [r for r in trace.records if r.kind == "update" and r.sid == sid
             and r.tick > target.tick]
    kill = {id(target)} | {id(r) for r in later[:3]}
    trace.records = [r for r in trace.records if id(r) not in kill]
    rep = check_cfl(trace)
    assert not rep.ok


def test_cfl_rejects_systems():
    with pytest.raises(ValueError):
        check_cfl(EventTrace([], np.linspace(0, 1, 3), np.array([0, 2]),
                             False, "swe", "llf", 0.1, 10))


def test_replay_passes_and_detects_perturbation():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.2)
    assert replay_oracle(trace).ok
    for rec in trace.records:
        if rec.kind == "update" and rec.tick > 2:
            rec.states = rec.states + 1e-6
            break
    assert not replay_oracle(trace).ok


def test_replay_flux_integral_mutation_detected():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.2)
    for rec in trace.records:
        if rec.kind == "update" and rec.sum_flux is not None and rec.tick > 2:
            rec.sum_flux = (rec.sum_flux[0] + 1e-6, rec.sum_flux[1])
            break
    assert not replay_oracle(trace).ok


def test_classify_state_rows():
    assert classify_state((True,) * 6) == "q_a"
    assert classify_state((True, False, True, True, True, True)) == "q_b"
    assert classify_state((False, True, False, True, False, True)) == "q_k"
    assert classify_state((False, True, True, False, True, True)) == "q_d"
    assert classify_state((False, False, True, True, True, True)) == "unreachable"


def test_fsm_transitions_on_real_runs():
    for ics in ("shock", "rarefaction", "constant"):
        _, trace, _ = run_debug(ics=ics, t_end_s=0.3)
        assert check_fsm_transitions(trace).ok, ics


def test_fsm_flags_illegal_edge():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    rows = [r for r in trace.event_log
            if r.kind == 0 and r.effective and not r.inline
            and r.tick < trace.t_end]
    row = rows[len(rows) // 2]
    row.pre_bits = (False, True, False, True, True, True)  # q_h cannot update
    assert not check_fsm_transitions(trace).ok


def test_fsm_flags_non_accepting_tick_end():
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    tick, bits_list = trace.tick_states[0]
    bits_list[0] = (False, True, True, False, True, False)  # q_f
    assert not check_fsm_transitions(trace).ok


def test_invariant_checker_clean_on_scalar_runs():
    for ics in ("shock", "rarefaction", "constant"):
        for flux in ("llf", "godunov"):
            _, _, checker = run_debug(ics=ics, flux=flux, t_end_s=0.25)
            assert checker.report.ok, (ics, flux)


def test_invariant_checker_initial_state_holds():
    world = make_world(detail="debug")
    checker = InvariantChecker(world, sweep_every=1)
    sim = Simulator(world)
    world.schedule_initial(sim)
    checker.after_tick(world, 0, sim)
    assert checker.report.ok


def test_invariant_checker_flags_removed_update():
    world = make_world(detail="debug", n=16, n_sbmsh=2, t_end_s=0.2)
    checker = InvariantChecker(world, sweep_every=1)
    sim = Simulator(world)
    world.schedule_initial(sim)
    # drop every queued update: progress must fail for a block that is
    # neither finished nor covered by a pending push flux
    sim.queue._heap = [e for e in sim.queue._heap if e[-1].kind != 0]
    checker.after_tick(world, 0, sim)
    assert any("P:" in v.detail for v in checker.report.violations)


def test_invariant_checker_flags_corrupted_flux_integral():
    world = make_world(detail="debug", n=16, n_sbmsh=2, t_end_s=0.2)
    checker = InvariantChecker(world)
    sim = Simulator(world)
    world.schedule_initial(sim)
    sim.run(world.t_end // 2, finish=False)
    s = world.submeshes[1]
    if s.left.t_nb <= s.t_last:
        # force a nonempty window so the corruption is observable
        world.accumulate(s.t_last + 1, s, s.left)
        s.left.t_nb = s.t_last + 1
    s.left.sum_flux = s.left.sum_flux + 0.5
    checker._flux_cache.clear()
    checker._check_cr_flux(s, s.t_last + 1)
    assert any("CR-flux" in v.detail for v in checker.report.violations)


def test_periodic_random_bv_full_checker_sweep():
    # torus wrap paths and transonic states, against every checker at once
    rng = np.random.default_rng(99)
    for _ in range(8):
        n = int(rng.integers(16, 48))
        nsb = int(rng.integers(2, 5))
        warp = rng.choice(["uniform", "polynomial"])
        fluxname = rng.choice(["llf", "godunov"])
        from eventstep.mesh import build_mesh, partition_balanced
        m = build_mesh(n, warp, domain=(-1, 1), periodic=True)
        part = partition_balanced(np.ones(n), nsb)
        u0 = rng.uniform(-1.0, 1.0, size=(n, 1))
        w = lts.World(m, part, physics.get_law("burgers"),
                      physics.get_flux(fluxname), u0, 0.25 * m.dx_min,
                      int(rng.integers(8, 40)), detail="debug")
        checker = InvariantChecker(w)
        trace = lts.run_sequential(w)
        tag = (n, nsb, warp, fluxname)
        for rep in (check_locally_ordered(trace), check_tvd(trace),
                    check_max_principle(trace), check_cfl(trace),
                    replay_oracle(trace), check_fsm_transitions(trace),
                    checker.report):
            assert rep.ok, (tag, rep.lines()[:2])
        assert w.progress_violations == 0, tag


def test_trace_csv_round_trip(tmp_path):
    _, trace, _ = run_debug(ics="shock", t_end_s=0.1)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    back = EventTrace.from_csv(path)
    assert back.signatures() == trace.signatures()
    assert np.array_equal(back.nodes, trace.nodes)
    # the round-tripped trace still verifies
    assert check_tvd(back).ok
    assert replay_oracle(back).ok
    assert check_cfl(back).ok
