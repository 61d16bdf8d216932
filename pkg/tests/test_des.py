import pytest

from eventstep.des import (
    LEFT, PUSH_FLUX, UPDATE, Event, EventQueue, LivelockError,
    SchedulingError, Simulator,
)


class Recorder:
    """Minimal actor world: records execution order, can self-schedule."""

    def __init__(self, n_actors=2, on_event=None):
        self.n_actors = n_actors
        self.seen = []
        self.on_event = on_event

    def handle_event(self, event, ctx):
        self.seen.append((ctx.now, event.kind, event.dest, event.src))
        if self.on_event:
            self.on_event(event, ctx)


def ev(kind, tick, dest, src=-1, side=-1, forced=False, uid=(-1, 0)):
    return Event(kind, tick, dest, forced, src, side, (), uid)


def test_queue_orders_by_tick_then_kind_then_ids():
    q = EventQueue()
    q.push(ev(PUSH_FLUX, 5, 1, src=0, side=1))
    q.push(ev(UPDATE, 5, 0))
    q.push(ev(UPDATE, 3, 1))
    q.push(ev(PUSH_FLUX, 5, 0, src=1, side=0))
    order = [q.pop().order_key() for _ in range(4)]
    assert order == sorted(order)
    assert order[0][0] == 3
    # at the shared tick, updates come before push fluxes
    assert [k[1] for k in order[1:]] == [UPDATE, PUSH_FLUX, PUSH_FLUX]


def test_queue_dedupes_unforced_updates():
    q = EventQueue()
    assert q.push(ev(UPDATE, 4, 2, uid=(2, 0)))
    assert not q.push(ev(UPDATE, 4, 2, uid=(2, 1)))
    assert q.push(ev(UPDATE, 4, 2, forced=True, uid=(2, 2)))
    assert len(q) == 2


def test_scheduling_in_the_past_is_fatal():
    world = Recorder()
    sim = Simulator(world)
    sim.schedule(4, ev(UPDATE, 4, 0))
    sim.run(10)
    with pytest.raises(SchedulingError):
        sim.schedule(2, ev(UPDATE, 2, 0))


def test_delivery_and_tie_break():
    world = Recorder()
    sim = Simulator(world)
    sim.schedule(5, ev(UPDATE, 5, 1))
    sim.schedule(5, ev(PUSH_FLUX, 5, 1, src=0, side=1))
    sim.schedule(5, ev(UPDATE, 5, 0))
    sim.run(10)
    kinds = [(kind, dest) for _, kind, dest, _ in world.seen]
    assert kinds == [(UPDATE, 0), (UPDATE, 1), (PUSH_FLUX, 1)]


def test_popped_ticks_are_monotone_with_dynamic_scheduling():
    def handler(event, ctx):
        if event.tick < 6:
            ctx.schedule(event.tick + 2, ev(UPDATE, event.tick + 2, event.dest,
                                            uid=(event.dest, event.tick)))

    world = Recorder(on_event=handler)
    sim = Simulator(world)
    sim.schedule(0, ev(UPDATE, 0, 0))
    sim.schedule(1, ev(UPDATE, 1, 1, uid=(1, 9)))
    sim.run(10)
    ticks = [t for t, *_ in world.seen]
    assert ticks == sorted(ticks)


def test_inline_runs_depth_first_before_queued_events():
    trace = []

    def handler(event, ctx):
        trace.append((event.dest, event.src))
        if event.dest == 0 and event.src == -1:
            ctx.schedule_inline(ev(PUSH_FLUX, ctx.now, 1, src=0, side=1,
                                   uid=(0, 1)))
            trace.append(("after-inline", 0))

    world = Recorder(on_event=handler)
    sim = Simulator(world)
    sim.schedule(3, ev(UPDATE, 3, 0))
    sim.schedule(3, ev(UPDATE, 3, 1, uid=(1, 0)))
    sim.run(5)
    # the inline push flux executes inside actor 0's handler, before the
    # queued update of actor 1
    assert trace == [(0, -1), (1, 0), ("after-inline", 0), (1, -1)]


def test_inline_observes_mutated_state():
    state = {"x": 0}

    def handler(event, ctx):
        if event.kind == UPDATE:
            state["x"] = 7
            ctx.schedule_inline(ev(PUSH_FLUX, ctx.now, 0, src=0, side=1,
                                   uid=(0, 1)))
        else:
            state["seen"] = state["x"]

    world = Recorder(n_actors=1, on_event=handler)
    sim = Simulator(world)
    sim.schedule(1, ev(UPDATE, 1, 0))
    sim.run(2)
    assert state["seen"] == 7


def test_livelock_guard_aborts():
    def handler(event, ctx):
        ctx.schedule(ctx.now, ev(PUSH_FLUX, ctx.now, event.dest,
                                 src=event.dest, side=0,
                                 uid=(event.dest, ctx.now + len(world.seen))))

    world = Recorder(n_actors=1, on_event=handler)
    sim = Simulator(world)
    sim.schedule(0, ev(UPDATE, 0, 0))
    with pytest.raises(LivelockError):
        sim.run(1)


def test_determinism_two_identical_runs():
    def build():
        def handler(event, ctx):
            if event.tick < 20:
                ctx.schedule(event.tick + 3, ev(
                    UPDATE, event.tick + 3, 1 - event.dest,
                    uid=(event.dest, event.tick)))
        world = Recorder(on_event=handler)
        sim = Simulator(world)
        sim.schedule(0, ev(UPDATE, 0, 0))
        sim.schedule(0, ev(UPDATE, 0, 1, uid=(1, 5)))
        sim.run(25)
        return world.seen

    assert build() == build()
