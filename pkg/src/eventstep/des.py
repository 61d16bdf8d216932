"""Deterministic discrete-event kernel.

Time is an integer tick count (one tick = dt_min seconds); every event is
totally ordered by (tick, kind, destination, source, side, insertion seq)
with updates sorting before push fluxes at equal ticks.  Updates can only be
queued from earlier ticks while push fluxes are always born inside the tick
they target, so every destination settles its update before consuming the
tick's push fluxes -- the separation the optimistic executor's speculation
rules rely on.  (Push fluxes among themselves follow causal heap order: a
forced-synchronization chain can legally bounce a second flux back to a
destination out of source order.)
"""

from __future__ import annotations

import dataclasses
import heapq
import itertools
from dataclasses import dataclass, field

UPDATE = 0
PUSH_FLUX = 1

LEFT = 0
RIGHT = 1


class SchedulingError(RuntimeError):
    """An event was scheduled in the past of the sequential clock."""


class LivelockError(RuntimeError):
    """A single tick executed more events than the actor-count bound allows."""


@dataclass(frozen=True)
class Event:
    """Timestamped Update or PushFlux message.

    src/src_side identify the sending interface for push fluxes (src_side
    disambiguates the two-submesh periodic ring); uid is the deterministic
    (origin actor, per-origin emission counter) pair used to retract
    speculative sends.
    """

    kind: int
    tick: int
    dest: int
    forced: bool = False
    src: int = -1
    src_side: int = -1
    payload: tuple = ()
    uid: tuple = (-1, -1)

    def order_key(self):
        return (self.tick, self.kind, self.dest, self.src, self.src_side)


@dataclass
class EventQueue:
    """Min-heap over the event total order with duplicate-update suppression.

    Unforced updates are deduplicated per (tick, destination): handlers
    reschedule freely as their target time moves, and without suppression the
    stale copies would inflate the per-tick execution count past its bound.
    """

    _heap: list = field(default_factory=list)
    _seq: itertools.count = field(default_factory=itertools.count)
    _pending_updates: set = field(default_factory=set)

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, event: Event) -> bool:
        if event.kind == UPDATE and not event.forced:
            key = (event.tick, event.dest)
            if key in self._pending_updates:
                return False
            self._pending_updates.add(key)
        heapq.heappush(self._heap, (*event.order_key(), next(self._seq), event))
        return True

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)[-1]
        if event.kind == UPDATE and not event.forced:
            self._pending_updates.discard((event.tick, event.dest))
        return event

    def peek_tick(self):
        return self._heap[0][0] if self._heap else None

    def events(self):
        """Snapshot of pending events (invariant checkers introspect this)."""
        return [entry[-1] for entry in self._heap]


class Simulator:
    """Sequential executor: pops the queue in total order up to an end tick.

    The world object supplies `n_actors` and `handle_event(event, ctx)`;
    handlers call back into `schedule` / `schedule_inline`.  An optional
    `on_tick_complete(tick, ctx)` hook fires after the last event of a tick.
    """

    def __init__(self, world, event_budget_factor: int = 3):
        self.world = world
        self.queue = EventQueue()
        self.now = 0
        self._budget = event_budget_factor * world.n_actors
        self._tick_pops = 0
        self.max_tick_pops = 0
        self.events_executed = 0
        self._dest_frontier = {}

    def schedule(self, tick: int, event: Event) -> None:
        if tick < self.now:
            raise SchedulingError(
                f"scheduling at tick {tick} in the past of {self.now}")
        if tick != event.tick:
            event = dataclasses.replace(event, tick=tick)
        self.queue.push(event)

    def schedule_inline(self, event: Event) -> None:
        """Run the handler to completion now; the event never enters the queue."""
        self.world.handle_event(event, self)

    def pending_events(self):
        return self.queue.events()

    def run(self, t_end: int, finish: bool = True):
        # ordering and the per-tick budget are scoped per drain phase: the
        # forced synchronization epilogue is its own protocol round and may
        # share the final tick with natural activity
        self._dest_frontier = {}
        self._tick_pops = 0
        while len(self.queue):
            tick = self.queue.peek_tick()
            if tick > t_end:
                break
            if tick != self.now:
                self._finish_tick()
                self.now = tick
            event = self.queue.pop()
            if event.kind == UPDATE:
                last = self._dest_frontier.get(event.dest)
                if last == self.now:
                    raise RuntimeError(
                        f"destination {event.dest} popped an update after a "
                        f"push flux at tick {self.now}")
            else:
                self._dest_frontier[event.dest] = self.now
            self._tick_pops += 1
            if self._tick_pops > self._budget:
                raise LivelockError(
                    f"tick {self.now}: executed {self._tick_pops} events, "
                    f"bound is {self._budget}")
            self.events_executed += 1
            self.world.handle_event(event, self)
        if finish:
            self._finish_tick()
            self.now = t_end
        return self.world

    def _finish_tick(self):
        if self._tick_pops:
            self.max_tick_pops = max(self.max_tick_pops, self._tick_pops)
            hook = getattr(self.world, "on_tick_complete", None)
            if hook is not None:
                hook(self.now, self)
        self._tick_pops = 0
