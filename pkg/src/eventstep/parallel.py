"""Optimistic multi-worker executor.

Submeshes are owned by virtual workers stepped round-robin in-process.  Each
round has two parts:

* The storm: every event at the current global minimum tick runs through one
  canonical queue in exactly the sequential engine's order (executed "on"
  its owner worker).  Same-tick forced-synchronization cascades are order
  sensitive, so their serialization is what makes committed traces
  bit-identical to the sequential executor's.

* Speculation: workers then run ahead on events up to `lookahead` ticks past
  the storm, in local key order -- update events freely, push fluxes only
  once their destination has already advanced at that tick (the one case
  whose outcome is order-insensitive).  Each speculative execution snapshots
  the submesh first.

A storm emission landing behind a submesh's speculative frontier is a
straggler: the submesh rolls back to the snapshot before that point, its
speculative sends are retracted (anti-events matched by emission uid,
cascading into speculative consumers), and its input events re-enqueue for
deterministic re-execution.  Events whose tick the storm has reached are
promoted to canonical and can no longer roll back; a global-virtual-time
bound advances at event-count epochs, committing records below it and
fossil-collecting their snapshots.

`lookahead` = 0 disables speculation entirely (synchronous workloads stay
rollback-free); any value yields the same committed trace.  The run mirrors
the sequential driver's two phases (main drain, then the forced
synchronization at t_end); destination frontiers reset at the phase
boundary exactly as the sequential executor's per-phase ordering does.
"""

from __future__ import annotations

import dataclasses
import heapq
from dataclasses import dataclass, field

from .des import UPDATE, Event
from .lts import World


class RollbackError(RuntimeError):
    """Rollback needed past the available snapshot history or a commit."""


@dataclass(frozen=True)
class WorkerAssignment:
    """Total map submesh id -> worker id."""

    rho: tuple

    @classmethod
    def from_array(cls, rho):
        return cls(tuple(int(r) for r in rho))

    @classmethod
    def contiguous(cls, n_submeshes: int, n_workers: int):
        """Even contiguous blocks of submeshes per worker."""
        if n_workers < 1:
            raise ValueError("need at least one worker")
        per = n_submeshes / n_workers
        return cls(tuple(min(int(i / per), n_workers - 1)
                         for i in range(n_submeshes)))

    @property
    def n_workers(self) -> int:
        return max(self.rho) + 1


def _full_key(event: Event):
    return (*event.order_key(), event.uid)


@dataclass
class _Processed:
    """One executed event with everything needed to undo it."""

    event: Event
    key: tuple
    phase: int
    snapshot: object
    speculative: bool = True
    records: list = field(default_factory=list)
    outputs: list = field(default_factory=list)


class _Worker:
    def __init__(self, wid: int):
        self.wid = wid
        self.pending = []
        self.inbox = []

    def push(self, event: Event) -> None:
        heapq.heappush(self.pending, (_full_key(event), event))

    def min_tick(self):
        ticks = [ev.tick for ev in self.inbox]
        if self.pending:
            ticks.append(self.pending[0][0][0])
        return min(ticks) if ticks else None


class _Ctx:
    """The scheduling surface handlers see; routed through the executor."""

    def __init__(self, executor):
        self.now = 0
        self._exec = executor

    def schedule(self, tick, event):
        self._exec._schedule(tick, event)

    def schedule_inline(self, event):
        self._exec._schedule_inline(event)

    def pending_events(self):
        raise RuntimeError("queue introspection is sequential-only")


class OptimisticExecutor:
    """Drives a World across virtual workers; see the module docstring."""

    def __init__(self, world: World, assignment: WorkerAssignment,
                 epoch: int = 16, burst: int = 8, lookahead: int = 0,
                 history_limit: int = 4096):
        if world.observers:
            raise ValueError("live observers require the sequential executor")
        if len(assignment.rho) != world.n_actors:
            raise ValueError("assignment must cover every submesh")
        self.world = world
        self.assignment = assignment
        self.n_workers = assignment.n_workers
        self.workers = [_Worker(w) for w in range(self.n_workers)]
        self.epoch = max(1, epoch)
        self.burst = max(1, burst)
        self.lookahead = int(lookahead)
        self.history_limit = history_limit
        self.in_transit = {}
        nsb = world.n_actors
        self.log = [list() for _ in range(nsb)]
        self.frontier = [None] * nsb
        self.phase = 0
        self.committed = []
        self.gvt = 0
        self.gvt_history = [0]
        self.stats = {
            "rollbacks": 0,
            "rolled_back_updates": 0,
            "committed_events": 0,
            "per_worker": [{"executed": 0, "rollbacks": 0,
                            "rolled_back_updates": 0}
                           for _ in range(self.n_workers)],
        }
        self._ctx = _Ctx(self)
        self._current = None
        self._active_worker = None
        self._t_end = None

    # -- routing ---------------------------------------------------------

    def _worker_of(self, sid: int) -> _Worker:
        return self.workers[self.assignment.rho[sid]]

    def _schedule(self, tick: int, event: Event) -> None:
        if tick != event.tick:
            event = dataclasses.replace(event, tick=tick)
        if self._current is not None:
            self._current.outputs.append(event)
        target = self._worker_of(event.dest)
        if self._current is not None and target is not self._active_worker:
            # cross-worker send: in flight until the receiver drains it
            self.in_transit[event.uid] = event.tick
            target.inbox.append(event)
        else:
            self._deliver(target, event)

    def _schedule_inline(self, event: Event) -> None:
        # atomic with the enclosing event: one snapshot covers both
        self.world.handle_event(event, self._ctx)

    def schedule(self, tick: int, event: Event) -> None:
        """Initial/finalization scheduling entry (sequential-driver shape)."""
        self._schedule(tick, event)

    # -- straggler handling ------------------------------------------------

    def _deliver(self, worker: _Worker, event: Event) -> None:
        front = self.frontier[event.dest]
        if front is not None and front[0] == self.phase \
                and front[1][0] > event.tick:
            # straggler: the destination speculated past this event's tick.
            # Same-tick reorderings are left alone: the storm serializes the
            # order-sensitive ones and post-update fluxes commute.
            self._rollback_ticks(event.dest, event.tick)
        worker.push(event)

    def _rollback_ticks(self, sid: int, tick: int) -> None:
        log = self.log[sid]
        for entry in log:
            if entry.phase == self.phase and entry.key[0] > tick:
                self._rollback(sid, entry.key, inclusive=True)
                return

    def _rollback(self, sid: int, to_key, inclusive: bool = False) -> None:
        log = self.log[sid]
        idx = len(log)
        while idx > 0 and log[idx - 1].phase == self.phase and (
                log[idx - 1].key > to_key
                or (inclusive and log[idx - 1].key == to_key)):
            idx -= 1
        if idx == len(log):
            return
        if not all(entry.speculative for entry in log[idx:]):
            raise RollbackError(
                f"submesh {sid}: straggler behind canonical work at "
                f"{log[idx].key}")
        if log[idx].key[0] < self.gvt:
            raise RollbackError(
                f"submesh {sid}: straggler below committed time {self.gvt}")
        undone = log[idx:]
        del log[idx:]
        wid = self.assignment.rho[sid]
        self.stats["rollbacks"] += 1
        self.stats["per_worker"][wid]["rollbacks"] += 1
        # restore and re-enqueue inputs before retracting outputs: a cascade
        # can re-enter this submesh and must find a consistent picture
        self.world.submeshes[sid] = undone[0].snapshot
        self.frontier[sid] = ((log[-1].phase, log[-1].key) if log else None)
        worker = self._worker_of(sid)
        for entry in undone:
            worker.push(entry.event)
        for entry in reversed(undone):
            n_upd = sum(1 for rec in entry.records if rec.kind == "update")
            self.stats["rolled_back_updates"] += n_upd
            self.stats["per_worker"][wid]["rolled_back_updates"] += n_upd
            for out in entry.outputs:
                self._annihilate(out)

    def _annihilate(self, event: Event) -> None:
        """Retract one speculative send wherever it currently lives."""
        uid = event.uid
        worker = self._worker_of(event.dest)
        for i, (_, ev) in enumerate(worker.pending):
            if ev.uid == uid:
                worker.pending.pop(i)
                heapq.heapify(worker.pending)
                return
        for i, ev in enumerate(worker.inbox):
            if ev.uid == uid:
                worker.inbox.pop(i)
                self.in_transit.pop(uid, None)
                return
        for entry in self.log[event.dest]:
            if entry.event.uid == uid:
                # consumed downstream: cascade before cancelling
                self._rollback(event.dest, entry.key, inclusive=True)
                self._annihilate(event)
                return
        raise RollbackError(f"anti-event for unknown uid {uid}")

    # -- main loop -----------------------------------------------------------

    def _drain_inbox(self, worker: _Worker) -> None:
        while worker.inbox:
            event = worker.inbox.pop(0)
            self.in_transit.pop(event.uid, None)
            self._deliver(worker, event)

    def _min_live_tick(self):
        ticks = list(self.in_transit.values())
        for worker in self.workers:
            t = worker.min_tick()
            if t is not None:
                ticks.append(t)
        return min(ticks) if ticks else None

    def _execute(self, worker: _Worker, event: Event, key,
                 speculative: bool) -> None:
        sid = event.dest
        log = self.log[sid]
        if len(log) >= self.history_limit:
            raise RollbackError(
                f"submesh {sid}: snapshot history exceeds {self.history_limit}")
        entry = _Processed(event, key, self.phase,
                           self.world.submeshes[sid].snapshot(), speculative)
        log.append(entry)
        self.frontier[sid] = (self.phase, key)
        self._current = entry
        self._active_worker = worker
        self._ctx.now = event.tick
        self.world.sink = entry.records
        try:
            self.world.handle_event(event, self._ctx)
        finally:
            self.world.sink = self.world.records
            self._current = None
            self._active_worker = None
        self.stats["per_worker"][worker.wid]["executed"] += 1
        self._since_epoch += 1
        if self._since_epoch >= self.epoch:
            self._advance_gvt()
            self._since_epoch = 0

    def compute_gvt(self) -> int:
        """Lower bound on all future event times; nondecreasing."""
        live = self._min_live_tick()
        if live is None:
            return (self._t_end + 1) if self._t_end is not None else self.gvt
        return max(self.gvt, live)

    def _advance_gvt(self) -> None:
        gvt = self.compute_gvt()
        if gvt < self.gvt:
            raise RollbackError(
                f"global virtual time went backwards: {gvt} < {self.gvt}")
        self.gvt = gvt
        self.gvt_history.append(gvt)
        for log in self.log:
            keep = 0
            while keep < len(log) and log[keep].key[0] < gvt:
                keep += 1
            for entry in log[:keep]:
                self.committed.extend(entry.records)
                self.stats["committed_events"] += 1
            del log[:keep]

    def _promote(self, tick: int) -> None:
        """Events at or below the storm tick can no longer roll back."""
        for log in self.log:
            for entry in log:
                if entry.key[0] <= tick:
                    entry.speculative = False

    def _storm(self, tick: int) -> None:
        """Run every event at this tick in canonical order, like the
        sequential engine; executions land on their owner workers."""
        while True:
            for worker in self.workers:
                self._drain_inbox(worker)
            best = None
            for worker in self.workers:
                if worker.pending and worker.pending[0][1].tick == tick:
                    if best is None or worker.pending[0][0] < best[0]:
                        best = (worker.pending[0][0], worker)
            if best is None:
                return
            _, worker = best
            key, event = heapq.heappop(worker.pending)
            self._execute(worker, event, key, speculative=False)

    def _speculate(self, t_end: int, horizon: int) -> None:
        for worker in self.workers:
            self._drain_inbox(worker)
            for _ in range(self.burst):
                if not worker.pending:
                    break
                key, event = worker.pending[0]
                if event.tick > min(horizon, t_end):
                    break
                if event.kind != UPDATE and \
                        self.world.submeshes[event.dest].t_last != event.tick:
                    # a pre-update push flux is order-sensitive: leave it
                    # for its tick's storm
                    break
                heapq.heappop(worker.pending)
                self._execute(worker, event, key, speculative=True)

    def _loop(self, t_end: int) -> None:
        self._since_epoch = 0
        while True:
            for worker in self.workers:
                self._drain_inbox(worker)
            live = self._min_live_tick()
            if live is None or live > t_end:
                return
            self._promote(live)
            self._storm(live)
            if self.lookahead > 0:
                self._speculate(t_end, live + self.lookahead)
            self._advance_gvt()

    def run(self, t_end: int = None):
        self._t_end = self.world.t_end if t_end is None else t_end
        self.world.schedule_initial(self)
        self._loop(self._t_end)
        self.phase += 1
        self.frontier = [None] * self.world.n_actors
        self.world.schedule_finalization(self)
        self._loop(self._t_end)
        self._advance_gvt()
        if any(self.log):
            raise RollbackError("uncommitted work after quiescence")
        self.committed.extend(self.world.records)
        self.world.records = []
        return self._build_trace()

    def _build_trace(self):
        from .verify import EventTrace

        arrival = {id(rec): i for i, rec in enumerate(self.committed)}
        records = sorted(self.committed,
                         key=lambda r: (*r.sort_key(), arrival[id(r)]))
        world = self.world
        return EventTrace(records, world.mesh.nodes,
                          world.partition.boundaries, world.mesh.periodic,
                          world.law.name, world.flux.name, world.dt_min,
                          world.t_end, world.detail)


def run_optimistic(world: World, n_workers: int = 1, assignment=None,
                   t_end: int = None, **kwargs):
    """Run the world optimistically; the committed trace matches sequential.

    Returns the trace with executor stats attached as `parallel_stats` and
    the GVT history as `gvt_history`.
    """
    if assignment is None:
        assignment = WorkerAssignment.contiguous(world.n_actors, n_workers)
    executor = OptimisticExecutor(world, assignment, **kwargs)
    trace = executor.run(world.t_end if t_end is None else t_end)
    trace.parallel_stats = executor.stats
    trace.gvt_history = executor.gvt_history
    return trace
