"""Submesh actors for adaptive local timestepping.

Each submesh is one simulation actor: a contiguous block of cells stepping
synchronously, with per-side interface records mirroring the neighbor's
boundary state, an exact running integral of the shared face flux, and
running bounds on the flux coefficients that drive the CFL windows.

Cross-submesh effects travel exclusively as push-flux events; update events
advance a block to the current tick.  Both handlers follow the same
discipline: whenever any input of a CFL window changes, the bound and the
next update time are refreshed before control leaves the handler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, physics
from .des import LEFT, PUSH_FLUX, RIGHT, UPDATE, Event, Simulator

TICK_EPS = 1e-9
DEFAULT_CAP_TICKS = 2 ** 16


class SolverError(RuntimeError):
    """The solver produced an inadmissible state or lost a handler invariant."""


@dataclass
class InterfaceState:
    """One side of a submesh: neighbor metadata plus flux/CFL bookkeeping.

    neighbor < 0 marks a transmissive boundary: u_nb mirrors the owner's
    boundary cell and t_nb / t_sync track the owner's own update time, so the
    window math never special-cases domain ends.

    sum_flux integrates the face flux (flux units x seconds) from the owner's
    last update to max(t_nb, owner's last update); k_int / k_ext are the
    running coefficient bounds (1/seconds) anchored at the owner's last
    update and at t_sync respectively.
    """

    neighbor: int
    side: int
    u_nb: np.ndarray
    dx_nb: float
    t_nb: int = 0
    t_sync: int = 0
    sum_flux: np.ndarray = None
    k_int: float = 0.0
    k_ext: float = 0.0
    awaiting: bool = False

    def copy(self) -> "InterfaceState":
        out = InterfaceState(self.neighbor, self.side, self.u_nb.copy(),
                             self.dx_nb, self.t_nb, self.t_sync,
                             self.sum_flux.copy(), self.k_int, self.k_ext,
                             self.awaiting)
        return out


@dataclass
class SubmeshState:
    """One actor: cell block, update times, and the two interfaces."""

    sid: int
    cell_lo: int
    cell_hi: int
    u: np.ndarray
    dx: np.ndarray
    t_last: int = 0
    t_next: int = 0
    k_internal: float = 0.0
    emit_seq: int = 0
    left: InterfaceState = None
    right: InterfaceState = None
    force_marks: set = field(default_factory=set)

    @property
    def n_cells(self) -> int:
        return self.u.shape[0]

    def interfaces(self):
        return ((LEFT, self.left), (RIGHT, self.right))

    def snapshot(self) -> "SubmeshState":
        out = SubmeshState(self.sid, self.cell_lo, self.cell_hi,
                           self.u.copy(), self.dx, self.t_last, self.t_next,
                           self.k_internal, self.emit_seq,
                           self.left.copy(), self.right.copy(),
                           set(self.force_marks))
        return out


_KIND_RANK = {"init": -1, "update": 0, "push_flux": 1}


@dataclass
class TraceRecord:
    """One committed trace entry: an initial state, an update, or a push flux."""

    kind: str
    tick: int
    sid: int
    src: int = -1
    src_side: int = -1
    forced: bool = False
    cell_lo: int = 0
    cell_hi: int = 0
    states: np.ndarray = None
    pre_tick: int = -1
    sum_flux: tuple = None

    def sort_key(self):
        return (self.tick, _KIND_RANK[self.kind], self.sid, self.src, self.src_side)

    def signature(self):
        """Bit-level identity used for trace equivalence checks."""
        blob = None if self.states is None else self.states.tobytes()
        aux = None
        if self.sum_flux is not None:
            aux = tuple(sf.tobytes() for sf in self.sum_flux)
        return (self.kind, self.tick, self.sid, self.src, self.src_side,
                self.forced, self.cell_lo, self.cell_hi, self.pre_tick,
                blob, aux)


@dataclass
class EventLogRow:
    """Debug log of one executed event with pre/post state bits."""

    tick: int
    kind: int
    sid: int
    recv_side: int
    pre_bits: tuple
    post_bits: tuple
    effective: bool
    inline: bool


def pow2_floor(n: int) -> int:
    if n < 1:
        raise ValueError("pow2_floor needs n >= 1")
    return 1 << (n.bit_length() - 1)


class World:
    """All submesh actors plus the shared run configuration.

    detail: "compact" records update times only; "full" adds states and the
    flux integrals each update consumed; "debug" also keeps the per-event
    log used by the transition checker.
    """

    def __init__(self, mesh, partition, law, flux, initial_states,
                 dt_min: float, t_end: int, cap_ticks: int = DEFAULT_CAP_TICKS,
                 detail: str = "full", heuristics: bool = True):
        if dt_min <= 0.0:
            raise ValueError("dt_min must be positive")
        if t_end < 1:
            raise ValueError("t_end must be at least one tick")
        if mesh.periodic and partition.n_submeshes < 2:
            raise ValueError("a periodic run needs at least two submeshes")
        self.mesh = mesh
        self.partition = partition
        self.law = law
        self.flux = flux
        self.law_id = kernels.law_id(law.name)
        self.flux_id = kernels.flux_id(flux.name)
        self.dt_min = float(dt_min)
        self.t_end = int(t_end)
        self.cap_ticks = pow2_floor(int(cap_ticks))
        self.detail = detail
        self.heuristics = heuristics
        self.records = []
        self.sink = self.records
        self.event_log = [] if detail == "debug" else None
        self.tick_states = [] if detail == "debug" else None
        self.observers = []
        self.progress_clamps = 0
        self.progress_violations = 0
        self._depth = 0

        states = np.asarray(initial_states, dtype=float)
        if states.shape != (mesh.n_cells, law.n_vars):
            raise ValueError("initial states must be (n_cells, n_vars)")
        self.submeshes = [self._build_submesh(sid, lo, hi, states)
                          for sid, (lo, hi) in enumerate(partition.ranges())]
        for s in self.submeshes:
            self._seed_bounds(s)

    # -- construction -----------------------------------------------------

    def _build_submesh(self, sid, lo, hi, states):
        mesh, part = self.mesh, self.partition
        nsb = part.n_submeshes
        ranges = part.ranges()

        def boundary(side):
            if side == LEFT:
                nb = sid - 1 if sid > 0 else (nsb - 1 if mesh.periodic else -1)
            else:
                nb = sid + 1 if sid < nsb - 1 else (0 if mesh.periodic else -1)
            if nb < 0:
                # transmissive ghost mirrors the owner's boundary cell
                cell = lo if side == LEFT else hi - 1
                return InterfaceState(-1, side, states[cell].copy(),
                                      float(mesh.cell_sizes[cell]),
                                      sum_flux=np.zeros(self.law.n_vars))
            cell = ranges[nb][1] - 1 if side == LEFT else ranges[nb][0]
            return InterfaceState(nb, side, states[cell].copy(),
                                  float(mesh.cell_sizes[cell]),
                                  sum_flux=np.zeros(self.law.n_vars))

        return SubmeshState(sid=sid, cell_lo=lo, cell_hi=hi,
                            u=states[lo:hi].copy(),
                            dx=np.asarray(mesh.cell_sizes[lo:hi], dtype=float),
                            left=boundary(LEFT), right=boundary(RIGHT))

    def _seed_bounds(self, s):
        s.k_internal = kernels.internal_k_max(self.law_id, self.flux_id, s.u, s.dx)
        for side, n in s.interfaces():
            ki, ke = self._bounds(s, side)
            n.k_int = ki
            n.k_ext = ke

    @property
    def n_actors(self) -> int:
        return len(self.submeshes)

    def _next_uid(self, s):
        uid = (s.sid, s.emit_seq)
        s.emit_seq += 1
        return uid

    # -- helper API between the discretization and the event logic --------

    def _bounds(self, s, side):
        """Current (k_int, k_ext) candidates for one interface."""
        if side == LEFT:
            n = s.left
            kc, kd = physics.coefficient_bounds(
                self.law, self.flux, n.u_nb, s.u[0], s.u[1], float(s.dx[0]))
            return kd, kc
        n = s.right
        kc, kd = physics.coefficient_bounds(
            self.law, self.flux, s.u[-2], s.u[-1], n.u_nb, float(s.dx[-1]))
        return kc, kd

    def _face_flux(self, s, n):
        if n.side == LEFT:
            return self.flux(self.law, n.u_nb, s.u[0])
        return self.flux(self.law, s.u[-1], n.u_nb)

    def accumulate(self, t: int, s, n) -> None:
        """Extend the face-flux integral to tick t with the stored pair.

        The integration point is max(n.t_nb, s.t_last): the integral restarts
        at every owner update (sum_flux resets there) and otherwise resumes
        where the last neighbor update left it.  Piecewise-constant states
        make the rectangle rule exact.
        """
        start = max(n.t_nb, s.t_last)
        if t < start:
            raise SolverError(f"accumulate backwards: t={t} < start={start}")
        if t > start:
            f = self._face_flux(s, n)
            n.sum_flux = n.sum_flux + f * ((t - start) * self.dt_min)

    def advance(self, t: int, s) -> None:
        """Step every cell of the block from s.t_last to t.

        Interior faces integrate the frozen pair values; the two boundary
        faces consume the accumulated integrals, completed to t first.  The
        coefficient bounds anchored at the owner's update time restart from
        the new state.
        """
        if t <= s.t_last:
            raise SolverError(f"advance to t={t} not past t_last={s.t_last}")
        for _, n in s.interfaces():
            self.accumulate(t, s, n)
        m = s.n_cells
        dt_sec = (t - s.t_last) * self.dt_min
        g = np.empty((m + 1, self.law.n_vars))
        g[0] = s.left.sum_flux
        g[m] = s.right.sum_flux
        g[1:m] = kernels.interior_fluxes(self.law_id, self.flux_id, s.u) * dt_sec
        u_new = s.u + (g[:-1] - g[1:]) / s.dx[:, None]
        if not np.all(np.isfinite(u_new)) or (
                self.law.n_vars == 2 and np.any(u_new[:, 0] <= 0.0)):
            raise SolverError(
                f"inadmissible state in submesh {s.sid} at tick {t}")
        self._record_update(t, s, u_new)
        s.u = u_new
        s.t_last = t
        for _, n in s.interfaces():
            n.sum_flux = np.zeros(self.law.n_vars)
            if n.neighbor < 0:
                n.u_nb = (s.u[0] if n.side == LEFT else s.u[-1]).copy()
                n.t_nb = t
                n.t_sync = t
        s.k_internal = kernels.internal_k_max(self.law_id, self.flux_id, s.u, s.dx)
        for side, n in s.interfaces():
            ki, ke = self._bounds(s, side)
            n.k_int = ki
            n.k_ext = ke if n.t_sync == t else max(n.k_ext, ke)

    def _record_update(self, t, s, u_new):
        if self.detail == "compact":
            rec = TraceRecord("update", t, s.sid, cell_lo=s.cell_lo,
                              cell_hi=s.cell_hi, pre_tick=s.t_last)
        else:
            rec = TraceRecord("update", t, s.sid, cell_lo=s.cell_lo,
                              cell_hi=s.cell_hi, states=u_new.copy(),
                              pre_tick=s.t_last,
                              sum_flux=(s.left.sum_flux.copy(),
                                        s.right.sum_flux.copy()))
        self.sink.append(rec)

    def compute_t_next_bdry(self, s, n) -> float:
        """Largest admissible update time against one interface (float ticks).

        Two windows: the shared face measured from t_sync against k_ext, and
        the adjacent internal face measured from the owner's last update
        against k_int.  Zero bounds fall back to the step cap.
        """
        lim = float(s.t_last + self.cap_ticks)
        half = 0.5 / self.dt_min
        if n.k_ext > 0.0:
            lim = min(lim, n.t_sync + half / n.k_ext)
        if n.k_int > 0.0:
            lim = min(lim, s.t_last + half / n.k_int)
        return lim

    def _sync_step_estimate(self, s) -> float:
        """Step (float ticks) the block could take if synchronized right now."""
        est = float(self.cap_ticks)
        half = 0.5 / self.dt_min
        for side, _ in s.interfaces():
            ki, ke = self._bounds(s, side)
            if ke > 0.0:
                est = min(est, half / ke)
            if ki > 0.0:
                est = min(est, half / ki)
        if s.k_internal > 0.0:
            est = min(est, half / s.k_internal)
        return est

    def compute_t_next(self, s, tau: int) -> int:
        """Next update tick: power-of-two binned, floored at one tick.

        The binned increment counts from the block's last update.  As a side
        effect, neighbors whose window is the binning bottleneck (ratio >= 2
        against the synchronized estimate) are marked for a forced push flux.
        """
        bdry = {side: self.compute_t_next_bdry(s, n) for side, n in s.interfaces()}
        lim = min(bdry[LEFT], bdry[RIGHT])
        if s.k_internal > 0.0:
            lim = min(lim, s.t_last + 0.5 / (s.k_internal * self.dt_min))
        lim = min(lim, float(s.t_last + self.cap_ticks))
        n_ticks = int(math.floor(lim - s.t_last + TICK_EPS))
        if n_ticks < 1:
            n_ticks = 1
            self.progress_clamps += 1
            if s.t_last == tau and all(
                    n.t_nb == tau for _, n in s.interfaces() if n.neighbor >= 0):
                # just past a joint update: the one-tick floor is a genuine
                # guarantee violation, not stale-window bookkeeping
                self.progress_violations += 1
        else:
            n_ticks = pow2_floor(n_ticks)
        if self.heuristics:
            est = self._sync_step_estimate(s)
            for side, n in s.interfaces():
                if n.neighbor < 0 or n.t_sync >= tau:
                    continue
                gap = bdry[side] - tau
                if gap > TICK_EPS and est / gap >= 2.0:
                    s.force_marks.add(side)
        return s.t_last + n_ticks

    # -- event bodies ------------------------------------------------------

    def handle_event(self, event: Event, ctx) -> None:
        s = self.submeshes[event.dest]
        log = self.event_log is not None
        if log:
            pre = self.state_bits(s, ctx.now)
            inline = self._depth > 0
        self._depth += 1
        try:
            if event.kind == UPDATE:
                effective = self._update(ctx, event.dest, event.forced)
            else:
                effective = self._push_flux(ctx, event)
        finally:
            self._depth -= 1
        if log:
            recv = -1
            if event.kind == PUSH_FLUX:
                recv = RIGHT if event.src_side == LEFT else LEFT
            self.event_log.append(EventLogRow(
                ctx.now, event.kind, event.dest, recv, pre,
                self.state_bits(s, ctx.now), effective, inline))
        for obs in self.observers:
            obs.after_event(self, event, ctx, effective)

    def on_tick_complete(self, tick: int, ctx) -> None:
        if self.tick_states is not None:
            self.tick_states.append(
                (tick, [self.state_bits(s, tick) for s in self.submeshes]))
        for obs in self.observers:
            obs.after_tick(self, tick, ctx)

    def _update(self, ctx, sid: int, forced: bool) -> bool:
        tau = ctx.now
        s = self.submeshes[sid]
        if tau != s.t_next and not forced:
            return False
        if tau == s.t_last:
            return False
        self.advance(tau, s)
        for side, n in s.interfaces():
            if n.neighbor >= 0 and n.t_nb == tau and n.t_sync != tau:
                # the neighbor already updated at tau: this is a joint update
                n.t_sync = tau
                n.k_ext = self._bounds(s, side)[1]
        s.force_marks.clear()
        s.t_next = self.compute_t_next(s, tau)
        marks = s.force_marks
        for side, n in s.interfaces():
            if n.neighbor < 0:
                continue
            # exhausted means "no room for even the one-tick minimum step":
            # a synchronization restarts the window before the next update
            force_nb = (n.t_nb > n.t_sync
                        or self.compute_t_next_bdry(s, n) < tau + 1.0 - TICK_EPS
                        or side in marks)
            boundary = s.u[0] if side == LEFT else s.u[-1]
            ctx.schedule(tau, Event(
                PUSH_FLUX, tick=tau, dest=n.neighbor, forced=force_nb,
                src=sid, src_side=side,
                payload=(tuple(float(x) for x in boundary), tau),
                uid=self._next_uid(s)))
            if force_nb:
                n.t_sync = tau
                n.k_ext = self._bounds(s, side)[1]
                if self.heuristics:
                    n.awaiting = True
        s.force_marks = set()
        if s.t_next > tau and not (s.left.awaiting or s.right.awaiting):
            ctx.schedule(s.t_next, Event(
                UPDATE, tick=s.t_next, dest=sid, uid=self._next_uid(s)))
        return True

    def _push_flux(self, ctx, event: Event) -> bool:
        tau = ctx.now
        s = self.submeshes[event.dest]
        side = RIGHT if event.src_side == LEFT else LEFT
        n = s.right if side == RIGHT else s.left
        if n.neighbor != event.src:
            raise SolverError(
                f"push flux from {event.src} hit interface of {n.neighbor}")
        if n.t_nb > tau:
            raise SolverError("push flux arrived in the interface's past")
        self.accumulate(tau, s, n)
        n.u_nb = np.array(event.payload[0], dtype=float)
        n.t_nb = tau
        if n.t_nb == s.t_last:
            n.t_sync = tau
        ki, ke = self._bounds(s, side)
        # an empty window (anchor == tau) restarts the bound instead of maxing
        n.k_int = ki if s.t_last == tau else max(n.k_int, ki)
        n.k_ext = ke if n.t_sync == tau else max(n.k_ext, ke)
        n.awaiting = False
        self.sink.append(TraceRecord(
            "push_flux", tau, event.dest, src=event.src,
            src_side=event.src_side, forced=event.forced,
            states=np.array(event.payload[0], dtype=float)))
        s.force_marks.clear()
        s.t_next = self.compute_t_next(s, tau)
        if event.forced or s.t_next <= tau:
            ctx.schedule_inline(Event(
                UPDATE, tick=tau, dest=event.dest, forced=True,
                uid=self._next_uid(s)))
        if s.t_next > tau and not (s.left.awaiting or s.right.awaiting):
            ctx.schedule(s.t_next, Event(
                UPDATE, tick=s.t_next, dest=event.dest,
                uid=self._next_uid(s)))
        return True

    # -- state classification bits ----------------------------------------

    def state_bits(self, s, tau: int):
        """The six booleans that classify a submesh at tick tau.

        Transmissive sides report (True, True): a ghost never updates within
        a tick and is permanently in sync.
        """

        def side_bits(n):
            if n.neighbor < 0:
                return True, True
            return n.t_nb < tau, n.t_sync <= n.t_nb

        b3, b4 = side_bits(s.left)
        b5, b6 = side_bits(s.right)
        return (s.t_last < tau, s.t_next > tau, b3, b4, b5, b6)

    # -- run orchestration -------------------------------------------------

    def schedule_initial(self, sim) -> None:
        for s in self.submeshes:
            if self.detail != "compact":
                self.sink.append(TraceRecord(
                    "init", 0, s.sid, cell_lo=s.cell_lo, cell_hi=s.cell_hi,
                    states=s.u.copy()))
            else:
                self.sink.append(TraceRecord(
                    "init", 0, s.sid, cell_lo=s.cell_lo, cell_hi=s.cell_hi))
            s.force_marks.clear()
            s.t_next = self.compute_t_next(s, 0)
            s.force_marks = set()
            sim.schedule(s.t_next, Event(
                UPDATE, tick=s.t_next, dest=s.sid, uid=self._next_uid(s)))

    def schedule_finalization(self, sim) -> None:
        """Forced synchronization updates at t_end for every lagging block.

        Issued after the main drain so a block that reached t_end naturally
        is not charged a redundant queued update.
        """
        for s in self.submeshes:
            if s.t_last < self.t_end:
                sim.schedule(self.t_end, Event(
                    UPDATE, tick=self.t_end, dest=s.sid, forced=True,
                    uid=self._next_uid(s)))


def run_sequential(world: World, t_end: int = None):
    """Drive the world to t_end on the sequential kernel; returns the trace.

    Two phases: drain everything up to t_end, then force a synchronization
    update at exactly t_end for every block still behind it (plus the push
    fluxes those emit), so traces end on a common final time.
    """
    from .verify import EventTrace

    t_end = world.t_end if t_end is None else t_end
    sim = Simulator(world)
    world.schedule_initial(sim)
    sim.run(t_end, finish=False)
    world.schedule_finalization(sim)
    sim.run(t_end)
    return EventTrace.from_world(world, max_tick_pops=sim.max_tick_pops,
                                 events_executed=sim.events_executed)
