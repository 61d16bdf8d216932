"""Mechanical checking of solver guarantees on recorded event traces.

Offline checkers quantify over a finished EventTrace: local ordering of
update times, total variation, the maximum principle, the windowed CFL
inequality, and a full replay of every update from raw neighbor histories.
The live InvariantChecker additionally validates the solver's internal
bookkeeping (flux integrals, coefficient bounds, metadata consistency, and
scheduling progress) against the event queue after every executed event.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .des import LEFT, PUSH_FLUX, RIGHT, UPDATE
from .lts import TraceRecord

CFL_TOL = 1e-12
REPLAY_RTOL = 1e-12
MAX_RTOL = 1e-12


@dataclass
class Violation:
    check: str
    tick: int
    sid: int
    detail: str

    def line(self) -> str:
        return (f"CHECK {self.check} FAIL t={self.tick} submesh={self.sid} "
                f"detail={self.detail}")


@dataclass
class Report:
    check: str
    violations: list = field(default_factory=list)
    diagnostic: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, tick, sid, detail):
        self.violations.append(Violation(self.check, int(tick), int(sid), detail))

    def lines(self):
        return [v.line() for v in self.violations]

    def __repr__(self):
        state = "ok" if self.ok else f"{len(self.violations)} violations"
        return f"<Report {self.check}: {state}>"


class EventTrace:
    """The recorded run: per-event records plus enough context to re-derive
    every quantity the checkers quantify over."""

    def __init__(self, records, nodes, boundaries, periodic, law_name,
                 flux_name, dt_min, t_end, detail="full", config=None,
                 event_log=None, tick_states=None, max_tick_pops=0,
                 events_executed=0):
        self.records = list(records)
        self.nodes = np.asarray(nodes, dtype=float)
        self.boundaries = np.asarray(boundaries, dtype=int)
        self.periodic = bool(periodic)
        self.law_name = law_name
        self.flux_name = flux_name
        self.dt_min = float(dt_min)
        self.t_end = int(t_end)
        self.detail = detail
        self.config = dict(config or {})
        self.event_log = event_log
        self.tick_states = tick_states
        self.max_tick_pops = max_tick_pops
        self.events_executed = events_executed

    @classmethod
    def from_world(cls, world, max_tick_pops=0, events_executed=0):
        return cls(world.records, world.mesh.nodes, world.partition.boundaries,
                   world.mesh.periodic, world.law.name, world.flux.name,
                   world.dt_min, world.t_end, world.detail,
                   event_log=world.event_log,
                   tick_states=getattr(world, "tick_states", None),
                   max_tick_pops=max_tick_pops,
                   events_executed=events_executed)

    # -- derived views -----------------------------------------------------

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def n_submeshes(self) -> int:
        return self.boundaries.size - 1

    @property
    def cell_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    def law(self):
        return physics.get_law(self.law_name)

    def flux(self):
        return physics.get_flux(self.flux_name)

    def ranges(self):
        b = self.boundaries
        return [(int(b[i]), int(b[i + 1])) for i in range(self.n_submeshes)]

    def update_times(self):
        """Per-submesh sorted update ticks, t=0 included."""
        times = [[0] for _ in range(self.n_submeshes)]
        for rec in self.records:
            if rec.kind == "update":
                times[rec.sid].append(rec.tick)
        return times

    def update_records(self):
        return [r for r in self.records if r.kind == "update"]

    @property
    def committed_cell_updates(self) -> int:
        return sum(r.cell_hi - r.cell_lo for r in self.records
                   if r.kind == "update")

    def sorted_records(self):
        return sorted(self.records, key=lambda r: r.sort_key())

    def signatures(self):
        return [r.signature() for r in self.sorted_records()]

    def initial_states(self) -> np.ndarray:
        law = self.law()
        out = np.zeros((self.n_cells, law.n_vars))
        seen = 0
        for rec in self.records:
            if rec.kind == "init":
                out[rec.cell_lo:rec.cell_hi] = rec.states
                seen += rec.cell_hi - rec.cell_lo
        if seen != self.n_cells:
            raise ValueError("trace is missing initial states")
        return out

    # -- file form ----------------------------------------------------------

    def to_csv(self, path) -> None:
        """Header JSON line, then one CSV row per record.

        update rows: kind,tick,sid,cell_lo,cell_hi,pre_tick,states...,sumflux...
        push_flux rows: kind,tick,dest,src,src_side,forced,payload...
        """
        header = {
            "law": self.law_name, "flux": self.flux_name,
            "dt_min": self.dt_min, "t_end": self.t_end,
            "periodic": int(self.periodic),
            "detail": self.detail,
            "boundaries": [int(b) for b in self.boundaries],
            "nodes": [f"{x:.17g}" for x in self.nodes],
            "config": self.config,
        }
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for rec in self.records:
                if rec.kind == "push_flux":
                    fields = ["push_flux", rec.tick, rec.sid, rec.src,
                              rec.src_side, int(rec.forced)]
                    fields += [f"{x:.17g}" for x in rec.states]
                else:
                    fields = [rec.kind, rec.tick, rec.sid, rec.cell_lo,
                              rec.cell_hi, rec.pre_tick]
                    if rec.states is not None:
                        fields += [f"{x:.17g}" for x in rec.states.ravel()]
                        if rec.sum_flux is not None:
                            fields += [f"{x:.17g}"
                                       for sf in rec.sum_flux for x in sf]
                fh.write(",".join(str(f) for f in fields) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = json.loads(fh.readline())
            law = physics.get_law(header["law"])
            nv = law.n_vars
            records = []
            for line in fh:
                parts = line.rstrip("\n").split(",")
                kind = parts[0]
                if kind == "push_flux":
                    tick, sid, src, side, forced = (int(p) for p in parts[1:6])
                    payload = np.array([float(p) for p in parts[6:]])
                    records.append(TraceRecord(
                        "push_flux", tick, sid, src=src, src_side=side,
                        forced=bool(forced), states=payload))
                else:
                    tick, sid, lo, hi, pre = (int(p) for p in parts[1:6])
                    states = sum_flux = None
                    vals = [float(p) for p in parts[6:]]
                    m = hi - lo
                    if vals:
                        states = np.array(vals[:m * nv]).reshape(m, nv)
                        rest = vals[m * nv:]
                        if rest:
                            sum_flux = (np.array(rest[:nv]), np.array(rest[nv:]))
                    records.append(TraceRecord(
                        kind, tick, sid, cell_lo=lo, cell_hi=hi,
                        states=states, pre_tick=pre, sum_flux=sum_flux))
        return cls(records, [float(x) for x in header["nodes"]],
                   header["boundaries"], bool(header["periodic"]),
                   header["law"], header["flux"], header["dt_min"],
                   header["t_end"], header.get("detail", "full"),
                   config=header.get("config"))


# -- ghost padding shared by the state-walking checkers ----------------------


def _padded(states: np.ndarray, periodic: bool) -> np.ndarray:
    """States with one ghost cell on each side (wrap or transmissive copy)."""
    if periodic:
        return np.concatenate([states[-1:], states, states[:1]])
    return np.concatenate([states[:1], states, states[-1:]])


def _pair_count(n_cells: int, periodic: bool) -> int:
    return n_cells if periodic else n_cells - 1


def check_locally_ordered(trace: EventTrace) -> Report:
    """No two neighboring blocks both step strictly inside a sync interval.

    Synchronization times are reconstructed as common update ticks; cells
    inside one block share every tick, so only block interfaces can stray.
    """
    report = Report("locally_ordered")
    times = trace.update_times()
    nsb = trace.n_submeshes
    pairs = [(i, i + 1) for i in range(nsb - 1)]
    if trace.periodic and nsb > 1:
        pairs.append((nsb - 1, 0))
    for a, b in pairs:
        ta, tb = times[a], times[b]
        sa, sb = set(ta), set(tb)
        common = sorted(sa & sb)
        intervals = list(zip(common, common[1:])) + [(common[-1], None)]
        for lo, hi in intervals:
            in_a = any(lo < t and (hi is None or t < hi) for t in ta)
            in_b = any(lo < t and (hi is None or t < hi) for t in tb)
            if in_a and in_b:
                report.add(lo, a,
                           f"blocks {a} and {b} both step inside "
                           f"({lo}, {hi if hi is not None else 'end'})")
                break
    return report


def _walk_states(trace: EventTrace):
    """Yield (tick, states, updated submesh ids) after each tick's updates."""
    states = trace.initial_states()
    yield 0, states, []
    pending = {}
    for rec in trace.records:
        if rec.kind != "update":
            continue
        pending.setdefault(rec.tick, []).append(rec)
    for tick in sorted(pending):
        sids = []
        for rec in pending[tick]:
            if rec.states is None:
                raise ValueError("state checks need a full-detail trace")
            states[rec.cell_lo:rec.cell_hi] = rec.states
            sids.append(rec.sid)
        yield tick, states, sids


def total_variation(states: np.ndarray, periodic: bool, component: int = 0) -> float:
    vals = states[:, component]
    tv = float(np.sum(np.abs(np.diff(vals))))
    if periodic:
        tv += abs(float(vals[0] - vals[-1]))
    return tv


def check_tvd(trace: EventTrace, component: int = 0) -> Report:
    """Total variation never rises above its initial value.

    Mandatory for scalar laws; for systems the caller should treat the
    report as diagnostic (the report is flagged accordingly).
    """
    report = Report("tvd", diagnostic=trace.law().n_vars != 1)
    tv0 = None
    for tick, states, _ in _walk_states(trace):
        tv = total_variation(states, trace.periodic, component)
        if tv0 is None:
            tv0 = tv
            continue
        if tv > tv0 + 1e-11 * tv0 + 1e-14:
            report.add(tick, -1, f"TV={tv!r} exceeds TV0={tv0!r}")
    return report


def check_max_principle(trace: EventTrace) -> Report:
    report = Report("max_principle", diagnostic=trace.law().n_vars != 1)
    sup0 = None
    for tick, states, _ in _walk_states(trace):
        sup = np.max(np.abs(states), axis=0)
        if sup0 is None:
            sup0 = sup
            continue
        if np.any(sup > sup0 * (1.0 + MAX_RTOL) + 1e-300):
            report.add(tick, -1, f"max |u|={sup!r} exceeds initial {sup0!r}")
    return report


class _NextUpdate:
    """Next update tick after t, per cell, derived from the trace timeline."""

    def __init__(self, trace: EventTrace):
        self.times = [sorted(set(t)) for t in trace.update_times()]
        for sid, t in enumerate(self.times):
            if t[-1] < trace.t_end:
                t.append(trace.t_end)
        self.cell_sid = np.empty(trace.n_cells, dtype=int)
        for sid, (lo, hi) in enumerate(trace.ranges()):
            self.cell_sid[lo:hi] = sid

    def after(self, sid: int, t: int):
        ts = self.times[sid]
        i = bisect.bisect_right(ts, t)
        return ts[i] if i < len(ts) else None


def check_cfl(trace: EventTrace) -> Report:
    """Windowed CFL inequality at every inter-update instant.

    For each adjacent cell pair, with windows measured from the most recent
    reconstructed synchronization time and the trace's actual next-update
    ticks: 1 + w_right*C_right - w_left*D_left >= -tol.  States are piecewise
    constant between events, so checking just after each tick is exhaustive.
    """
    law, flux = trace.law(), trace.flux()
    if law.n_vars != 1:
        raise ValueError("the CFL checker applies to scalar laws")
    report = Report("cfl")
    nxt = _NextUpdate(trace)
    dxs = trace.cell_sizes
    n = trace.n_cells
    nsb = trace.n_submeshes
    ranges = trace.ranges()
    last_update = [0] * nsb
    pair_sync = {}
    for i in range(nsb - 1):
        pair_sync[(i, i + 1)] = 0
    if trace.periodic and nsb > 1:
        pair_sync[(nsb - 1, 0)] = 0
    for tick, states, sids in _walk_states(trace):
        if tick >= trace.t_end:
            break
        for sid in sids:
            last_update[sid] = tick
        for pair in pair_sync:
            a, b = pair
            if last_update[a] == tick and last_update[b] == tick:
                pair_sync[pair] = tick
        if tick == 0:
            sids = list(range(nsb))
        # affected pairs: cells within +-2 of any updated block
        cells = []
        for sid in sids:
            lo, hi = ranges[sid]
            cells.append(np.arange(lo - 2, hi + 2))
        js = np.unique(np.concatenate(cells))
        if trace.periodic:
            js = np.unique(js % n)
        else:
            js = js[(js >= 0) & (js < n - 1)]
        js = js[js < n] if trace.periodic else js
        if js.size == 0:
            continue
        padded = _padded(states, trace.periodic)
        # pair (j, j+1): D of cell j (triple j-1,j,j+1), C of cell j+1
        jr = (js + 1) % n if trace.periodic else js + 1
        d_lo = padded[js - 1 + 1, 0]
        d_mid = padded[js + 1, 0]
        d_hi = padded[js + 2, 0]
        c_lo = padded[jr - 1 + 1, 0]
        c_mid = padded[jr + 1, 0]
        c_hi = padded[jr + 2, 0]
        _, d_j = physics.harten_arrays(law, flux, d_lo, d_mid, d_hi, dxs[js])
        c_j1, _ = physics.harten_arrays(law, flux, c_lo, c_mid, c_hi, dxs[jr])
        sid_l = nxt.cell_sid[js]
        sid_r = nxt.cell_sid[jr]
        nxt_by_sid = {int(sid): nxt.after(int(sid), tick)
                      for sid in np.unique(np.concatenate([sid_l, sid_r]))}
        up_l = np.array([nxt_by_sid[int(s)] or -1 for s in sid_l], dtype=float)
        up_r = np.array([nxt_by_sid[int(s)] or -1 for s in sid_r], dtype=float)
        sync = np.empty(js.size)
        same = sid_l == sid_r
        sync[same] = np.array([last_update[int(s)] for s in sid_l[same]])
        for idx in np.nonzero(~same)[0]:
            a, b = int(sid_l[idx]), int(sid_r[idx])
            key = (a, b) if (a, b) in pair_sync else (b, a)
            sync[idx] = pair_sync[key]
        valid = (up_l >= 0) & (up_r >= 0)
        w_l = (up_l - sync) * trace.dt_min
        w_r = (up_r - sync) * trace.dt_min
        lhs = 1.0 + w_r * c_j1 - w_l * d_j
        bad = np.nonzero(valid & (lhs < -CFL_TOL))[0]
        for idx in bad:
            report.add(tick, int(sid_l[idx]),
                       f"pair ({js[idx]},{jr[idx]}): 1 + w*C - w*D = "
                       f"{lhs[idx]!r}")
        if not report.ok:
            break
    return report


def replay_oracle(trace: EventTrace) -> Report:
    """Re-integrate every update from raw neighbor histories.

    Independent of the solver's accumulators: boundary integrals are rebuilt
    piecewise from the neighbors' recorded update times and states, then both
    the post-states and the flux integrals the update consumed are compared.
    """
    if trace.detail != "full" and trace.detail != "debug":
        raise ValueError("replay needs a full-detail trace")
    law, flux = trace.law(), trace.flux()
    report = Report("replay")
    nsb = trace.n_submeshes
    ranges = trace.ranges()
    dxs = trace.cell_sizes
    # boundary-value history per submesh: ticks plus first/last cell states
    hist_t = [[] for _ in range(nsb)]
    hist_l = [[] for _ in range(nsb)]
    hist_r = [[] for _ in range(nsb)]
    cur = [None] * nsb

    def value_at(sid, t):
        i = bisect.bisect_right(hist_t[sid], t) - 1
        return hist_l[sid][i], hist_r[sid][i]

    def boundary_integral(sid, side, own_state, t0, t1):
        """Integral of the face flux over [t0, t1] against the neighbor."""
        nb = None
        if side == LEFT:
            nb = sid - 1 if sid > 0 else (nsb - 1 if trace.periodic else None)
        else:
            nb = sid + 1 if sid < nsb - 1 else (0 if trace.periodic else None)
        total = np.zeros(law.n_vars)
        if nb is None:
            f = (flux(law, own_state, own_state))
            return f * ((t1 - t0) * trace.dt_min)
        cuts = [t0]
        i = bisect.bisect_right(hist_t[nb], t0)
        while i < len(hist_t[nb]) and hist_t[nb][i] < t1:
            cuts.append(hist_t[nb][i])
            i += 1
        cuts.append(t1)
        for a, b in zip(cuts, cuts[1:]):
            if b <= a:
                continue
            vl, vr = value_at(nb, a)
            nb_state = vr if side == LEFT else vl
            f = (flux(law, nb_state, own_state) if side == LEFT
                 else flux(law, own_state, nb_state))
            total = total + f * ((b - a) * trace.dt_min)
        return total

    for rec in trace.sorted_records():
        if rec.kind == "init":
            sid = rec.sid
            hist_t[sid].append(0)
            hist_l[sid].append(rec.states[0].copy())
            hist_r[sid].append(rec.states[-1].copy())
            cur[sid] = rec.states.copy()
        elif rec.kind == "update":
            sid = rec.sid
            t0, t1 = rec.pre_tick, rec.tick
            u = cur[sid]
            m = u.shape[0]
            dt_sec = (t1 - t0) * trace.dt_min
            g = np.empty((m + 1, law.n_vars))
            g[0] = boundary_integral(sid, LEFT, u[0], t0, t1)
            g[m] = boundary_integral(sid, RIGHT, u[-1], t0, t1)
            g[1:m] = physics.flux_pairs_arr(law, flux, u[:-1], u[1:]) * dt_sec
            dx = dxs[rec.cell_lo:rec.cell_hi]
            expect = u + (g[:-1] - g[1:]) / dx[:, None]
            scale = 1.0 + np.abs(expect)
            if np.any(np.abs(expect - rec.states) > REPLAY_RTOL * scale):
                err = float(np.max(np.abs(expect - rec.states) / scale))
                report.add(t1, sid, f"state mismatch, rel err {err:.3e}")
            if rec.sum_flux is not None:
                for side, got in ((LEFT, rec.sum_flux[0]), (RIGHT, rec.sum_flux[1])):
                    want = g[0] if side == LEFT else g[m]
                    s2 = 1.0 + np.abs(want)
                    if np.any(np.abs(want - got) > REPLAY_RTOL * s2):
                        report.add(t1, sid, f"flux integral mismatch side {side}")
            hist_t[sid].append(t1)
            hist_l[sid].append(rec.states[0].copy())
            hist_r[sid].append(rec.states[-1].copy())
            cur[sid] = rec.states.copy()
    return report


# -- submesh state classification and transition checking -------------------

_WILD = None
_STATE_TABLE = {
    "q_a": (True, True, True, True, True, True),
    "q_b": (True, False, True, True, True, True),
    "q_c": (False, True, True, True, True, True),
    "q_d": (False, _WILD, True, False, True, True),
    "q_e": (False, _WILD, True, True, True, False),
    "q_f": (False, _WILD, True, False, True, False),
    "q_g": (True, True, False, True, True, True),
    "q_h": (False, True, False, True, True, True),
    "q_i": (False, _WILD, False, True, True, False),
    "q_j": (True, True, False, True, False, True),
    "q_k": (False, True, False, True, False, True),
}
ACCEPTING_STATES = {"q_a", "q_b", "q_c", "q_g", "q_h", "q_j", "q_k"}

_FSM_EDGES = {
    "update": {"q_b": {"q_c", "q_d", "q_e", "q_f"}},
    "pf_left": {"q_a": {"q_g", "q_h", "q_i"}, "q_b": {"q_h", "q_i"},
                "q_c": {"q_h"}, "q_d": {"q_h"},
                "q_e": {"q_i"}, "q_f": {"q_i"}},
    "pf_right": {"q_g": {"q_j", "q_k"}, "q_h": {"q_k"}, "q_i": {"q_k"}},
}


def classify_state(bits) -> str:
    """Match the six booleans against the state table; 'unreachable' if none."""
    for name, row in _STATE_TABLE.items():
        if all(want is _WILD or want == got for want, got in zip(row, bits)):
            return name
    return "unreachable"


def _mirror(bits):
    b1, b2, b3, b4, b5, b6 = bits
    return (b1, b2, b5, b6, b3, b4)


class InvariantChecker:
    """Live conjunction check after every executed event (sequential only).

    Validates, for the event's destination, its source, and their neighbors:
    local ordering of the interface metadata, all five CFL windows, the
    update rule and flux integrals against independently kept boundary
    histories, the running coefficient bounds over their windows, metadata
    consistency across interfaces, and scheduling progress against the live
    queue.  A full sweep runs at every tick boundary.
    """

    def __init__(self, world, strict: bool = False,
                 strict_progress: bool = True, sweep_every: int = 32):
        self.world = world
        self.strict = strict
        self.strict_progress = strict_progress and world.law.n_vars == 1
        # per-event checks cover every conjunct an event can change; the
        # periodic full sweep is a backstop
        self.sweep_every = max(1, sweep_every)
        self._ticks_seen = 0
        self.report = Report("invariant_I")
        nsb = world.n_actors
        self.hist_t = [[0] for _ in range(nsb)]
        self.hist_l = [[s.u[0].copy()] for s in world.submeshes]
        self.hist_r = [[s.u[-1].copy()] for s in world.submeshes]
        self.hist_l2 = [[s.u[1].copy()] for s in world.submeshes]
        self.hist_r2 = [[s.u[-2].copy()] for s in world.submeshes]
        self.shadow_u = [s.u.copy() for s in world.submeshes]
        self.shadow_t = [s.t_last for s in world.submeshes]
        # histories are append-only, so bounds and integrals over past
        # instants never change once computed
        self._bound_cache = {}
        self._flux_cache = {}
        self._window_cache = {}
        world.observers.append(self)

    # -- helpers -------------------------------------------------------------

    def _fail(self, clause, tick, sid, detail):
        self.report.add(tick, sid, f"{clause}: {detail}")
        if self.strict:
            raise AssertionError(self.report.violations[-1].line())

    def _neighbor_id(self, s, side):
        n = (s.left if side == LEFT else s.right).neighbor
        return None if n < 0 else n

    def _value_at(self, sid, t):
        i = bisect.bisect_right(self.hist_t[sid], t) - 1
        return self.hist_l[sid][i], self.hist_r[sid][i]

    def _nb_state_at(self, s, side, t):
        nb = self._neighbor_id(s, side)
        if nb is None:
            own = self.hist_l if side == LEFT else self.hist_r
            i = bisect.bisect_right(self.hist_t[s.sid], t) - 1
            return own[s.sid][i]
        vl, vr = self._value_at(nb, t)
        return vr if side == LEFT else vl

    def _boundary_integral(self, s, side, own_state, t0, t1):
        world = self.world
        nb = self._neighbor_id(s, side)
        total = np.zeros(world.law.n_vars)
        cuts = [t0]
        if nb is not None:
            i = bisect.bisect_right(self.hist_t[nb], t0)
            while i < len(self.hist_t[nb]) and self.hist_t[nb][i] < t1:
                cuts.append(self.hist_t[nb][i])
                i += 1
        cuts.append(t1)
        for a, b in zip(cuts, cuts[1:]):
            if b <= a:
                continue
            nb_state = self._nb_state_at(s, side, a)
            f = (world.flux(world.law, nb_state, own_state) if side == LEFT
                 else world.flux(world.law, own_state, nb_state))
            total = total + f * ((b - a) * world.dt_min)
        return total

    def _queue_index(self, ctx):
        by_dest_pf = {}
        by_src_pf_forced = set()
        pf_pairs = {}
        updates = {}
        for ev in ctx.pending_events():
            if ev.kind == PUSH_FLUX:
                by_dest_pf.setdefault((ev.dest, ev.tick), 0)
                by_dest_pf[(ev.dest, ev.tick)] += 1
                if ev.forced:
                    by_src_pf_forced.add((ev.src, ev.tick))
                pf_pairs.setdefault((ev.src, ev.dest, ev.tick), 0)
                pf_pairs[(ev.src, ev.dest, ev.tick)] += 1
            elif not ev.forced:
                updates.setdefault(ev.dest, set()).add(ev.tick)
        return by_dest_pf, by_src_pf_forced, pf_pairs, updates

    # -- clause groups -------------------------------------------------------

    def _check_lo(self, s, tau):
        for side, n in s.interfaces():
            if n.neighbor < 0:
                continue
            if not (s.t_last == n.t_sync or n.t_nb == n.t_sync):
                self._fail("LO", tau, s.sid,
                           f"side {side}: t_last={s.t_last} t_nb={n.t_nb} "
                           f"t_sync={n.t_sync}")

    def _check_cfl(self, s, tau):
        dt = self.world.dt_min
        half = 0.5 + CFL_TOL

        def win(t0, k):
            return (s.t_next - t0) * dt * k

        if win(s.t_last, s.k_internal) > half:
            self._fail("CFL", tau, s.sid, "internal window exceeded")
        for side, n in s.interfaces():
            if win(n.t_sync, n.k_ext) > half:
                self._fail("CFL", tau, s.sid, f"side {side} external window")
            if win(s.t_last, n.k_int) > half:
                self._fail("CFL", tau, s.sid, f"side {side} internal window")

    def _check_cr_state(self, s, tau):
        """Update rule: the advance that just ran matches a fresh replay."""
        world = self.world
        t0 = self.shadow_t[s.sid]
        u0 = self.shadow_u[s.sid]
        m = u0.shape[0]
        dt_sec = (s.t_last - t0) * world.dt_min
        g = np.empty((m + 1, world.law.n_vars))
        g[0] = self._boundary_integral(s, LEFT, u0[0], t0, s.t_last)
        g[m] = self._boundary_integral(s, RIGHT, u0[-1], t0, s.t_last)
        g[1:m] = physics.flux_pairs_arr(world.law, world.flux,
                                        u0[:-1], u0[1:]) * dt_sec
        dx = world.mesh.cell_sizes[s.cell_lo:s.cell_hi]
        expect = u0 + (g[:-1] - g[1:]) / dx[:, None]
        scale = 1.0 + np.abs(expect)
        if np.any(np.abs(expect - s.u) > REPLAY_RTOL * scale):
            self._fail("CR-update", tau, s.sid, "advance deviates from replay")

    def _check_cr_flux(self, s, tau):
        for side, n in s.interfaces():
            if n.neighbor < 0:
                continue
            hi = max(n.t_nb, s.t_last)
            key = (s.sid, side, s.t_last)
            cached = self._flux_cache.get(key)
            if cached is None or cached[0] > hi:
                own = s.u[0] if side == LEFT else s.u[-1]
                cached = (hi, self._boundary_integral(s, side, own,
                                                      s.t_last, hi))
                self._flux_cache[key] = cached
            elif cached[0] < hi:
                # the window only extends while the anchor stands still
                own = s.u[0] if side == LEFT else s.u[-1]
                more = self._boundary_integral(s, side, own, cached[0], hi)
                cached = (hi, cached[1] + more)
                self._flux_cache[key] = cached
            want = cached[1]
            scale = 1.0 + np.abs(want)
            if np.any(np.abs(want - n.sum_flux) > REPLAY_RTOL * scale):
                self._fail("CR-flux", tau, s.sid, f"side {side} integral drift")

    def _bound_at(self, s, side, sigma):
        """(k_int, k_ext) candidates from the boundary triple at instant sigma.

        Only called for instants strictly in the past, so the result is
        immutable and memoized.
        """
        key = (s.sid, side, sigma)
        got = self._bound_cache.get(key)
        if got is not None:
            return got
        law, flux = self.world.law, self.world.flux
        i = bisect.bisect_right(self.hist_t[s.sid], sigma) - 1
        nb_state = self._nb_state_at(s, side, sigma)
        if side == LEFT:
            kc, kd = physics.coefficient_bounds(
                law, flux, nb_state, self.hist_l[s.sid][i],
                self.hist_l2[s.sid][i], float(s.dx[0]))
            got = (kd, kc)
        else:
            kc, kd = physics.coefficient_bounds(
                law, flux, self.hist_r2[s.sid][i], self.hist_r[s.sid][i],
                nb_state, float(s.dx[-1]))
            got = (kc, kd)
        self._bound_cache[key] = got
        return got

    def _check_cr_bounds(self, s, tau):
        """Running K bounds dominate the coefficients over their windows.

        Historical instants are evaluated from the recorded trajectories for
        ticks strictly before tau; the current instant is evaluated from the
        interface mirror (what the owner has actually been told), because a
        neighbor's same-tick value only binds once its push flux lands.
        Window maxima are accumulated incrementally: a window only ever
        extends until its anchor moves.
        """
        for side, n in s.interfaces():
            if n.neighbor < 0:
                continue
            now_ki, now_ke = self.world._bounds(s, side)
            for anchor, k_field, pick, now_cand in (
                    (s.t_last, n.k_int, 0, now_ki),
                    (n.t_sync, n.k_ext, 1, now_ke)):
                key = (s.sid, side, pick, anchor)
                state = self._window_cache.get(key)
                if state is None:
                    own_i = bisect.bisect_right(self.hist_t[s.sid], anchor)
                    nb_i = bisect.bisect_right(self.hist_t[n.neighbor], anchor)
                    state = [own_i, nb_i, 0.0, False]
                    self._window_cache[key] = state
                if not state[3] and anchor < tau:
                    # the anchor instant enters once the window is nonempty
                    state[2] = max(state[2], self._bound_at(s, side, anchor)[pick])
                    state[3] = True
                for which, sid in ((0, s.sid), (1, n.neighbor)):
                    ts = self.hist_t[sid]
                    i = state[which]
                    while i < len(ts) and ts[i] < tau:
                        state[2] = max(state[2],
                                       self._bound_at(s, side, ts[i])[pick])
                        i += 1
                    state[which] = i
                worst = max(state[2], now_cand)
                if k_field < worst - 1e-12 * (1.0 + worst):
                    self._fail("CR-K", tau, s.sid,
                               f"side {side} window from {anchor}: "
                               f"K={k_field!r} < required {worst!r}")

    def _check_ci(self, s, tau, qidx):
        world = self.world
        _, _, pf_pairs, _ = qidx
        for side, n in s.interfaces():
            if n.neighbor < 0:
                continue
            other = world.submeshes[n.neighbor]
            mirror = other.right if side == LEFT else other.left
            own_bdry = s.u[0] if side == LEFT else s.u[-1]
            pf_from_s = pf_pairs.get((s.sid, n.neighbor, tau), 0) > 0
            pf_from_o = pf_pairs.get((n.neighbor, s.sid, tau), 0) > 0
            ci_data = (np.array_equal(mirror.u_nb, own_bdry)
                       and mirror.t_nb == s.t_last) or pf_from_s
            if not ci_data:
                self._fail("CI-data", tau, s.sid,
                           f"side {side}: mirror stale and no push flux queued")
            ci_sync = (n.t_sync == mirror.t_sync
                       or (n.t_sync == tau and pf_from_s)
                       or (mirror.t_sync == tau and pf_from_o))
            if not ci_sync:
                self._fail("CI-sync", tau, s.sid,
                           f"side {side}: t_sync {n.t_sync} vs {mirror.t_sync}")

    def _check_p(self, s, tau, qidx):
        by_dest_pf, by_src_pf_forced, _, updates = qidx
        if s.t_last == self.world.t_end:
            return
        pending = updates.get(s.sid, ())
        if (s.t_next in pending and s.t_next >= tau and s.t_next > s.t_last):
            return
        if by_dest_pf.get((s.sid, tau), 0) > 0:
            return
        if (s.sid, tau) in by_src_pf_forced:
            return
        self._fail("P", tau, s.sid,
                   f"nothing scheduled: t_next={s.t_next} t_last={s.t_last}")

    # -- observer hooks --------------------------------------------------------

    def _check_submesh(self, s, tau, qidx):
        self._check_lo(s, tau)
        self._check_cfl(s, tau)
        self._check_cr_flux(s, tau)
        self._check_cr_bounds(s, tau)
        self._check_ci(s, tau, qidx)
        self._check_p(s, tau, qidx)

    def after_event(self, world, event, ctx, effective):
        tau = ctx.now
        s = world.submeshes[event.dest]
        if effective and event.kind == UPDATE:
            self._check_cr_state(s, tau)
            self.hist_t[s.sid].append(s.t_last)
            self.hist_l[s.sid].append(s.u[0].copy())
            self.hist_r[s.sid].append(s.u[-1].copy())
            self.hist_l2[s.sid].append(s.u[1].copy())
            self.hist_r2[s.sid].append(s.u[-2].copy())
            self.shadow_u[s.sid] = s.u.copy()
            self.shadow_t[s.sid] = s.t_last
        if world._depth > 0:
            # mid-handler instant (inline update inside a push flux): the
            # enclosing event is checked atomically once it completes
            return
        qidx = self._queue_index(ctx)
        affected = {event.dest}
        if event.src >= 0:
            affected.add(event.src)
        for side in (LEFT, RIGHT):
            nb = self._neighbor_id(s, side)
            if nb is not None:
                affected.add(nb)
        for sid in sorted(affected):
            self._check_submesh(world.submeshes[sid], tau, qidx)

    def after_tick(self, world, tick, ctx):
        self._ticks_seen += 1
        if self._ticks_seen % self.sweep_every == 0 or tick >= world.t_end:
            qidx = self._queue_index(ctx)
            for s in world.submeshes:
                self._check_submesh(s, tick, qidx)
        if self.strict_progress and world.progress_violations:
            self._fail("progress", tick, -1,
                       f"{world.progress_violations} post-joint-update "
                       f"one-tick clamps under a compliant dt_min")


def check_fsm_transitions(trace: EventTrace) -> Report:
    """Every effective transition is a legal edge; ticks end accepting.

    Blocks whose first push flux of a tick arrives from the right are
    mirrored for that whole tick, matching the table's left-first
    orientation.  The final forced synchronization tick is excluded: it is a
    termination device, not part of the per-tick protocol.
    """
    report = Report("fsm")
    if trace.event_log is None:
        report.add(0, -1, "trace carries no event log (run with detail='debug')")
        return report
    rows_by_tick = {}
    for row in trace.event_log:
        rows_by_tick.setdefault(row.tick, []).append(row)
    for tick, rows in sorted(rows_by_tick.items()):
        if tick >= trace.t_end:
            continue
        mirror = {}
        for row in rows:
            if row.kind == PUSH_FLUX and row.sid not in mirror:
                mirror[row.sid] = row.recv_side == RIGHT
        for row in rows:
            if not row.effective or row.inline:
                continue
            flip = mirror.get(row.sid, False)
            pre = classify_state(_mirror(row.pre_bits) if flip else row.pre_bits)
            post = classify_state(_mirror(row.post_bits) if flip else row.post_bits)
            if row.kind == UPDATE:
                label = "update"
            else:
                side = row.recv_side
                if flip:
                    side = LEFT if side == RIGHT else RIGHT
                label = "pf_left" if side == LEFT else "pf_right"
            allowed = _FSM_EDGES[label].get(pre, set())
            if post not in allowed:
                report.add(tick, row.sid,
                           f"{label}: {pre} -> {post} not an edge")
    if trace.tick_states is not None:
        log_by_tick = rows_by_tick
        for tick, bits_list in trace.tick_states:
            if tick >= trace.t_end:
                continue
            mirror = {}
            for row in log_by_tick.get(tick, ()):  # same orientation as above
                if row.kind == PUSH_FLUX and row.sid not in mirror:
                    mirror[row.sid] = row.recv_side == RIGHT
            for sid, bits in enumerate(bits_list):
                state = classify_state(_mirror(bits) if mirror.get(sid) else bits)
                if state not in ACCEPTING_STATES:
                    report.add(tick, sid, f"tick ends in {state}")
    return report
