"""Run configuration, problem setup, orchestration, and artifact export.

Flags mirror the environment-variable overrides (prefix LTS_, flag name
upper-cased with dashes as underscores); precedence is flag > environment >
default.  Every run prints `elapsed_us=<integer>` as its final stdout line.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import des, lts, mesh as meshmod, parallel, perfmodel, physics, \
    solutions, verify

PROBLEMS = ("burgers", "swe")
ICS_BY_PROBLEM = {
    "burgers": ("shockwave", "rarefaction", "constant"),
    "swe": ("dambreak", "lake-at-rest", "constant"),
}
MODES = ("lts-seq", "lts-par", "sync")
PERIODIC_ICS = ("constant", "lake-at-rest")


@dataclass
class RunConfig:
    problem: str = "burgers"
    ics: str = "shockwave"
    mesh: str = "uniform"
    eps: float = meshmod.DEFAULT_EPS
    cells: int = 100
    submeshes: int = 20
    t_end: float = 0.25
    dt_min: float = 0.0          # 0 means "derive from the reference step"
    mode: str = "lts-seq"
    workers: int = 1
    lookahead: int = 0
    flux: str = "llf"
    cap_ticks: int = lts.DEFAULT_CAP_TICKS
    check: str = "off"           # off | diagnostic | on
    trace_out: str = ""
    stats_out: str = ""
    spacetime_out: str = ""
    splitters: str = ""
    mesh_file: str = ""
    detail: str = "full"

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.ics not in ICS_BY_PROBLEM[self.problem]:
            raise ValueError(
                f"ics for {self.problem} must be one of "
                f"{ICS_BY_PROBLEM[self.problem]}")
        if self.mesh not in ("uniform", "polynomial"):
            raise ValueError("mesh must be uniform or polynomial")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.dt_min < 0.0:
            raise ValueError("dt_min must be positive (or 0 for the default)")
        if 2 * self.submeshes > self.cells:
            raise ValueError("need at least two cells per submesh")
        if self.flux == "godunov" and self.problem != "burgers":
            raise ValueError("the Godunov flux is scalar-only")
        if self.check not in ("off", "diagnostic", "on"):
            raise ValueError("check must be off, diagnostic or on")
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text)).validate()


def setup_initial_conditions(config: RunConfig, mesh: meshmod.Mesh1D) -> np.ndarray:
    """Cell states from the exact initial data, midpoint rule per cell.

    Piecewise-constant data with the jump on a node is represented exactly;
    otherwise the midpoint value stands in for the cell average.
    """
    x = mesh.centers
    n = mesh.n_cells
    if config.problem == "burgers":
        if config.ics == "shockwave":
            return (x < 0.0).astype(float)[:, None]
        if config.ics == "rarefaction":
            return (x > 0.0).astype(float)[:, None]
        return np.ones((n, 1))
    h = np.ones(n)
    if config.ics == "dambreak":
        h = np.where(x < 0.0, 1.0, solutions.DAM_BREAK_H_RIGHT)
    out = np.zeros((n, 2))
    out[:, 0] = h
    return out


def _analytic_profile(config: RunConfig):
    return solutions.wave_speed_profile(config.problem, config.ics)


def reference_dt(config: RunConfig, mesh: meshmod.Mesh1D) -> float:
    return solutions.reference_timestep(mesh, _analytic_profile(config),
                                        config.t_end)


def progress_bound(config: RunConfig, mesh: meshmod.Mesh1D,
                   law, flux) -> float:
    """Largest dt_min with a stepping guarantee, from sampled initial data.

    The flux-derivative constant is sampled as the divided-difference bound
    over initial-state pairs; exceeding the bound only warns, because runs
    with transient wave-speed growth deliberately operate outside it.
    """
    states = setup_initial_conditions(config, mesh)
    law_obj = physics.get_law(law) if isinstance(law, str) else law
    worst = 0.0
    for u in states:
        worst = max(worst, law_obj.wave_speed(u))
    if law_obj.n_vars == 1 and flux == "llf":
        # local Lax-Friedrichs secants can exceed the wave speed by 3/2
        worst *= 1.5
    if worst <= 0.0:
        return math.inf
    return mesh.dx_min / (2.0 * worst)


def build_world(config: RunConfig):
    config.validate()
    if config.mesh_file:
        m = meshmod.read_mesh(config.mesh_file)
    else:
        periodic = config.ics in PERIODIC_ICS
        m = meshmod.build_mesh(config.cells, config.mesh, eps=config.eps,
                               domain=(-1.0, 1.0), periodic=periodic)
    dt_ref = reference_dt(config, m)
    dt_min = config.dt_min if config.dt_min > 0.0 else 0.5 * dt_ref
    law = physics.get_law(config.problem)
    flux = physics.get_flux(config.flux)
    bound = progress_bound(config, m, law, config.flux)
    if dt_min >= bound:
        print(f"warning: dt_min={dt_min:.3e} exceeds the stepping guarantee "
              f"bound {bound:.3e}; one-tick floors may occur", file=sys.stderr)
    if config.splitters:
        part = meshmod.read_splitters(config.splitters, m.n_cells)
    else:
        part = perfmodel.iterate_partition(m, config.submeshes, dt_min=dt_min,
                                           cap_ticks=config.cap_ticks)
    t_end_ticks = max(1, round(config.t_end / dt_min))
    states = setup_initial_conditions(config, m)
    detail = "debug" if config.check == "on" else config.detail
    world = lts.World(m, part, law, flux, states, dt_min, t_end_ticks,
                      cap_ticks=config.cap_ticks, detail=detail)
    return world, dt_ref


def run_sync(config: RunConfig, m: meshmod.Mesh1D, states: np.ndarray,
             dt: float, law, flux):
    """Fixed-step synchronous reference: every cell, every step.

    Returns (final states, cell update count, steps).  Boundary handling
    matches the event-driven solver (periodic wrap or transmissive copy).
    """
    from . import kernels

    n_steps = max(1, round(config.t_end / dt))
    u = states.copy()
    law_id = kernels.law_id(law.name)
    flux_id = kernels.flux_id(flux.name)
    dx = m.cell_sizes[:, None]
    for _ in range(n_steps):
        if m.periodic:
            padded = np.concatenate([u[-1:], u, u[:1]])
        else:
            padded = np.concatenate([u[:1], u, u[-1:]])
        g = kernels.interior_fluxes(law_id, flux_id, padded) * dt
        u = u + (g[:-1] - g[1:]) / dx
        if law.n_vars == 2 and np.any(u[:, 0] <= 0.0):
            raise lts.SolverError("inadmissible state in the reference run")
    return u, n_steps * m.n_cells, n_steps


def final_states(trace) -> np.ndarray:
    out = trace.initial_states()
    for rec in trace.sorted_records():
        if rec.kind == "update":
            out[rec.cell_lo:rec.cell_hi] = rec.states
    return out


def write_spacetime(path, trace) -> None:
    """Rows tick,t_sec,submesh,x_left,x_right: one segment per update."""
    nodes = trace.nodes
    with open(path, "w") as fh:
        fh.write(json.dumps({"config": trace.config,
                             "dt_min": trace.dt_min}) + "\n")
        fh.write("tick,t_sec,submesh,x_left,x_right\n")
        for rec in trace.records:
            if rec.kind != "update":
                continue
            fh.write(f"{rec.tick},{rec.tick * trace.dt_min:.17g},{rec.sid},"
                     f"{nodes[rec.cell_lo]:.17g},{nodes[rec.cell_hi]:.17g}\n")


MANDATORY_CHECKS = ("locally_ordered", "tvd", "max_principle", "cfl", "replay")


def run_checks(trace, mode: str, event_log_ok: bool):
    """All five trace checkers; TVD-family checks are diagnostic for systems."""
    law = trace.law()
    reports = [
        verify.check_locally_ordered(trace),
        verify.check_tvd(trace),
        verify.check_max_principle(trace),
        verify.replay_oracle(trace),
    ]
    if law.n_vars == 1:
        reports.append(verify.check_cfl(trace))
        if event_log_ok and trace.event_log is not None:
            reports.append(verify.check_fsm_transitions(trace))
    failures = []
    for rep in reports:
        for line in rep.lines():
            print(line, file=sys.stderr)
        if not rep.ok and not rep.diagnostic and mode == "on":
            failures.append(rep.check)
    return failures


def run(config: RunConfig) -> int:
    """Execute one configured run; returns the process exit code."""
    t0 = time.perf_counter_ns()
    config.validate()
    stats = {"config": json.loads(config.to_json())}
    failures = []
    try:
        if config.mode == "sync":
            m = (meshmod.read_mesh(config.mesh_file) if config.mesh_file else
                 meshmod.build_mesh(config.cells, config.mesh, eps=config.eps,
                                    domain=(-1.0, 1.0),
                                    periodic=config.ics in PERIODIC_ICS))
            law = physics.get_law(config.problem)
            flux = physics.get_flux(config.flux)
            dt = config.dt_min if config.dt_min > 0.0 else reference_dt(config, m)
            states = setup_initial_conditions(config, m)
            u, updates, steps = run_sync(config, m, states, dt, law, flux)
            stats.update({"mode": "sync", "dt": dt, "steps": steps,
                          "committed_cell_updates": updates,
                          "rollbacks": 0})
            if config.trace_out:
                np.savetxt(config.trace_out, u, header=config.to_json())
        else:
            world, dt_ref = build_world(config)
            checker = None
            if config.check == "on" and config.mode == "lts-seq" \
                    and world.law.n_vars == 1:
                checker = verify.InvariantChecker(world)
            if config.mode == "lts-seq":
                trace = lts.run_sequential(world)
                stats["rollbacks"] = 0
            else:
                trace = parallel.run_optimistic(world, n_workers=config.workers,
                                                lookahead=config.lookahead)
                stats["rollbacks"] = trace.parallel_stats["rollbacks"]
                stats["per_worker"] = trace.parallel_stats["per_worker"]
                stats["rolled_back_updates"] = \
                    trace.parallel_stats["rolled_back_updates"]
            trace.config = json.loads(config.to_json())
            stats.update({
                "mode": config.mode,
                "dt_ref": dt_ref,
                "dt_min": world.dt_min,
                "t_end_ticks": world.t_end,
                "committed_cell_updates": trace.committed_cell_updates,
                "committed_updates": len(trace.update_records()),
                "max_tick_pops": trace.max_tick_pops,
                "event_budget": 3 * world.n_actors,
                "progress_clamps": world.progress_clamps,
                "progress_violations": world.progress_violations,
            })
            if checker is not None:
                for line in checker.report.lines():
                    print(line, file=sys.stderr)
                if not checker.report.ok:
                    failures.append("invariant_I")
            if config.check in ("on", "diagnostic"):
                failures += run_checks(trace, config.check,
                                       config.mode == "lts-seq")
            if config.trace_out:
                trace.to_csv(config.trace_out)
            if config.spacetime_out:
                write_spacetime(config.spacetime_out, trace)
    except (lts.SolverError, parallel.RollbackError, des.LivelockError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        elapsed = (time.perf_counter_ns() - t0) // 1000
        print(f"elapsed_us={elapsed}")
        return 2
    elapsed = (time.perf_counter_ns() - t0) // 1000
    stats["wall_us"] = elapsed
    if config.stats_out:
        with open(config.stats_out, "w") as fh:
            json.dump(stats, fh, indent=1, sort_keys=True)
    print(f"elapsed_us={elapsed}")
    return 1 if failures else 0


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(f"LTS_{name.upper()}")
    if raw is None:
        return fallback
    if cast is bool:
        return raw.lower() in ("1", "true", "yes")
    return cast(raw)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eventstep",
        description="Adaptive local timestepping for 1D conservation laws "
                    "run as a discrete event simulation.")
    d = RunConfig()

    def add(flag, cast, default, help_text, choices=None):
        name = flag.strip("-").replace("-", "_")
        p.add_argument(flag, type=cast, dest=name,
                       default=_env_default(name, default, cast),
                       choices=choices, help=help_text)

    add("--problem", str, d.problem, "conservation law", PROBLEMS)
    add("--ics", str, d.ics, "initial conditions")
    add("--mesh", str, d.mesh, "node warp", ("uniform", "polynomial"))
    add("--eps", float, d.eps, "polynomial warp strength")
    add("--cells", int, d.cells, "cell count")
    add("--submeshes", int, d.submeshes, "submesh count")
    add("--t-end", float, d.t_end, "final time, seconds")
    add("--dt-min", float, d.dt_min,
        "tick length, seconds (0: half the reference step)")
    add("--mode", str, d.mode, "executor", MODES)
    add("--workers", int, d.workers, "worker count for lts-par")
    add("--lookahead", int, d.lookahead, "speculation window, ticks")
    add("--flux", str, d.flux, "numerical flux", ("llf", "godunov"))
    add("--cap-ticks", int, d.cap_ticks, "largest step, ticks")
    add("--check", str, d.check, "run trace checkers",
        ("off", "diagnostic", "on"))
    add("--trace-out", str, d.trace_out, "trace CSV path")
    add("--stats-out", str, d.stats_out, "stats JSON path")
    add("--spacetime-out", str, d.spacetime_out, "space-time segment CSV path")
    add("--splitters", str, d.splitters, "splitter file overriding the partition")
    add("--mesh-file", str, d.mesh_file, "mesh file overriding --mesh/--cells")
    add("--detail", str, d.detail, "trace detail",
        ("compact", "full", "debug"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(**vars(args))
    try:
        config.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
