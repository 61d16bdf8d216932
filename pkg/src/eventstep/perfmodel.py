"""Work model, iterative submesh partitioning, rank assignment, speed-ups.

The per-cell work rate is the inverse of the binned timestep a cell would
take given the local wave speed; block weights use the minimum timestep over
the block because its cells step together.  Rank assignment minimizes the
time integral of the most loaded rank per quadrature window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lts import DEFAULT_CAP_TICKS
from .mesh import Mesh1D, Partition, partition_balanced


# guards the exponent floor against log2 landing a few ulps under an integer,
# mirroring the solver's tick-count epsilon
_LOG_EPS = 1e-9


def cell_timestep_estimate(dx: float, lam: float, dt_min: float,
                           cap_ticks: int = DEFAULT_CAP_TICKS) -> float:
    """Binned timestep (seconds) for one cell at wave speed lam."""
    if dx <= 0.0 or dt_min <= 0.0:
        raise ValueError("dx and dt_min must be positive")
    if lam <= 0.0:
        return cap_ticks * dt_min
    exponent = math.floor(math.log2(dx / (2.0 * lam * dt_min)) + _LOG_EPS)
    exponent = min(max(exponent, 0), int(math.log2(cap_ticks)))
    return dt_min * 2.0 ** exponent


def _binned_dt_array(dx, lam, dt_min, cap_ticks):
    dx = np.asarray(dx, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.full(dx.shape, cap_ticks * dt_min)
    live = lam > 0.0
    if np.any(live):
        expo = np.floor(np.log2(dx[live] / (2.0 * lam[live] * dt_min)) + _LOG_EPS)
        expo = np.clip(expo, 0, int(math.log2(cap_ticks)))
        out[live] = dt_min * 2.0 ** expo
    return out


@dataclass
class WorkProfile:
    """Per-cell binned timesteps sampled at window midpoints.

    cell_dt has shape (n_windows, n_cells); window_edges has n_windows + 1
    entries spanning [0, t_end].  dt_ref is the synchronous reference step.
    """

    mesh: Mesh1D
    dt_min: float
    dt_ref: float
    t_end: float
    window_edges: np.ndarray
    cell_dt: np.ndarray

    @property
    def n_windows(self) -> int:
        return self.cell_dt.shape[0]

    def window_lengths(self) -> np.ndarray:
        return np.diff(self.window_edges)

    def cell_work(self) -> np.ndarray:
        """Work rate (updates per second) per window and cell."""
        return 1.0 / self.cell_dt

    def submesh_work(self, partition: Partition) -> np.ndarray:
        """(n_windows, n_submeshes) block work rates: cells step together at
        the block's smallest timestep."""
        out = np.empty((self.n_windows, partition.n_submeshes))
        for sid, (lo, hi) in enumerate(partition.ranges()):
            dt_blk = np.min(self.cell_dt[:, lo:hi], axis=1)
            out[:, sid] = (hi - lo) / dt_blk
        return out


def build_work_profile(mesh: Mesh1D, lam_fn, dt_min: float, dt_ref: float,
                       t_end: float, n_windows: int = 100,
                       cap_ticks: int = DEFAULT_CAP_TICKS) -> WorkProfile:
    edges = np.linspace(0.0, t_end, n_windows + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    centers = mesh.centers
    cell_dt = np.empty((n_windows, mesh.n_cells))
    for w, t in enumerate(mids):
        lam = np.asarray(lam_fn(float(t), centers), dtype=float)
        cell_dt[w] = _binned_dt_array(mesh.cell_sizes, lam, dt_min, cap_ticks)
    return WorkProfile(mesh, dt_min, dt_ref, t_end, edges, cell_dt)


def theoretical_speedup(profile: WorkProfile) -> float:
    """Update-count ratio of the synchronous reference over local stepping.

    Both totals are accumulated through the same summation tree, so a
    profile whose binned steps all equal the reference step gives 1.0 to
    the last bit.
    """
    lengths = profile.window_lengths()
    ref_dt = np.full_like(profile.cell_dt, profile.dt_ref)
    w_ref = float(np.sum(np.sum(1.0 / ref_dt, axis=1) * lengths))
    w_deva = float(np.sum(np.sum(1.0 / profile.cell_dt, axis=1) * lengths))
    return w_ref / w_deva


def iterate_partition(mesh: Mesh1D, n_sbmsh: int, n_iter: int = 100,
                      dt_min: float = None,
                      cap_ticks: int = DEFAULT_CAP_TICKS) -> Partition:
    """Alternate weight updates and balanced splits; keep the best iterate.

    Weights assume unit wave speed (no prior knowledge of the solution), so
    the split responds to cell-size variation only.  Each round recomputes
    cell weights as the inverse of the smallest binned step inside the
    cell's current block, then re-splits; the returned partition minimizes
    the heaviest block weight over all iterates.
    """
    if dt_min is None:
        dt_min = 0.25 * mesh.dx_min
    own_dt = _binned_dt_array(mesh.cell_sizes, np.ones(mesh.n_cells),
                              dt_min, cap_ticks)
    weights = 1.0 / own_dt
    best = None
    best_load = math.inf
    seen = set()
    for _ in range(n_iter):
        part = partition_balanced(weights, n_sbmsh)
        for lo, hi in part.ranges():
            weights[lo:hi] = 1.0 / np.min(own_dt[lo:hi])
        load = part.max_load(weights)
        if load < best_load:
            best, best_load = part, load
        key = tuple(part.boundaries)
        if key in seen:
            break
        seen.add(key)
    return best


def assignment_cost(work: np.ndarray, lengths: np.ndarray, rho) -> float:
    """Wall-clock estimate: integral of the most loaded rank's work rate."""
    n_ranks = max(rho) + 1
    per_rank = np.zeros((work.shape[0], n_ranks))
    for sid, rank in enumerate(rho):
        per_rank[:, rank] += work[:, sid]
    return float(np.sum(np.max(per_rank, axis=1) * lengths))


def assign_ranks(work: np.ndarray, lengths: np.ndarray, n_ranks: int):
    """Greedy longest-processing-time seed plus move/swap refinement.

    work: (n_windows, n_submeshes) block work rates; lengths: window sizes.
    Returns (rho, estimated wall-clock time).  The local search applies the
    best improving single move or pairwise swap until a fixed point.
    """
    n_sbmsh = work.shape[1]
    if n_ranks < 1:
        raise ValueError("need at least one rank")
    totals = work.T @ lengths
    order = sorted(range(n_sbmsh), key=lambda s: (-totals[s], s))
    rho = [0] * n_sbmsh
    rank_load = [0.0] * n_ranks
    for sid in order:
        rank = min(range(n_ranks), key=lambda k: (rank_load[k], k))
        rho[sid] = rank
        rank_load[rank] += totals[sid]
    best_cost = assignment_cost(work, lengths, rho)
    improved = True
    while improved:
        improved = False
        best_change = None
        for sid in range(n_sbmsh):
            for rank in range(n_ranks):
                if rank == rho[sid]:
                    continue
                old = rho[sid]
                rho[sid] = rank
                cost = assignment_cost(work, lengths, rho)
                rho[sid] = old
                if cost < best_cost - 1e-15:
                    best_cost, best_change = cost, ("move", sid, rank)
        for a in range(n_sbmsh):
            for b in range(a + 1, n_sbmsh):
                if rho[a] == rho[b]:
                    continue
                rho[a], rho[b] = rho[b], rho[a]
                cost = assignment_cost(work, lengths, rho)
                rho[a], rho[b] = rho[b], rho[a]
                if cost < best_cost - 1e-15:
                    best_cost, best_change = cost, ("swap", a, b)
        if best_change is not None:
            improved = True
            if best_change[0] == "move":
                rho[best_change[1]] = best_change[2]
            else:
                a, b = best_change[1], best_change[2]
                rho[a], rho[b] = rho[b], rho[a]
    return tuple(rho), best_cost


def work_speedup(ref_cell_updates: int, lts_cell_updates: int) -> float:
    """Ratio of committed cell updates: synchronous reference over LTS."""
    if lts_cell_updates <= 0:
        raise ValueError("local-timestepping run committed no updates")
    return ref_cell_updates / lts_cell_updates


def export_profile_csv(path, work: np.ndarray, edges: np.ndarray, rho) -> None:
    """Rows: window_start, rank, work (rate integrated over the window)."""
    lengths = np.diff(edges)
    n_ranks = max(rho) + 1
    with open(path, "w") as fh:
        fh.write("window_start,rank,work\n")
        for w in range(work.shape[0]):
            per_rank = np.zeros(n_ranks)
            for sid, rank in enumerate(rho):
                per_rank[rank] += work[w, sid] * lengths[w]
            for k in range(n_ranks):
                fh.write(f"{edges[w]:.17g},{k},{per_rank[k]:.17g}\n")


def export_assignment_csv(path, rho) -> None:
    with open(path, "w") as fh:
        fh.write("submesh_id,rank\n")
        for sid, rank in enumerate(rho):
            fh.write(f"{sid},{rank}\n")
