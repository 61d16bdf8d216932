"""Warped 1D meshes and contiguous cell-to-block partitions.

Meshes are stored as node coordinates on an arbitrary interval with an
optional periodic flag; experiments map their domain onto (-1, 1) before
warping.  Partitions are contiguous splits with a two-cell minimum per block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_EPS = 0.02


def warp_polynomial(x: float, eps: float = DEFAULT_EPS) -> float:
    """Cubic warp w(x) = (x^3/3 + eps*x) / (1/3 + eps) on [-1, 1].

    Strictly increasing, fixes the endpoints, and concentrates nodes near the
    origin; eps bounds the ratio of largest to smallest cell.
    """
    if eps <= 0.0:
        raise ValueError("warp strength eps must be positive")
    if abs(x) > 1.0:
        raise ValueError("warp input must lie in [-1, 1]")
    return (x * x * x / 3.0 + eps * x) / (1.0 / 3.0 + eps)


@dataclass(frozen=True)
class Mesh1D:
    """Strictly increasing node coordinates plus derived cell sizes."""

    nodes: np.ndarray
    periodic: bool = False
    cell_sizes: np.ndarray = field(init=False, repr=False)
    dx_min: float = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("a mesh needs at least two cells")
        sizes = np.diff(nodes)
        if np.any(sizes <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "cell_sizes", sizes)
        object.__setattr__(self, "dx_min", float(sizes.min()))

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])


def build_mesh(n_cells: int, warp: str = "uniform", eps: float = DEFAULT_EPS,
               domain=(-1.0, 1.0), periodic: bool = False) -> Mesh1D:
    """Warp uniformly spaced reference nodes onto the domain interval."""
    if n_cells < 2:
        raise ValueError("n_cells must be at least 2")
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ValueError("empty domain interval")
    ref = np.linspace(-1.0, 1.0, n_cells + 1)
    if warp == "uniform":
        warped = ref
    elif warp == "polynomial":
        warped = np.array([warp_polynomial(x, eps) for x in ref])
    else:
        raise ValueError(f"unknown warp {warp!r}")
    nodes = lo + (warped + 1.0) * (0.5 * (hi - lo))
    # pin the endpoints against round-off so the domain length is exact
    nodes[0] = lo
    nodes[-1] = hi
    return Mesh1D(nodes=nodes, periodic=periodic)


@dataclass(frozen=True)
class Partition:
    """Contiguous split of n_cells cells into blocks of at least two cells.

    boundaries[k] .. boundaries[k+1] is block k's half-open cell range;
    splitters are the interior boundaries (what the splitter file stores).
    """

    n_cells: int
    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=int)
        if b[0] != 0 or b[-1] != self.n_cells:
            raise ValueError("partition must cover all cells")
        widths = np.diff(b)
        if np.any(widths < 2):
            raise ValueError("every submesh needs at least two cells")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_submeshes(self) -> int:
        return self.boundaries.size - 1

    @property
    def splitters(self) -> np.ndarray:
        return self.boundaries[1:-1]

    def ranges(self):
        b = self.boundaries
        return [(int(b[i]), int(b[i + 1])) for i in range(self.n_submeshes)]

    def assignment(self) -> np.ndarray:
        """Cell index -> submesh id, contiguous and surjective."""
        out = np.empty(self.n_cells, dtype=int)
        for sid, (lo, hi) in enumerate(self.ranges()):
            out[lo:hi] = sid
        return out

    def max_load(self, weights) -> float:
        w = np.asarray(weights, dtype=float)
        return max(float(w[lo:hi].sum()) for lo, hi in self.ranges())


def _feasible_cuts(prefix: np.ndarray, n_sbmsh: int, bound: float):
    """Exact feasibility of a load bound for blocks of >= 2 cells.

    Sliding-window reachability over prefix sums: position i is reachable
    with s blocks when some cut j with j <= i - 2 and sum(j..i) <= bound is
    reachable with s - 1 blocks.  Returns the cut positions or None.
    """
    n = prefix.size - 1
    jmin = np.searchsorted(prefix, prefix - bound, side="left")
    reach = [None] * (n_sbmsh + 1)
    cur = np.zeros(n + 1, dtype=bool)
    cur[0] = True
    reach[0] = cur
    for s in range(1, n_sbmsh + 1):
        counts = np.concatenate(([0], np.cumsum(reach[s - 1])))
        nxt = np.zeros(n + 1, dtype=bool)
        if 2 * s <= n:
            idx = np.arange(2 * s, n + 1)
            win_lo = np.maximum(jmin[idx], 2 * (s - 1))
            win_hi = idx - 2
            ok = (win_hi >= win_lo) & (counts[win_hi + 1] - counts[win_lo] > 0)
            nxt[idx] = ok
        reach[s] = nxt
    if not reach[n_sbmsh][n]:
        return None
    cuts = [n]
    i = n
    for s in range(n_sbmsh, 0, -1):
        lo = max(jmin[i], 2 * (s - 1))
        window = np.nonzero(reach[s - 1][lo:i - 1])[0]
        i = int(lo + window[-1])
        cuts.append(i)
    return np.array(cuts[::-1])


def partition_balanced(weights, n_sbmsh: int) -> Partition:
    """Contiguous split minimizing the maximum block weight.

    Bisection over the load bound with an exact prefix-sum feasibility scan;
    the two-cell minimum per block is a hard constraint.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")
    if n_sbmsh < 1:
        raise ValueError("need at least one submesh")
    n = w.size
    if n < 2 * n_sbmsh:
        raise ValueError(
            f"cannot split {n} cells into {n_sbmsh} submeshes of >= 2 cells")
    prefix = np.concatenate(([0.0], np.cumsum(w)))
    lo = float(w.max())
    hi = float(prefix[-1])
    best = _feasible_cuts(prefix, n_sbmsh, hi)
    assert best is not None
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        got = _feasible_cuts(prefix, n_sbmsh, mid)
        if got is None:
            lo = mid
        else:
            hi = mid
            best = got
    return Partition(n_cells=n, boundaries=best)


def write_mesh(path, mesh: Mesh1D) -> None:
    """Plain text: header `n_el <count> periodic <0|1>`, one node per line."""
    with open(path, "w") as fh:
        fh.write(f"n_el {mesh.n_cells} periodic {1 if mesh.periodic else 0}\n")
        for x in mesh.nodes:
            fh.write(f"{x:.17g}\n")


def read_mesh(path) -> Mesh1D:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "n_el" or header[2] != "periodic":
            raise ValueError(f"malformed mesh header in {path}")
        n_el = int(header[1])
        periodic = bool(int(header[3]))
        nodes = np.array([float(line) for line in fh if line.strip()])
    if nodes.size != n_el + 1:
        raise ValueError(f"mesh file {path} promises {n_el} cells, "
                         f"carries {nodes.size - 1}")
    return Mesh1D(nodes=nodes, periodic=periodic)


def write_splitters(path, partition: Partition) -> None:
    """One interior cell-boundary index per line."""
    with open(path, "w") as fh:
        for s in partition.splitters:
            fh.write(f"{int(s)}\n")


def read_splitters(path, n_cells: int) -> Partition:
    with open(path) as fh:
        splitters = [int(line) for line in fh if line.strip()]
    boundaries = np.array([0] + splitters + [n_cells])
    return Partition(n_cells=n_cells, boundaries=boundaries)
