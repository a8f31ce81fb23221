"""Nodal domains of K-real eigenfunctions and the combinatorics of the induced partition."""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateProjection, NonHalfInteger, UnresolvedPartition
from .lattice import Grid, PoleGauge, apply_K
from .geometry import PoleSet

MIN_INTERFACE = 2
RANDOM_COMBINATIONS = 64
MIN_DOMAIN_NODES = 4  # smaller components are below lattice resolution
ZERO_TOL = 1e-9  # relative magnitude below which a node value counts as zero


@dataclass(frozen=True, eq=False)
class PartitionLabeling:
    grid: Grid
    labels: np.ndarray  # (N,) in 1..mu
    mu: int
    same: np.ndarray  # (E,) same-domain flag per edge
    eigenvalue: float = float("nan")

    @property
    def interface(self):
        e = self.grid.edges
        return self.labels[e[:, 0]] != self.labels[e[:, 1]]

    def component_nodes(self, label):
        return np.flatnonzero(self.labels == label)

    def sizes(self):
        return np.bincount(self.labels, minlength=self.mu + 1)[1:]


@dataclass(frozen=True)
class NodalWitness:
    mu: int
    alpha: float | None
    coeffs: tuple[float, ...]
    labeling: PartitionLabeling = field(repr=False, compare=False)


@dataclass(frozen=True)
class PartitionGraph:
    vertices: tuple[int, ...]
    edges: frozenset  # of (i, j) with i < j
    interface_sizes: dict = field(default_factory=dict, compare=False)

    @property
    def thin_interfaces(self):
        """Neighbour pairs whose shared interface is only 2-3 edges long (surrogate is fragile there)."""
        return sorted(p for p in self.edges if self.interface_sizes[p] <= 3)

    def neighbours(self, v):
        return sorted({j for i, j in self.edges if i == v} | {i for i, j in self.edges if j == v})


@dataclass(frozen=True)
class BipartiteResult:
    bipartite: bool
    coloring: dict | None = None
    odd_cycle: tuple[int, ...] | None = None

    def __bool__(self):
        return self.bipartite


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    y: float
    nu: int
    pole: int | None = None  # index into the pole set when the plaquette carries a pole


@dataclass(frozen=True)
class BoundaryPoint:
    x: float
    y: float
    rho: int
    component: int  # 0 = outer boundary, i + 1 = hole i


@dataclass
class EulerData:
    b0: int
    b1: int
    critical: list[CriticalPoint] = field(default_factory=list)
    boundary: list[BoundaryPoint] = field(default_factory=list)
    hole_hits: dict[int, int] = field(default_factory=dict)
    single_arc_poles: list[int] = field(default_factory=list)

    @property
    def nu(self):
        return [c.nu for c in self.critical]

    @property
    def rho(self):
        return [b.rho for b in self.boundary]

    @property
    def x_odd(self):
        pts = [(c.x, c.y) for c in self.critical if c.nu % 2 == 1]
        return pts + [("hole", i) for i, hits in sorted(self.hole_hits.items()) if hits % 2 == 1]

    def to_dict(self):
        return {
            "b0": self.b0,
            "b1": self.b1,
            "critical_points": [c.__dict__ for c in self.critical],
            "boundary_points": [b.__dict__ for b in self.boundary],
            "hole_hits": {str(k): v for k, v in self.hole_hits.items()},
            "single_arc_poles": list(self.single_arc_poles),
            "x_odd_count": len(self.x_odd),
        }

    @classmethod
    def from_counts(cls, b0, b1, nu=(), rho=()):
        return cls(
            b0,
            b1,
            [CriticalPoint(float("nan"), float("nan"), int(v)) for v in nu],
            [BoundaryPoint(float("nan"), float("nan"), int(r), 0) for r in rho],
        )


def k_real_representatives(vectors: np.ndarray, gauge: PoleGauge, dim: int | None = None) -> np.ndarray:
    """Orthonormal basis (over the reals) of K-real vectors in the span of ``vectors``."""
    V = np.asarray(vectors, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    dim = V.shape[1] if dim is None else dim
    basis = []
    for v in V.T:
        nv = np.linalg.norm(v)
        Kv = apply_K(gauge, v)
        w = v + Kv
        candidates = [w, 1j * (v - Kv)] if np.linalg.norm(w) >= 1e-6 * nv else [1j * (v - Kv)]
        for c in candidates:
            for b in basis:
                # K-real vectors have real mutual inner products
                c = c - np.real(np.vdot(b, c)) * b
            nc = np.linalg.norm(c)
            if nc > 1e-6 * nv:
                basis.append(c / nc)
            if len(basis) == dim:
                break
        if len(basis) == dim:
            break
    if not basis:
        raise DegenerateProjection("no K-real vector survived projection")
    return np.column_stack(basis)


def same_domain_flags(grid: Grid, w: np.ndarray, gauge: PoleGauge | None) -> np.ndarray:
    # exact zeros cut the edge
    return _covariant_products(grid, np.asarray(w), gauge) > 0


def _components(grid: Grid, same: np.ndarray):
    N = grid.num_nodes
    e = grid.edges[same]
    A = sp.csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(N, N))
    return connected_components(A, directed=False)


def pole_corner_nodes(grid: Grid, poles: PoleSet) -> np.ndarray:
    """Nodes at the corners of plaquettes that carry an in-domain pole."""
    if poles is None or len(poles) == 0:
        return np.zeros(0, dtype=int)
    out = []
    for p, (i, j) in enumerate(grid.cell_of(poles.xy)):
        if poles.placement[p] is not None:
            continue
        for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
            k = grid.index[i + di, j + dj]
            if k >= 0:
                out.append(k)
    return np.unique(np.asarray(out, dtype=int))


def _covariant_products(grid: Grid, w, gauge):
    a, b = grid.edges[:, 0], grid.edges[:, 1]
    if gauge is None or len(gauge.poles) == 0:
        return np.real(np.conj(w[a]) * w[b])
    return np.real(np.conj(w[a]) * np.exp(-1j * gauge.omega) * w[b])


def _incidence(grid: Grid):
    """CSR-style node -> incident edge ids, cached on the grid."""
    cached = grid.__dict__.get("_incidence")
    if cached is None:
        e = grid.edges
        nodes = np.concatenate([e[:, 0], e[:, 1]])
        ids = np.concatenate([np.arange(len(e))] * 2)
        order = np.argsort(nodes, kind="stable")
        ptr = np.concatenate([[0], np.cumsum(np.bincount(nodes, minlength=grid.num_nodes))])
        cached = (ptr, ids[order])
        object.__setattr__(grid, "_incidence", cached)
    return cached


def _label(grid: Grid, w, gauge):
    """Component labels (0-based, ordered by smallest node) and raw same-domain flags.

    Nodes whose sign is not resolved are left out of the connectivity pass and
    then attached to the neighbouring domain with the largest covariant
    product.  These are the corners of pole plaquettes (within h of a zero of
    the eigenfunction), nodes where the vector vanishes to rounding (a nodal
    line passing exactly through lattice points), and components with fewer
    than ``MIN_DOMAIN_NODES`` nodes (features below lattice resolution).
    """
    prod = _covariant_products(grid, w, gauge)
    same = prod > 0
    unresolved = np.zeros(grid.num_nodes, dtype=bool)
    if gauge is not None:
        unresolved[pole_corner_nodes(grid, gauge.poles)] = True
    absw = np.abs(w)
    if len(absw):
        unresolved |= absw <= ZERO_TOL * absw.max()
    e = grid.edges
    active = same & ~unresolved[e[:, 0]] & ~unresolved[e[:, 1]]
    _, labels = _components(grid, active)
    sizes = np.bincount(labels, weights=~unresolved, minlength=labels.max() + 1)
    tiny = (sizes < MIN_DOMAIN_NODES)[labels] & ~unresolved
    if tiny.any() and not tiny.all():
        unresolved |= tiny
    if not unresolved.any():
        return int(labels.max() + 1), labels, same
    labels = labels.copy()
    resolved = ~unresolved
    inc_ptr, inc_edges = _incidence(grid)
    # products within this of the best are ties (an exact zero has ~0 product with everyone);
    # ties go to the lowest node index so zero lines are assigned consistently to one side
    tie = ZERO_TOL * float(absw.max()) ** 2
    pending = np.flatnonzero(unresolved)
    while len(pending):
        # attach layer by layer from nodes resolved before this pass, so a chain of
        # zero nodes cannot carry one label along a whole nodal line
        before = resolved.copy()
        done = []
        for c in pending:
            incident = inc_edges[inc_ptr[c] : inc_ptr[c + 1]]
            other = np.where(e[incident, 0] == c, e[incident, 1], e[incident, 0])
            ok = before[other]
            if not ok.any():
                continue
            score = prod[incident[ok]]
            nb = other[ok][score >= score.max() - tie].min()
            labels[c] = labels[nb]
            done.append(c)
        if not done:
            break
        resolved[done] = True
        pending = np.setdiff1d(pending, done)
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(labels.max() + 1, dtype=int)
    remap[labels[first[order]]] = np.arange(len(order))
    return len(order), remap[labels], same


def label_nodal_domains(grid: Grid, w: np.ndarray, gauge: PoleGauge | None = None, eigenvalue=float("nan")):
    """Nodal partition of a K-real vector: an edge is same-domain iff its covariant product is positive."""
    mu, labels, same = _label(grid, np.asarray(w), gauge)
    same.setflags(write=False)
    return PartitionLabeling(grid, labels + 1, int(mu), same, float(eigenvalue))


def nodal_count(grid: Grid, w: np.ndarray, gauge: PoleGauge | None = None) -> int:
    return _label(grid, np.asarray(w), gauge)[0]


def attainable_nodal_counts(
    basis: np.ndarray,
    grid: Grid,
    gauge: PoleGauge | None,
    alpha_steps: int = 32,
    seed: int = 0,
    eigenvalue: float = float("nan"),
    target: int | None = None,
) -> dict[int, NodalWitness]:
    """Nodal counts reachable by real combinations of a K-real eigenspace basis.

    Real dimension 1 is exact; dimension 2 scans ``cos(a) w1 + sin(a) w2`` over
    ``a = j pi / alpha_steps``; higher dimensions add seeded random combinations.
    With ``target`` set, the scan stops at the first combination reaching it
    (the witness is the same one a full scan would report).
    """
    B = np.asarray(basis)
    if B.ndim == 1:
        B = B[:, None]
    d = B.shape[1]
    trials = []
    if d == 1:
        trials.append((None, (1.0,)))
    else:
        for j in range(alpha_steps):
            a = j * np.pi / alpha_steps
            c = np.zeros(d)
            c[0], c[1] = np.cos(a), np.sin(a)
            trials.append((a, tuple(c)))
        if d > 2:
            rng = np.random.default_rng(seed)
            for _ in range(RANDOM_COMBINATIONS):
                c = rng.standard_normal(d)
                trials.append((None, tuple(c / np.linalg.norm(c))))
    found: dict[int, NodalWitness] = {}
    for alpha, c in trials:
        w = B @ np.asarray(c)
        mu, labels, same = _label(grid, w, gauge)
        if mu not in found:
            same.setflags(write=False)
            lab = PartitionLabeling(grid, labels + 1, int(mu), same, float(eigenvalue))
            found[int(mu)] = NodalWitness(int(mu), alpha, c, lab)
            if mu == target:
                break
    return dict(sorted(found.items()))


def adjacency_graph(labeling: PartitionLabeling, min_interface: int = MIN_INTERFACE) -> PartitionGraph:
    """Cells are neighbours when they share at least ``min_interface`` interface edges."""
    e = labeling.grid.edges
    la, lb = labeling.labels[e[:, 0]], labeling.labels[e[:, 1]]
    mask = la != lb
    pairs = np.sort(np.column_stack([la[mask], lb[mask]]), axis=1)
    sizes = {}
    if len(pairs):
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        sizes = {(int(i), int(j)): int(c) for (i, j), c in zip(uniq, counts)}
    edges = frozenset(p for p, c in sizes.items() if c >= min_interface)
    return PartitionGraph(tuple(range(1, labeling.mu + 1)), edges, {p: sizes[p] for p in edges})


def is_bipartite(graph: PartitionGraph) -> BipartiteResult:
    """BFS two-colouring; on failure returns an odd cycle as a vertex sequence."""
    adj = {v: [] for v in graph.vertices}
    for i, j in sorted(graph.edges):
        adj[i].append(j)
        adj[j].append(i)
    color, parent, depth = {}, {}, {}
    for root in graph.vertices:
        if root in color:
            continue
        color[root], parent[root], depth[root] = 0, None, 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in color:
                    color[v], parent[v], depth[v] = 1 - color[u], u, depth[u] + 1
                    queue.append(v)
                elif color[v] == color[u]:
                    return BipartiteResult(False, None, _odd_cycle(u, v, parent, depth))
    return BipartiteResult(True, color, None)


def _odd_cycle(u, v, parent, depth):
    left, right = [u], [v]
    while depth[left[-1]] > depth[right[-1]]:
        left.append(parent[left[-1]])
    while depth[right[-1]] > depth[left[-1]]:
        right.append(parent[right[-1]])
    while left[-1] != right[-1]:
        left.append(parent[left[-1]])
        right.append(parent[right[-1]])
    return tuple(left + right[-2::-1])


def _boundary_component(grid: Grid, corners_xy: np.ndarray) -> int:
    dom = grid.domain
    for x, y in corners_xy:
        if dom.outer.sdist(x, y) <= 0:
            continue
        # inside the outer shape but not a node: on or in a hole
        return 1 + int(np.argmin([abs(float(hh.shape.sdist(x, y))) for hh in dom.holes]))
    return 0


def extract_critical_points(labeling: PartitionLabeling, grid: Grid | None = None, poles: PoleSet | None = None,
                            min_separation: float = 3.0) -> EulerData:
    """Walk the interface complex on the dual lattice (plaquettes) and count arcs.

    A full plaquette whose corner labels change ``nu >= 3`` times going around
    it is a critical point.  Plaquettes with a corner outside the domain are
    collapsed into one vertex per boundary component; every interface arc that
    enters such a vertex is a boundary point with ``rho = 1`` (merged when
    several arcs land in the same plaquette).
    """
    grid = labeling.grid if grid is None else grid
    poles = PoleSet() if poles is None else poles
    iface = labeling.interface
    ce = grid.cell_edges
    present = ce >= 0
    deg = np.where(present, iface[np.where(present, ce, 0)], False).sum(axis=1)
    cut = np.where(present, ~labeling.same[np.where(present, ce, 0)], False).sum(axis=1)
    full = grid.cell_full
    m = len(grid.domain.holes)
    centers = grid.cell_centers

    # boundary component of every partial plaquette
    comp = -np.ones(len(grid.cells), dtype=int)
    for c in np.flatnonzero(~full):
        i, j = grid.cells[c]
        corners = np.array([(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)])
        off = corners[grid.index[corners[:, 0], corners[:, 1]] < 0]
        comp[c] = _boundary_component(grid, grid.lattice_xy(off))

    # two plaquettes per interface edge
    edge_cells = [[] for _ in range(len(grid.edges))]
    for c, row in enumerate(ce):
        for e in row:
            if e >= 0:
                edge_cells[e].append(c)

    C = len(grid.cells)
    # vertex ids: plaquettes 0..C-1, boundary components C..C+m
    src, dst = [], []
    hits = {}
    for e in np.flatnonzero(iface):
        c1, c2 = edge_cells[e]
        v1 = c1 if full[c1] else C + comp[c1]
        v2 = c2 if full[c2] else C + comp[c2]
        if v1 == v2:
            continue
        src.append(v1)
        dst.append(v2)
        for c, v in ((c1, v1), (c2, v2)):
            if v >= C:
                hits[c] = hits.get(c, 0) + 1

    nv = C + m + 1
    A = sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(nv, nv))
    _, comp_label = connected_components(A, directed=False)
    involved = set(src) | set(dst) | set(range(C, C + m + 1))
    b1 = len({comp_label[v] for v in involved})

    pole_cell = {}
    if len(poles):
        lut = grid.cell_lookup
        for p, cij in enumerate(grid.cell_of(poles.xy)):
            if poles.placement[p] is None:
                c = lut[cij[0], cij[1]]
                if c >= 0:
                    pole_cell[int(c)] = p

    # critical plaquettes joined by a short interface arc (at most ``min_separation`` dual
    # steps through degree-2 plaquettes) are one feature: merge them and drop the joining arcs
    crit_cells = np.flatnonzero(full & (deg >= 3))
    pos = {int(c): k for k, c in enumerate(crit_cells)}
    parent = list(range(len(crit_cells)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    max_steps = max(1, int(math.ceil(min_separation)))
    ends = np.zeros(len(crit_cells), dtype=int)  # arc ends landing on another critical plaquette
    for c in crit_cells:
        for e in ce[c]:
            if e < 0 or not iface[e]:
                continue
            cell, edge = int(c), int(e)
            for _ in range(max_steps):
                nxt = [x for x in edge_cells[edge] if x != cell][0]
                if not full[nxt]:
                    break
                if nxt in pos:
                    parent[find(pos[int(c)])] = find(pos[nxt])
                    ends[pos[int(c)]] += 1
                    break
                if deg[nxt] != 2:
                    break
                edge = [x for x in ce[nxt] if x >= 0 and iface[x] and x != edge][0]
                cell = nxt
    groups = {}
    for k in range(len(crit_cells)):
        groups.setdefault(find(k), []).append(k)
    critical = []
    for members in sorted(groups.values()):
        cells = crit_cells[members]
        nu = int(deg[cells].sum() - ends[members].sum())
        at_pole = [pole_cell[int(c)] for c in cells if int(c) in pole_cell]
        xy = centers[cells[[int(c) in pole_cell for c in cells].index(True)]] if at_pole else centers[cells].mean(axis=0)
        critical.append(CriticalPoint(float(xy[0]), float(xy[1]), nu, at_pole[0] if at_pole else None))
    h = grid.h
    for a in range(len(critical)):
        for b in range(a):
            if np.hypot(critical[a].x - critical[b].x, critical[a].y - critical[b].y) <= min_separation * h:
                raise UnresolvedPartition(
                    f"critical points at ({critical[a].x:.4g}, {critical[a].y:.4g}) and "
                    f"({critical[b].x:.4g}, {critical[b].y:.4g}) are closer than {min_separation} h"
                )
    boundary = [
        BoundaryPoint(float(centers[c, 0]), float(centers[c, 1]), int(k), int(comp[c])) for c, k in sorted(hits.items())
    ]
    hole_hits = {i: 0 for i in range(m)}
    for bp in boundary:
        if bp.component > 0:
            hole_hits[bp.component - 1] += bp.rho
    single = sorted(p for c, p in pole_cell.items() if full[c] and cut[c] == 1)
    return EulerData(1 + m, b1, critical, boundary, hole_hits, single)


def euler_rhs(data: EulerData) -> float:
    twice = 2 * (data.b1 - data.b0 + 1) + sum(v - 2 for v in data.nu) + sum(data.rho)
    if twice % 2:
        raise NonHalfInteger("sum of arc counts is odd: malformed Euler data")
    return twice / 2


def euler_check(data: EulerData, k: int) -> int:
    """Residual of the partition Euler formula: predicted cell count minus ``k``."""
    return int(euler_rhs(data)) - int(k)


def odd_point_warning(data: EulerData, k: int) -> bool:
    """Warn (and return True) when a candidate with k >= 3 has more than 2k - 4 odd points."""
    if k >= 3 and len(data.x_odd) > 2 * k - 4:
        warnings.warn(f"{len(data.x_odd)} odd critical points exceed 2k-4 = {2 * k - 4}", stacklevel=2)
        return True
    return False
