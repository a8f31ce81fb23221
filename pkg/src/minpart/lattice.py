"""Masked uniform lattice, Dirichlet Laplacian, and the half-flux Aharonov-Bohm Hamiltonian.

Conventions
-----------
Nodes are the lattice points ``(x0 + i h, y0 + j h)`` strictly inside the domain
and outside every hole, ordered row by row (``j`` slow, ``i`` fast).  Edges are
oriented towards +x or +y.  The link phase ``omega[e]`` of edge ``a -> b`` is
the line integral of the vector potential along it, so that

    omega[e] == (theta[b] - theta[a]) / 2   (mod pi)

and the Hamiltonian entry is ``H[a, b] = -exp(-1j * omega[e]) / h**2`` (Peierls
substitution; ``H[b, a]`` is its conjugate).  With this orientation the
antilinear map ``(K v)_a = exp(1j * theta[a]) * conj(v_a)`` commutes with ``H``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DuplicatePole, EmptyGrid, HoleUnresolved, PoleOnEdge, ValidationError
from .geometry import EXTERIOR, INTERIOR, Domain, PoleSet

POLE_EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    n: int
    h: float
    origin: tuple[float, float]
    shape: tuple[int, int]
    index: np.ndarray  # (nx, ny) node index or -1
    region: np.ndarray  # (nx, ny) region code of every lattice point
    node_ij: np.ndarray  # (N, 2)
    edges: np.ndarray  # (E, 2) node pairs, oriented +x / +y
    edge_dir: np.ndarray  # (E,) 0 = horizontal, 1 = vertical
    cells: np.ndarray  # (C, 2) lower-left lattice index of each plaquette touching a node
    cell_edges: np.ndarray  # (C, 4) bottom, right, top, left edge ids or -1
    cell_full: np.ndarray  # (C,) all four corners are nodes

    @property
    def num_nodes(self):
        return len(self.node_ij)

    @property
    def node_xy(self):
        return self.lattice_xy(self.node_ij)

    def lattice_xy(self, ij):
        ij = np.asarray(ij, dtype=float)
        return np.column_stack([self.origin[0] + ij[..., 0] * self.h, self.origin[1] + ij[..., 1] * self.h])

    def cell_center(self, cij):
        cij = np.asarray(cij, dtype=float).reshape(-1, 2)
        return self.lattice_xy(cij + 0.5)

    @property
    def cell_centers(self):
        return self.cell_center(self.cells)

    @property
    def full_cells(self):
        return self.cells[self.cell_full]

    def cell_of(self, xy):
        """Lattice index of the plaquette containing each point."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        ij = np.floor((xy - np.asarray(self.origin)) / self.h).astype(int)
        return np.clip(ij, 0, np.asarray(self.shape) - 2)

    @functools.cached_property
    def cell_lookup(self):
        table = -np.ones((self.shape[0] - 1, self.shape[1] - 1), dtype=int)
        table[self.cells[:, 0], self.cells[:, 1]] = np.arange(len(self.cells))
        return table


# (dx, dy) of each plaquette edge traversed counterclockwise; sign relative to stored orientation
_CELL_SIDES = (((0, 0), 0, +1), ((1, 0), 1, +1), ((0, 1), 0, -1), ((0, 0), 1, -1))
CELL_EDGE_SIGN = np.array([s for _, _, s in _CELL_SIDES])


def build_grid(domain: Domain, n: int) -> Grid:
    """Lattice with spacing extent/(n+1) anchored at the lower-left corner of the bounding box."""
    if n < 1:
        raise ValidationError("grid.n", "must be a positive integer")
    return _build_grid(domain, int(n))


@functools.lru_cache(maxsize=16)
def _build_grid(domain: Domain, n: int) -> Grid:
    x0, y0, x1, y1 = domain.bbox()
    h = domain.extent / (n + 1)
    # one padding column/row beyond the box so every node has all four plaquettes
    nx = int(math.floor((x1 - x0) / h + 1e-9)) + 2
    ny = int(math.floor((y1 - y0) / h + 1e-9)) + 2
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    region = domain.region(x0 + ii * h, y0 + jj * h)
    inside = region == INTERIOR
    if not inside.any():
        raise EmptyGrid(f"no lattice point inside the domain at n={n}")
    for hole in domain.holes:
        if not np.any(region == hole.index + 1):
            raise HoleUnresolved(f"hole {hole.index} contains no lattice point at n={n}")

    index = -np.ones((nx, ny), dtype=int)
    # row-major: j slow, i fast
    order = np.argwhere(inside.T)[:, ::-1]
    index[order[:, 0], order[:, 1]] = np.arange(len(order))
    node_ij = order

    hmap = -np.ones((nx, ny), dtype=int)
    vmap = -np.ones((nx, ny), dtype=int)
    a = index[:-1, :]
    b = index[1:, :]
    hm = (a >= 0) & (b >= 0)
    hidx = np.argwhere(hm)
    a2 = index[:, :-1]
    b2 = index[:, 1:]
    vm = (a2 >= 0) & (b2 >= 0)
    vidx = np.argwhere(vm)
    edges_h = np.column_stack([a[hm.nonzero()], b[hm.nonzero()]]) if len(hidx) else np.zeros((0, 2), int)
    edges_v = np.column_stack([a2[vm.nonzero()], b2[vm.nonzero()]]) if len(vidx) else np.zeros((0, 2), int)
    hmap[hidx[:, 0], hidx[:, 1]] = np.arange(len(hidx))
    vmap[vidx[:, 0], vidx[:, 1]] = len(hidx) + np.arange(len(vidx))
    edges = np.concatenate([edges_h, edges_v]).astype(int)
    edge_dir = np.concatenate([np.zeros(len(edges_h), int), np.ones(len(edges_v), int)])

    corner = np.zeros((nx - 1, ny - 1), dtype=int)
    for di in (0, 1):
        for dj in (0, 1):
            corner += inside[di : nx - 1 + di, dj : ny - 1 + dj]
    cells = np.argwhere(corner > 0)
    cell_full = corner[cells[:, 0], cells[:, 1]] == 4
    cell_edges = np.empty((len(cells), 4), dtype=int)
    for s, ((dx, dy), direction, _) in enumerate(_CELL_SIDES):
        emap = hmap if direction == 0 else vmap
        cell_edges[:, s] = emap[cells[:, 0] + dx, cells[:, 1] + dy]

    for arr in (index, region, node_ij, edges, edge_dir, cells, cell_edges, cell_full):
        arr.setflags(write=False)
    return Grid(domain, n, h, (x0, y0), (nx, ny), index, region, node_ij, edges, edge_dir, cells, cell_edges, cell_full)


def snap_poles(grid: Grid, poles: PoleSet, toward=None) -> tuple[PoleSet, np.ndarray]:
    """Move in-domain poles to the centre of their plaquette; returns (snapped, displacements).

    A pole lying on a lattice line (a tie between two plaquettes) goes to the
    side of ``toward`` (default: the domain centroid), so symmetric pole sets
    stay symmetric.
    """
    if len(poles) == 0:
        return poles, np.zeros(0)
    xy = poles.xy.copy()
    mask = np.array([p is None for p in poles.placement])
    if mask.any():
        centre = np.asarray(grid.domain.outer.centroid if toward is None else toward, dtype=float)
        rel = (xy[mask] - np.asarray(grid.origin)) / grid.h
        ij = np.floor(rel)
        tie = np.abs(rel - np.round(rel)) < 1e-9
        back = tie & (np.round(rel) * grid.h + np.asarray(grid.origin) > centre)
        ij = np.where(back, np.round(rel) - 1, np.where(tie, np.round(rel), ij))
        ij = np.clip(ij, 0, np.asarray(grid.shape) - 2)
        xy[mask] = grid.cell_center(ij)
    disp = np.hypot(*(xy - poles.xy).T)
    snapped = tuple(map(tuple, xy.tolist()))
    if len(set(snapped)) < len(snapped):
        raise DuplicatePole("poles", f"two poles share one plaquette at n={grid.n}; refine the grid")
    return PoleSet(snapped, poles.placement), disp


def _edge_phases(poles_xy, a, b, h):
    """Sum over poles of half the principal angle subtended by each directed segment a -> b."""
    omega = np.zeros(len(a))
    for px, py in poles_xy:
        za = (a[:, 0] - px) + 1j * (a[:, 1] - py)
        zb = (b[:, 0] - px) + 1j * (b[:, 1] - py)
        d = b - a
        L2 = np.einsum("ij,ij->i", d, d)
        t = np.clip(-np.real(za * np.conj(d[:, 0] + 1j * d[:, 1])) / np.where(L2 > 0, L2, 1), 0, 1)
        dist = np.abs(za + t * (d[:, 0] + 1j * d[:, 1]))
        if len(dist) and dist.min() < POLE_EDGE_TOL * h:
            raise PoleOnEdge(f"pole ({px}, {py}) lies on a grid edge")
        omega += 0.5 * np.angle(zb * np.conj(za))
    return omega


def link_phase(poles: PoleSet, segment, h: float | None = None) -> float:
    """Half-flux line integral of the multi-pole potential along a directed segment."""
    a = np.asarray(segment[0], dtype=float).reshape(1, 2)
    b = np.asarray(segment[1], dtype=float).reshape(1, 2)
    if h is None:
        h = float(np.hypot(*(b - a)[0]))
    return float(_edge_phases(poles.xy, a, b, h)[0])


def node_angles(grid: Grid, poles: PoleSet) -> np.ndarray:
    xy = grid.node_xy
    theta = np.zeros(len(xy))
    for px, py in poles.xy:
        theta += np.arctan2(xy[:, 1] - py, xy[:, 0] - px)
    return np.mod(theta, 2 * np.pi)


@dataclass(frozen=True, eq=False)
class PoleGauge:
    poles: PoleSet
    theta: np.ndarray  # per node, in [0, 2 pi)
    omega: np.ndarray  # per edge

    @property
    def phase(self):
        """exp(1j * theta), the multiplier in K."""
        return np.exp(1j * self.theta)


@dataclass(frozen=True, eq=False)
class SparseHermitian:
    matrix: sp.csr_matrix
    kind: str  # "real-symmetric" | "complex-Hermitian"

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v


def _assemble(grid: Grid, hop):
    N = grid.num_nodes
    a, b = grid.edges[:, 0], grid.edges[:, 1]
    h2 = grid.h**2
    rows = np.concatenate([a, b, np.arange(N)])
    cols = np.concatenate([b, a, np.arange(N)])
    vals = np.concatenate([-hop / h2, -np.conj(hop) / h2, np.full(N, 4.0 / h2, dtype=hop.dtype)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def assemble_laplacian(grid: Grid) -> SparseHermitian:
    """Five-point Dirichlet Laplacian: 4/h^2 on the diagonal, -1/h^2 per edge."""
    return SparseHermitian(_assemble(grid, np.ones(len(grid.edges))), "real-symmetric")


def pole_gauge(grid: Grid, poles: PoleSet) -> PoleGauge:
    xy = grid.node_xy
    omega = _edge_phases(poles.xy, xy[grid.edges[:, 0]], xy[grid.edges[:, 1]], grid.h)
    return PoleGauge(poles, node_angles(grid, poles), omega)


def assemble_ab_hamiltonian(grid: Grid, poles: PoleSet) -> tuple[SparseHermitian, PoleGauge]:
    gauge = pole_gauge(grid, poles)
    H = _assemble(grid, np.exp(-1j * gauge.omega))
    return SparseHermitian(H, "complex-Hermitian"), gauge


def apply_K(gauge: PoleGauge, v: np.ndarray) -> np.ndarray:
    """Antilinear symmetry: multiply the complex conjugate by exp(i theta) node-wise."""
    v = np.asarray(v)
    phase = gauge.phase
    if v.ndim == 2:
        phase = phase[:, None]
    return phase * np.conj(v)


def plaquette_flux(grid: Grid, gauge: PoleGauge) -> np.ndarray:
    """Counterclockwise link-phase sum around every full plaquette, reduced to [0, 2 pi)."""
    ce = grid.cell_edges[grid.cell_full]
    total = (gauge.omega[ce] * CELL_EDGE_SIGN).sum(axis=1)
    return np.mod(total, 2 * np.pi)


def enclosed_pole_count(grid: Grid, poles: PoleSet) -> np.ndarray:
    """Number of poles strictly inside each full plaquette."""
    count = np.zeros(int(grid.cell_full.sum()), dtype=int)
    if len(poles) == 0:
        return count
    lut = {tuple(c): k for k, c in enumerate(grid.full_cells.tolist())}
    rel = (poles.xy - np.asarray(grid.origin)) / grid.h
    for r in rel:
        c = tuple(np.floor(r).astype(int).tolist())
        if c in lut and np.all(r - np.floor(r) > 0):
            count[lut[c]] += 1
    return count


def restrict(H: SparseHermitian, nodes) -> SparseHermitian:
    """Principal submatrix on ``nodes``: Dirichlet conditions on everything else."""
    nodes = np.asarray(nodes)
    return SparseHermitian(H.matrix[nodes][:, nodes].tocsr(), H.kind)
