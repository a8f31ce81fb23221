"""Pole-configuration search for candidate minimal k-partitions.

For a pole set ``X`` the objective ``L_k(X)`` is the smallest eigenvalue of the
half-flux Hamiltonian whose eigenspace contains a K-real function with exactly
``k`` nodal domains (``inf`` when no eigenvalue among the lowest ``M`` does).
Poles are snapped to plaquette centres, so the search runs over integer
plaquette indices: a coarse scan plus seeded templates, followed by a
compass pattern search with step halving.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComponentTooSmall, DuplicatePole, UnresolvedPartition, ValidationError
from .eigensolve import DEFAULT_CLUSTER_GAP, Spectrum, lowest_eigenpairs
from .geometry import INTERIOR, Domain, PoleSet, validate_pole_set
from .lattice import Grid, assemble_ab_hamiltonian, assemble_laplacian, build_grid, restrict, snap_poles
from .nodal import (
    MIN_DOMAIN_NODES,
    EulerData,
    PartitionLabeling,
    attainable_nodal_counts,
    euler_check,
    extract_critical_points,
    k_real_representatives,
)

log = logging.getLogger(__name__)

SCAN_BUDGET = 64


def default_num_eigenpairs(k: int) -> int:
    return max(2 * k, k + 6)


@dataclass(eq=False)
class ConfigurationResult:
    domain: Domain
    n: int
    k: int
    poles: PoleSet  # snapped
    value: float  # L_k, inf when no witness
    eigenvalues: np.ndarray
    cluster: tuple[int, ...] | None = None  # 0-based indices of the witnessing eigenvalue cluster
    alpha: float | None = None
    coeffs: tuple[float, ...] | None = None
    labeling: PartitionLabeling | None = field(default=None, repr=False)
    euler: EulerData | None = field(default=None, repr=False)
    euler_residual: int | None = None
    energy: float | None = None  # max of component Dirichlet ground energies
    component_energies: tuple[float, ...] = ()
    displacement: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    tol: float = 1e-9

    @property
    def found(self):
        return math.isfinite(self.value)

    @property
    def lambda_k(self):
        return float(self.eigenvalues[self.k - 1]) if len(self.eigenvalues) >= self.k else float("nan")

    @property
    def courant_sharp(self):
        return courant_sharp_check(self)

    def summary(self):
        return {
            "n": self.n,
            "k": self.k,
            "poles": [list(p) for p in self.poles.poles],
            "L_k": self.value if self.found else None,
            "lambda_k": self.lambda_k,
            "courant_sharp": self.courant_sharp,
            "cluster": [i + 1 for i in self.cluster] if self.cluster else None,  # 1-based
            "alpha": self.alpha,
            "partition_energy": self.energy,
            "euler_residual": self.euler_residual,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }


def courant_sharp_check(result: ConfigurationResult, factor: float = 10.0) -> bool:
    """True iff the k-domain witness sits at the k-th eigenvalue (``L_k == lambda_k`` to tolerance)."""
    if not result.found or len(result.eigenvalues) < result.k:
        return False
    lam = result.lambda_k
    return abs(result.value - lam) <= factor * result.tol * max(1.0, abs(lam))


def _as_pole_set(domain: Domain, poles) -> PoleSet:
    """Validated pole set with placements (in-domain or hole index) recomputed."""
    pts = poles.poles if isinstance(poles, PoleSet) else [tuple(map(float, p)) for p in poles]
    return validate_pole_set(domain, pts)


def partition_energy(grid: Grid, labeling: PartitionLabeling, tol: float = 1e-9, seed: int = 0):
    """``(max_i lambda_1(D_i), [lambda_1(D_i)])`` with each component's Dirichlet Laplacian."""
    L = assemble_laplacian(grid)
    energies = []
    for lab in range(1, labeling.mu + 1):
        nodes = labeling.component_nodes(lab)
        if len(nodes) < MIN_DOMAIN_NODES:
            raise ComponentTooSmall(f"component {lab} has {len(nodes)} nodes (< {MIN_DOMAIN_NODES})")
        sub = restrict(L, nodes)
        energies.append(float(lowest_eigenpairs(sub, 1, tol=tol, seed=seed).values[0]))
    return max(energies), energies


def L_k_of_configuration(
    domain: Domain,
    n: int,
    poles,
    k: int,
    M: int | None = None,
    tol: float = 1e-9,
    alpha_steps: int = 32,
    seed: int = 0,
    certify: bool = True,
    cluster_gap: float = DEFAULT_CLUSTER_GAP,
    spectrum: Spectrum | None = None,
) -> ConfigurationResult:
    """Evaluate the objective for one pole set.

    With ``certify`` the witness partition is also analysed: its Euler residual
    (``None`` when the critical points are unresolved) and partition energy.
    """
    if k < 1:
        raise ValidationError("k", "must be >= 1")
    grid = build_grid(domain, n)
    ps = _as_pole_set(domain, poles)
    snapped, disp = snap_poles(grid, ps)
    H, gauge = assemble_ab_hamiltonian(grid, snapped)
    M = default_num_eigenpairs(k) if M is None else M
    M = min(M, H.dim)
    if spectrum is None:
        spectrum = lowest_eigenpairs(H, M, tol=tol, seed=seed, cluster_gap=cluster_gap)
    result = ConfigurationResult(domain, n, k, snapped, math.inf, spectrum.values, displacement=disp, tol=tol)
    for c, idx in enumerate(spectrum.clusters):
        lam = float(np.mean(spectrum.values[list(idx)]))
        B = k_real_representatives(spectrum.cluster_vectors(c), gauge, dim=len(idx))
        counts = attainable_nodal_counts(B, grid, gauge, alpha_steps, seed, lam, target=k)
        if k in counts:
            wit = counts[k]
            result.value = float(spectrum.values[idx[0]])
            result.cluster, result.alpha, result.coeffs = idx, wit.alpha, wit.coeffs
            result.labeling = wit.labeling
            break
    if certify and result.found:
        try:
            result.euler = extract_critical_points(result.labeling, grid, snapped)
            result.euler_residual = euler_check(result.euler, k)
        except UnresolvedPartition as exc:
            log.info("euler check skipped: %s", exc)
        try:
            result.energy, energies = partition_energy(grid, result.labeling, tol, seed)
            result.component_energies = tuple(energies)
        except ComponentTooSmall as exc:
            log.info("partition energy skipped: %s", exc)
    return result


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class TraceEntry:
    ell: int
    stage: str  # template, scan, pattern, refine
    n: int
    poles: tuple[tuple[float, float], ...]
    value: float
    courant_sharp: bool
    eigenvalues: tuple[float, ...] = ()


@dataclass(eq=False)
class SearchResult:
    k: int
    best: ConfigurationResult | None
    per_ell: dict[int, ConfigurationResult]
    trace: list[TraceEntry]
    levels: dict[int, list[tuple[int, float]]] = field(default_factory=dict)  # ell -> [(n, best value)]
    selected: ConfigurationResult | None = None

    @property
    def value(self):
        return self.best.value if self.best is not None else math.inf


class _Objective:
    """Cached ``L_k`` over configurations given as sorted tuples of plaquette indices."""

    def __init__(self, domain, n, k, M, tol, alpha_steps, seed, fixed, trace, ell):
        self.grid = build_grid(domain, n)
        self.domain, self.n, self.k, self.M = domain, n, k, M
        self.tol, self.alpha_steps, self.seed = tol, alpha_steps, seed
        self.fixed = fixed  # hole poles (xy, placement)
        self.cache = {}
        self.trace, self.ell = trace, ell
        lut = self.grid.cell_lookup
        ok = np.zeros(lut.shape, dtype=bool)
        full = self.grid.full_cells
        centers = self.grid.cell_center(full)
        inside = self.domain.region(centers[:, 0], centers[:, 1]) == INTERIOR
        ok[full[inside, 0], full[inside, 1]] = True
        self.valid = ok

    def is_valid(self, cell):
        i, j = cell
        return 0 <= i < self.valid.shape[0] and 0 <= j < self.valid.shape[1] and bool(self.valid[i, j])

    def cells_of(self, poles: PoleSet):
        """Plaquette indices of the in-domain poles after snapping to this grid."""
        snapped, _ = snap_poles(self.grid, poles)
        xy = np.array([p for p, pl in zip(snapped.poles, snapped.placement) if pl is None]).reshape(-1, 2)
        return [tuple(int(v) for v in c) for c in self.grid.cell_of(xy)]

    def pole_set(self, config):
        xy = [tuple(map(float, p)) for p in self.grid.cell_center(np.array(config, dtype=float).reshape(-1, 2))] if config else []
        return PoleSet(tuple(xy) + self.fixed[0], (None,) * len(xy) + self.fixed[1])

    def __call__(self, config, stage):
        config = tuple(sorted(config))
        if config in self.cache:
            return self.cache[config]
        try:
            res = L_k_of_configuration(
                self.domain, self.n, self.pole_set(config), self.k, self.M, self.tol, self.alpha_steps, self.seed,
                certify=False,
            )
            value, sharp, lams = res.value, res.courant_sharp, tuple(map(float, res.eigenvalues))
        except DuplicatePole:
            value, sharp, lams = math.inf, False, ()
        self.cache[config] = value
        self.trace.append(TraceEntry(self.ell, stage, self.n, self.pole_set(config).poles, value, sharp, lams))
        return value


def _key(value, config):
    return (value, tuple(sorted(config)))


def _templates(obj: _Objective, ell: int):
    """Symmetric seeds: the centroid (one pole) and rings of ``ell`` equally spaced poles.

    Rings are placed at every lattice radius up to the inradius (which includes
    one third and two thirds of it), with angular offsets 0 and pi/ell.  The
    objective is finite only on narrow bands of pole positions, so a radial
    sweep is far more reliable than a couple of fixed radii.
    """
    if ell == 0:
        return [()]
    dom = obj.domain.outer
    cx, cy = dom.centroid
    rho = dom.inradius
    h = obj.grid.h
    radii = list(rho * np.array([1 / 3, 2 / 3])) + list(h * np.arange(1, int(rho / h) + 1))
    out = [[(cx, cy)]] if ell == 1 else []
    for r in radii:
        for off in (0.0, math.pi / ell):
            ang = off + 2 * math.pi * np.arange(ell) / ell
            out.append(list(zip(cx + r * np.cos(ang), cy + r * np.sin(ang))))
    configs = []
    for pts in out:
        try:
            cells = obj.cells_of(PoleSet(tuple(pts), (None,) * len(pts)))
        except DuplicatePole:
            continue
        if len(set(cells)) == ell and all(obj.is_valid(c) for c in cells):
            configs.append(tuple(sorted(cells)))
    return list(dict.fromkeys(configs))


def _coarse_sites(obj: _Objective, stride: int):
    cx, cy = obj.domain.outer.centroid
    ci, cj = obj.grid.cell_of([(cx, cy)])[0]
    ii, jj = np.nonzero(obj.valid)
    keep = ((ii - ci) % stride == 0) & ((jj - cj) % stride == 0)
    return [(int(i), int(j)) for i, j in zip(ii[keep], jj[keep])]


def _scan(obj: _Objective, ell: int, stride: int, budget: int, rng):
    sites = _coarse_sites(obj, stride)
    if ell == 0 or len(sites) < ell:
        return []
    if ell <= 1 or math.comb(len(sites), ell) <= budget:
        return [tuple(c) for c in itertools.combinations(sites, ell)]
    out = set()
    while len(out) < budget:
        pick = rng.choice(len(sites), size=ell, replace=False)
        out.add(tuple(sorted(sites[p] for p in pick)))
    return sorted(out)


def _pattern_search(obj: _Objective, start, step: int, stage: str, max_iter: int = 200):
    current = tuple(sorted(start))
    fcur = obj(current, stage)
    it = 0
    while step >= 1 and it < max_iter:
        it += 1
        best = None
        for p in range(len(current)):
            for di, dj in ((step, 0), (-step, 0), (0, step), (0, -step)):
                moved = (current[p][0] + di, current[p][1] + dj)
                if not obj.is_valid(moved) or moved in current:
                    continue
                cand = tuple(sorted(current[:p] + (moved,) + current[p + 1 :]))
                f = obj(cand, stage)
                if best is None or _key(f, cand) < _key(*best):
                    best = (f, cand)
        if best is not None and best[0] < fcur - 1e-12 * max(1.0, abs(fcur)):
            fcur, current = best
        else:
            step //= 2
    return fcur, current


def _refine_seeds(fine: _Objective, incumbent: PoleSet, ell: int, coarse_h: float, band: int = 2):
    """Seeds on a finer grid around the incumbent found on a coarser one.

    The snapped incumbent, its dilations about the centroid in fine-lattice
    steps, and symmetric rings whose radius lies within ``band`` coarse
    plaquettes of the incumbent's mean radius.  Snapping alone is not enough:
    the band of finite objective values is only a few plaquettes wide.
    """
    cx, cy = fine.domain.outer.centroid
    inner = np.array([p for p, pl in zip(incumbent.poles, incumbent.placement) if pl is None]).reshape(-1, 2)
    rel = inner - (cx, cy)
    rbar = float(np.mean(np.hypot(*rel.T)))
    h = fine.grid.h
    steps = int(math.ceil(band * coarse_h / h))
    candidates = []
    for t in range(-steps, steps + 1):
        scale = 1.0 + t * h / rbar if rbar > 0 else 1.0
        candidates.append((cx, cy) + scale * rel)
    for r in rbar + h * np.arange(-steps, steps + 1):
        if r <= 0:
            continue
        for off in (0.0, math.pi / ell):
            ang = off + 2 * math.pi * np.arange(ell) / ell
            candidates.append(np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)]))
    configs = []
    for pts in candidates:
        try:
            cells = fine.cells_of(PoleSet(tuple(map(tuple, pts)), (None,) * len(pts)))
        except DuplicatePole:
            continue
        if len(set(cells)) == ell and all(fine.is_valid(c) for c in cells):
            configs.append(tuple(sorted(cells)))
    return list(dict.fromkeys(configs))


def minimize_over_poles(
    domain: Domain,
    k: int,
    n: int = 63,
    ell_range=None,
    restarts: int = 2,
    seed: int = 0,
    alpha_steps: int = 32,
    M: int | None = None,
    tol: float = 1e-9,
    refine_n=(),
    hole_poles=(),
    scan_budget: int = SCAN_BUDGET,
    refine_iters: int = 2,
    tie_rtol: float = 1e-3,
) -> SearchResult:
    """Search pole configurations for the smallest ``L_k``.

    ``ell_range`` defaults to ``0 .. max(0, 2k - 4)`` in-domain poles; every
    entry of ``hole_poles`` (hole indices) adds a fixed pole in that hole.
    ``refine_n`` lists finer grids on which the incumbent of each ``ell`` is
    re-seeded nearby (see :func:`_refine_seeds`) and polished with at most
    ``refine_iters`` rounds of unit-step local search.

    ``best`` is the strict minimum (ties by pole list).  ``selected`` is the
    configuration with the fewest poles among those within a relative
    ``tie_rtol`` of it: a pole pushed to within a couple of plaquettes of the
    boundary changes the value by less than the discretization error.
    """
    if k < 1:
        raise ValidationError("k", "must be >= 1")
    ell_range = range(0, max(0, 2 * k - 4) + 1) if ell_range is None else ell_range
    M = default_num_eigenpairs(k) if M is None else M
    hole_xy = []
    for hidx in hole_poles:
        shape = domain.holes[hidx].shape
        hole_xy.append(tuple(map(float, shape.centroid)))
    fixed = (tuple(hole_xy), tuple(int(h) for h in hole_poles))
    trace: list[TraceEntry] = []
    per_ell, levels = {}, {}
    stride = max(1, n // 8)
    for ell in ell_range:
        obj = _Objective(domain, n, k, M, tol, alpha_steps, seed, fixed, trace, ell)
        rng = np.random.default_rng([seed, ell])
        seeds = []
        for cfg in _templates(obj, ell):
            seeds.append((obj(cfg, "template"), cfg))
        for cfg in _scan(obj, ell, stride, scan_budget, rng):
            seeds.append((obj(cfg, "scan"), cfg))
        if not seeds:
            continue
        seeds = sorted(set(seeds), key=lambda s: _key(*s))
        best = None
        if ell == 0:
            best = seeds[0]
        else:
            for f0, cfg in seeds[:restarts]:
                cand = _pattern_search(obj, cfg, stride, "pattern")
                if best is None or _key(*cand) < _key(*best):
                    best = cand
        xy = obj.pole_set(best[1])
        cur_n, coarse_h = n, obj.grid.h
        levels[ell] = [(n, best[0])]
        for nf in refine_n:
            fine = _Objective(domain, nf, k, M, tol, alpha_steps, seed, fixed, trace, ell)
            if ell == 0:
                levels[ell].append((nf, fine((), "refine")))
                xy, cur_n = fine.pole_set(()), nf
                continue
            seeds = [(fine(cfg, "refine"), cfg) for cfg in _refine_seeds(fine, xy, ell, coarse_h)]
            if not seeds:
                continue
            f, cfg = _pattern_search(fine, min(seeds, key=lambda s: _key(*s))[1], 1, "refine", refine_iters)
            xy, cur_n, coarse_h = fine.pole_set(cfg), nf, fine.grid.h
            levels[ell].append((nf, f))
        per_ell[ell] = L_k_of_configuration(domain, cur_n, xy, k, M, tol, alpha_steps, seed, certify=True)
        log.info("k=%d ell=%d n=%d L_k=%.6g", k, ell, cur_n, per_ell[ell].value)
    best = None
    for ell, res in sorted(per_ell.items()):
        if best is None or _key(res.value, res.poles.poles) < _key(best.value, best.poles.poles):
            best = res
    selected = None
    if best is not None and best.found:
        # values within the lattice resolution are indistinguishable: prefer fewer poles
        close = [r for r in per_ell.values() if r.value <= best.value * (1 + tie_rtol)]
        selected = min(close, key=lambda r: (len(r.poles), r.poles.poles))
    return SearchResult(k, best, per_ell, trace, levels, selected)


def richardson(values, ns, order: float = 1.0, extent: float = 1.0) -> float:
    """Extrapolate ``f(h) = f0 + c h**order`` to ``h = 0`` from the two finest grids."""
    values, ns = np.asarray(values, float), np.asarray(ns, float)
    if len(values) < 2:
        raise ValidationError("richardson", "need at least two grids")
    h = extent / (ns + 1)
    o = np.argsort(h)
    f1, f2 = values[o[0]], values[o[1]]
    r = (h[o[1]] / h[o[0]]) ** order
    return float((r * f1 - f2) / (r - 1))
