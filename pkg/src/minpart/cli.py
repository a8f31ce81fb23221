"""Command-line front end: JSON run configuration, subcommand dispatch, artifact emission.

    minpart <subcommand> --config run.json [--out DIR] [--seed S] [--n N] [--k K]

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 unresolved partition.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Literal

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import io
from .eigensolve import lowest_eigenpairs
from .errors import MinpartError, ParseError, UnresolvedPartition, ValidationError
from .geometry import Disk, Domain, PoleSet, Polygon, Rectangle, validate_pole_set
from .lattice import assemble_ab_hamiltonian, assemble_laplacian, build_grid, snap_poles
from .nodal import (
    EulerData,
    adjacency_graph,
    attainable_nodal_counts,
    euler_check,
    extract_critical_points,
    is_bipartite,
    k_real_representatives,
    label_nodal_domains,
)
from .optimizer import minimize_over_poles, partition_energy

log = logging.getLogger("minpart")

SUBCOMMANDS = ("spectrum", "nodal", "minimize", "partition-energy", "euler-check", "render")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ShapeSpec(_Strict):
    type: Literal["square", "rectangle", "disk", "polygon"]
    side: float | None = Field(None, gt=0)
    width: float | None = Field(None, gt=0)
    height: float | None = Field(None, gt=0)
    origin: tuple[float, float] | None = None
    radius: float | None = Field(None, gt=0)
    center: tuple[float, float] | None = None
    vertices: list[tuple[float, float]] | None = None

    @model_validator(mode="after")
    def _required(self):
        need = {"rectangle": ("width", "height"), "polygon": ("vertices",)}.get(self.type, ())
        for name in need:
            if getattr(self, name) is None:
                raise ValueError(f"{self.type} needs '{name}'")
        return self

    def build(self):
        if self.type == "square":
            side = 1.0 if self.side is None else self.side
            return Rectangle(side, side, self.origin or (0.0, 0.0))
        if self.type == "rectangle":
            return Rectangle(self.width, self.height, self.origin or (0.0, 0.0))
        if self.type == "disk":
            return Disk(1.0 if self.radius is None else self.radius, self.center or (0.0, 0.0))
        return Polygon(tuple(self.vertices))


class DomainSpec(ShapeSpec):
    holes: list[ShapeSpec] = []

    def build(self) -> Domain:
        return Domain(super().build(), tuple(h.build() for h in self.holes))


class GridSpec(_Strict):
    n: int = Field(63, ge=1)


class SolverSpec(_Strict):
    m: int = Field(12, ge=1)
    tol: float = Field(1e-9, gt=0, lt=1)
    max_iter: int | None = Field(None, ge=1)
    cluster_gap: float = Field(1e-4, ge=0)


class OptimizerSpec(_Strict):
    k: int = Field(2, ge=1)
    ell_range: tuple[int, int] | None = None
    restarts: int = Field(2, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    alpha_steps: int = Field(32, ge=1)
    M: int | None = Field(None, ge=1)
    refine_n: list[int] = []
    hole_poles: list[int] = []

    @model_validator(mode="after")
    def _check(self):
        if self.ell_range is not None and not 0 <= self.ell_range[0] <= self.ell_range[1]:
            raise ValueError("ell_range must be [lo, hi] with 0 <= lo <= hi")
        if any(v < 1 for v in self.refine_n):
            raise ValueError("refine_n entries must be positive")
        if self.M is not None and self.M < self.k:
            raise ValueError("M must be >= k")
        return self


class NodalSpec(_Strict):
    eigenvalue: int = Field(1, ge=1)  # 1-based index; its whole cluster is analysed
    mu: int | None = Field(None, ge=1)  # preferred nodal count of the reported labeling


class EulerSpec(_Strict):
    b0: int = Field(1, ge=1)
    b1: int = Field(1, ge=0)
    nu: list[int] = []
    rho: list[int] = []
    k: int | None = Field(None, ge=1)


class RunConfig(_Strict):
    domain: DomainSpec = DomainSpec(type="square", side=1.0)
    grid: GridSpec = GridSpec()
    poles: list[tuple[float, float]] | None = None
    solver: SolverSpec = SolverSpec()
    optimizer: OptimizerSpec = OptimizerSpec()
    nodal: NodalSpec = NodalSpec()
    euler: EulerSpec | None = None
    output: str = "out"

    def build_domain(self) -> Domain:
        return self.domain.build()

    def pole_set(self, domain: Domain | None = None) -> PoleSet:
        return validate_pole_set(domain or self.build_domain(), self.poles or [])


def _field_of(err) -> str:
    loc = [str(p) for p in err["loc"] if not str(p).startswith("function-")]
    return ".".join(loc) or "config"


def _validate(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ParseError("config", "top level must be a JSON object")
    try:
        cfg = RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        raise ValidationError(_field_of(first), first["msg"]) from None
    # surface domain and pole errors at parse time
    cfg.pole_set(cfg.build_domain())
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("config", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return _validate(data)


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)


def with_overrides(cfg: RunConfig, n=None, k=None, seed=None, out=None) -> RunConfig:
    data = cfg.model_dump(mode="json")
    if n is not None:
        data["grid"]["n"] = n
    if k is not None:
        data["optimizer"]["k"] = k
    if seed is not None:
        data["optimizer"]["seed"] = seed
    if out is not None:
        data["output"] = str(out)
    return _validate(data)


# ------------------------------------------------------------------ subcommands


def _setup(cfg: RunConfig):
    domain = cfg.build_domain()
    grid = build_grid(domain, cfg.grid.n)
    poles, disp = snap_poles(grid, cfg.pole_set(domain))
    if len(poles):
        H, gauge = assemble_ab_hamiltonian(grid, poles)
    else:
        H, gauge = assemble_laplacian(grid), None
    if len(disp):
        log.info("max pole snap displacement %.3g", float(disp.max()))
    return domain, grid, poles, H, gauge


def _solve(cfg, H, m):
    return lowest_eigenpairs(H, min(m, H.dim), tol=cfg.solver.tol, seed=cfg.optimizer.seed,
                             max_iter=cfg.solver.max_iter, cluster_gap=cfg.solver.cluster_gap)


def _nodal_labeling(cfg: RunConfig):
    domain, grid, poles, H, gauge = _setup(cfg)
    idx = cfg.nodal.eigenvalue - 1
    spec = _solve(cfg, H, max(cfg.solver.m, idx + 3))
    if idx >= len(spec):
        raise ValidationError("nodal.eigenvalue", f"only {len(spec)} eigenvalues available")
    c = next(i for i, cl in enumerate(spec.clusters) if idx in cl)
    lam = float(spec.values[idx])
    V = spec.cluster_vectors(c)
    if gauge is None:
        B = np.real(V)  # real symmetric problem: eigenvectors are already real
    else:
        B = k_real_representatives(V, gauge, V.shape[1])
    counts = attainable_nodal_counts(B, grid, gauge, cfg.optimizer.alpha_steps, cfg.optimizer.seed, lam)
    if cfg.nodal.mu is not None and cfg.nodal.mu in counts:
        labeling = counts[cfg.nodal.mu].labeling
    else:
        labeling = label_nodal_domains(grid, B[:, 0], gauge, lam)
    return domain, grid, poles, spec, spec.clusters[c], counts, labeling


def cmd_spectrum(cfg: RunConfig, out: Path):
    _, _, _, H, _ = _setup(cfg)
    spec = _solve(cfg, H, cfg.solver.m)
    cluster_of = {i: c + 1 for c, cl in enumerate(spec.clusters) for i in cl}
    rows = [(i + 1, v, r, cluster_of[i]) for i, (v, r) in enumerate(zip(spec.values, spec.residuals))]
    io.write_csv(out / "spectrum.csv", ("index", "eigenvalue", "residual", "cluster"), rows)
    for i, v, *_ in rows:
        print(f"{i}\t{v:.10g}")
    return 0


def _euler_report(labeling, grid, poles, k):
    data = extract_critical_points(labeling, grid, poles)
    return data, euler_check(data, k)


def cmd_nodal(cfg: RunConfig, out: Path):
    domain, grid, poles, spec, cluster, counts, labeling = _nodal_labeling(cfg)
    io.write_pgm(out / "labels.pgm", labeling)
    graph = adjacency_graph(labeling)
    bip = is_bipartite(graph)
    report = {
        "eigenvalue_index": cfg.nodal.eigenvalue,
        "eigenvalue": labeling.eigenvalue,
        "cluster": [i + 1 for i in cluster],
        "mu": labeling.mu,
        "attainable_counts": sorted(counts),
        "graph_edges": sorted(graph.edges),
        "thin_interfaces": graph.thin_interfaces,
        "bipartite": bip.bipartite,
        "odd_cycle": list(bip.odd_cycle) if bip.odd_cycle else None,
    }
    try:
        data, residual = _euler_report(labeling, grid, poles, labeling.mu)
        report.update(euler=data.to_dict(), euler_residual=residual)
        code = 0
    except UnresolvedPartition as exc:
        report.update(euler=None, euler_residual=None, unresolved=str(exc))
        code = UnresolvedPartition.exit_code
        print(f"error: {exc}", file=sys.stderr)
    io.write_json(out / "nodal.json", report)
    print(f"mu={labeling.mu} attainable={sorted(counts)} bipartite={bip.bipartite} euler_residual={report['euler_residual']}")
    return code


def cmd_partition_energy(cfg: RunConfig, out: Path):
    _, grid, _, _, _, _, labeling = _nodal_labeling(cfg)
    lam, per = partition_energy(grid, labeling, cfg.solver.tol, cfg.optimizer.seed)
    sizes = labeling.sizes()
    rows = [(i + 1, int(sizes[i]), v) for i, v in enumerate(per)]
    io.write_csv(out / "partition_energy.csv", ("component", "nodes", "lambda1"), rows)
    print(f"Lambda={lam:.10g} over {labeling.mu} components")
    return 0


def cmd_euler_check(cfg: RunConfig, out: Path):
    if cfg.euler is not None:
        data = EulerData.from_counts(cfg.euler.b0, cfg.euler.b1, cfg.euler.nu, cfg.euler.rho)
        k = cfg.euler.k if cfg.euler.k is not None else cfg.optimizer.k
    else:
        _, grid, poles, _, _, _, labeling = _nodal_labeling(cfg)
        data = extract_critical_points(labeling, grid, poles)
        k = labeling.mu
    residual = euler_check(data, k)
    io.write_json(out / "euler_check.json", {"k": k, "residual": residual, "euler": data.to_dict()})
    print(f"euler residual {residual} (k={k})")
    return 0


def cmd_render(cfg: RunConfig, out: Path):
    domain, grid, poles, _, _, _, labeling = _nodal_labeling(cfg)
    try:
        data = extract_critical_points(labeling, grid, poles)
    except UnresolvedPartition as exc:
        log.warning("critical points not drawn: %s", exc)
        data = None
    io.render_svg(out / "partition.svg", domain, labeling, poles, data, f"mu={labeling.mu}")
    print(out / "partition.svg")
    return 0


def cmd_minimize(cfg: RunConfig, out: Path):
    domain = cfg.build_domain()
    o = cfg.optimizer
    ell_range = range(o.ell_range[0], o.ell_range[1] + 1) if o.ell_range else None
    res = minimize_over_poles(
        domain, o.k, n=cfg.grid.n, ell_range=ell_range, restarts=o.restarts, seed=o.seed, alpha_steps=o.alpha_steps,
        M=o.M, tol=cfg.solver.tol, refine_n=tuple(o.refine_n), hole_poles=tuple(o.hole_poles),
    )
    rows = []
    for t in sorted(res.trace, key=lambda t: (t.ell, t.n, t.value, t.poles, t.stage)):
        poles = ";".join(f"{io.fmt(x)} {io.fmt(y)}" for x, y in t.poles)
        lams = ";".join(io.fmt(v) for v in t.eigenvalues)
        rows.append((t.ell, t.n, t.stage, poles, t.value, lams, o.k if math.isfinite(t.value) else None, str(t.courant_sharp).lower()))
    io.write_csv(out / "trace.csv", ("ell", "n", "stage", "poles", "L_k", "eigenvalues", "mu_witness", "courant_sharp"), rows)
    report = {
        "k": o.k,
        "best_ell": None,
        "best": None,
        "per_ell": {str(ell): r.summary() for ell, r in sorted(res.per_ell.items())},
        "selected_ell": None,
    }
    best = res.best
    if best is not None:
        report["best_ell"] = sum(p is None for p in best.poles.placement)
        report["best"] = best.summary()
        if best.euler is not None:
            report["best"]["euler"] = best.euler.to_dict()
        if res.selected is not None:
            report["selected_ell"] = sum(p is None for p in res.selected.poles.placement)
    io.write_json(out / "best.json", report)
    if best is not None and best.labeling is not None:
        io.write_pgm(out / "witness.pgm", best.labeling)
        io.render_svg(out / "witness.svg", domain, best.labeling, best.poles, best.euler, f"L_{o.k}={best.value:.6g}")
        print(f"best L_{o.k} = {best.value:.10g} with {len(best.poles)} poles (courant_sharp={best.courant_sharp})")
    else:
        print(f"no configuration with {o.k} nodal domains found")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "nodal": cmd_nodal,
    "minimize": cmd_minimize,
    "partition-energy": cmd_partition_energy,
    "euler-check": cmd_euler_check,
    "render": cmd_render,
}


def run_subcommand(name: str, cfg: RunConfig) -> int:
    if name not in COMMANDS:
        raise ValidationError("subcommand", f"unknown subcommand {name!r}")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[name](cfg, out)


def build_parser():
    p = argparse.ArgumentParser(prog="minpart", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output directory (overrides config 'output')")
    p.add_argument("--seed", type=int, help="random seed (overrides optimizer.seed)")
    p.add_argument("--n", type=int, help="grid resolution (overrides grid.n)")
    p.add_argument("--k", type=int, help="number of cells (overrides optimizer.k)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ParseError("config", str(exc)) from None
        cfg = with_overrides(parse_config(text), args.n, args.k, args.seed, args.out)
        return run_subcommand(args.subcommand, cfg)
    except MinpartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
