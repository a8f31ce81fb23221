"""Candidate spectral minimal k-partitions of planar domains via half-flux Aharonov-Bohm operators."""

from .errors import (
    ComponentTooSmall,
    DegenerateProjection,
    DuplicatePole,
    EmptyGrid,
    HoleUnresolved,
    InvalidDomain,
    MinpartError,
    NoConvergence,
    NonHalfInteger,
    NumericalError,
    ParseError,
    PoleOnEdge,
    PoleOutsideDomain,
    TwoPolesInOneHole,
    UnresolvedPartition,
    ValidationError,
)
from .geometry import Disk, Domain, Hole, PoleSet, Polygon, Rectangle, contains, unit_disk, unit_square, validate_pole_set
from .lattice import Grid, apply_K, assemble_ab_hamiltonian, assemble_laplacian, build_grid, snap_poles
from .eigensolve import Spectrum, cluster_degenerate, lowest_eigenpairs
from .nodal import (
    EulerData,
    PartitionLabeling,
    adjacency_graph,
    attainable_nodal_counts,
    euler_check,
    extract_critical_points,
    is_bipartite,
    k_real_representatives,
    label_nodal_domains,
)
from .optimizer import (
    ConfigurationResult,
    L_k_of_configuration,
    courant_sharp_check,
    minimize_over_poles,
    partition_energy,
    richardson,
)

__version__ = "0.1.0"
