import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rasterize
from minpart.eigensolve import lowest_eigenpairs
from minpart.errors import NonHalfInteger, UnresolvedPartition
from minpart.geometry import Disk, Domain, Rectangle, unit_disk, unit_square, validate_pole_set
from minpart.lattice import apply_K, assemble_ab_hamiltonian, assemble_laplacian, build_grid, snap_poles
from minpart.nodal import (
    EulerData,
    PartitionGraph,
    adjacency_graph,
    attainable_nodal_counts,
    euler_check,
    extract_critical_points,
    is_bipartite,
    k_real_representatives,
    label_nodal_domains,
    nodal_count,
    odd_point_warning,
    same_domain_flags,
)
from oracles import brute_components, checkerboard, sectors, split_square, y_disk


def disk_centre_pole(n=64, m=8):
    grid = build_grid(unit_disk(), n)
    poles, _ = snap_poles(grid, validate_pole_set(unit_disk(), [(0.0, 0.0)]))
    H, gauge = assemble_ab_hamiltonian(grid, poles)
    return grid, poles, gauge, lowest_eigenpairs(H, m)


# ------------------------------------------------------------ K-real projection


def test_k_real_basis_is_k_real_and_orthonormal():
    grid, _, gauge, spec = disk_centre_pole(40)
    for c in range(len(spec.clusters)):
        V = spec.cluster_vectors(c)
        B = k_real_representatives(V, gauge, V.shape[1])
        assert B.shape[1] == V.shape[1]
        for w in B.T:
            assert np.linalg.norm(apply_K(gauge, w) - w) < 1e-10
        G = np.real(B.conj().T @ B)
        assert np.allclose(G, np.eye(B.shape[1]), atol=1e-10)


def test_covariant_product_is_real_for_k_real_vectors():
    grid, _, gauge, spec = disk_centre_pole(40)
    w = k_real_representatives(spec.cluster_vectors(1), gauge)[:, 0]
    a, b = grid.edges.T
    z = np.conj(w[a]) * np.exp(-1j * gauge.omega) * w[b]
    assert np.max(np.abs(z.imag)) < 1e-12 * np.max(np.abs(z))


# ------------------------------------------------------------ counting


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(20, 40))
def test_square_product_modes(m, l, n):
    grid = build_grid(unit_square(), n)
    x, y = grid.node_xy.T
    w = np.sin(m * math.pi * x) * np.sin(l * math.pi * y)
    assert nodal_count(grid, w) == m * l


@pytest.mark.parametrize("n", [20, 31])
def test_count_matches_brute_force(n):
    grid = build_grid(unit_square(), n)
    spec = lowest_eigenpairs(assemble_laplacian(grid), 8)
    x, y = grid.node_xy.T
    for w in list(spec.vectors.T) + [np.cos(3 * x + 1) * np.sin(5 * y + 0.3)]:
        w = np.real(w)
        if np.min(np.abs(w)) < 1e-9 * np.max(np.abs(w)):
            continue  # exact zeros are resolved differently by design
        ref, _ = brute_components(grid.num_nodes, grid.edges.tolist(), same_domain_flags(grid, w, None))
        assert nodal_count(grid, w) == ref


def test_exact_zero_rows_do_not_fragment():
    # at odd n the nodal line x = 1/2 of the second mode passes through lattice nodes
    grid = build_grid(unit_square(), 31)
    x, y = grid.node_xy.T
    w = np.sin(2 * math.pi * x) * np.sin(2 * math.pi * y)
    assert nodal_count(grid, w) == 4


@pytest.mark.parametrize("n", [31, 63])
def test_zero_lines_do_not_create_diagonal_contact(n):
    # at odd n the centre node and both symmetry lines are exact zeros
    grid = build_grid(unit_square(), n)
    x, y = grid.node_xy.T
    lab = label_nodal_domains(grid, np.sin(2 * math.pi * x) * np.sin(2 * math.pi * y))
    g = adjacency_graph(lab, min_interface=1)
    assert len(g.edges) == 4 and is_bipartite(g).bipartite


def test_labels_are_contiguous_and_ordered():
    grid = build_grid(unit_square(), 24)
    x, y = grid.node_xy.T
    lab = label_nodal_domains(grid, np.sin(3 * math.pi * x) * np.sin(math.pi * y))
    assert lab.mu == 3 and set(np.unique(lab.labels)) == {1, 2, 3}
    firsts = [np.flatnonzero(lab.labels == k)[0] for k in (1, 2, 3)]
    assert firsts == sorted(firsts)


def test_courant_bound_square():
    grid = build_grid(unit_square(), 30)
    spec = lowest_eigenpairs(assemble_laplacian(grid), 12)
    for cl in spec.clusters:
        if cl[0] >= 10:
            break
        counts = attainable_nodal_counts(np.real(spec.vectors[:, list(cl)]), grid, None)
        assert max(counts) <= cl[0] + 1


def test_disk_centre_pole_attainable_counts():
    grid, _, gauge, spec = disk_centre_pole(64)
    ground = k_real_representatives(spec.cluster_vectors(0), gauge)
    assert set(attainable_nodal_counts(ground, grid, gauge)) == {1}
    second = k_real_representatives(spec.cluster_vectors(1), gauge)
    assert 3 in attainable_nodal_counts(second, grid, gauge)


def test_witness_reproduces_count():
    grid, _, gauge, spec = disk_centre_pole(48)
    B = k_real_representatives(spec.cluster_vectors(2), gauge)
    for mu, wit in attainable_nodal_counts(B, grid, gauge).items():
        assert nodal_count(grid, B @ np.asarray(wit.coeffs), gauge) == mu == wit.labeling.mu


# ------------------------------------------------------------ partition graph


def test_split_square_graph():
    lab = rasterize(build_grid(unit_square(), 30), split_square)
    g = adjacency_graph(lab)
    assert g.edges == {(1, 2)}
    assert is_bipartite(g).bipartite


def test_checkerboard_is_a_four_cycle():
    lab = rasterize(build_grid(unit_square(), 30), checkerboard)
    g = adjacency_graph(lab)
    assert g.edges == {(1, 2), (1, 3), (2, 4), (3, 4)}  # diagonal quadrants only touch at a point
    res = is_bipartite(g)
    assert res and res.coloring[1] == res.coloring[4] != res.coloring[2]


def test_y_disk_is_k3_with_odd_cycle():
    lab = rasterize(build_grid(unit_disk(), 40), y_disk(0.3))
    res = is_bipartite(adjacency_graph(lab))
    assert not res.bipartite
    assert sorted(res.odd_cycle) == [1, 2, 3]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.sets(st.tuples(st.integers(1, 9), st.integers(1, 9)), max_size=20))
def test_bipartite_certificates(nv, raw):
    edges = frozenset((min(a, b), max(a, b)) for a, b in raw if a != b and a <= nv and b <= nv)
    g = PartitionGraph(tuple(range(1, nv + 1)), edges, {e: 5 for e in edges})
    res = is_bipartite(g)
    if res.bipartite:
        assert all(res.coloring[a] != res.coloring[b] for a, b in edges)
    else:
        cyc = res.odd_cycle
        assert len(cyc) % 2 == 1
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            assert (min(a, b), max(a, b)) in edges


def test_thin_interfaces_flagged():
    grid = build_grid(unit_square(), 20)
    x, y = grid.node_xy.T
    labels = np.where(x < 0.5, 1, 2)
    labels[(x > 0.5) & (y > 0.15)] = 3
    labels[(x > 0.5) & (y > 0.85)] = 2
    from minpart.nodal import PartitionLabeling

    same = labels[grid.edges[:, 0]] == labels[grid.edges[:, 1]]
    g = adjacency_graph(PartitionLabeling(grid, labels, 3, same))
    assert all(g.interface_sizes[p] <= 3 for p in g.thin_interfaces)


# ------------------------------------------------------------ Euler formula


@pytest.mark.parametrize(
    "domain, f, k, nu, rho",
    [
        (unit_square(), split_square, 2, [], [1, 1]),
        (unit_square(), checkerboard, 4, [4], [1, 1, 1, 1]),
        (unit_disk(), y_disk(0.1), 3, [3], [1, 1, 1]),
        (unit_disk(), sectors(5, 0.2), 5, [5], [1] * 5),
    ],
)
@pytest.mark.parametrize("n", [30, 63])
def test_euler_on_analytic_partitions(domain, f, k, nu, rho, n):
    lab = rasterize(build_grid(domain, n), f)
    data = extract_critical_points(lab)
    assert data.nu == nu and data.rho == rho
    assert euler_check(data, k) == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.integers(24, 80), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_euler_y_partition_any_rotation(offset, n, cx, cy):
    lab = rasterize(build_grid(unit_disk(), n), y_disk(offset, (cx, cy)))
    assert euler_check(extract_critical_points(lab), 3) == 0


def test_euler_island():
    lab = rasterize(build_grid(unit_square(), 40), lambda x, y: np.where((x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.06, 1, 2))
    data = extract_critical_points(lab)
    assert (data.b0, data.b1, data.nu, data.rho) == (1, 2, [], [])
    assert euler_check(data, 2) == 0


def test_euler_domain_with_hole():
    dom = Domain(Rectangle(1.0, 1.0), (Disk(0.2, (0.5, 0.5)),))
    lab = rasterize(build_grid(dom, 40), lambda x, y: np.where(y < 0.5 + 1e-3, 1, 2))
    data = extract_critical_points(lab)
    assert data.b0 == 2 and data.hole_hits == {0: 2}
    assert euler_check(data, 2) == 0


def test_pole_in_hole_ground_state():
    # the single nodal ray from the hole stays inside one cell, so no interface is reported
    dom = Domain(Rectangle(1.0, 1.0), (Disk(0.15, (0.5, 0.5)),))
    grid = build_grid(dom, 48)
    poles, _ = snap_poles(grid, validate_pole_set(dom, [(0.5, 0.5)]))
    H, gauge = assemble_ab_hamiltonian(grid, poles)
    spec = lowest_eigenpairs(H, 2)
    w = k_real_representatives(spec.cluster_vectors(0), gauge)[:, 0]
    lab = label_nodal_domains(grid, w, gauge)
    assert lab.mu == 1 and (~lab.same).sum() > 0
    data = extract_critical_points(lab, grid, poles)
    assert (data.b0, data.b1) == (2, 2)
    assert euler_check(data, 1) == 0


def test_hole_hit_an_odd_number_of_times():
    dom = Domain(Rectangle(1.0, 1.0), (Disk(0.2, (0.5, 0.5)),))
    lab = rasterize(build_grid(dom, 60), y_disk(0.2, (0.5, 0.5)))
    data = extract_critical_points(lab)
    assert data.hole_hits == {0: 3} and ("hole", 0) in data.x_odd
    assert data.nu == [] and sum(data.rho) == 6
    assert euler_check(data, 3) == 0


def test_centre_pole_modes_euler():
    grid, poles, gauge, spec = disk_centre_pole(64)
    for c, (mu, nu) in zip((1, 2), ((3, 3), (5, 5))):
        B = k_real_representatives(spec.cluster_vectors(c), gauge)
        wit = attainable_nodal_counts(B, grid, gauge)[mu]
        data = extract_critical_points(wit.labeling, grid, poles)
        assert data.nu == [nu] and data.critical[0].pole == 0
        assert data.rho == [1] * mu
        assert euler_check(data, mu) == 0


def test_unresolved_close_critical_points():
    grid = build_grid(unit_square(), 31)
    h = grid.h
    a, b = 15.5 * h, 17.5 * h

    def f(x, y):
        lab = np.where(x < a, np.where(y < 16.5 * h, 1, 2), np.where(x < b, 3, np.where(y < 17.5 * h, 4, 5)))
        return lab

    with pytest.raises(UnresolvedPartition):
        extract_critical_points(rasterize(grid, f))


def test_from_counts_and_parity():
    assert euler_check(EulerData.from_counts(1, 1, [3], [1, 1, 1]), 3) == 0
    assert euler_check(EulerData.from_counts(1, 1, [], [1, 1]), 2) == 0
    assert euler_check(EulerData.from_counts(1, 1, [3], [1, 1, 1]), 4) == -1
    with pytest.raises(NonHalfInteger):
        euler_check(EulerData.from_counts(1, 1, [3], [1, 1]), 3)


def test_odd_point_warning():
    data = EulerData.from_counts(1, 1, [3, 3, 3], [1, 1, 1])
    with pytest.warns(UserWarning):
        assert odd_point_warning(data, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not odd_point_warning(EulerData.from_counts(1, 1, [3, 3], []), 3)
