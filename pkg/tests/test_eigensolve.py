import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from minpart.eigensolve import cluster_degenerate, lowest_eigenpairs
from minpart.errors import NoConvergence, ValidationError
from minpart.geometry import unit_disk, unit_square, validate_pole_set
from minpart.lattice import assemble_ab_hamiltonian, assemble_laplacian, build_grid, snap_poles
from oracles import bessel_zero, discrete_square_spectrum, half_integer_zero_closed_form


def square_H(n):
    return assemble_laplacian(build_grid(unit_square(), n))


def test_square_n3_example():
    spec = lowest_eigenpairs(square_H(3), 4)
    assert spec.values == pytest.approx([18.745166, 41.372583, 41.372583, 64.0], abs=1e-6)
    assert spec.clusters == ((0,), (1, 2), (3,))


@pytest.mark.parametrize("n", [15, 31, 40])
@pytest.mark.parametrize("method", ["auto", "dense", "shift-invert"])
def test_square_matches_closed_form(n, method):
    spec = lowest_eigenpairs(square_H(n), 10, method=method)
    ref = discrete_square_spectrum(n, count=10)
    assert np.max(np.abs(spec.values - ref) / ref) < 1e-8


def test_lobpcg_path():
    spec = lowest_eigenpairs(square_H(40), 4, tol=1e-8, method="lobpcg")
    ref = discrete_square_spectrum(40, count=4)
    assert np.max(np.abs(spec.values - ref) / ref) < 1e-8


def test_residuals_certified():
    spec = lowest_eigenpairs(square_H(31), 8)
    assert np.all(spec.residuals <= spec.tol * np.maximum(1, spec.values))
    V = spec.vectors
    assert np.allclose(V.conj().T @ V, np.eye(8), atol=1e-10)


def test_no_convergence_reports_residual():
    with pytest.raises(NoConvergence) as info:
        lowest_eigenpairs(square_H(31), 4, tol=1e-22)
    assert info.value.best_residual is not None and info.value.best_residual > 1e-22


def test_bad_m():
    with pytest.raises(ValidationError):
        lowest_eigenpairs(square_H(3), 10)


def test_deterministic_seed():
    grid = build_grid(unit_disk(), 40)
    poles, _ = snap_poles(grid, validate_pole_set(unit_disk(), [(0.1, 0.2)]))
    H, _ = assemble_ab_hamiltonian(grid, poles)
    a = lowest_eigenpairs(H, 6, seed=3)
    b = lowest_eigenpairs(H, 6, seed=3)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)


def test_square_second_order_convergence():
    errs = []
    for n in (31, 63, 127):
        lam = lowest_eigenpairs(square_H(n), 1).values[0]
        errs.append(abs(lam - 2 * math.pi**2))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.8 < r < 2.2 for r in rates)


def test_disk_first_order_convergence():
    j01 = bessel_zero(0.0)
    errs = []
    for n in (31, 63, 127):
        lam = lowest_eigenpairs(assemble_laplacian(build_grid(unit_disk(), n)), 1).values[0]
        errs.append(abs(lam - j01**2))
    # staircase boundary: error shrinks at least linearly
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.6 * errs[1]


@pytest.mark.parametrize("order", [0.5, 1.5, 2.5])
def test_bessel_oracle_closed_forms(order):
    assert bessel_zero(order) == pytest.approx(half_integer_zero_closed_form(order), rel=1e-12)


def test_centre_pole_disk_against_bessel():
    # pole exactly at the centre (even n puts it on a plaquette centre)
    grid = build_grid(unit_disk(), 128)
    poles, disp = snap_poles(grid, validate_pole_set(unit_disk(), [(0.0, 0.0)]))
    assert disp[0] == 0
    H, _ = assemble_ab_hamiltonian(grid, poles)
    spec = lowest_eigenpairs(H, 6)
    assert spec.clusters[:3] == ((0, 1), (2, 3), (4, 5))
    for c, order in zip(spec.clusters, (0.5, 1.5, 2.5)):
        assert spec.values[c[0]] == pytest.approx(bessel_zero(order) ** 2, rel=0.03)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=30), st.floats(1e-6, 0.1))
def test_cluster_partition_properties(vals, gap):
    v = np.sort(np.asarray(vals))
    cl = cluster_degenerate(v, gap)
    flat = [i for c in cl for i in c]
    assert flat == list(range(len(v)))
    for c in cl:
        for a, b in zip(c, c[1:]):
            assert v[b] - v[a] <= gap * max(1.0, abs(v[a]))
    for c1, c2 in zip(cl, cl[1:]):
        assert v[c2[0]] - v[c1[-1]] > gap * max(1.0, abs(v[c1[-1]]))


def test_accepts_plain_sparse_matrix():
    A = sp.diags([np.arange(1.0, 11.0)], [0]).tocsr()
    assert lowest_eigenpairs(A, 3).values == pytest.approx([1, 2, 3])
