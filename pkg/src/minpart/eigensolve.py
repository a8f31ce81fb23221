"""Lowest eigenpairs of sparse Hermitian matrices, with residual certification."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, ValidationError
from .lattice import SparseHermitian

log = logging.getLogger(__name__)

DEFAULT_CLUSTER_GAP = 1e-4
DENSE_LIMIT = 600
SHIFT_INVERT_LIMIT = 200_000


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray  # (dim, m), unit-norm columns
    residuals: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    tol: float

    def __len__(self):
        return len(self.values)

    def cluster_vectors(self, c):
        return self.vectors[:, list(self.clusters[c])]


def cluster_degenerate(values, gap: float = DEFAULT_CLUSTER_GAP) -> tuple[tuple[int, ...], ...]:
    """Group sorted eigenvalues into maximal runs whose consecutive relative gaps are <= ``gap``."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if len(values) == 0:
        return ()
    clusters = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= gap * max(1.0, abs(values[i - 1])):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return tuple(tuple(c) for c in clusters)


def _rayleigh_ritz(A, V):
    Q, _ = np.linalg.qr(V)
    T = Q.conj().T @ (A @ Q)
    T = 0.5 * (T + T.conj().T)
    w, S = la.eigh(T)
    return w, Q @ S


def _residuals(A, w, V):
    R = A @ V - V * w
    return np.linalg.norm(R, axis=0)


def _start_vector(dim, seed, dtype):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    if np.issubdtype(dtype, np.complexfloating):
        v = v + 1j * rng.standard_normal(dim)
    return v


def _lobpcg(A, m, tol, seed, max_iter):
    dtype = A.dtype
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((A.shape[0], m))
    if np.issubdtype(dtype, np.complexfloating):
        X = X + 1j * rng.standard_normal(X.shape)
    ilu = spla.spilu(A.tocsc(), drop_tol=1e-4, fill_factor=20)
    M = spla.LinearOperator(A.shape, matvec=ilu.solve, dtype=dtype)
    w, V = spla.lobpcg(A, X, M=M, tol=tol, maxiter=max_iter or 500, largest=False)
    return w, V


def lowest_eigenpairs(
    H: SparseHermitian | sp.spmatrix | np.ndarray,
    m: int,
    tol: float = 1e-9,
    seed: int = 0,
    max_iter: int | None = None,
    method: str = "auto",
    cluster_gap: float = DEFAULT_CLUSTER_GAP,
) -> Spectrum:
    """The ``m`` algebraically smallest eigenpairs of a positive semidefinite Hermitian matrix.

    Every returned pair satisfies ``||H v - lam v|| <= tol * max(1, lam)``;
    otherwise :class:`NoConvergence` is raised with the best residual seen.
    """
    A = H.matrix if isinstance(H, SparseHermitian) else H
    dim = A.shape[0]
    if not 1 <= m <= dim:
        raise ValidationError("solver.m", f"need 1 <= m <= {dim}, got {m}")
    if method == "auto":
        if dim <= DENSE_LIMIT:
            method = "dense"
        elif dim <= SHIFT_INVERT_LIMIT:
            method = "shift-invert"
        else:
            method = "lobpcg"

    if method == "dense":
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
        w, V = la.eigh(Ad, subset_by_index=[0, m - 1])
    elif method == "shift-invert":
        if m >= dim - 1:
            return lowest_eigenpairs(H, m, tol, seed, max_iter, "dense", cluster_gap)
        ncv = min(dim, max(2 * m + 1, 20))
        v0 = _start_vector(dim, seed, A.dtype)
        try:
            w, V = spla.eigsh(A.tocsc(), k=m, sigma=0.0, which="LM", v0=v0, ncv=ncv, maxiter=max_iter)
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence("ARPACK did not converge", None) from exc
    elif method == "lobpcg":
        w, V = _lobpcg(A, m, tol, seed, max_iter)
    else:
        raise ValidationError("solver.method", f"unknown method {method!r}")

    w, V = _rayleigh_ritz(A, V)
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    res = _residuals(A, w, V)
    bound = tol * np.maximum(1.0, np.abs(w))
    if np.any(res > bound):
        worst = float(np.max(res / bound) * tol)
        raise NoConvergence(f"residual {worst:.3e} exceeds tolerance {tol:.1e}", worst)
    return Spectrum(w, V, res, cluster_degenerate(w, cluster_gap), tol)
