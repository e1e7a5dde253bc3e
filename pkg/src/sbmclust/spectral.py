"""Top eigenpairs of symmetric operators and spectral graph embeddings.

Small problems (``n <= dense_threshold``) go through LAPACK's symmetric
eigensolver; larger ones through Lanczos with full reorthogonalisation
from a seeded random start. Eigenvector signs are fixed so that each
vector's largest-magnitude entry is positive.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConvergenceError, ParameterError
from .graph import Graph, degrees

MODES = ("magnitude", "algebraic")
DENSE_THRESHOLD = 512
RESIDUAL_TOL = 1e-6
SCREE_LENGTH = 100


@dataclass(frozen=True, eq=False)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def residuals(self, M, n=None) -> np.ndarray:
        """``||M v_i - lambda_i v_i||_2`` for every pair."""
        matvec = _as_matvec(M, n)[0]
        MV = np.column_stack([matvec(self.vectors[:, i]) for i in range(len(self))])
        return np.linalg.norm(MV - self.vectors * self.values, axis=0)


def _as_matvec(M, n=None):
    """Normalise ``M`` to ``(matvec, n, dense_or_None)``."""
    if isinstance(M, np.ndarray):
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ParameterError(f"matrix must be square, got {M.shape}")
        return (lambda v: M @ v), M.shape[0], M
    if sp.issparse(M):
        if M.shape[0] != M.shape[1]:
            raise ParameterError(f"matrix must be square, got {M.shape}")
        M = sp.csr_matrix(M)
        return (lambda v: M @ v), M.shape[0], None
    if isinstance(M, spla.LinearOperator):
        return M.matvec, M.shape[0], None
    if callable(M):
        if n is None:
            raise ParameterError("n is required when M is a mat-vec callable")
        return M, int(n), None
    M = np.asarray(M, dtype=float)
    return _as_matvec(M)


def _order(values: np.ndarray, mode: str) -> np.ndarray:
    if mode == "algebraic":
        return np.lexsort((np.arange(values.shape[0]), -values))
    if mode == "magnitude":
        return np.lexsort((np.arange(values.shape[0]), -values, -np.abs(values)))
    raise ParameterError(f"unknown eigen order {mode!r}; expected one of {MODES}")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _lanczos(matvec, n, D, mode, rng, tol, max_iter):
    """Lanczos with full reorthogonalisation; returns ``(values, vectors)``.

    After a breakdown (an invariant subspace) the recurrence restarts from a
    fresh random direction orthogonal to the basis. Convergence is never
    declared at a breakdown, since the subspace found so far may miss copies
    of a repeated eigenvalue.
    """
    cap = min(n, max(2 * D + 20, 64))
    Q = np.zeros((n, cap))
    alphas, betas = [], []
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    q_prev = np.zeros(n)
    beta = 0.0
    scale = 0.0
    check_every = max(5, D // 4)
    for m in range(1, n + 1):
        j = m - 1
        if j == Q.shape[1]:
            Q = np.hstack([Q, np.zeros((n, min(n, 2 * j) - j))])
        Q[:, j] = q
        w = matvec(q)
        alpha = float(q @ w)
        w = w - alpha * q - beta * q_prev
        basis = Q[:, :m]
        for _ in range(2):
            w -= basis @ (basis.T @ w)
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        scale = max(scale, abs(alpha), beta)
        breakdown = beta <= 1e-13 * max(scale, 1.0)
        if m == n or m >= max_iter:
            break
        if m >= D and not breakdown and m % check_every == 0:
            theta, S = _tridiag_eig(alphas, betas)
            pick = _order(theta, mode)[:D]
            est = np.abs(beta * S[-1, pick])
            if np.all(est <= tol * np.maximum(1.0, np.abs(theta[pick]))):
                return theta[pick], Q[:, :m] @ S[:, pick]
        if breakdown:
            w = rng.standard_normal(n)
            for _ in range(2):
                w -= basis @ (basis.T @ w)
            beta = 0.0
            q_prev = q
            q = w / np.linalg.norm(w)
        else:
            q_prev = q
            q = w / beta
        betas.append(beta)
    theta, S = _tridiag_eig(alphas, betas)
    pick = _order(theta, mode)[:D]
    return theta[pick], Q[:, :len(alphas)] @ S[:, pick]


def _tridiag_eig(alphas, betas):
    if len(alphas) == 1:
        return np.array(alphas), np.ones((1, 1))
    return sla.eigh_tridiagonal(np.array(alphas), np.array(betas))


def top_eigenpairs(M, D: int, mode: str = "magnitude", *, n: int | None = None,
                   seed=0, method: str = "auto", dense_threshold: int = DENSE_THRESHOLD,
                   tol: float = 1e-11) -> EigenPairs:
    """The ``D`` leading eigenpairs of a symmetric matrix or mat-vec operator.

    Parameters
    ----------
    M : ndarray, sparse matrix, LinearOperator or callable
        Symmetric operator. Symmetry is the caller's responsibility.
    D : int
        Number of pairs, ``1 <= D <= n``.
    mode : {"magnitude", "algebraic"}
        Ordering: descending ``|lambda|`` (ties: positive first) or
        descending ``lambda``.
    seed : int
        Seeds the Lanczos start vector.
    method : {"auto", "dense", "lanczos"}

    Raises
    ------
    ParameterError
        If ``D`` is out of range or ``mode`` unknown.
    ConvergenceError
        If the final residuals exceed ``1e-6 * max(1, |lambda|)``.
    """
    matvec, n, dense = _as_matvec(M, n)
    if not 1 <= D <= n:
        raise ParameterError(f"need 1 <= D <= n, got D={D}, n={n}")
    if mode not in MODES:
        raise ParameterError(f"unknown eigen order {mode!r}; expected one of {MODES}")
    if method == "auto":
        method = "dense" if n <= dense_threshold else "lanczos"
    if method == "dense":
        if dense is None:
            dense = np.column_stack([matvec(e) for e in np.eye(n)])
        w, V = np.linalg.eigh(dense)
        pick = _order(w, mode)[:D]
        values, vectors = w[pick], V[:, pick]
    elif method == "lanczos":
        rng = np.random.default_rng(seed)
        values, vectors = _lanczos(matvec, n, D, mode, rng, tol, max_iter=10 * n)
    else:
        raise ParameterError(f"unknown eigensolver method {method!r}")
    pairs = EigenPairs(np.asarray(values, dtype=float), _fix_signs(np.asarray(vectors)))
    res = pairs.residuals(matvec, n)
    bound = RESIDUAL_TOL * np.maximum(1.0, np.abs(pairs.values))
    if np.any(res > bound):
        raise ConvergenceError(
            f"eigenpair residuals {res.max():.3g} exceed tolerance", residuals=res)
    return pairs


# -- embeddings --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Embedding:
    """Rows of ``U |S|^{1/2}``; ``eigenvalues`` keep their signs."""

    coords: np.ndarray
    source: str
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def truncate(self, D: int) -> "Embedding":
        return Embedding(self.coords[:, :D], self.source, self.eigenvalues[:D])

    def signed_gram(self) -> np.ndarray:
        """``U S U^T`` rebuilt from the coordinates and eigenvalue signs."""
        return (self.coords * np.sign(self.eigenvalues)) @ self.coords.T

    def write_csv(self, path) -> None:
        path = os.fspath(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vertex"] + [f"x{i + 1}" for i in range(self.dim)])
            for v, row in enumerate(self.coords):
                w.writerow([v] + [repr(float(x)) for x in row])
        with open(os.path.splitext(path)[0] + ".json", "w", encoding="utf-8") as fh:
            json.dump({"source": self.source, "eigenvalues": self.eigenvalues.tolist()}, fh,
                      indent=2)
            fh.write("\n")


def embed_pairs(pairs: EigenPairs, source: str) -> Embedding:
    coords = pairs.vectors * np.sqrt(np.abs(pairs.values))
    return Embedding(coords, source, pairs.values.copy())


def normalized_adjacency(g: Graph) -> sp.csr_matrix:
    """``D^{-1/2} A D^{-1/2}``; isolated vertices get zero rows and columns."""
    deg = degrees(g).astype(float)
    inv = np.zeros_like(deg)
    nz = deg > 0
    inv[nz] = 1.0 / np.sqrt(deg[nz])
    S = sp.diags(inv)
    return sp.csr_matrix(S @ g.csr @ S)


def graph_matrix(g: Graph, source: str):
    if source == "adjacency":
        return g.csr
    if source == "laplacian":
        return normalized_adjacency(g)
    raise ParameterError(f"unknown embedding source {source!r}")


def spectral_embed(g: Graph, D: int, source: str = "adjacency", *, order: str = "magnitude",
                   seed=0, method: str = "auto") -> Embedding:
    M = graph_matrix(g, source)
    if M.shape[0] <= DENSE_THRESHOLD and method == "auto":
        M = M.toarray()
    pairs = top_eigenpairs(M, D, order, seed=seed, method=method)
    return embed_pairs(pairs, source)


def ase_embed(g: Graph, D: int, **kwargs) -> Embedding:
    """Adjacency spectral embedding."""
    return spectral_embed(g, D, "adjacency", **kwargs)


def lap_embed(g: Graph, D: int, **kwargs) -> Embedding:
    """Normalised-Laplacian spectral embedding (``D^{-1/2} A D^{-1/2}``)."""
    return spectral_embed(g, D, "laplacian", **kwargs)


# -- dimension selection -----------------------------------------------------

def profile_likelihood(values) -> np.ndarray:
    """Two-group Gaussian profile log-likelihood for each split ``q = 1..p-1``.

    Group means are fitted separately with a pooled variance
    ``SSE / (p - 2)``. A split with zero pooled variance scores ``+inf``.
    """
    d = np.asarray(values, dtype=float)
    p = d.shape[0]
    out = np.empty(p - 1)
    for q in range(1, p):
        a, b = d[:q], d[q:]
        sse = ((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()
        if sse <= 0.0:
            out[q - 1] = np.inf
            continue
        var = sse / (p - 2)
        out[q - 1] = -0.5 * p * np.log(2 * np.pi * var) - sse / (2 * var)
    return out


def estimate_dimension(values, max_considered: int | None = None) -> int:
    """Elbow of a descending scree by profile-likelihood maximisation.

    Returns ``q`` in ``[1, p-1]``; ties go to the smaller ``q``.
    """
    d = np.asarray(values, dtype=float).reshape(-1)
    if max_considered is not None:
        d = d[:max_considered]
    if d.shape[0] < 3:
        raise ParameterError("need at least 3 values to locate an elbow")
    if np.any(d < 0):
        raise ParameterError("scree values must be nonnegative magnitudes")
    if np.any(np.diff(d) > 0):
        raise ParameterError("scree values must be sorted in descending order")
    ll = profile_likelihood(d)
    return int(np.argmax(ll)) + 1


def scree(g: Graph, source: str = "adjacency", length: int = SCREE_LENGTH, *,
          order: str = "magnitude", seed=0, method: str = "auto") -> Embedding:
    """Embedding on the leading ``min(n, length)`` eigenpairs, for dimension selection."""
    return spectral_embed(g, min(g.n, length), source, order=order, seed=seed, method=method)
