"""Gaussian mixtures fitted by EM, scored by BIC, selected by maximum BIC.

Six covariance families are supported, from one shared spherical variance
to a free full covariance per component. Covariances are kept above a
floor by eigenvalue clipping, which is the exact constrained maximiser of
the M-step objective, so EM stays monotone in the log-likelihood.

BIC is ``2 * loglik - n_params * ln(n)`` and larger is better.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import ParameterError, SelectionError
from .graph import Graph
from .kmeans import assign, kmeans_pp
from .partition import Partition
from .spectral import SCREE_LENGTH, Embedding, estimate_dimension, scree, spectral_embed

FAMILIES = (
    "spherical-equal",
    "spherical-varying",
    "diagonal-equal",
    "diagonal-varying",
    "full-equal",
    "full-varying",
)

# loglik may not drop by more than this between EM iterations
MONOTONE_SLACK = 1e-9
CHECK_MONOTONE = os.environ.get("SBMCLUST_CHECK_EM", "") not in ("", "0")

_LOG_2PI = np.log(2 * np.pi)


def covariance_parameters(family: str, k: int, D: int) -> int:
    counts = {
        "spherical-equal": 1,
        "spherical-varying": k,
        "diagonal-equal": D,
        "diagonal-varying": k * D,
        "full-equal": D * (D + 1) // 2,
        "full-varying": k * D * (D + 1) // 2,
    }
    try:
        return counts[family]
    except KeyError:
        raise ParameterError(f"unknown covariance family {family!r}") from None


def n_parameters(family: str, k: int, D: int) -> int:
    return (k - 1) + k * D + covariance_parameters(family, k, D)


def bic(loglik: float, p_total: int, n: int) -> float:
    return 2.0 * loglik - p_total * np.log(n)


@dataclass(eq=False)
class GmmModel:
    """A fitted mixture. ``covariances`` has the family's natural shape:

    ``()``, ``(k,)``, ``(D,)``, ``(k, D)``, ``(D, D)`` or ``(k, D, D)``.
    """

    k: int
    family: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik: float
    bic: float
    converged: bool
    responsibilities: np.ndarray | None
    n_iter: int = 0
    history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_samples(self) -> int:
        return 0 if self.responsibilities is None else self.responsibilities.shape[0]

    @property
    def n_parameters(self) -> int:
        return n_parameters(self.family, self.k, self.dim)

    @property
    def failed(self) -> bool:
        return self.responsibilities is None

    def full_covariances(self) -> np.ndarray:
        return _expand(self.family, self.covariances, self.k, self.dim)

    def labels(self) -> np.ndarray:
        return np.argmax(self.responsibilities, axis=1)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        _, R = _estep(X, self.weights, self.means, self.family, self.covariances)
        return R

    def to_dict(self, include_responsibilities: bool = False) -> dict:
        d = {
            "k": self.k,
            "family": self.family,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": np.asarray(self.covariances).tolist(),
            "loglik": _finite_or_none(self.loglik),
            "bic": _finite_or_none(self.bic),
            "n_parameters": self.n_parameters,
            "converged": bool(self.converged),
            "n_iter": self.n_iter,
        }
        if include_responsibilities and self.responsibilities is not None:
            d["responsibilities"] = self.responsibilities.tolist()
        return d


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def _expand(family, cov, k, D):
    cov = np.asarray(cov, dtype=float)
    if family == "spherical-equal":
        return np.broadcast_to(np.eye(D) * cov, (k, D, D)).copy()
    if family == "spherical-varying":
        return cov[:, None, None] * np.eye(D)
    if family == "diagonal-equal":
        return np.broadcast_to(np.diag(cov), (k, D, D)).copy()
    if family == "diagonal-varying":
        return np.stack([np.diag(c) for c in cov])
    if family == "full-equal":
        return np.broadcast_to(cov, (k, D, D)).copy()
    return cov.copy()


def _log_gauss(X, means, family, cov):
    """``(n, k)`` component log-densities."""
    n, D = X.shape
    k = means.shape[0]
    if family.startswith("spherical"):
        var = np.broadcast_to(cov, (k,))
        sq = np.empty((n, k))
        for c in range(k):
            d = X - means[c]
            sq[:, c] = np.einsum("ij,ij->i", d, d)
        return -0.5 * (D * _LOG_2PI + D * np.log(var) + sq / var)
    if family.startswith("diagonal"):
        var = np.broadcast_to(cov, (k, D))
        sq = np.empty((n, k))
        for c in range(k):
            d = (X - means[c]) ** 2
            sq[:, c] = d @ (1.0 / var[c])
        return -0.5 * (D * _LOG_2PI + np.log(var).sum(axis=1) + sq)
    full = np.broadcast_to(cov, (k, D, D))
    chol = np.linalg.cholesky(full)
    inv = np.linalg.inv(chol)
    logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    sq = np.empty((n, k))
    for c in range(k):
        y = (X - means[c]) @ inv[c].T
        sq[:, c] = np.einsum("ij,ij->i", y, y)
    return -0.5 * (D * _LOG_2PI + logdet + sq)


def _estep(X, weights, means, family, cov):
    with np.errstate(divide="ignore"):
        lp = _log_gauss(X, means, family, cov) + np.log(weights)
    top = lp.max(axis=1, keepdims=True)
    e = np.exp(lp - top)
    tot = e.sum(axis=1, keepdims=True)
    ll = float((top + np.log(tot)).sum())
    return ll, e / tot


def _clip_full(S, floor):
    w, V = np.linalg.eigh(S)
    if w.min() >= floor:
        return S
    S = (V * np.maximum(w, floor)) @ V.T
    return 0.5 * (S + S.T)


def _mstep(X, R, family, floor):
    """Returns ``(weights, means, cov)`` or ``None`` for a degenerate step."""
    n, D = X.shape
    Nk = R.sum(axis=0)
    if np.any(Nk < 0.1):  # weight below 1 / (10 n)
        return None
    weights = Nk / n
    means = (R.T @ X) / Nk[:, None]
    k = means.shape[0]
    if family.startswith(("spherical", "diagonal")):
        sq = np.empty((k, D))
        for c in range(k):
            sq[c] = R[:, c] @ (X - means[c]) ** 2
        if family == "diagonal-varying":
            cov = sq / Nk[:, None]
        elif family == "diagonal-equal":
            cov = sq.sum(axis=0) / n
        elif family == "spherical-varying":
            cov = sq.sum(axis=1) / (Nk * D)
        else:
            cov = np.asarray(sq.sum() / (n * D))
        cov = np.maximum(cov, floor)
    else:
        S = np.empty((k, D, D))
        for c in range(k):
            d = X - means[c]
            S[c] = (d * R[:, c:c + 1]).T @ d
        if family == "full-varying":
            cov = S / Nk[:, None, None]
            cov = 0.5 * (cov + cov.transpose(0, 2, 1))
            cov = np.stack([_clip_full(c, floor) for c in cov])
        else:
            cov = S.sum(axis=0) / n
            cov = _clip_full(0.5 * (cov + cov.T), floor)
    if not np.all(np.isfinite(cov)):
        return None
    return weights, means, cov


def _run_em(X, R, family, floor, tol, max_iter):
    params = _mstep(X, R, family, floor)
    if params is None:
        return None
    history = []
    converged = False
    it = 0
    while True:
        weights, means, cov = params
        try:
            ll, R = _estep(X, weights, means, family, cov)
        except np.linalg.LinAlgError:
            return None
        if not np.isfinite(ll):
            return None
        if history:
            gain = ll - history[-1]
            if CHECK_MONOTONE and gain < -MONOTONE_SLACK:
                raise AssertionError(
                    f"EM log-likelihood decreased by {-gain:.3g} ({family}, k={means.shape[0]})")
            if gain < tol * abs(history[-1]):
                history.append(ll)
                converged = True
                break
        history.append(ll)
        if it >= max_iter:
            break
        it += 1
        params = _mstep(X, R, family, floor)
        if params is None:
            return None
    return params, ll, R, history, converged, it


def covariance_floor(X, reg_covar: float = 1e-6) -> float:
    """Smallest admissible covariance eigenvalue for data ``X``."""
    return max(reg_covar * float(np.var(X, axis=0).mean()), 1e-12)


def fit_gmm(points, k: int, family: str = "full-varying", seed=0, tol: float = 1e-6,
            max_iter: int = 500, restarts: int = 5, reg_covar: float = 1e-6,
            init_labels=None) -> GmmModel:
    """Fit a ``k``-component mixture by EM, best of ``restarts`` starts.

    Each start hard-assigns the points to k-means++ seeds; ``init_labels``
    replaces that with a single fixed assignment. Starts that produce an
    (almost) empty component or a non-finite covariance are discarded; if
    every start is discarded the returned model has ``failed`` set and
    ``converged=False``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, D = X.shape
    if k < 1 or n < k:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if D < 1:
        raise ParameterError("points need at least one coordinate")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    covariance_parameters(family, k, D)
    floor = covariance_floor(X, reg_covar)
    rng = np.random.default_rng(seed)

    if init_labels is not None:
        starts = [np.asarray(init_labels, dtype=np.int64)]
    else:
        n_starts = 1 if k == 1 else max(1, restarts)
        starts = [assign(X, X[kmeans_pp(X, k, rng)]) for _ in range(n_starts)]

    best = None
    for labels in starts:
        R0 = np.zeros((n, k))
        R0[np.arange(n), labels] = 1.0
        out = _run_em(X, R0, family, floor, tol, max_iter)
        if out is None:
            continue
        key = (out[4], out[1])  # prefer converged, then higher loglik
        if best is None or key > best[0]:
            best = (key, out)

    if best is None:
        return GmmModel(k, family, np.full(k, np.nan), np.full((k, D), np.nan),
                        np.full((k, D, D), np.nan), -np.inf, -np.inf, False, None)
    (weights, means, cov), ll, R, history, converged, it = best[1]
    return GmmModel(k, family, weights, means, cov, ll,
                    bic(ll, n_parameters(family, k, D), n), converged, R, it, history)


def bic_of(model: GmmModel, n: int | None = None) -> float:
    if n is None:
        n = model.n_samples
    return bic(model.loglik, model.n_parameters, n)


def fit_seed(seed: int, k: int, family: str) -> np.random.SeedSequence:
    """Per-fit seed derived from ``(seed, k, family)``, independent of run order."""
    return np.random.SeedSequence([int(seed), int(k), FAMILIES.index(family)])


def bic_sweep(points, k_max: int, families: Sequence[str] | None = None, seed: int = 0,
              **fit_kwargs) -> list[GmmModel]:
    """Fit every ``(k, family)`` for ``k = 1..k_max``; ordered by k, then family."""
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    X = np.asarray(points, dtype=float)
    families = _check_families(families)
    k_max = min(k_max, X.shape[0])
    fits = []
    for k in range(1, k_max + 1):
        for fam in families:
            fits.append(fit_gmm(X, k, fam, seed=fit_seed(seed, k, fam), **fit_kwargs))
    return fits


def _check_families(families):
    if families is None:
        return FAMILIES
    families = tuple(families)
    for f in families:
        covariance_parameters(f, 1, 1)
    # keep canonical order so tie-breaking does not depend on the caller
    return tuple(f for f in FAMILIES if f in families)


def best_fit(fits: Sequence[GmmModel]) -> GmmModel:
    """Maximum-BIC converged fit; ties go to smaller k, then simpler family."""
    ranked = [m for m in fits if m.converged and not m.failed]
    if not ranked:
        raise SelectionError("no (k, family) combination produced a converged fit")
    return max(ranked, key=lambda m: (m.bic, -m.k, -FAMILIES.index(m.family)))


def select_model(points, k_max: int, families: Sequence[str] | None = None, seed: int = 0,
                 method: str = "external", **fit_kwargs):
    """Sweep ``k = 1..k_max`` over the families; returns ``(model, partition)``."""
    model = best_fit(bic_sweep(points, k_max, families, seed, **fit_kwargs))
    return model, Partition(model.labels(), method=method)


class ClusterResult(NamedTuple):
    partition: Partition
    model: GmmModel
    dim: int
    embedding: Embedding
    fits: list
    scree: np.ndarray | None


def cluster_vertices(g: Graph, source: str = "adjacency", dim: int | None = None,
                     k_max: int = 6, families: Sequence[str] | None = None, seed: int = 0,
                     order: str = "magnitude", eig_method: str = "auto",
                     scree_length: int = SCREE_LENGTH, **fit_kwargs) -> ClusterResult:
    """Embed ``g`` spectrally and cluster the vertices by maximum BIC.

    With ``dim`` unset (or 0) the dimension is the profile-likelihood elbow
    of the leading ``min(n, scree_length)`` eigenvalue magnitudes.
    """
    method = {"adjacency": "ASE", "laplacian": "LAP"}.get(source)
    if method is None:
        raise ParameterError(f"unknown embedding source {source!r}")
    scree_values = None
    if not dim:
        full = scree(g, source, scree_length, order=order, seed=seed, method=eig_method)
        mags = np.sort(np.abs(full.eigenvalues))[::-1]
        dim = estimate_dimension(mags) if mags.shape[0] >= 3 else 1
        scree_values = full.eigenvalues
        embedding = full.truncate(dim)
    else:
        embedding = spectral_embed(g, int(dim), source, order=order, seed=seed,
                                   method=eig_method)
    fits = bic_sweep(embedding.coords, k_max, families, seed, **fit_kwargs)
    model = best_fit(fits)
    return ClusterResult(Partition(model.labels(), method=method), model, int(dim), embedding,
                         fits, scree_values)
