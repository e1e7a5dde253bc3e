"""Variational EM for the stochastic blockmodel, scored by ICL.

The mean-field objective is

    J = sum_iq tau_iq log alpha_q
        + 1/2 sum_{i != j} sum_ql tau_iq tau_jl log f(x_ij; eta_ql)
        - sum_iq tau_iq log tau_iq

with Bernoulli ``f``. Rows of ``tau`` are updated one at a time (exact
coordinate ascent) and ``(alpha, eta)`` by closed-form maximisation, so
``J`` never decreases. The integrated classification likelihood is the
complete-data log-likelihood of the hard assignment ``argmax tau`` at its
maximum-likelihood parameters, minus ``K(K+1)/4 * ln(n(n-1)/2)`` for the
connectivity and ``(K-1)/2 * ln n`` for the proportions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from ..exceptions import ParameterError
from ..graph import Graph
from ..kmeans import kmeans
from ..partition import Partition
from ..sbm import block_edge_counts

ETA_CLIP = 1e-10
INIT_SMOOTHING = 0.2


@dataclass(eq=False)
class IclFit:
    K: int
    tau: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    icl: float
    objective: float
    labels: Partition
    converged: bool
    n_iter: int = 0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "alpha": self.alpha.tolist(),
            "eta": self.eta.tolist(),
            "icl": self.icl,
            "objective": self.objective,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }


def _mstep(A, tau):
    n = tau.shape[0]
    alpha = tau.sum(axis=0) / n
    s = tau.sum(axis=0)
    edges = tau.T @ A @ tau
    pairs = np.outer(s, s) - tau.T @ tau
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(pairs > 0, edges / np.where(pairs > 0, pairs, 1.0), 0.0)
    eta = np.clip(0.5 * (eta + eta.T), 0.0, 1.0)
    return alpha, eta


def _logs(eta):
    e = np.clip(eta, ETA_CLIP, 1.0 - ETA_CLIP)
    return np.log(e), np.log1p(-e)


def objective(A, tau, alpha, eta) -> float:
    """Variational lower bound ``J`` (uses the clipped connectivity)."""
    L1, L0 = _logs(eta)
    s = tau.sum(axis=0)
    edges = tau.T @ A @ tau
    non_edges = np.outer(s, s) - tau.T @ tau - edges
    log_alpha = np.log(np.maximum(alpha, 1e-300))
    return float((tau @ log_alpha).sum() + 0.5 * ((edges * L1).sum() + (non_edges * L0).sum())
                 - xlogy(tau, tau).sum())


def _sweep(A, nbrs, tau, alpha, eta):
    """One pass of exact row-wise updates; returns the largest change."""
    n, K = tau.shape
    L1, L0 = _logs(eta)
    D = L1 - L0
    AT = A @ tau
    # row-independent part of the logits: log alpha + L0 @ sum_j tau_j
    base = np.log(np.maximum(alpha, 1e-300)) + L0 @ tau.sum(axis=0)
    biggest = 0.0
    for i in range(n):
        logits = base + D @ AT[i] - L0 @ tau[i]
        logits -= logits.max()
        new = np.exp(logits)
        new /= new.sum()
        delta = new - tau[i]
        change = np.abs(delta).max()
        if change > 0:
            AT[nbrs[i]] += delta
            base += L0 @ delta
            tau[i] = new
            biggest = max(biggest, change)
    return biggest


def complete_loglik(g: Graph, labels, K: int | None = None) -> float:
    """Complete-data log-likelihood of a hard labelling at its MLE parameters."""
    labels = np.asarray(labels, dtype=np.int64)
    e, pairs, sizes = block_edge_counts(g, labels, K)
    iu = np.triu_indices(e.shape[0])
    e, pairs = e[iu], pairs[iu]
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(pairs > 0, e / np.where(pairs > 0, pairs, 1.0), 0.0)
    ll_edges = (xlogy(e, p) + xlogy(pairs - e, 1.0 - p)).sum()
    n = labels.shape[0]
    ll_labels = xlogy(sizes, sizes / n).sum()
    return float(ll_edges + ll_labels)


def icl_criterion(g: Graph, labels, K: int) -> float:
    n = g.n
    penalty = 0.5 * (K * (K + 1) / 2) * np.log(n * (n - 1) / 2) + 0.5 * (K - 1) * np.log(n)
    return complete_loglik(g, labels, K) - penalty


def _initial_taus(A, K, restarts, rng):
    n = A.shape[0]
    labels, _ = kmeans(A, K, rng)
    tau = np.full((n, K), INIT_SMOOTHING / K)
    tau[np.arange(n), labels] += 1.0 - INIT_SMOOTHING
    yield tau
    for _ in range(restarts - 1):
        noise = rng.random((n, K))
        yield noise / noise.sum(axis=1, keepdims=True)


def icl_fit(g: Graph, K: int, seed=0, tol: float = 1e-4, max_iter: int = 200,
            restarts: int = 3) -> IclFit:
    """Fit a ``K``-block SBM by variational EM; best of ``restarts`` by ``J``.

    The first start smooths a k-means clustering of the adjacency rows, the
    others are uniform noise. Each round is one sweep over the rows of tau
    followed by the parameter update; a round whose largest tau change is
    below ``tol`` ends the fit.
    """
    n = g.n
    if not 1 <= K <= n:
        raise ParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    A = g.adjacency()
    csr = g.csr
    nbrs = [csr.indices[csr.indptr[i]:csr.indptr[i + 1]] for i in range(n)]
    rng = np.random.default_rng(seed)
    best = None
    for tau in _initial_taus(A, K, max(1, restarts) if K > 1 else 1, rng):
        alpha, eta = _mstep(A, tau)
        history = [objective(A, tau, alpha, eta)]
        converged = False
        it = 0
        while it < max_iter:
            it += 1
            change = _sweep(A, nbrs, tau, alpha, eta)
            alpha, eta = _mstep(A, tau)
            history.append(objective(A, tau, alpha, eta))
            if change < tol:
                converged = True
                break
        if best is None or history[-1] > best[4][-1]:
            best = (tau.copy(), alpha, eta, converged, history, it)
    tau, alpha, eta, converged, history, it = best
    hard = np.argmax(tau, axis=1)
    return IclFit(K, tau, alpha, eta, icl_criterion(g, hard, K), history[-1],
                  Partition(hard, method="ICL"), converged, it, history)


def icl_sweep(g: Graph, K_max: int, seed: int = 0, **kwargs) -> list[IclFit]:
    if K_max < 1:
        raise ParameterError("K_max must be at least 1")
    return [icl_fit(g, K, seed=np.random.SeedSequence([int(seed), K]), **kwargs)
            for K in range(1, min(K_max, g.n) + 1)]


def icl_select(g: Graph, K_max: int, seed: int = 0, **kwargs):
    """Fit ``K = 1..K_max`` and keep the maximum-ICL fit (ties: smaller K)."""
    fits = icl_sweep(g, K_max, seed, **kwargs)
    best = max(fits, key=lambda f: (f.icl, -f.K))
    return best, best.labels
