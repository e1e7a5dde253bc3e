"""k-means++ seeding and Lloyd iterations, used to initialise EM fits."""

from __future__ import annotations

import numpy as np


def _sqdist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``k`` row indices of ``X`` by D^2 sampling."""
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return np.array(idx)


def assign(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.argmin(_sqdist(X, centers), axis=1)


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100):
    """Lloyd's algorithm from a k-means++ start; returns ``(labels, centers)``.

    A cluster that empties keeps its previous center.
    """
    X = np.asarray(X, dtype=float)
    centers = X[kmeans_pp(X, k, rng)].copy()
    labels = assign(X, centers)
    for _ in range(max_iter):
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
        new = assign(X, centers)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, centers
