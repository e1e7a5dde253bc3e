"""Stochastic blockmodels and latent-position random graphs.

Random-number consumption is fixed so that samples are reproducible from
a seed alone: all vertex-level draws (labels or positions) come first,
then one uniform per vertex pair in lexicographic ``(i, j)``, ``i < j``,
order. An edge is present when its uniform falls below the pair's
probability.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import LatentModelError, ParameterError
from .graph import Graph

PI_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SbmParams:
    """Block count ``K``, membership probabilities ``pi`` and block matrix ``B``."""

    K: int
    pi: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        K = int(self.K)
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        B = np.asarray(self.B, dtype=float)
        if K < 1:
            raise ParameterError("K must be at least 1")
        if pi.shape != (K,):
            raise ParameterError(f"pi must have length K={K}, got {pi.shape[0]}")
        if B.shape != (K, K):
            raise ParameterError(f"B must be {K}x{K}, got {B.shape}")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > PI_TOL:
            raise ParameterError(f"pi must be a probability vector (sum={pi.sum()!r})")
        if not np.array_equal(B, B.T):
            raise ParameterError("B must be exactly symmetric")
        if np.any(B < 0) or np.any(B > 1) or not np.all(np.isfinite(B)):
            raise ParameterError("B entries must lie in [0, 1]")
        pi.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "B", B)

    @classmethod
    def planted(cls, K: int, p_in: float, p_out: float, pi=None) -> "SbmParams":
        """Assortative model: ``p_in`` on the diagonal, ``p_out`` elsewhere."""
        B = np.full((K, K), float(p_out))
        np.fill_diagonal(B, p_in)
        if pi is None:
            pi = np.full(K, 1.0 / K)
        return cls(K, pi, B)

    def to_dict(self) -> dict:
        return {"K": self.K, "pi": self.pi.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SbmParams":
        try:
            return cls(d["K"], d["pi"], d["B"])
        except KeyError as exc:
            raise ParameterError(f"SBM parameters missing field {exc}") from None

    @classmethod
    def load(cls, path) -> "SbmParams":
        with open(os.fspath(path), encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _pair_uniforms(rng: np.random.Generator, n: int):
    iu, ju = np.triu_indices(n, k=1)
    return iu, ju, rng.random(iu.shape[0])


def sample_sbm(n: int, params: SbmParams, seed=None):
    """Draw ``(graph, labels)`` from ``SBM([n], B, pi)``.

    Labels are i.i.d. Categorical(pi); pair ``{i, j}`` is an edge with
    probability ``B[y_i, y_j]`` independently of every other pair.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    rng = np.random.default_rng(seed)
    labels = rng.choice(params.K, size=n, p=params.pi)
    iu, ju, u = _pair_uniforms(rng, n)
    hit = u < params.B[labels[iu], labels[ju]]
    g = Graph(n, np.stack([iu[hit], ju[hit]], axis=1))
    return g, labels.astype(np.int64)


@dataclass(frozen=True)
class LatentPositionModel:
    """Latent positions ``X_i ~ F`` on ``R^dimension`` and a link function.

    ``sampler(rng, n)`` returns an ``(n, dimension)`` array. ``link(X, Y)``
    takes two ``(m, dimension)`` arrays of paired rows and returns the ``m``
    edge probabilities.
    """

    dimension: int
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    link: Callable[[np.ndarray, np.ndarray], np.ndarray]

    @classmethod
    def from_sbm(cls, params: SbmParams) -> "LatentPositionModel":
        """Point-mass mixture at the basis vectors with a ``B`` lookup link."""
        K = params.K
        B = params.B
        eye = np.eye(K)

        def sampler(rng, n):
            return eye[rng.choice(K, size=n, p=params.pi)]

        def link(X, Y):
            return B[np.argmax(X, axis=1), np.argmax(Y, axis=1)]

        return cls(K, sampler, link)


def edge_probabilities(model: LatentPositionModel, positions: np.ndarray) -> np.ndarray:
    """Full ``n x n`` matrix ``P`` (zero diagonal) of link probabilities."""
    n = positions.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    p = np.asarray(model.link(positions[iu], positions[ju]), dtype=float)
    _check_link(p, iu, ju)
    P = np.zeros((n, n))
    P[iu, ju] = p
    P[ju, iu] = p
    return P


def _check_link(p, iu, ju):
    bad = np.flatnonzero(~((p >= 0) & (p <= 1)))
    if bad.size:
        b = bad[0]
        raise LatentModelError(
            f"link returned {p[b]!r} for pair ({iu[b]}, {ju[b]}); must lie in [0, 1]")


def sample_latent_position_graph(n: int, model: LatentPositionModel, seed=None,
                                 return_positions: bool = True):
    """Draw a latent-position graph; returns ``(graph, positions or None)``."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X = np.asarray(model.sampler(rng, n), dtype=float).reshape(n, model.dimension)
    iu, ju, u = _pair_uniforms(rng, n)
    p = np.asarray(model.link(X[iu], X[ju]), dtype=float)
    _check_link(p, iu, ju)
    hit = u < p
    g = Graph(n, np.stack([iu[hit], ju[hit]], axis=1))
    return g, (X if return_positions else None)


def block_edge_counts(g: Graph, labels, K: int | None = None):
    """Edge counts ``e[k, l]`` between blocks and available pair counts."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (g.n,):
        raise ParameterError("labels must have length n")
    if K is None:
        K = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=K).astype(float)
    e = np.zeros((K, K))
    if g.n_edges:
        a = labels[g.edges[:, 0]]
        b = labels[g.edges[:, 1]]
        np.add.at(e, (a, b), 1.0)
        e = e + e.T - np.diag(np.diag(e))
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1) / 2)
    return e, pairs, sizes


def estimate_block_matrix(g: Graph, labels) -> SbmParams:
    """Plug-in ``(pi_hat, B_hat)`` given a labelling; empty blocks pairs give 0."""
    e, pairs, sizes = block_edge_counts(g, labels)
    with np.errstate(invalid="ignore", divide="ignore"):
        B = np.where(pairs > 0, e / np.where(pairs > 0, pairs, 1), 0.0)
    B = np.minimum(B, B.T)  # exact symmetry; e and pairs are already symmetric
    pi = sizes / sizes.sum()
    pi = pi / pi.sum()
    return SbmParams(len(sizes), pi, B)


def write_labels(labels, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write("vertex,label\n")
        for v, lab in enumerate(np.asarray(labels)):
            fh.write(f"{v},{int(lab)}\n")
