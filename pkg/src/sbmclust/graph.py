"""Undirected, unweighted, loop-free graphs and their ingestion.

Graphs are stored as a sorted array of unordered pairs ``(i, j)`` with
``i < j``; adjacency views (dense, CSR, neighbour lists) are derived on
demand and cached. A :class:`Graph` is immutable once built.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .exceptions import GraphFormatError, ParameterError

__all__ = [
    "Graph",
    "EventLog",
    "load_edge_list",
    "write_edge_list",
    "read_event_log",
    "project_covisitation",
    "normalize_matrix",
    "degrees",
]


def _canonical_edges(n: int, pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ParameterError(f"edge endpoint out of range for n={n}")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    keep = lo != hi
    arr = np.stack([lo[keep], hi[keep]], axis=1)
    if arr.shape[0] == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(arr, axis=0)


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices; isolated vertices are kept.
    edges : array-like of shape (m, 2)
        Vertex pairs. Self-loops are dropped, orientation and duplicates
        are collapsed.
    vertex_names : sequence of str, optional
        External identifiers, index-aligned with the vertices.
    """

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    vertex_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ParameterError("a graph needs at least one vertex")
        object.__setattr__(self, "n", int(self.n))
        edges = _canonical_edges(self.n, self.edges)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        if self.vertex_names is not None:
            names = tuple(str(v) for v in self.vertex_names)
            if len(names) != self.n:
                raise ParameterError("vertex_names must have length n")
            object.__setattr__(self, "vertex_names", names)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, n_edges={self.n_edges})"

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form (float64)."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        data = np.ones(rows.shape[0], dtype=np.float64)
        mat = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        mat.sort_indices()
        return mat

    def adjacency(self, sparse: bool = False):
        """Adjacency matrix ``A``; dense ``ndarray`` unless ``sparse``."""
        if sparse:
            return self.csr
        return self.csr.toarray()

    def neighbors(self, i: int) -> np.ndarray:
        csr = self.csr
        return csr.indices[csr.indptr[i]:csr.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return degrees(self)

    def density(self) -> float:
        pairs = self.n * (self.n - 1) / 2
        return self.n_edges / pairs if pairs else 0.0


def degrees(g: Graph) -> np.ndarray:
    """Vertex degrees; ``degrees(g).sum() == 2 * g.n_edges``."""
    return np.bincount(g.edges.ravel(), minlength=g.n).astype(np.int64)


# -- edge lists --------------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_edge_list(source) -> Graph:
    """Parse a whitespace-separated edge list.

    ``source`` may be a path, raw bytes/str content, or a binary/text stream.
    Text after ``#`` is a comment; an optional ``n=<int>`` header
    fixes the vertex count, otherwise ``n = 1 + max id``.
    """
    text = _read_text(source)
    n_header = None
    pairs = []
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            try:
                n_header = int(line[2:])
            except ValueError:
                raise GraphFormatError(f"bad header {line!r}", lineno) from None
            if n_header < 1:
                raise GraphFormatError("header n must be positive", lineno)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected two vertex ids, got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"non-integer vertex id in {line!r}", lineno) from None
        if i < 0 or j < 0:
            raise GraphFormatError(f"negative vertex id in {line!r}", lineno)
        if n_header is not None and max(i, j) >= n_header:
            raise GraphFormatError(f"vertex id {max(i, j)} exceeds header n={n_header}", lineno)
        pairs.append((i, j))
        max_id = max(max_id, i, j)
    if not pairs and n_header is None:
        raise GraphFormatError("empty edge list")
    n = n_header if n_header is not None else max_id + 1
    if max_id >= n:  # header given after the offending line
        raise GraphFormatError(f"vertex id {max_id} exceeds header n={n}")
    return Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


def write_edge_list(g: Graph, path, sidecar: bool = True) -> None:
    """Write ``g`` as an edge list (with ``n=`` header) and a JSON sidecar."""
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={g.n}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")
    if sidecar:
        meta = {"n": g.n, "vertex_names": list(g.vertex_names) if g.vertex_names else None}
        with open(os.path.splitext(path)[0] + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


# -- event logs --------------------------------------------------------------

@dataclass(frozen=True)
class EventLog:
    """User/site visit records; timestamps are carried but never used."""

    records: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple((str(u), str(s)) for u, s in self.records))

    def __len__(self):
        return len(self.records)

    def site_index(self) -> dict[str, int]:
        """Site id -> vertex index, by first appearance."""
        index: dict[str, int] = {}
        for _, site in self.records:
            if site not in index:
                index[site] = len(index)
        return index


def read_event_log(source) -> EventLog:
    """Read a ``user_id,site_id[,timestamp]`` CSV into an :class:`EventLog`."""
    text = _read_text(source)
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"user_id", "site_id"} <= set(reader.fieldnames):
        raise GraphFormatError("event log needs a 'user_id,site_id' header", 1)
    records = []
    for lineno, row in enumerate(reader, start=2):
        user, site = row.get("user_id"), row.get("site_id")
        if not user or not site:
            raise GraphFormatError("missing user_id or site_id", lineno)
        records.append((user, site))
    return EventLog(tuple(records))


def project_covisitation(log: EventLog | Iterable[tuple[str, str]],
                         max_sites_per_user: int | None = None) -> Graph:
    """Site graph with an edge wherever two sites share at least one user.

    Users who visited more than ``max_sites_per_user`` distinct sites are
    skipped when that limit is given; their sites still become vertices.
    """
    if not isinstance(log, EventLog):
        log = EventLog(tuple(log))
    if len(log) == 0:
        raise ParameterError("event log is empty")
    index = log.site_index()
    by_user: dict[str, set[int]] = {}
    for user, site in log.records:
        by_user.setdefault(user, set()).add(index[site])
    pairs = set()
    for sites in by_user.values():
        if max_sites_per_user is not None and len(sites) > max_sites_per_user:
            continue
        pairs.update(combinations(sorted(sites), 2))
    names = [None] * len(index)
    for site, i in index.items():
        names[i] = site
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return Graph(len(index), edges, vertex_names=tuple(names))


def normalize_matrix(M) -> Graph:
    """Symmetrize, binarize and hollow a square matrix: ``1[max(M, M.T) > 0]``."""
    if sp.issparse(M):
        M = sp.coo_matrix(M)
        if M.shape[0] != M.shape[1]:
            raise ParameterError(f"matrix must be square, got {M.shape}")
        pos = M.data > 0
        pairs = np.stack([M.row[pos], M.col[pos]], axis=1)
        return Graph(M.shape[0], pairs)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"matrix must be square, got shape {M.shape}")
    rows, cols = np.nonzero(M > 0)
    return Graph(M.shape[0], np.stack([rows, cols], axis=1))
