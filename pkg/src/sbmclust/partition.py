"""Cluster label assignments shared by every clustering method."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import GraphFormatError, ParameterError

METHODS = ("ASE", "LAP", "ICL", "Louvain", "truth", "external")


@dataclass(frozen=True, eq=False)
class Partition:
    """Vertex labels in ``[0, k)`` with no empty cluster ids.

    Labels passed in are renumbered onto ``0..k-1`` preserving their sorted
    order, so gaps left by empty clusters disappear.
    """

    labels: np.ndarray
    method: str = "external"

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1:
            raise ParameterError("labels must be one-dimensional")
        if raw.size and not np.issubdtype(raw.dtype, np.integer):
            if not np.all(np.equal(np.mod(raw, 1), 0)):
                raise ParameterError("labels must be integers")
        _, inv = np.unique(raw, return_inverse=True)
        labels = inv.astype(np.int64).reshape(-1)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


def write_partition(p: Partition, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        fh.write("vertex,label\n")
        for v, lab in enumerate(p.labels):
            fh.write(f"{v},{lab}\n")


def read_partition(path, method: str = "external") -> Partition:
    """Read a ``vertex,label`` CSV; every vertex ``0..n-1`` must appear once."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"vertex", "label"} <= set(reader.fieldnames):
        raise GraphFormatError(f"{path}: expected 'vertex,label' header", 1)
    rows = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            v, lab = int(row["vertex"]), int(row["label"])
        except (TypeError, ValueError):
            raise GraphFormatError(f"{path}: bad row {row}", lineno) from None
        if v in rows:
            raise GraphFormatError(f"{path}: vertex {v} listed twice", lineno)
        rows[v] = lab
    n = len(rows)
    if n == 0 or set(rows) != set(range(n)):
        raise GraphFormatError(f"{path}: vertices must be exactly 0..n-1")
    return Partition(np.array([rows[v] for v in range(n)]), method=method)
