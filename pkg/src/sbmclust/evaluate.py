"""Cluster validation: adjusted Rand index and Wilcoxon rank-sum tests."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .exceptions import GraphFormatError, ParameterError
from .partition import Partition

EXACT_MAX = 10


def _labels(p) -> np.ndarray:
    if isinstance(p, Partition):
        return p.labels
    return Partition(np.asarray(p)).labels


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def contingency(a, b) -> np.ndarray:
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise ParameterError(f"partitions differ in length: {la.size} vs {lb.size}")
    table = np.zeros((la.max() + 1 if la.size else 0, lb.max() + 1 if lb.size else 0),
                     dtype=np.int64)
    np.add.at(table, (la, lb), 1)
    return table


def ari(a, b) -> float:
    """Adjusted Rand index (Hubert and Arabie) between two labelings.

    When the chance-corrected denominator vanishes, returns 1.0 for two
    partitions that are identical up to relabeling and 0.0 otherwise.
    """
    table = contingency(a, b)
    n = int(table.sum())
    sum_ij = int(_comb2(table).sum())
    sum_a = int(_comb2(table.sum(axis=1)).sum())
    sum_b = int(_comb2(table.sum(axis=0)).sum())
    total = n * (n - 1) // 2
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0:
        same = np.count_nonzero(table) == table.shape[0] == table.shape[1]
        return 1.0 if same else 0.0
    return (sum_ij - expected) / denom


def partition_comparison_matrix(ps: Sequence) -> np.ndarray:
    """Symmetric matrix of pairwise ARIs with a unit diagonal."""
    if len(ps) < 2:
        raise ParameterError("need at least two partitions to compare")
    m = len(ps)
    out = np.eye(m)
    for i, j in combinations(range(m), 2):
        out[i, j] = out[j, i] = ari(ps[i], ps[j])
    return out


# -- Wilcoxon rank-sum -------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n_x: int
    n_y: int

    __test__ = False  # keep pytest from collecting this class


def midranks(values) -> np.ndarray:
    """1-based ranks with ties replaced by their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def rank_sum_counts(n_x: int, n_y: int) -> dict[int, int]:
    """Number of size-``n_x`` subsets of ``{1..n_x+n_y}`` with each rank sum."""
    N = n_x + n_y
    # counts[j][s]: subsets of size j with sum s, over ranks seen so far
    counts = [dict() for _ in range(n_x + 1)]
    counts[0][0] = 1
    for r in range(1, N + 1):
        for j in range(min(r, n_x), 0, -1):
            prev = counts[j - 1]
            cur = counts[j]
            for s, c in prev.items():
                cur[s + r] = cur.get(s + r, 0) + c
    return dict(sorted(counts[n_x].items()))


def _exact_p(w: float, n_x: int, n_y: int) -> float:
    counts = rank_sum_counts(n_x, n_y)
    total = math.comb(n_x + n_y, n_x)
    w = int(round(w))
    lower = sum(c for s, c in counts.items() if s <= w)
    upper = sum(c for s, c in counts.items() if s >= w)
    return min(1.0, 2 * min(lower, upper) / total)


def wilcoxon_rank_sum(x, y, exact_max: int = EXACT_MAX) -> TestResult:
    """Two-sided Wilcoxon rank-sum test; ``statistic`` is the rank sum of ``x``.

    The exact null distribution is used when both samples have at most
    ``exact_max`` values and there are no ties; otherwise a normal
    approximation with tie-corrected variance and continuity correction.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size == 0 or y.size == 0:
        raise ParameterError("both samples must be nonempty")
    n_x, n_y = x.size, y.size
    N = n_x + n_y
    pooled = np.concatenate([x, y])
    ranks = midranks(pooled)
    w = float(ranks[:n_x].sum())
    ties = np.unique(pooled).size < N
    if n_x <= exact_max and n_y <= exact_max and not ties:
        return TestResult(w, _exact_p(w, n_x, n_y), "exact", n_x, n_y)
    _, t = np.unique(pooled, return_counts=True)
    tie_term = float((t ** 3 - t).sum()) / (N * (N - 1)) if N > 1 else 0.0
    var = n_x * n_y / 12.0 * ((N + 1) - tie_term)
    mean = n_x * (N + 1) / 2.0
    if var <= 0:
        return TestResult(w, 1.0, "normal-approx", n_x, n_y)
    z = max(abs(w - mean) - 0.5, 0.0) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))  # 2 * (1 - Phi(z))
    return TestResult(w, min(1.0, p), "normal-approx", n_x, n_y)


# -- business-metric validation ----------------------------------------------

@dataclass
class MetricTable:
    """Per-vertex metric columns; ``nan`` marks a missing value."""

    n: int
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ParameterError(f"no metric named {name!r}") from None

    @property
    def names(self) -> list[str]:
        return list(self.columns)


def read_metric_table(path, n: int | None = None) -> MetricTable:
    """Read ``vertex,<metric>...`` CSV; blank cells are missing values."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        reader = csv.DictReader(io.StringIO(fh.read()))
    if reader.fieldnames is None or "vertex" not in reader.fieldnames:
        raise GraphFormatError(f"{path}: expected a 'vertex' column", 1)
    names = [c for c in reader.fieldnames if c != "vertex"]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            v = int(row["vertex"])
            vals = [float(row[c]) if row[c] not in (None, "") else np.nan for c in names]
        except ValueError:
            raise GraphFormatError(f"{path}: bad row {row}", lineno) from None
        if v < 0:
            raise GraphFormatError(f"{path}: negative vertex id", lineno)
        rows.append((v, vals))
    top = max((v for v, _ in rows), default=-1) + 1
    if n is None:
        n = top
    elif top > n:
        raise ParameterError(f"metric table mentions vertex {top - 1} but the partition has n={n}")
    cols = {c: np.full(n, np.nan) for c in names}
    for v, vals in rows:
        for c, x in zip(names, vals):
            cols[c][v] = x
    return MetricTable(n, cols)


@dataclass(frozen=True)
class PairTest:
    pair: tuple[int, int]
    result: TestResult | None
    p_adjusted: float | None
    significant: bool

    @property
    def testable(self) -> bool:
        return self.result is not None


@dataclass(frozen=True)
class PairwiseReport:
    metric: str
    alpha: float
    correction: str
    tests: tuple[PairTest, ...]

    @property
    def n_significant(self) -> int:
        return sum(t.significant for t in self.tests)

    @property
    def n_testable(self) -> int:
        return sum(t.testable for t in self.tests)


def adjust_pvalues(p, correction: str = "none") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    m = p.size
    if correction == "none" or m == 0:
        return p.copy()
    if correction == "bonferroni":
        return np.minimum(1.0, p * m)
    if correction == "bh":
        order = np.argsort(p, kind="mergesort")
        scaled = p[order] * m / np.arange(1, m + 1)
        adj = np.minimum.accumulate(scaled[::-1])[::-1]
        out = np.empty(m)
        out[order] = np.minimum(1.0, adj)
        return out
    raise ParameterError(f"unknown correction {correction!r}")


def pairwise_cluster_tests(p: Partition, metrics: MetricTable, metric_name: str,
                           alpha: float = 0.05, correction: str = "none",
                           log_transform: bool = False) -> PairwiseReport:
    """Rank-sum test of one metric for every unordered pair of clusters.

    Vertices with a missing value are dropped from each test; a pair where
    either cluster has no valued vertex is reported as untestable.
    """
    labels = _labels(p)
    values = np.asarray(metrics[metric_name], dtype=float)
    if values.shape[0] != labels.shape[0]:
        raise ParameterError(
            f"metric has {values.shape[0]} vertices but the partition has {labels.shape[0]}")
    if log_transform:
        if np.any(values[~np.isnan(values)] < 0):
            raise ParameterError("log transform needs nonnegative metric values")
        values = np.log1p(values)
    k = int(labels.max()) + 1
    groups = [values[(labels == c) & ~np.isnan(values)] for c in range(k)]
    pairs = list(combinations(range(k), 2))
    results = [wilcoxon_rank_sum(groups[a], groups[b]) if groups[a].size and groups[b].size
               else None for a, b in pairs]
    raw = [r.p_value for r in results if r is not None]
    adjusted = iter(adjust_pvalues(raw, correction))
    tests = []
    for pair, r in zip(pairs, results):
        if r is None:
            tests.append(PairTest(pair, None, None, False))
        else:
            pa = float(next(adjusted))
            tests.append(PairTest(pair, r, pa, pa < alpha))
    return PairwiseReport(metric_name, alpha, correction, tuple(tests))
