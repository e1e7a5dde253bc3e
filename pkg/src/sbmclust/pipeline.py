"""Running the four clustering methods and the SBM simulation study."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .baselines.icl import icl_sweep
from .baselines.louvain import louvain, modularity
from .evaluate import ari
from .exceptions import ParameterError
from .gmm import FAMILIES, cluster_vertices
from .graph import Graph
from .partition import Partition
from .sbm import SbmParams, sample_sbm

ALGORITHMS = ("ase", "lap", "icl", "louvain")
DEFAULT_KMAX = 6


def parse_algorithms(spec: str | Sequence[str]) -> tuple[str, ...]:
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    items = [s.strip().lower() for s in items if s.strip()]
    if "all" in items:
        return ALGORITHMS
    bad = [s for s in items if s not in ALGORITHMS]
    if bad or not items:
        raise ParameterError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS} or 'all'")
    return tuple(a for a in ALGORITHMS if a in items)


@dataclass
class MethodResult:
    algorithm: str
    partition: Partition
    dim: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.partition.k


def run_method(g: Graph, algorithm: str, *, dim: int | None = None, k_max: int = DEFAULT_KMAX,
               families: Sequence[str] | None = None, seed: int = 0, resolution: float = 1.0,
               order: str = "magnitude", details: bool = False) -> MethodResult:
    """Cluster ``g`` with one of ``ase``, ``lap``, ``icl`` or ``louvain``.

    ``dim`` of ``None`` or 0 means the embedding dimension is estimated.
    With ``details`` the result carries the BIC/ICL tables for reporting.
    """
    if algorithm in ("ase", "lap"):
        source = "adjacency" if algorithm == "ase" else "laplacian"
        res = cluster_vertices(g, source, dim=dim or None, k_max=k_max, families=families,
                               seed=seed, order=order)
        info = {}
        if details:
            info = {
                "dim": res.dim,
                "dim_estimated": not dim,
                "selected": res.model.to_dict(),
                "bic_table": [{"k": m.k, "family": m.family,
                               "bic": m.bic if np.isfinite(m.bic) else None,
                               "loglik": m.loglik if np.isfinite(m.loglik) else None,
                               "converged": bool(m.converged)} for m in res.fits],
                "eigenvalues": res.embedding.eigenvalues.tolist(),
                "scree": None if res.scree is None else res.scree.tolist(),
            }
            info["_embedding"] = res.embedding
        return MethodResult(algorithm, res.partition, res.dim, info)
    if algorithm == "icl":
        fits = icl_sweep(g, k_max, seed=seed)
        best = max(fits, key=lambda f: (f.icl, -f.K))
        info = {}
        if details:
            info = {"selected": best.to_dict(),
                    "icl_table": [{"K": f.K, "icl": f.icl, "objective": f.objective,
                                   "converged": f.converged} for f in fits]}
        return MethodResult(algorithm, best.labels, None, info)
    if algorithm == "louvain":
        p = louvain(g, seed=seed, resolution=resolution)
        info = {"modularity": modularity(g, p, resolution), "resolution": resolution} \
            if details else {}
        return MethodResult(algorithm, p, None, info)
    raise ParameterError(f"unknown algorithm {algorithm!r}")


# -- simulation --------------------------------------------------------------

def default_scenario() -> dict:
    """The shipped 3-block scenario (toolkit-chosen parameters)."""
    text = resources.files("sbmclust").joinpath("scenarios/default.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class SimulationConfig:
    """One simulation study.

    ``dim=None`` embeds in ``rank(B)`` dimensions (the model dimension is
    known in simulation); ``dim=0`` estimates it per replicate.
    ``k_max=None`` sweeps up to ``K + 3``.
    """

    n: int
    params: SbmParams
    replicates: int = 50
    algorithms: tuple[str, ...] = ("ase", "lap")
    seed: int = 0
    dim: int | None = None
    k_max: int | None = None
    families: tuple[str, ...] = FAMILIES
    resolution: float = 1.0
    order: str = "magnitude"
    jobs: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError("replicates must be at least 1")
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        self.algorithms = parse_algorithms(self.algorithms)

    @property
    def effective_dim(self) -> int | None:
        if self.dim is None:
            return int(np.linalg.matrix_rank(self.params.B)) or 1
        return self.dim or None

    @property
    def effective_kmax(self) -> int:
        return self.k_max if self.k_max else self.params.K + 3

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "params": self.params.to_dict(),
            "replicates": self.replicates,
            "algorithms": list(self.algorithms),
            "seed": self.seed,
            "dim": self.dim,
            "effective_dim": self.effective_dim,
            "k_max": self.k_max,
            "effective_kmax": self.effective_kmax,
            "families": list(self.families),
            "resolution": self.resolution,
            "eigen_order": self.order,
        }


def replicate_seeds(seed: int, r: int) -> tuple[int, int]:
    """``(sampling seed, method seed)`` for replicate ``r``."""
    a, b = np.random.SeedSequence([int(seed), int(r)]).generate_state(2)
    return int(a), int(b)


def run_replicate(config: SimulationConfig, r: int) -> list[dict]:
    sample_seed, method_seed = replicate_seeds(config.seed, r)
    g, truth = sample_sbm(config.n, config.params, seed=sample_seed)
    rows = []
    for algo in config.algorithms:
        res = run_method(g, algo, dim=config.effective_dim, k_max=config.effective_kmax,
                         families=config.families, seed=method_seed,
                         resolution=config.resolution, order=config.order)
        rows.append({"replicate": r, "algorithm": algo, "k_hat": res.k,
                     "ari": float(ari(truth, res.partition)), "dim": res.dim})
    return rows


def _run_replicate_args(args):
    return run_replicate(*args)


def simulate(config: SimulationConfig) -> dict:
    """Run every replicate; rows are ordered by replicate then algorithm."""
    jobs = [(config, r) for r in range(config.replicates)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_rep = list(pool.map(_run_replicate_args, jobs))
    else:
        per_rep = [run_replicate(*a) for a in jobs]
    rows = [row for rep in per_rep for row in rep]
    return {"rows": rows, "summary": summarize(rows, config.params.K)}


def summarize(rows: list[dict], true_k: int | None = None) -> dict:
    out = {}
    for algo in dict.fromkeys(r["algorithm"] for r in rows):
        sub = [r for r in rows if r["algorithm"] == algo]
        ks = [r["k_hat"] for r in sub]
        hist = {str(k): ks.count(k) for k in sorted(set(ks))}
        entry = {
            "replicates": len(sub),
            "mean_ari": float(np.mean([r["ari"] for r in sub])),
            "k_hat_histogram": hist,
            "modal_k_hat": int(max(sorted(set(ks)), key=ks.count)),
        }
        if true_k is not None:
            entry["fraction_correct_k"] = ks.count(true_k) / len(ks)
        out[algo] = entry
    return out
