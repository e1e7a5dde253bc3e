"""Command-line entry point: ``sbmclust {simulate,cluster,compare,validate,project}``.

Each subcommand writes ``<command>_report.json`` into ``--out-dir`` plus CSV
sidecars. Reports echo the configuration and seed; the ``timing`` block is
the only part that changes between identical runs.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .evaluate import (TestResult, pairwise_cluster_tests, partition_comparison_matrix,
                       read_metric_table)
from .exceptions import (ConvergenceError, GraphFormatError, LatentModelError,
                         ParameterError, SelectionError)
from .gmm import FAMILIES
from .graph import Graph, load_edge_list, project_covisitation, read_event_log, write_edge_list
from .partition import read_partition, write_partition
from .pipeline import (ALGORITHMS, DEFAULT_KMAX, SimulationConfig, default_scenario,
                       parse_algorithms, run_method, simulate)
from .sbm import SbmParams

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
INPUT_ERRORS = (ParameterError, GraphFormatError, LatentModelError, FileNotFoundError,
                IsADirectoryError, NotADirectoryError, json.JSONDecodeError, UnicodeDecodeError)
NUMERIC_ERRORS = (ConvergenceError, SelectionError, np.linalg.LinAlgError)


# -- configs -----------------------------------------------------------------

@dataclass
class SimulateConfig:
    params: str | None = None
    n: int | None = None
    blocks: int | None = None
    p_in: float | None = None
    p_out: float | None = None
    replicates: int | None = None
    algo: str = "ase,lap"
    dim: int | None = None
    kmax: int | None = None
    families: str | None = None
    resolution: float = 1.0
    eigen_order: str = "magnitude"
    jobs: int = 1
    seed: int = 0


@dataclass
class ClusterConfig:
    graph: str | None = None
    events: str | None = None
    max_sites_per_user: int | None = None
    algo: str = "all"
    dim: int = 0
    kmax: int = DEFAULT_KMAX
    families: str | None = None
    resolution: float = 1.0
    eigen_order: str = "magnitude"
    seed: int = 0


@dataclass
class CompareConfig:
    partitions: list[str] = field(default_factory=list)
    seed: int = 0


@dataclass
class ValidateConfig:
    partitions: list[str] = field(default_factory=list)
    metrics: str = ""
    metric_names: str | None = None
    alpha: float = 0.05
    correction: str = "none"
    log_metrics: bool = False
    seed: int = 0


@dataclass
class ProjectConfig:
    events: str = ""
    max_sites_per_user: int | None = None
    output: str = "graph.txt"
    seed: int = 0


# -- helpers -----------------------------------------------------------------

def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _families(spec: str | None) -> tuple[str, ...]:
    if not spec:
        return FAMILIES
    items = tuple(s.strip() for s in spec.split(",") if s.strip())
    bad = [s for s in items if s not in FAMILIES]
    if bad or not items:
        raise ParameterError(f"unknown famil(ies) {bad}; choose from {FAMILIES}")
    return tuple(f for f in FAMILIES if f in items)


def _name_of(path) -> str:
    stem = Path(path).stem
    return stem[len("partition_"):] if stem.startswith("partition_") else stem


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items() if not str(k).startswith("_")}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    return x


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def _write_rows(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({c: ("" if row.get(c) is None else row.get(c)) for c in columns})


def _rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({c: ("" if row.get(c) is None else row.get(c)) for c in columns})
    return buf.getvalue()


def _report(command: str, config, result: dict, started: float) -> dict:
    return {
        "tool": "sbmclust",
        "version": __version__,
        "command": command,
        "seed": config.seed,
        "config": asdict(config),
        "result": result,
        "timing": {"wall_clock_seconds": time.perf_counter() - started},
    }


# -- subcommands -------------------------------------------------------------
# Each cmd_* takes a config and an output directory and returns
# (report, table rows, table columns) for stdout rendering.

def _simulation_from(config: SimulateConfig) -> SimulationConfig:
    scenario = default_scenario()
    if config.params:
        with open(_require_file(config.params), encoding="utf-8") as fh:
            scenario = json.load(fh)
        if not isinstance(scenario, dict):
            raise ParameterError("parameter file must hold a JSON object")
    inline = (config.blocks, config.p_in, config.p_out)
    if any(v is not None for v in inline):
        if any(v is None for v in inline):
            raise ParameterError("inline parameters need --blocks, --p-in and --p-out together")
        params = SbmParams.planted(config.blocks, config.p_in, config.p_out)
    else:
        params = SbmParams.from_dict(scenario)
    n = config.n if config.n is not None else int(scenario.get("n", 600))
    reps = config.replicates if config.replicates is not None \
        else int(scenario.get("replicates", 50))
    return SimulationConfig(
        n=n, params=params, replicates=reps, algorithms=parse_algorithms(config.algo),
        seed=config.seed, dim=config.dim, k_max=config.kmax,
        families=_families(config.families), resolution=config.resolution,
        order=config.eigen_order, jobs=max(1, config.jobs))


def cmd_simulate(config: SimulateConfig, out_dir: Path):
    started = time.perf_counter()
    sim = _simulation_from(config)
    out = simulate(sim)
    result = {"resolved": sim.to_dict(), "summary": out["summary"], "rows": out["rows"]}
    columns = ["replicate", "algorithm", "k_hat", "ari", "dim"]
    _write_rows(out_dir / "simulate_replicates.csv", out["rows"], columns)
    report = _report("simulate", config, result, started)
    _write_json(out_dir / "simulate_report.json", report)
    return report, out["rows"], columns


def _load_graph(config: ClusterConfig) -> Graph:
    if bool(config.graph) == bool(config.events):
        raise ParameterError("give exactly one of --graph or --events")
    if config.graph:
        return load_edge_list(_require_file(config.graph))
    log = read_event_log(_require_file(config.events))
    return project_covisitation(log, config.max_sites_per_user)


def cmd_cluster(config: ClusterConfig, out_dir: Path):
    started = time.perf_counter()
    algos = parse_algorithms(config.algo)
    families = _families(config.families)
    if config.kmax < 1:
        raise ParameterError("--kmax must be at least 1")
    if config.dim < 0:
        raise ParameterError("--dim must be 0 (auto) or positive")
    g = _load_graph(config)
    if g.vertex_names is not None:
        _write_rows(out_dir / "vertex_names.csv",
                    [{"vertex": i, "name": s} for i, s in enumerate(g.vertex_names)],
                    ["vertex", "name"])
    per_algo = {}
    rows = []
    for algo in algos:
        res = run_method(g, algo, dim=config.dim or None, k_max=config.kmax, families=families,
                         seed=config.seed, resolution=config.resolution,
                         order=config.eigen_order, details=True)
        files = [f"partition_{algo}.csv"]
        write_partition(res.partition, out_dir / files[0])
        info = dict(res.details)
        if algo in ("ase", "lap"):
            _write_json(out_dir / f"model_{algo}.json", info["selected"])
            _write_rows(out_dir / f"bic_{algo}.csv", info["bic_table"],
                        ["k", "family", "bic", "loglik", "converged"])
            info["_embedding"].write_csv(out_dir / f"embedding_{algo}.csv")
            files += [f"model_{algo}.json", f"bic_{algo}.csv", f"embedding_{algo}.csv"]
        elif algo == "icl":
            _write_json(out_dir / "icl_report.json", info)
            files.append("icl_report.json")
        entry = {"k": res.k, "sizes": res.partition.sizes().tolist(), "dim": res.dim,
                 "files": files}
        entry.update({k: v for k, v in info.items()
                      if k in ("dim_estimated", "modularity", "resolution")})
        if algo == "icl":
            entry["icl"] = info["selected"]["icl"]
        if algo in ("ase", "lap"):
            entry["family"] = info["selected"]["family"]
            entry["bic"] = info["selected"]["bic"]
        per_algo[algo] = entry
        rows.append({"algorithm": algo, "k": res.k, "dim": res.dim})
    result = {"graph": {"n": g.n, "n_edges": g.n_edges}, "algorithms": per_algo}
    report = _report("cluster", config, result, started)
    _write_json(out_dir / "cluster_report.json", report)
    return report, rows, ["algorithm", "k", "dim"]


def cmd_compare(config: CompareConfig, out_dir: Path):
    started = time.perf_counter()
    if len(config.partitions) < 2:
        raise ParameterError("compare needs at least two partition files")
    names = [_name_of(p) for p in config.partitions]
    parts = [read_partition(_require_file(p), method=nm)
             for p, nm in zip(config.partitions, names)]
    sizes = {nm: p.n for nm, p in zip(names, parts)}
    if len(set(sizes.values())) > 1:
        raise ParameterError(f"partitions cover different vertex counts: {sizes}")
    M = partition_comparison_matrix(parts)
    m = len(parts)
    pairs = [{"a": names[i], "b": names[j], "ari": float(M[i, j])}
             for i in range(m) for j in range(i + 1, m)]
    ranked = sorted(pairs, key=lambda r: -r["ari"])  # stable: ties keep index order
    with open(out_dir / "compare_matrix.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + names)
        for nm, row in zip(names, M):
            w.writerow([nm] + [repr(float(x)) for x in row])
    result = {"names": names, "matrix": M.tolist(), "ranked_pairs": ranked}
    report = _report("compare", config, result, started)
    _write_json(out_dir / "compare_report.json", report)
    return report, ranked, ["a", "b", "ari"]


def _test_row(name, metric, t) -> dict:
    r: TestResult | None = t.result
    return {
        "partition": name, "metric": metric, "pair": list(t.pair),
        "cluster_a": t.pair[0], "cluster_b": t.pair[1],
        "n_a": None if r is None else r.n_x, "n_b": None if r is None else r.n_y,
        "W": None if r is None else r.statistic,
        "p": None if r is None else r.p_value,
        "p_adjusted": t.p_adjusted,
        "test": None if r is None else r.method,
        "significant": t.significant,
    }


def cmd_validate(config: ValidateConfig, out_dir: Path):
    started = time.perf_counter()
    if not config.partitions:
        raise ParameterError("validate needs at least one --partition")
    if not 0.0 < config.alpha < 1.0:
        raise ParameterError("--alpha must lie in (0, 1)")
    names = [_name_of(p) for p in config.partitions]
    parts = [read_partition(_require_file(p), method=nm)
             for p, nm in zip(config.partitions, names)]
    ns = {p.n for p in parts}
    if len(ns) > 1:
        raise ParameterError("partitions cover different vertex counts")
    metrics = read_metric_table(_require_file(config.metrics), n=parts[0].n)
    wanted = metrics.names if not config.metric_names else \
        [s.strip() for s in config.metric_names.split(",") if s.strip()]
    if not wanted:
        raise ParameterError("metric table has no metric columns")
    rows, counts = [], {}
    for name, p in zip(names, parts):
        counts[name] = {}
        for metric in wanted:
            rep = pairwise_cluster_tests(p, metrics, metric, alpha=config.alpha,
                                         correction=config.correction,
                                         log_transform=config.log_metrics)
            counts[name][metric] = {"significant": rep.n_significant,
                                    "testable": rep.n_testable, "pairs": len(rep.tests)}
            rows.extend(_test_row(name, metric, t) for t in rep.tests)
        counts[name]["total_significant"] = sum(c["significant"] for c in counts[name].values())
    columns = ["partition", "metric", "cluster_a", "cluster_b", "n_a", "n_b", "W", "p",
               "p_adjusted", "test", "significant"]
    _write_rows(out_dir / "validate_tests.csv", rows, columns)
    result = {"alpha": config.alpha, "correction": config.correction,
              "metrics": wanted, "significant_counts": counts,
              "tests": [{k: r[k] for k in ("partition", "metric", "pair", "W", "p",
                                           "p_adjusted", "test", "significant")}
                        for r in rows]}
    report = _report("validate", config, result, started)
    _write_json(out_dir / "validate_report.json", report)
    return report, rows, columns


def cmd_project(config: ProjectConfig, out_dir: Path):
    started = time.perf_counter()
    log = read_event_log(_require_file(config.events))
    g = project_covisitation(log, config.max_sites_per_user)
    target = Path(config.output)
    if not target.is_absolute():
        target = out_dir / target
    write_edge_list(g, target)
    result = {"n": g.n, "n_edges": g.n_edges, "n_records": len(log),
              "graph_file": target.name, "sidecar_file": target.with_suffix(".json").name}
    report = _report("project", config, result, started)
    _write_json(out_dir / "project_report.json", report)
    return report, [result], ["n", "n_edges", "n_records", "graph_file"]


COMMANDS = {
    "simulate": (SimulateConfig, cmd_simulate),
    "cluster": (ClusterConfig, cmd_cluster),
    "compare": (CompareConfig, cmd_compare),
    "validate": (ValidateConfig, cmd_validate),
    "project": (ProjectConfig, cmd_project),
}


# -- argument parsing --------------------------------------------------------

def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--out-dir", default=".", help="directory for reports and sidecars")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="stdout rendering: the JSON report or its main CSV table")


def _add_embedding(p: argparse.ArgumentParser, dim_default, kmax_default, algo_default):
    p.add_argument("--algo", default=algo_default,
                   help=f"comma list from {{{','.join(ALGORITHMS)},all}}")
    p.add_argument("--dim", type=int, default=dim_default,
                   help="embedding dimension; 0 estimates it from the scree")
    p.add_argument("--kmax", type=int, default=kmax_default,
                   help="largest number of clusters tried (GMM k and ICL K)")
    p.add_argument("--families", default=None,
                   help=f"comma list of covariance families (default all: {','.join(FAMILIES)})")
    p.add_argument("--resolution", type=float, default=1.0, help="Louvain resolution")
    p.add_argument("--eigen-order", choices=("magnitude", "algebraic"), default="magnitude")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbmclust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sbmclust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo recovery study on sampled SBMs")
    _add_shared(p)
    p.add_argument("--params", help="JSON with K, pi, B (and optionally n, replicates)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--blocks", type=int, default=None, help="inline planted model: K")
    p.add_argument("--p-in", type=float, default=None)
    p.add_argument("--p-out", type=float, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")
    _add_embedding(p, None, None, "ase,lap")

    p = sub.add_parser("cluster", help="cluster the vertices of one graph")
    _add_shared(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="edge-list file")
    src.add_argument("--events", help="user_id,site_id CSV, projected to a site graph")
    p.add_argument("--max-sites-per-user", type=int, default=None)
    _add_embedding(p, 0, DEFAULT_KMAX, "all")

    p = sub.add_parser("compare", help="pairwise ARI between partition files")
    _add_shared(p)
    p.add_argument("partitions", nargs="+")

    p = sub.add_parser("validate", help="rank-sum tests of metrics between clusters")
    _add_shared(p)
    p.add_argument("--partition", dest="partitions", action="append", required=True)
    p.add_argument("--metrics", required=True, help="vertex,<metric>... CSV")
    p.add_argument("--metric-names", default=None, help="comma list (default all columns)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--correction", choices=("none", "bonferroni", "bh"), default="none")
    p.add_argument("--log-metrics", action="store_true", help="test log(1 + value)")

    p = sub.add_parser("project", help="event log to co-visitation edge list")
    _add_shared(p)
    p.add_argument("--events", required=True)
    p.add_argument("--max-sites-per-user", type=int, default=None)
    p.add_argument("--output", default="graph.txt", help="edge-list path (relative to out-dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config_cls, run = COMMANDS[args.command]
    values = vars(args)
    config = config_cls(**{k: values[k] for k in config_cls.__dataclass_fields__})
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        report, rows, columns = run(config, out_dir)
    except NUMERIC_ERRORS as exc:
        print(f"sbmclust {args.command}: numerical failure: {exc}", file=sys.stderr)
        residuals = getattr(exc, "residuals", None)
        if residuals is not None:
            print(f"residuals: {np.asarray(residuals).tolist()}", file=sys.stderr)
        return EXIT_NUMERIC
    except INPUT_ERRORS as exc:
        print(f"sbmclust {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format == "csv":
        sys.stdout.write(_rows_to_csv(rows, columns))
    else:
        sys.stdout.write(json.dumps(_jsonable(report["result"] if args.command != "simulate"
                                              else report["result"]["summary"]), indent=2))
        sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
