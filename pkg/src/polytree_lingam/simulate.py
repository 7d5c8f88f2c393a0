"""Synthetic models, datasets and experiment sweeps.

Trees are drawn uniformly through random leaf-elimination sequences, edges
get independent fair-coin directions and coefficients bounded away from
zero and one in absolute value, and error terms come from gamma, uniform or
Gaussian families whose parameters are drawn once per model (shared across
nodes by default, independently per node on request).  All randomness flows
from a single seed through counter-based (Philox) substreams keyed by
purpose, so sweeps stay deterministic under any degree of parallelism.
"""

from __future__ import annotations

import dataclasses
import heapq
import time
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cumulants import (
    Dataset,
    SampleCumulantProvider,
    sample_correlation_matrix,
    standardize_dataset,
)
from .errors import DataError
from .metrics import structural_hamming
from .model import PolytreeModel
from .pipeline import ALGORITHMS, run_orientation
from .skeleton import UndirectedTree, chow_liu

__all__ = [
    "ErrorSpec",
    "NodeError",
    "ExperimentConfig",
    "ResultRow",
    "RESULT_FIELDS",
    "DEFAULT_THRESHOLD_GRID",
    "rng_stream",
    "random_tree",
    "decode_prufer",
    "random_polytree",
    "draw_node_errors",
    "model_with_errors",
    "sample_errors",
    "sample_dataset",
    "generate_case",
    "parse_config_text",
    "config_from_mapping",
    "run_experiment",
]

DEFAULT_THRESHOLD_GRID = tuple(round(0.02 + 0.04 * t, 2) for t in range(10))

ERROR_FAMILIES = ("gamma", "uniform", "gaussian")

# substream purposes within one replicate
_TREE, _STRUCTURE, _NODE_PARAMS, _ERRORS = range(4)


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """A counter-based generator for one purpose-keyed substream of `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ErrorSpec:
    """How to draw the per-node error distributions.

    By default one (shape, scale) or (a, b) draw is shared by every node of
    a model, which keeps error variances homogeneous and edge correlations
    bounded away from zero; ``per_node_params`` switches to independent
    draws per node (variances then spread over a ~1000x range and the
    weakest edges can fall below any finite-sample detection limit).

    ``gaussian_fraction`` of the nodes (chosen uniformly at random) are
    replaced by Gaussians matching the variance of the draw they replace,
    so partially Gaussian models stay on the same scale.
    """

    family: str = "gamma"
    gaussian_fraction: float = 0.0
    shape_range: tuple = (0.5, 5.0)
    scale_range: tuple = (0.5, 5.0)
    low_range: tuple = (-10.0, -1.0)
    high_range: tuple = (1.0, 10.0)
    gaussian_variance: float = 1.0
    per_node_params: bool = False

    def __post_init__(self):
        if self.family not in ERROR_FAMILIES:
            raise ValueError(f"unknown error family {self.family!r}")
        if not 0.0 <= self.gaussian_fraction <= 1.0:
            raise ValueError("gaussian_fraction must lie in [0, 1]")
        if min(self.shape_range) <= 0 or min(self.scale_range) <= 0:
            raise ValueError("gamma shape and scale must be positive")
        if self.low_range[1] > 0 or self.high_range[0] < 0:
            raise ValueError("uniform endpoints must straddle zero (a < 0 < b)")
        if self.gaussian_variance <= 0:
            raise ValueError("gaussian variance must be positive")


@dataclass(frozen=True)
class NodeError:
    """One node's error distribution with its exact mean and cumulants."""

    family: str
    params: tuple
    mean: float
    k2: float
    k3: float
    k4: float


def _gamma_node(shape: float, scale: float) -> NodeError:
    # cumulants of Gamma(shape, scale): shape * scale^k * (k-1)!
    return NodeError(
        "gamma",
        (shape, scale),
        shape * scale,
        shape * scale**2,
        2.0 * shape * scale**3,
        6.0 * shape * scale**4,
    )


def _uniform_node(low: float, high: float) -> NodeError:
    width = high - low
    return NodeError(
        "uniform",
        (low, high),
        0.5 * (low + high),
        width**2 / 12.0,
        0.0,
        -(width**4) / 120.0,
    )


def _gaussian_node(variance: float) -> NodeError:
    return NodeError("gaussian", (variance,), 0.0, variance, 0.0, 0.0)


def draw_node_errors(spec: ErrorSpec, p: int, rng: np.random.Generator) -> tuple:
    """Per-node error distributions, drawn once per model."""
    draws = p if spec.per_node_params else 1
    prototypes = []
    for _ in range(draws):
        if spec.family == "gamma":
            shape = rng.uniform(*spec.shape_range)
            scale = rng.uniform(*spec.scale_range)
            prototypes.append(_gamma_node(shape, scale))
        elif spec.family == "uniform":
            low = rng.uniform(*spec.low_range)
            high = rng.uniform(*spec.high_range)
            prototypes.append(_uniform_node(low, high))
        else:
            prototypes.append(_gaussian_node(spec.gaussian_variance))
    nodes = list(prototypes) if spec.per_node_params else [prototypes[0]] * p
    count = int(round(spec.gaussian_fraction * p))
    if count and spec.family != "gaussian":
        chosen = rng.choice(p, size=count, replace=False)
        for v in chosen:
            nodes[v] = _gaussian_node(nodes[v].k2)
    return tuple(nodes)


def decode_prufer(sequence, p: int) -> tuple:
    """Standard leaf-elimination decoding; a bijection from label sequences
    of length p - 2 onto labeled trees, hence uniform in, uniform out."""
    degree = [1] * p
    for v in sequence:
        degree[v] += 1
    leaves = [v for v in range(p) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in sequence:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)) if leaf < v else (int(v), leaf))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    u = heapq.heappop(leaves)
    w = heapq.heappop(leaves)
    edges.append((u, w) if u < w else (w, u))
    return tuple(sorted(edges))


def random_tree(p: int, rng: np.random.Generator) -> UndirectedTree:
    """A uniformly random labeled tree on p vertices."""
    if p < 2:
        raise ValueError("need at least two vertices for a tree")
    if p == 2:
        return UndirectedTree(2, ((0, 1),))
    sequence = rng.integers(0, p, size=p - 2)
    return UndirectedTree(p, decode_prufer(sequence, p))


def random_polytree(tree: UndirectedTree, rng: np.random.Generator) -> PolytreeModel:
    """Orient each tree edge by an independent fair coin and draw each
    coefficient uniformly from (-1, -0.3) u (0.3, 1).

    The returned model carries unit placeholder variances; attach real
    error cumulants with :func:`model_with_errors`.
    """
    orient_rng, coeff_rng = rng.spawn(2)
    n_edges = len(tree.edges)
    flips = orient_rng.integers(0, 2, size=n_edges)
    magnitudes = coeff_rng.uniform(0.3, 1.0, size=n_edges)
    signs = 2 * coeff_rng.integers(0, 2, size=n_edges) - 1
    edges = []
    coefficients = {}
    for (i, j), flip, lam in zip(tree.edges, flips, signs * magnitudes):
        edge = (i, j) if flip == 0 else (j, i)
        edges.append(edge)
        coefficients[edge] = float(lam)
    cumulants = {(v, 2): 1.0 for v in range(tree.p)}
    return PolytreeModel(tree.p, tuple(edges), coefficients, cumulants, k_max=2)


def model_with_errors(model: PolytreeModel, node_errors, k_max: int = 4) -> PolytreeModel:
    """Attach exact error cumulants so the model doubles as a population oracle."""
    cumulants = {}
    for v, node in enumerate(node_errors):
        cumulants[(v, 2)] = node.k2
        if k_max >= 3:
            cumulants[(v, 3)] = node.k3
        if k_max >= 4:
            cumulants[(v, 4)] = node.k4
    return model.with_error_cumulants(cumulants, k_max)


def sample_errors(
    node_errors, n: int, rng: np.random.Generator, center: bool = False
) -> np.ndarray:
    matrix = np.empty((n, len(node_errors)))
    for v, node in enumerate(node_errors):
        if node.family == "gamma":
            shape, scale = node.params
            column = rng.gamma(shape, scale, size=n)
        elif node.family == "uniform":
            low, high = node.params
            column = rng.uniform(low, high, size=n)
        else:
            column = rng.normal(0.0, np.sqrt(node.params[0]), size=n)
        if center:
            column = column - node.mean
        matrix[:, v] = column
    return matrix


def sample_dataset(
    model: PolytreeModel,
    errors,
    n: int,
    rng: np.random.Generator,
    center: bool = False,
) -> Dataset:
    """Draw n observations of the structural model.

    ``errors`` is either a drawn tuple of per-node distributions or an
    ErrorSpec (drawn here from the same stream).  The linear system solves
    by forward substitution in topological order, never through a dense
    matrix inverse, so sampling stays O(n * p) on trees.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if isinstance(errors, ErrorSpec):
        errors = draw_node_errors(errors, model.p, rng)
    if len(errors) != model.p:
        raise ValueError("one error distribution per vertex required")
    values = sample_errors(errors, n, rng, center)
    for v in model.topological_order:
        for u in model.parents[v]:
            values[:, v] += model.coefficients[(u, v)] * values[:, u]
    return Dataset(values)


def generate_case(
    p: int, spec: ErrorSpec, n: int, seed: int, center: bool = False
) -> tuple:
    """One reproducible (model, node errors, dataset) triple from a seed."""
    tree = random_tree(p, rng_stream(seed, _TREE))
    structure = random_polytree(tree, rng_stream(seed, _STRUCTURE))
    node_errors = draw_node_errors(spec, p, rng_stream(seed, _NODE_PARAMS))
    model = model_with_errors(structure, node_errors, k_max=4)
    data = sample_dataset(model, node_errors, n, rng_stream(seed, _ERRORS), center)
    return model, node_errors, data


@dataclass(frozen=True)
class ExperimentConfig:
    """A sweep over (p, n/p ratio, Gaussian fraction) cells."""

    p_values: tuple
    ratios: tuple
    error: ErrorSpec = ErrorSpec()
    K: int = 3
    algorithms: tuple = ("pairwise",)
    replicates: int = 20
    seed: int = 0
    threshold_grid: tuple = DEFAULT_THRESHOLD_GRID
    threshold_mode: str = "cell"
    gaussian_fractions: tuple | None = None
    center_errors: bool = False
    standardize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "threshold_grid", tuple(float(t) for t in self.threshold_grid))
        if self.gaussian_fractions is not None:
            object.__setattr__(
                self, "gaussian_fractions", tuple(float(g) for g in self.gaussian_fractions)
            )
        if self.K not in (3, 4):
            raise ValueError("K must be 3 or 4")
        for algorithm in self.algorithms:
            if algorithm not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {algorithm!r}")
        if self.threshold_mode not in ("cell", "replicate"):
            raise ValueError("threshold_mode must be 'cell' or 'replicate'")
        if self.replicates < 0:
            raise ValueError("replicates must be non-negative")
        for p in self.p_values:
            if p < 2:
                raise ValueError("p must be at least 2")
            for ratio in self.ratios:
                if int(round(ratio * p)) < self.K + 1:
                    raise ValueError(
                        f"cell p={p}, n/p={ratio} gives fewer than K+1={self.K + 1} samples"
                    )

    def cells(self) -> list:
        fractions = self.gaussian_fractions or (self.error.gaussian_fraction,)
        return list(product(self.p_values, self.ratios, fractions))


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    p: int
    n: int
    K: int
    error_family: str
    gauss_fraction: float
    threshold: float | None
    replicate: int
    shd: float
    skeleton_errors: int | None
    orientation_errors: int | None
    seconds: float
    error: str = ""

    def csv_values(self) -> list:
        def fmt(x):
            return "" if x is None or (isinstance(x, float) and np.isnan(x)) else x

        return [
            self.algorithm,
            self.p,
            self.n,
            self.K,
            self.error_family,
            self.gauss_fraction,
            fmt(self.threshold),
            self.replicate,
            fmt(self.shd),
            fmt(self.skeleton_errors),
            fmt(self.orientation_errors),
            round(self.seconds, 6),
        ]


RESULT_FIELDS = (
    "algorithm",
    "p",
    "n",
    "K",
    "errorFamily",
    "gaussFraction",
    "threshold",
    "replicate",
    "shd",
    "skeletonErrors",
    "orientationErrors",
    "seconds",
)


def _replicate_task(args):
    """Learn one replicate of one cell with every configured algorithm (and
    every grid threshold for the sequential ones).  Returns plain tuples so
    the sweep can run in worker processes."""
    config, cell_index, p, ratio, gauss_fraction, replicate = args
    try:
        n = int(round(ratio * p))
        spec = dataclasses.replace(config.error, gaussian_fraction=gauss_fraction)
        seed = config.seed
        key = (cell_index, replicate)
        tree = random_tree(p, rng_stream(seed, *key, _TREE))
        structure = random_polytree(tree, rng_stream(seed, *key, _STRUCTURE))
        node_errors = draw_node_errors(spec, p, rng_stream(seed, *key, _NODE_PARAMS))
        truth = model_with_errors(structure, node_errors, k_max=4)
        data = sample_dataset(
            truth, node_errors, n, rng_stream(seed, *key, _ERRORS), config.center_errors
        )
        if config.standardize:
            data = standardize_dataset(data)

        t0 = time.perf_counter()
        corr = sample_correlation_matrix(data)
        skeleton = chow_liu(corr)
        base_seconds = time.perf_counter() - t0
        provider = SampleCumulantProvider(data, corr)

        results = {}
        for algorithm in config.algorithms:
            thresholds = (None,) if algorithm == "pairwise" else config.threshold_grid
            entries = []
            for theta in thresholds:
                t0 = time.perf_counter()
                graph = run_orientation(algorithm, skeleton, provider, config.K, theta)
                seconds = time.perf_counter() - t0
                report = structural_hamming(truth, graph)
                entries.append(
                    (
                        theta,
                        report.normalized,
                        report.skeleton_errors,
                        report.misoriented,
                        seconds,
                    )
                )
            results[algorithm] = entries
        return (replicate, None, base_seconds, results)
    except Exception as exc:  # recorded per cell, the sweep keeps going
        return (replicate, f"{type(exc).__name__}: {exc}", 0.0, {})


def _select_rows(config, cell, replicate_outputs) -> list:
    """Turn one cell's replicate outputs into result rows, picking the best
    grid threshold per cell mean (or per replicate) for pto/tpo."""
    p, ratio, gauss_fraction = cell
    n = int(round(ratio * p))
    rows = []
    for algorithm in config.algorithms:
        chosen = {}
        if algorithm != "pairwise" and config.threshold_mode == "cell":
            sums: dict = {}
            counts: dict = {}
            for _, error, _, results in replicate_outputs:
                if error:
                    continue
                for theta, shd, *_ in results[algorithm]:
                    sums[theta] = sums.get(theta, 0.0) + shd
                    counts[theta] = counts.get(theta, 0) + 1
            if sums:
                best = min(sums, key=lambda t: (sums[t] / counts[t], t))
                chosen = {rep: best for rep, *_ in replicate_outputs}
        for replicate, error, base_seconds, results in replicate_outputs:
            if error:
                rows.append(
                    ResultRow(
                        algorithm, p, n, config.K, config.error.family, gauss_fraction,
                        None, replicate, float("nan"), None, None, 0.0, error,
                    )
                )
                continue
            entries = results[algorithm]
            if algorithm == "pairwise":
                entry = entries[0]
            elif config.threshold_mode == "cell":
                entry = next(e for e in entries if e[0] == chosen[replicate])
            else:
                entry = min(entries, key=lambda e: (e[1], e[0]))
            theta, shd, skeleton_errors, misoriented, seconds = entry
            rows.append(
                ResultRow(
                    algorithm, p, n, config.K, config.error.family, gauss_fraction,
                    theta, replicate, shd, skeleton_errors, misoriented,
                    base_seconds + seconds,
                )
            )
    return rows


def run_experiment(config: ExperimentConfig, workers: int = 1, row_callback=None) -> list:
    """Run the full sweep and return one row per (cell, algorithm, replicate).

    Rows come back ordered by cell index, then algorithm, then replicate,
    independent of worker count; ``row_callback`` sees them in that order as
    each cell completes.
    """
    cells = config.cells()
    tasks = [
        (config, cell_index, p, ratio, gf, replicate)
        for cell_index, (p, ratio, gf) in enumerate(cells)
        for replicate in range(config.replicates)
    ]
    outputs: dict = {}
    if workers > 1 and tasks:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for task, result in zip(tasks, pool.map(_replicate_task, tasks)):
                outputs.setdefault(task[1], []).append(result)
    else:
        for task in tasks:
            outputs.setdefault(task[1], []).append(_replicate_task(task))

    rows = []
    for cell_index, cell in enumerate(cells):
        cell_rows = _select_rows(config, cell, outputs.get(cell_index, []))
        for row in cell_rows:
            if row_callback is not None:
                row_callback(row)
            rows.append(row)
    return rows


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise DataError(f"config line {lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def _parse_list(value, cast):
    if isinstance(value, str):
        parts = [v.strip() for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        parts = value
    else:
        parts = [value]
    return tuple(cast(v) for v in parts)


def parse_threshold_grid(value) -> tuple:
    """Either an explicit comma list or ``lo:hi:step`` (hi inclusive)."""
    if not isinstance(value, str) or ":" not in value:
        return _parse_list(value, float)
    parts = value.split(":")
    if len(parts) != 3:
        raise DataError(f"threshold grid {value!r} is not 'lo:hi:step'")
    lo, hi, step = (float(v) for v in parts)
    if step <= 0 or hi < lo:
        raise DataError(f"threshold grid {value!r} is not increasing")
    grid = np.arange(lo, hi + 1e-12, step)
    return tuple(float(round(t, 10)) for t in grid)


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a config from string-valued keys (file contents, CLI overrides)."""
    known = {
        "p", "ratios", "error", "gauss_fraction", "gauss_fractions", "K",
        "algorithms", "replicates", "seed", "threshold_grid", "threshold_mode",
        "center_errors", "gaussian_variance", "per_node_params", "standardize",
    }
    unknown = set(mapping) - known
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    if "p" not in mapping or "ratios" not in mapping:
        raise DataError("config requires at least 'p' and 'ratios'")

    def as_bool(value):
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")

    spec_kwargs = {}
    if "error" in mapping:
        spec_kwargs["family"] = str(mapping["error"]).strip()
    if "gauss_fraction" in mapping:
        spec_kwargs["gaussian_fraction"] = float(mapping["gauss_fraction"])
    if "gaussian_variance" in mapping:
        spec_kwargs["gaussian_variance"] = float(mapping["gaussian_variance"])
    if "per_node_params" in mapping:
        spec_kwargs["per_node_params"] = as_bool(mapping["per_node_params"])
    try:
        spec = ErrorSpec(**spec_kwargs)
        kwargs = {
            "p_values": _parse_list(mapping["p"], int),
            "ratios": _parse_list(mapping["ratios"], float),
            "error": spec,
        }
        if "K" in mapping:
            kwargs["K"] = int(mapping["K"])
        if "algorithms" in mapping:
            kwargs["algorithms"] = _parse_list(mapping["algorithms"], str)
        if "replicates" in mapping:
            kwargs["replicates"] = int(mapping["replicates"])
        if "seed" in mapping:
            kwargs["seed"] = int(mapping["seed"])
        if "threshold_grid" in mapping:
            kwargs["threshold_grid"] = parse_threshold_grid(mapping["threshold_grid"])
        if "threshold_mode" in mapping:
            kwargs["threshold_mode"] = str(mapping["threshold_mode"]).strip()
        if "gauss_fractions" in mapping:
            kwargs["gaussian_fractions"] = _parse_list(mapping["gauss_fractions"], float)
        if "center_errors" in mapping:
            kwargs["center_errors"] = as_bool(mapping["center_errors"])
        if "standardize" in mapping:
            kwargs["standardize"] = as_bool(mapping["standardize"])
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise DataError(f"bad experiment config: {exc}") from exc
