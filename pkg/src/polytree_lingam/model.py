"""Ground-truth polytree models and the exact population oracle.

A model holds the directed tree, edge coefficients and per-node error
cumulants.  Covariances and pair cumulants follow in closed form: diagonals
by topological recursion, off-diagonals as the coefficient product along
the unique connecting trek times the top-vertex diagonal.  Distinct parents
of a node can never be trek-connected (their only skeleton path runs
through the common child), which is why the diagonal recursion needs no
cross terms; the tree validation at construction guarantees this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cumulants import PairCumulantTable
from .errors import DataError, DegeneracyError
from .orient import POPULATION_ZERO_RTOL, build_a_matrix, minor_vector
from .skeleton import UndirectedTree, UnionFind

__all__ = [
    "PolytreeModel",
    "Trek",
    "PopulationCumulantProvider",
    "simple_trek",
    "population_covariance",
    "population_pair_cumulants",
    "valid_threshold_interval",
    "genericity_check",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class PolytreeModel:
    """A linear structural equation model whose graph skeleton is a tree.

    ``edges`` are (parent, child) pairs, ``coefficients`` maps each edge to
    its structural coefficient, and ``error_cumulants`` maps (vertex, order)
    to the error-term cumulant for orders 2..k_max (missing higher-order
    entries read as zero; order-2 entries are required and positive).
    Instances are immutable; all oracle operations are pure functions.
    """

    p: int
    edges: tuple
    coefficients: dict
    error_cumulants: dict
    k_max: int = 2

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("model needs at least one vertex")
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) != self.p - 1:
            raise ValueError(
                f"a polytree on {self.p} vertices has {self.p - 1} edges, got {len(edges)}"
            )
        uf = UnionFind(self.p)
        for u, v in edges:
            if not (0 <= u < self.p and 0 <= v < self.p) or u == v:
                raise ValueError(f"edge ({u}, {v}) invalid for p={self.p}")
            if not uf.union(u, v):
                raise ValueError(f"edge ({u}, {v}) closes a cycle in the skeleton")
        coefficients = {(int(u), int(v)): float(c) for (u, v), c in self.coefficients.items()}
        if set(coefficients) != set(edges):
            raise ValueError("coefficients must cover exactly the directed edges")
        object.__setattr__(self, "coefficients", coefficients)
        if self.k_max < 2:
            raise ValueError("k_max must be at least 2")
        cumulants = {
            (int(v), int(k)): float(x) for (v, k), x in self.error_cumulants.items()
        }
        for (v, k) in cumulants:
            if not 0 <= v < self.p:
                raise ValueError(f"cumulant vertex {v} out of range")
            if not 2 <= k <= self.k_max:
                raise ValueError(f"cumulant order {k} outside 2..{self.k_max}")
        for v in range(self.p):
            if cumulants.get((v, 2), 0.0) <= 0.0:
                raise ValueError(f"vertex {v} needs a positive error variance")
        object.__setattr__(self, "error_cumulants", cumulants)

    @cached_property
    def parents(self) -> tuple:
        par = [[] for _ in range(self.p)]
        for u, v in self.edges:
            par[v].append(u)
        return tuple(tuple(sorted(a)) for a in par)

    @cached_property
    def neighbors(self) -> tuple:
        nbr = [[] for _ in range(self.p)]
        for u, v in self.edges:
            nbr[u].append(v)
            nbr[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbr)

    @cached_property
    def topological_order(self) -> tuple:
        indeg = [len(self.parents[v]) for v in range(self.p)]
        order = [v for v in range(self.p) if indeg[v] == 0]
        children = [[] for _ in range(self.p)]
        for u, v in self.edges:
            children[u].append(v)
        head = 0
        while head < len(order):
            u = order[head]
            head += 1
            for v in children[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    order.append(v)
        return tuple(order)

    def error_cumulant(self, v: int, k: int) -> float:
        if not 2 <= k <= self.k_max:
            raise ValueError(f"cumulant order {k} outside the stored range 2..{self.k_max}")
        return self.error_cumulants.get((v, k), 0.0)

    def skeleton(self, weights: tuple | None = None) -> UndirectedTree:
        pairs = sorted((u, v) if u < v else (v, u) for u, v in self.edges)
        return UndirectedTree(self.p, tuple(pairs), weights)

    def with_error_cumulants(self, cumulants: dict, k_max: int) -> "PolytreeModel":
        return PolytreeModel(self.p, self.edges, self.coefficients, cumulants, k_max)


@dataclass(frozen=True)
class Trek:
    """The unique simple trek between two vertices: a top vertex and the
    directed edge paths running from it down to each endpoint."""

    top: int
    path_to_first: tuple
    path_to_second: tuple


def _skeleton_path(model: PolytreeModel, i: int, j: int) -> list:
    """Vertex sequence of the unique undirected path i .. j."""
    prev = {i: None}
    queue = [i]
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        if u == j:
            break
        for v in model.neighbors[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    path = [j]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def simple_trek(model: PolytreeModel, i: int, j: int) -> Trek | None:
    """Resolve the unique simple trek between i and j, or None when the
    undirected path between them contains a collider."""
    if i == j:
        return Trek(i, (), ())
    path = _skeleton_path(model, i, j)
    last = len(path) - 1
    t = 0
    while t < last and (path[t + 1], path[t]) in model.coefficients:
        t += 1  # arrows still point back toward i: keep ascending
    for s in range(t, last):
        if (path[s + 1], path[s]) in model.coefficients:
            return None  # second ascent means a collider on the path
    down_to_i = tuple((path[r + 1], path[r]) for r in range(t - 1, -1, -1))
    down_to_j = tuple((path[s], path[s + 1]) for s in range(t, last))
    return Trek(path[t], down_to_i, down_to_j)


def _path_coefficient(model: PolytreeModel, path) -> float:
    return math.prod(model.coefficients[e] for e in path)


def _diagonal_cumulants(model: PolytreeModel, k: int) -> np.ndarray:
    """C^(k) for every vertex by the parent recursion; in a polytree only
    same-parent index tuples survive, so each parent contributes once."""
    diag = np.zeros(model.p)
    for v in model.topological_order:
        total = model.error_cumulant(v, k)
        for u in model.parents[v]:
            total += model.coefficients[(u, v)] ** k * diag[u]
        diag[v] = total
    return diag


def population_covariance(model: PolytreeModel) -> np.ndarray:
    """The exact covariance matrix of the observed vector.

    Diagonals come from the variance recursion; each off-diagonal entry is
    the coefficient product along the unique trek times the top-vertex
    variance, found by one walk of the skeleton per source vertex.
    """
    var = _diagonal_cumulants(model, 2)
    sigma = np.diag(var)
    for i in range(model.p):
        # depth-first walk away from i; a trek survives while the walk only
        # ascends (against arrows) before it starts descending
        stack = [(i, 1.0, i, False)]
        seen = [False] * model.p
        seen[i] = True
        while stack:
            u, prod, top, descending = stack.pop()
            for v in model.neighbors[u]:
                if seen[v]:
                    continue
                if (u, v) in model.coefficients:
                    nprod = prod * model.coefficients[(u, v)]
                    seen[v] = True
                    if v > i:
                        sigma[i, v] = nprod * var[top]
                    stack.append((v, nprod, top, True))
                elif not descending:
                    nprod = prod * model.coefficients[(v, u)]
                    seen[v] = True
                    if v > i:
                        sigma[i, v] = nprod * var[v]
                    stack.append((v, nprod, v, False))
                # else: collider on the path, no trek reaches v from i
    iu = np.triu_indices(model.p, k=1)
    sigma[(iu[1], iu[0])] = sigma[iu]
    return sigma


def population_pair_cumulants(model: PolytreeModel, i: int, j: int, K: int) -> PairCumulantTable:
    """Exact joint cumulants of the pair (i, j) up to order K.

    Entries are coefficient-power products against the trek top's diagonal
    cumulant, and zero for mixed index tuples when no trek joins the pair.
    """
    if i == j:
        raise ValueError("pair cumulants require two distinct vertices")
    if not (0 <= i < model.p and 0 <= j < model.p):
        raise ValueError(f"vertex pair ({i}, {j}) out of range")
    if not 3 <= K <= model.k_max:
        raise ValueError(f"cumulant order K={K} outside the stored range 3..{model.k_max}")
    diag = {k: _diagonal_cumulants(model, k) for k in range(2, K + 1)}
    trek = simple_trek(model, i, j)
    if trek is not None:
        lam_i = _path_coefficient(model, trek.path_to_first)
        lam_j = _path_coefficient(model, trek.path_to_second)
        top = trek.top
    entries = {}
    for k in range(2, K + 1):
        entries[(k, k)] = float(diag[k][i])
        entries[(0, k)] = float(diag[k][j])
        for m in range(1, k):
            if trek is None:
                entries[(m, k)] = 0.0
            else:
                entries[(m, k)] = lam_i**m * lam_j ** (k - m) * float(diag[k][top])
    return PairCumulantTable(i, j, K, entries)


def valid_threshold_interval(model: PolytreeModel) -> tuple:
    """The open interval of independence-test thresholds that, at population
    level, separates collider pairs from trek-connected ones.

    With r_min and r_max the extreme absolute edge correlations, the margin
    is min(r_min/3, (1 - r_max)/2) * r_min, and valid thresholds live
    strictly between the margin and r_min^2 - margin.
    """
    if model.p < 2:
        raise ValueError("threshold interval needs at least one edge")
    sigma = population_covariance(model)
    rhos = [
        abs(sigma[u, v]) / math.sqrt(sigma[u, u] * sigma[v, v]) for u, v in model.edges
    ]
    r_min, r_max = float(min(rhos)), float(max(rhos))
    margin = min(r_min / 3.0, (1.0 - r_max) / 2.0) * r_min
    lo, hi = margin, r_min * r_min - margin
    if lo >= hi:
        raise DegeneracyError(
            f"empty threshold interval ({lo:.6g}, {hi:.6g}): edge correlations "
            f"in [{r_min:.6g}, {r_max:.6g}] are too weak or too strong for "
            "threshold-based independence tests"
        )
    return lo, hi


def genericity_check(model: PolytreeModel, K: int) -> dict:
    """Per-edge report: True when the reversed-direction moment matrix has a
    detectably nonzero minor, i.e. the rank test can tell the directions
    apart.  All-False flags models (e.g. fully Gaussian ones) where the
    sample algorithms cannot succeed."""
    if not 3 <= K <= model.k_max:
        raise ValueError(f"cumulant order K={K} outside the stored range 3..{model.k_max}")
    report = {}
    for u, v in model.edges:
        table = population_pair_cumulants(model, u, v, K)
        wrong = build_a_matrix(table, v, u, K)
        scale = float(np.abs(wrong.a).max())
        if scale == 0.0:
            report[(u, v)] = False
            continue
        largest_minor = float(np.abs(minor_vector(wrong).values).max())
        report[(u, v)] = largest_minor > POPULATION_ZERO_RTOL * scale
    return report


class PopulationCumulantProvider:
    """Exact statistics source for the orientation algorithms, backed by a
    model; lets the population algorithms run through the same code paths
    as their sample versions."""

    def __init__(self, model: PolytreeModel):
        self.model = model
        self._sigma = population_covariance(model)
        self._tables: dict = {}

    def pair_table(self, i: int, j: int, K: int) -> PairCumulantTable:
        a, b = (i, j) if i < j else (j, i)
        key = (a, b, K)
        table = self._tables.get(key)
        if table is None:
            table = population_pair_cumulants(self.model, a, b, K)
            self._tables[key] = table
        return table

    def correlation(self, i: int, j: int) -> float:
        if i == j:
            return 1.0
        s = self._sigma
        return float(s[i, j] / math.sqrt(s[i, i] * s[j, j]))


def save_model(model: PolytreeModel, path, header_lines=()) -> None:
    """Serialize to the text format: one ``p k_max`` header line, one line
    per directed edge ``parent child lambda``, then one ``vertex k value``
    line per stored error cumulant.  Floats use repr and round-trip exactly."""
    lines = [f"# {h}" for h in header_lines]
    lines.append(f"{model.p} {model.k_max}")
    for u, v in model.edges:
        lines.append(f"{u} {v} {model.coefficients[(u, v)]!r}")
    for v in range(model.p):
        for k in range(2, model.k_max + 1):
            lines.append(f"{v} {k} {model.error_cumulant(v, k)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> PolytreeModel:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                rows.append((lineno, stripped.split()))
    if not rows:
        raise DataError(f"{path}: empty model file")
    try:
        header = rows[0][1]
        if len(header) != 2:
            raise ValueError("header must be 'p k_max'")
        p, k_max = int(header[0]), int(header[1])
        n_edges = p - 1
        if len(rows) - 1 < n_edges:
            raise ValueError(f"expected {n_edges} edge lines")
        edges = []
        coefficients = {}
        for lineno, parts in rows[1 : 1 + n_edges]:
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'parent child lambda'")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            coefficients[(u, v)] = float(parts[2])
        cumulants = {}
        for lineno, parts in rows[1 + n_edges :]:
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'vertex k value'")
            key = (int(parts[0]), int(parts[1]))
            if key in cumulants:
                raise ValueError(f"line {lineno}: duplicate cumulant entry {key}")
            cumulants[key] = float(parts[2])
        return PolytreeModel(p, tuple(edges), coefficients, cumulants, k_max)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
