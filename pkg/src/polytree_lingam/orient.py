"""Edge orientation for polytree skeletons.

A directed edge hypothesis i -> j is scored through a 2 x C moment matrix
whose rows stack pair cumulants at adjacent index counts: along the true
direction the rows are proportional (rank one), while the reverse direction
is generically rank two.  The 2x2 minors against the first column form the
decision statistic; three algorithms combine this rank test with marginal
independence checks in different proportions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Protocol

import numpy as np

from .cumulants import PairCumulantTable
from .errors import DataError, DegeneracyError
from .skeleton import UndirectedTree

__all__ = [
    "CumulantProvider",
    "EdgeMomentMatrix",
    "MinorVector",
    "EdgeDecision",
    "LearnedGraph",
    "matrix_columns",
    "minor_count",
    "build_a_matrix",
    "minor_vector",
    "rank_orient",
    "pairwise_orientation",
    "pto",
    "tpo",
    "default_threshold",
    "load_learned_graph",
]

# Relative tolerance for "exactly zero" minors and correlations when working
# from a population oracle; float evaluation of exact algebraic zeros.
POPULATION_ZERO_RTOL = 1e-9

RANK_TEST = "rank-test"
COLLIDER_TEST = "collider-test"
PROPAGATION = "propagation"


class CumulantProvider(Protocol):
    """What the orientation algorithms need from a statistics source.

    Realized by the exact model oracle and by the sample estimators, so the
    population and data versions of each algorithm share one implementation.
    """

    def pair_table(self, i: int, j: int, K: int) -> PairCumulantTable: ...

    def correlation(self, i: int, j: int) -> float: ...


def matrix_columns(K: int) -> list:
    """Column index pairs (m, k) for the moment matrix, k ascending then m
    ascending; the first column is always (2, 2)."""
    return [(m, k) for k in range(2, K + 1) for m in range(2, k + 1)]


def minor_count(K: int) -> int:
    return K * (K - 1) // 2 - 1


@dataclass(frozen=True)
class EdgeMomentMatrix:
    """The 2 x (K(K-1)/2) matrix for one directed edge hypothesis.

    Row 0 holds the pair cumulant with m copies of the source, row 1 the one
    with m - 1 copies, for every column (m, k).
    """

    source: int
    target: int
    K: int
    a: np.ndarray


def build_a_matrix(
    table: PairCumulantTable, source: int, target: int, K: int | None = None
) -> EdgeMomentMatrix:
    """Assemble the moment matrix for source -> target from a pair table.

    The table may be stored for either vertex order; reversed lookups go
    through the symmetry c^{(j,i),k}_m = c^{(i,j),k}_{k-m}.
    """
    if K is None:
        K = table.K
    if K > table.K:
        raise ValueError(f"table covers orders up to {table.K}, matrix needs {K}")
    if {source, target} != {table.i, table.j}:
        raise ValueError(
            f"direction {source}->{target} does not match table pair ({table.i}, {table.j})"
        )
    if source == table.i:
        def c(m, k):
            return table.entry(m, k)
    else:
        def c(m, k):
            return table.entry(k - m, k)
    cols = matrix_columns(K)
    a = np.array(
        [[c(m, k) for m, k in cols], [c(m - 1, k) for m, k in cols]], dtype=np.float64
    )
    return EdgeMomentMatrix(source, target, K, a)


@dataclass(frozen=True)
class MinorVector:
    """The 2x2 minors of a moment matrix pairing its first column with every
    other column; zero along the true edge direction."""

    source: int
    target: int
    values: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def minor_vector(matrix: EdgeMomentMatrix) -> MinorVector:
    a = matrix.a
    values = a[0, 0] * a[1, 1:] - a[1, 0] * a[0, 1:]
    return MinorVector(matrix.source, matrix.target, values)


@dataclass(frozen=True)
class EdgeDecision:
    """One oriented edge plus how it was decided.

    ``norm_forward`` / ``norm_reverse`` are the minor-vector norms for the
    chosen and opposite directions; only rank-test decisions carry them.
    """

    source: int
    target: int
    provenance: str
    norm_forward: float | None = None
    norm_reverse: float | None = None
    note: str = ""

    def pair(self) -> tuple:
        return (self.source, self.target) if self.source < self.target else (self.target, self.source)


@dataclass(frozen=True)
class LearnedGraph:
    """Directed edges over a fixed skeleton with per-edge decision
    provenance; ``unresolved`` is empty on success."""

    p: int
    edges: tuple
    unresolved: tuple = ()
    conflicts: tuple = ()

    def directed_edges(self) -> list:
        return [(d.source, d.target) for d in self.edges]

    def skeleton_pairs(self) -> set:
        return {d.pair() for d in self.edges}

    def to_text_lines(self) -> list:
        return [f"{d.source} {d.target} {d.provenance}" for d in self.edges]

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "edges": [
                {
                    "source": d.source,
                    "target": d.target,
                    "provenance": d.provenance,
                    "norm_forward": d.norm_forward,
                    "norm_reverse": d.norm_reverse,
                    **({"note": d.note} if d.note else {}),
                }
                for d in self.edges
            ],
            "unresolved": [list(e) for e in self.unresolved],
            "conflicts": list(self.conflicts),
        }


def load_learned_graph(path, p: int | None = None) -> LearnedGraph:
    """Parse the one-edge-per-line text format (``source target provenance``)."""
    decisions = []
    top = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 'source target provenance'")
            try:
                s, t = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            decisions.append(EdgeDecision(s, t, parts[2]))
            top = max(top, s, t)
    if p is None:
        p = top + 1
    return LearnedGraph(p, tuple(decisions))


def rank_orient(
    provider: CumulantProvider, i: int, j: int, K: int, mode: str = "sample"
) -> EdgeDecision:
    """Orient one skeleton edge by comparing the two moment matrices.

    Sample mode picks the direction with the smaller minor-vector norm
    (ties, a measure-zero event, go min-index -> max-index and are noted).
    Population mode demands one exact rank-one side and raises
    DegeneracyError when both or neither pass.
    """
    table = provider.pair_table(i, j, K)
    a_ij = build_a_matrix(table, i, j, K)
    a_ji = build_a_matrix(table, j, i, K)
    n_ij = minor_vector(a_ij).norm
    n_ji = minor_vector(a_ji).norm
    if mode == "sample":
        if n_ij < n_ji:
            return EdgeDecision(i, j, RANK_TEST, n_ij, n_ji)
        if n_ji < n_ij:
            return EdgeDecision(j, i, RANK_TEST, n_ji, n_ij)
        s, t = (i, j) if i < j else (j, i)
        return EdgeDecision(s, t, RANK_TEST, n_ij, n_ji, note="tie")
    if mode != "population":
        raise ValueError(f"unknown mode {mode!r}")
    scale = max(float(np.abs(a_ij.a).max()), float(np.abs(a_ji.a).max()))
    tol = POPULATION_ZERO_RTOL * scale * np.sqrt(max(1, minor_count(K)))
    zero_ij = n_ij <= tol
    zero_ji = n_ji <= tol
    if zero_ij and zero_ji:
        raise DegeneracyError(
            f"edge {{{i}, {j}}}: both directions are rank one "
            "(Gaussian-like cumulants cannot be oriented)"
        )
    if not zero_ij and not zero_ji:
        raise DegeneracyError(
            f"edge {{{i}, {j}}}: neither direction is rank one "
            "(cumulants inconsistent with a polytree)"
        )
    if zero_ij:
        return EdgeDecision(i, j, RANK_TEST, n_ij, n_ji)
    return EdgeDecision(j, i, RANK_TEST, n_ji, n_ij)


def _check_mode(mode: str, rho_threshold, skeleton) -> float | None:
    if mode == "population":
        return None
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    if rho_threshold is None:
        rho_threshold = default_threshold(skeleton)
    if not 0.0 < rho_threshold < 1.0:
        raise ValueError(f"threshold {rho_threshold} outside (0, 1)")
    return float(rho_threshold)


def _independent(provider, i, k, mode, rho_threshold) -> bool:
    r = provider.correlation(i, k)
    if mode == "population":
        return abs(r) <= POPULATION_ZERO_RTOL
    return abs(r) < rho_threshold


def default_threshold(skeleton: UndirectedTree) -> float:
    """Fallback independence threshold from the learned skeleton: the
    weakest retained edge proxies the smallest true edge correlation, and
    admissible thresholds sit below its square."""
    if skeleton.weights is None:
        raise ValueError("skeleton carries no weights; pass an explicit threshold")
    w_min = min(skeleton.weights)
    return min(max(0.05, 0.5 * w_min * w_min), 0.999)


def pairwise_orientation(
    skeleton: UndirectedTree,
    provider: CumulantProvider,
    K: int,
    mode: str = "sample",
    workers: int = 1,
) -> LearnedGraph:
    """Orient every skeleton edge independently by the rank test.

    Edges do not interact, so the loop is an embarrassingly parallel map;
    results merge in skeleton-edge order regardless of worker count.
    """
    if mode not in ("sample", "population"):
        raise ValueError(f"unknown mode {mode!r}")

    def decide(edge):
        return rank_orient(provider, edge[0], edge[1], K, mode)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            decisions = list(pool.map(decide, skeleton.edges))
    else:
        decisions = [decide(e) for e in skeleton.edges]
    return LearnedGraph(skeleton.p, tuple(decisions))


class _OrientationState:
    """Shared bookkeeping for the sequential algorithms."""

    def __init__(self, skeleton: UndirectedTree):
        self.skeleton = skeleton
        self.adjacency = skeleton.adjacency
        self.decisions: dict = {}
        self.conflicts: list = []

    def orient(self, source: int, target: int, provenance: str, **kw) -> bool:
        """Record source -> target; on disagreement the first decision wins
        and the conflict is logged.  Returns True if the edge was new."""
        pair = (source, target) if source < target else (target, source)
        existing = self.decisions.get(pair)
        if existing is None:
            self.decisions[pair] = EdgeDecision(source, target, provenance, **kw)
            return True
        if (existing.source, existing.target) != (source, target):
            self.conflicts.append(
                f"edge {pair}: {provenance} wanted {source}->{target}, "
                f"keeping {existing.source}->{existing.target} from {existing.provenance}"
            )
        return False

    def is_oriented(self, i: int, j: int) -> bool:
        return ((i, j) if i < j else (j, i)) in self.decisions

    def propagate(self, work: deque) -> None:
        """Orient unoriented edges away from the sink of each worked edge,
        transitively: any other arrow at an edge's head must leave it, or a
        new unshielded collider would have appeared."""
        while work:
            source, target = work.popleft()
            for other in self.adjacency[target]:
                if other != source and not self.is_oriented(target, other):
                    self.orient(target, other, PROPAGATION)
                    work.append((target, other))

    def finish(self) -> LearnedGraph:
        edges = []
        unresolved = []
        for pair in self.skeleton.edges:
            decision = self.decisions.get(pair)
            if decision is None:
                unresolved.append(pair)
            else:
                edges.append(decision)
        return LearnedGraph(
            self.skeleton.p, tuple(edges), tuple(unresolved), tuple(self.conflicts)
        )


def pto(
    skeleton: UndirectedTree,
    provider: CumulantProvider,
    K: int,
    rho_threshold: float | None = None,
    mode: str = "sample",
) -> LearnedGraph:
    """Colliders first, rank tests last.

    Phase 1 scans every path i - j - k and orients i -> j <- k when the
    (i, k) correlation test declares independence.  Phase 2 propagates
    orientations away from sinks through a worklist.  Phase 3 settles each
    still-unoriented edge with a rank test, propagating after each one.
    """
    rho_threshold = _check_mode(mode, rho_threshold, skeleton)
    state = _OrientationState(skeleton)

    work: deque = deque()
    for j in range(skeleton.p):
        for i, k in combinations(state.adjacency[j], 2):
            if _independent(provider, i, k, mode, rho_threshold):
                if state.orient(i, j, COLLIDER_TEST):
                    work.append((i, j))
                if state.orient(k, j, COLLIDER_TEST):
                    work.append((k, j))
    state.propagate(work)

    for i, j in skeleton.edges:
        if state.is_oriented(i, j):
            continue
        decision = rank_orient(provider, i, j, K, mode)
        state.decisions[(i, j)] = decision
        state.propagate(deque([(decision.source, decision.target)]))
    return state.finish()


def tpo(
    skeleton: UndirectedTree,
    provider: CumulantProvider,
    K: int,
    rho_threshold: float | None = None,
    mode: str = "sample",
) -> LearnedGraph:
    """Rank-test seeds, correlation-test spreading.

    A rank test orients one edge; from the frontier of oriented edges
    s -> t, every unoriented edge t - k is decided by the (s, k) correlation
    test: independence makes k -> t a collider, dependence sends t -> k
    onward and pushes it.  When the frontier drains with edges left, a fresh
    rank test re-seeds.  The frontier is explicit, so chains as long as the
    vertex count cannot overflow the call stack.
    """
    rho_threshold = _check_mode(mode, rho_threshold, skeleton)
    state = _OrientationState(skeleton)
    frontier: list = []
    seed_scan = 0
    n_edges = len(skeleton.edges)

    while len(state.decisions) < n_edges:
        if not frontier:
            while seed_scan < n_edges and state.is_oriented(*skeleton.edges[seed_scan]):
                seed_scan += 1
            i, j = skeleton.edges[seed_scan]
            decision = rank_orient(provider, i, j, K, mode)
            state.decisions[(i, j)] = decision
            frontier.append((decision.source, decision.target))
            continue
        source, target = frontier.pop()
        for k in state.adjacency[target]:
            if k == source or state.is_oriented(target, k):
                continue
            if _independent(provider, source, k, mode, rho_threshold):
                state.orient(k, target, COLLIDER_TEST)
            else:
                state.orient(target, k, PROPAGATION)
                frontier.append((target, k))
    return state.finish()
