"""Scoring learned graphs against ground truth.

The normalized structural Hamming distance counts wrongly included skeleton
edges, omitted skeleton edges and misoriented shared edges, divided by
2(p - 1).  A reversed edge contributes exactly once (as misoriented, not as
an inclusion plus an omission): with that convention two disjoint trees
score 1 and a perfect skeleton with every arrow flipped scores 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PolytreeModel
from .orient import LearnedGraph

__all__ = ["ShdReport", "structural_hamming"]


@dataclass(frozen=True)
class ShdReport:
    p: int
    included: int
    omitted: int
    misoriented: int
    normalized: float
    shared: int
    provenance_errors: dict

    @property
    def skeleton_errors(self) -> int:
        return self.included + self.omitted

    def edge_accuracy(self) -> float:
        """Fraction of correctly oriented edges among the shared skeleton
        edges; NaN when the skeletons do not overlap."""
        if self.shared == 0:
            return float("nan")
        return 1.0 - self.misoriented / self.shared


def _directed_edges(graph) -> tuple:
    if isinstance(graph, LearnedGraph):
        return graph.p, [(d.source, d.target, d.provenance) for d in graph.edges]
    if isinstance(graph, PolytreeModel):
        return graph.p, [(u, v, "") for u, v in graph.edges]
    raise TypeError(f"cannot read directed edges from {type(graph).__name__}")


def structural_hamming(truth, learned) -> ShdReport:
    """Compare a learned graph with the true directed tree.

    Accepts models or learned graphs on the same vertex set; provenance
    tags, when present on the learned side, get a per-tag error breakdown.
    """
    p_truth, truth_edges = _directed_edges(truth)
    p_learned, learned_edges = _directed_edges(learned)
    if p_truth != p_learned:
        raise ValueError(f"vertex sets differ: {p_truth} vs {p_learned}")
    p = p_truth
    if p < 2:
        raise ValueError("graphs need at least two vertices to compare")

    truth_directed = {(u, v) for u, v, _ in truth_edges}
    truth_skeleton = {frozenset(e) for e in truth_directed}

    included = misoriented = shared = 0
    provenance_errors: dict = {}
    learned_skeleton = set()
    for u, v, tag in learned_edges:
        pair = frozenset((u, v))
        learned_skeleton.add(pair)
        error = False
        if pair not in truth_skeleton:
            included += 1
            error = True
        else:
            shared += 1
            if (u, v) not in truth_directed:
                misoriented += 1
                error = True
        if error and tag:
            provenance_errors[tag] = provenance_errors.get(tag, 0) + 1
    omitted = len(truth_skeleton - learned_skeleton)
    normalized = (included + omitted + misoriented) / (2.0 * (p - 1))
    return ShdReport(p, included, omitted, misoriented, normalized, shared, provenance_errors)
