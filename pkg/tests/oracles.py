"""Independent reference implementations used only by the tests.

These deliberately avoid the package's closed-form recursions: cumulants
come from explicit trek enumeration (every common-ancestor top, one directed
path per target), moments from the inverse partition sum, and small random
models from direct construction.  Agreement between these and the library
is what the oracle tests assert.
"""

from itertools import product

import numpy as np

from polytree_lingam import PolytreeModel, random_tree, rng_stream


def directed_path(model, source, sink):
    """Edge list of the directed path source -> ... -> sink, or None.

    Pure DFS over children; ignores the library's skeleton-path machinery.
    """
    if source == sink:
        return ()
    children = [[] for _ in range(model.p)]
    for u, v in model.edges:
        children[u].append(v)
    stack = [(source, ())]
    while stack:
        u, path = stack.pop()
        for v in children[u]:
            new = path + ((u, v),)
            if v == sink:
                return new
            stack.append((v, new))
    return None


def trek_cumulant(model, indices):
    """Order-k joint cumulant by brute-force trek enumeration: for every
    candidate top vertex, multiply the path coefficients to each index and
    weight by the top's error cumulant."""
    k = len(indices)
    total = 0.0
    for top in range(model.p):
        prod = 1.0
        for target in indices:
            path = directed_path(model, top, target)
            if path is None:
                prod = None
                break
            for edge in path:
                prod *= model.coefficients[edge]
        if prod is not None:
            total += model.error_cumulant(top, k) * prod
    return total


def _partitions(items):
    if not items:
        yield ()
        return
    head, rest = items[0], items[1:]
    for part in _partitions(rest):
        for b, block in enumerate(part):
            yield part[:b] + ((head,) + block,) + part[b + 1 :]
        yield ((head,),) + part


def moment_from_trek_cumulants(model, indices):
    """Raw moment E[prod X] via the inverse partition sum over trek-computed
    cumulants (mean-zero model, so singleton blocks contribute zero)."""
    total = 0.0
    for part in _partitions(tuple(range(len(indices)))):
        prod = 1.0
        for block in part:
            if len(block) == 1:
                prod = 0.0
                break
            prod *= trek_cumulant(model, tuple(indices[t] for t in block))
        total += prod
    return total


def random_generic_model(p, seed, k_max=4, zero_k3=False):
    """A random polytree with coefficients in (-1,-0.3) u (0.3,1) and
    hand-drawn nonzero error cumulants, built without the simulate module's
    orientation/coefficient code path."""
    rng = rng_stream(seed, 901)
    tree = random_tree(p, rng_stream(seed, 902))
    edges = []
    coefficients = {}
    for i, j in tree.edges:
        u, v = (i, j) if rng.integers(0, 2) == 0 else (j, i)
        lam = rng.uniform(0.3, 1.0) * (1.0 if rng.integers(0, 2) else -1.0)
        edges.append((u, v))
        coefficients[(u, v)] = float(lam)
    cumulants = {}
    for v in range(p):
        cumulants[(v, 2)] = float(rng.uniform(0.5, 2.0))
        if k_max >= 3:
            k3 = 0.0 if zero_k3 else rng.uniform(0.5, 2.0) * (1.0 if rng.integers(0, 2) else -1.0)
            cumulants[(v, 3)] = float(k3)
        if k_max >= 4:
            cumulants[(v, 4)] = float(rng.uniform(0.5, 2.0) * (1.0 if rng.integers(0, 2) else -1.0))
    return PolytreeModel(p, tuple(edges), coefficients, cumulants, k_max)


def exact_kstat_expectation(support, probs, stat, n):
    """E[stat(sample)] by enumerating every size-n sample of a finite joint
    distribution; the from-first-principles unbiasedness check.

    ``support`` is a list of (x, y) points with probabilities ``probs``;
    ``stat`` maps an (n, 2) array to a number.
    """
    total = 0.0
    for combo in product(range(len(support)), repeat=n):
        weight = 1.0
        for c in combo:
            weight *= probs[c]
        sample = np.array([support[c] for c in combo], dtype=float)
        total += weight * stat(sample)
    return total


def exact_joint_moment(support, probs, a, b):
    """E[X^a Y^b] for the finite joint distribution."""
    return sum(w * x**a * y**b for (x, y), w in zip(support, probs))
