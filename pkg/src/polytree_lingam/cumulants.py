"""Sample statistics: correlation matrices at scale and unbiased
joint-cumulant estimates (k-statistics) up to order four.

Estimators work on raw data; every statistic of order two or higher is
translation invariant, so the stored values are never centered in place.
Central moments are accumulated in double precision with a two-pass scheme
(means first), which keeps precision for large n and offset columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError

__all__ = [
    "Dataset",
    "CorrelationMatrix",
    "PairCumulantTable",
    "SampleCumulantProvider",
    "sample_correlation_matrix",
    "standardize_dataset",
    "k_statistic",
    "pair_cumulant_table",
    "cumulant_from_moments",
]

# Packed correlation storage switches to float32 above this many variables
# (a dense symmetric matrix would be ~1.6e8 entries at p = 20000).
REDUCED_PRECISION_MIN_P = 8000

# The three ways to split four index positions into two pairs.
_PAIRINGS4 = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


@dataclass(frozen=True)
class Dataset:
    """An n x p sample matrix (rows = samples) with optional column names."""

    values: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("dataset must be a 2-d matrix with rows as samples")
        if values.size and not np.all(np.isfinite(values)):
            raise DataError("dataset contains non-finite values")
        if self.names is not None and len(self.names) != values.shape[1]:
            raise DataError(
                f"{len(self.names)} column names for {values.shape[1]} columns"
            )
        object.__setattr__(self, "values", values)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(s) for s in self.names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Read a comma-separated sample matrix.

        Lines starting with ``#`` are skipped.  A first row whose fields do
        not all parse as decimal floats is treated as a header of variable
        names; otherwise the file is headerless.
        """
        first = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                stripped = line.strip()
                if stripped and not stripped.startswith("#"):
                    first = stripped
                    break
        if first is None:
            raise DataError(f"{path}: no data rows")
        has_header = not all(_is_float(tok) for tok in first.split(","))
        try:
            # round_trip parsing: the generate/learn cycle must reproduce
            # written values exactly
            frame = pd.read_csv(
                path,
                comment="#",
                header=0 if has_header else None,
                float_precision="round_trip",
            )
            values = frame.to_numpy(dtype=np.float64)
        except (ValueError, pd.errors.ParserError) as exc:
            raise DataError(f"{path}: {exc}") from exc
        names = tuple(str(c) for c in frame.columns) if has_header else None
        return cls(values, names)

    def to_csv(self, path, header_lines=()) -> None:
        """Write the matrix as CSV with a name row, after optional ``#`` comments."""
        names = self.names or tuple(f"x{i}" for i in range(self.p))
        with open(path, "w", encoding="utf-8") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            pd.DataFrame(self.values, columns=list(names)).to_csv(fh, index=False)


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


class CorrelationMatrix:
    """Pairwise correlations in packed upper-triangular storage.

    Entry (i, j) with i < j lives at offset ``i*(2p - i - 1)//2 + (j - i - 1)``;
    the diagonal is implicit.  The packed array may be float32 for very
    large p; lookups always return a Python float.
    """

    __slots__ = ("p", "packed")

    def __init__(self, p: int, packed: np.ndarray):
        packed = np.asarray(packed)
        if packed.shape != (p * (p - 1) // 2,):
            raise ValueError(f"packed length {packed.shape} does not match p={p}")
        self.p = p
        self.packed = packed

    @staticmethod
    def packed_index(p: int, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * (2 * p - i - 1) // 2 + (j - i - 1)

    def __getitem__(self, key) -> float:
        i, j = key
        if not (0 <= i < self.p and 0 <= j < self.p):
            raise IndexError(f"pair ({i}, {j}) out of range for p={self.p}")
        if i == j:
            return 1.0
        return float(self.packed[self.packed_index(self.p, i, j)])

    def abs_weights(self) -> np.ndarray:
        return np.abs(self.packed)

    def to_dense(self) -> np.ndarray:
        dense = np.eye(self.p)
        iu = np.triu_indices(self.p, k=1)
        dense[iu] = self.packed.astype(np.float64)
        dense[(iu[1], iu[0])] = dense[iu]
        return dense


def sample_correlation_matrix(
    data: Dataset, block_size: int = 2048, reduced_precision: bool | None = None
) -> CorrelationMatrix:
    """Correlations from unbiased sample covariances, blocked over column
    pairs for cache efficiency.

    Each entry is a full dot product of two centered columns, never a
    partial sum over samples, so results are reproducible for a fixed block
    size regardless of how the column pairs are scheduled.
    """
    values = data.values
    n, p = values.shape
    if n < 2:
        raise DataError("need at least two samples for correlations")
    if p < 1:
        raise DataError("empty dataset")
    means = values.mean(axis=0)
    centered = values - means
    sumsq = np.einsum("ij,ij->j", centered, centered)
    bad = np.flatnonzero(sumsq <= 0.0)
    if bad.size:
        raise DataError(f"constant column(s) {bad[:5].tolist()} have zero variance")
    inv_norm = 1.0 / np.sqrt(sumsq)

    if reduced_precision is None:
        reduced_precision = p > REDUCED_PRECISION_MIN_P
    dtype = np.float32 if reduced_precision else np.float64
    packed = np.empty(p * (p - 1) // 2, dtype=dtype)

    for bi in range(0, p, block_size):
        ei = min(bi + block_size, p)
        left = centered[:, bi:ei]
        for bj in range(bi, p, block_size):
            ej = min(bj + block_size, p)
            gram = left.T @ centered[:, bj:ej]
            gram *= inv_norm[bi:ei, None]
            gram *= inv_norm[None, bj:ej]
            np.clip(gram, -1.0, 1.0, out=gram)
            for local in range(ei - bi):
                i = bi + local
                jlo = max(i + 1, bj)
                if jlo >= ej:
                    continue
                base = CorrelationMatrix.packed_index(p, i, jlo)
                packed[base : base + (ej - jlo)] = gram[local, jlo - bj :]
    return CorrelationMatrix(p, packed)


def standardize_dataset(data: Dataset) -> Dataset:
    """Rescale every column to zero mean and unit sample variance.

    Correlations (and hence the skeleton) are unchanged; the higher-order
    statistics lose their scale information, which removes the systematic
    variance growth along directed paths from the orientation comparison.
    Raw statistics remain the default everywhere.
    """
    values = data.values
    std = values.std(axis=0, ddof=1)
    bad = np.flatnonzero(std <= 0.0)
    if bad.size:
        raise DataError(f"constant column(s) {bad[:5].tolist()} cannot be standardized")
    return Dataset((values - values.mean(axis=0)) / std, data.names)


@dataclass(frozen=True)
class PairCumulantTable:
    """All joint cumulants of one variable pair up to order K.

    ``entries[(m, k)]`` is the order-k cumulant whose index multiset holds m
    copies of variable ``i`` and k - m copies of ``j``, for 0 <= m <= k and
    2 <= k <= K.  The extremes m = k and m = 0 are the one-variable
    diagonals of i and j; entry (1, 2) is the covariance used for the
    correlation estimate.
    """

    i: int
    j: int
    K: int
    entries: dict

    def entry(self, m: int, k: int) -> float:
        if not (2 <= k <= self.K):
            raise ValueError(f"order {k} outside the stored range 2..{self.K}")
        if not (0 <= m <= k):
            raise ValueError(f"index count m={m} invalid for order {k}")
        return self.entries[(m, k)]

    def swapped(self) -> "PairCumulantTable":
        """The same table viewed from the (j, i) side: (m, k) -> (k - m, k)."""
        flipped = {(k - m, k): v for (m, k), v in self.entries.items()}
        return PairCumulantTable(self.j, self.i, self.K, flipped)

    def correlation(self) -> float:
        return self.entry(1, 2) / math.sqrt(self.entry(2, 2) * self.entry(0, 2))


def _central_moments(x: np.ndarray, y: np.ndarray, max_order: int) -> dict:
    """Bivariate central sample moments mean(x^a * y^b) for 2 <= a+b <= max_order.

    x and y must already be centered.
    """
    xp = [None, x]
    yp = [None, y]
    for _ in range(max_order - 1):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    cm = {}
    for order in range(2, max_order + 1):
        for a in range(order + 1):
            b = order - a
            if a == 0:
                prod = yp[b]
            elif b == 0:
                prod = xp[a]
            else:
                prod = xp[a] * yp[b]
            cm[(a, b)] = float(np.mean(prod))
    return cm


def _kstat_from_moments(cm: dict, n: int, a: int, b: int) -> float:
    """Unbiased k-statistic for the index multiset with `a` copies of the
    first variable and `b` of the second, from central moments `cm`."""
    k = a + b
    if k == 2:
        return n / (n - 1) * cm[(a, b)]
    if k == 3:
        return n * n / ((n - 1) * (n - 2)) * cm[(a, b)]
    if k == 4:
        positions = (0,) * a + (1,) * b
        pair_term = 0.0
        for first, second in _PAIRINGS4:
            pair_term += cm[_pair_key(positions, first)] * cm[_pair_key(positions, second)]
        scale = n * n / ((n - 1) * (n - 2) * (n - 3))
        return scale * ((n + 1) * cm[(a, b)] - (n - 1) * pair_term)
    raise ValueError(f"unsupported cumulant order {k}")


def _pair_key(positions, pair):
    ones = positions[pair[0]] + positions[pair[1]]
    return (2 - ones, ones)


def k_statistic(data: Dataset, i: int, j: int, m: int, k: int) -> float:
    """Unbiased estimate of the order-k joint cumulant with m copies of
    column i and k - m copies of column j.

    Orders 2..4 are supported; order k needs at least k samples (the
    divisors n-1 .. n-k+1 must stay positive).
    """
    if not 2 <= k <= 4:
        raise ValueError(f"cumulant order {k} outside the supported range 2..4")
    if not 0 <= m <= k:
        raise ValueError(f"index count m={m} invalid for order {k}")
    n = data.n
    if n < k:
        raise DataError(f"order-{k} k-statistic needs at least {k} samples, got {n}")
    x = data.values[:, i]
    x = x - x.mean()
    if i == j:
        y = x
    else:
        y = data.values[:, j]
        y = y - y.mean()
    cm = _central_moments(x, y, max_order=k)
    return _kstat_from_moments(cm, n, m, k - m)


def pair_cumulant_table(data: Dataset, i: int, j: int, K: int) -> PairCumulantTable:
    """All k-statistics for the pair (i, j) up to order K, from one pass of
    central moments over the two columns.

    Agrees entry-by-entry with calling :func:`k_statistic`, which shares the
    same moment-to-statistic formulas.
    """
    if i == j:
        raise ValueError("pair cumulant table requires two distinct columns")
    if K not in (3, 4):
        raise ValueError(f"cumulant order K={K} outside the supported range 3..4")
    n = data.n
    if n < K:
        raise DataError(f"order-{K} cumulants need at least {K} samples, got {n}")
    x = data.values[:, i]
    y = data.values[:, j]
    x = x - x.mean()
    y = y - y.mean()
    cm = _central_moments(x, y, max_order=K)
    entries = {}
    for k in range(2, K + 1):
        for m in range(k + 1):
            entries[(m, k)] = _kstat_from_moments(cm, n, m, k - m)
    return PairCumulantTable(i, j, K, entries)


def _set_partitions(items):
    """Yield every partition of `items` as a tuple of tuples."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for b, block in enumerate(part):
            yield part[:b] + ((first,) + block,) + part[b + 1 :]
        yield ((first,),) + part


def cumulant_from_moments(moments, indices) -> float:
    """Joint cumulant from a moment provider via the partition sum
    ``sum over partitions of (-1)^(L-1) (L-1)! prod_blocks E[prod X]``.

    ``moments`` maps an index tuple (a sub-multiset of ``indices``) to the
    corresponding raw moment.  Partition enumeration is exponential, so the
    order is capped at six; this is the brute-force oracle for both
    population and plug-in cumulants, not a bulk estimator.
    """
    indices = tuple(indices)
    if not 1 <= len(indices) <= 6:
        raise ValueError("cumulant_from_moments handles orders 1..6 only")
    total = 0.0
    for part in _set_partitions(tuple(range(len(indices)))):
        length = len(part)
        prod = 1.0
        for block in part:
            prod *= moments(tuple(indices[t] for t in block))
        total += (-1.0) ** (length - 1) * math.factorial(length - 1) * prod
    return total


class SampleCumulantProvider:
    """Cumulant source for the orientation algorithms, backed by a dataset.

    Pair tables are cached so that repeated passes (threshold grids, the
    sequential algorithms) reuse the same estimates.  Tables are returned in
    canonical (min, max) vertex order.
    """

    def __init__(self, data: Dataset, corr: CorrelationMatrix | None = None):
        self.data = data
        self.corr = corr if corr is not None else sample_correlation_matrix(data)
        if self.corr.p != data.p:
            raise ValueError("correlation matrix does not match the dataset")
        self._tables: dict = {}

    def pair_table(self, i: int, j: int, K: int) -> PairCumulantTable:
        a, b = (i, j) if i < j else (j, i)
        key = (a, b, K)
        table = self._tables.get(key)
        if table is None:
            table = pair_cumulant_table(self.data, a, b, K)
            self._tables[key] = table
        return table

    def correlation(self, i: int, j: int) -> float:
        return self.corr[i, j]
