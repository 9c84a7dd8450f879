"""
Ranking comparison and multiplex overlap measures, confidence intervals,
and the per-iteration cost model of the compared methods.
"""
import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from multiplex import MultiplexNetwork, ScoreVector

logger = logging.getLogger(__name__)

TABLE_NODE_SIZES = (64, 128, 256, 512, 1024, 2048, 4096)
_ROW_BLOCK = 512
TIE_TOLERANCE = 1e-12

Scores = Union[ScoreVector, Sequence[float], np.ndarray]


class UndefinedMeasureError(ValueError):
    """Raised when a measure is undefined for its input (e.g. an all-tied ranking)."""


class WeightScheme(str, enum.Enum):
    HYPERBOLIC = 'hyperbolic'
    CONSTANT = 'constant'


@dataclass(frozen=True)
class ComparisonResult:
    tau_w: float
    n_items: int
    tie_counts: Tuple[int, int]


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    mean: float


@dataclass(frozen=True)
class CostModelEntry:
    method: str
    n: int
    layers: int
    operations: int


def _as_array(x: Scores) -> np.ndarray:
    if isinstance(x, ScoreVector):
        return np.asarray(x.values, dtype=float)
    return np.asarray(x, dtype=float).ravel()


def concatenate_rankings(rankings: Iterable[Scores]) -> np.ndarray:
    """Join several rankings into one vector for a single tau_w comparison."""
    return np.concatenate([_as_array(r) for r in rankings])


def snap_ties(x: np.ndarray, rel_tol: float = TIE_TOLERANCE) -> np.ndarray:
    """
    Replace scores by tie-group indices, order preserved.

    Neighbours in sorted order closer than rel_tol * max|x| share a group, so
    values equal up to round-off compare as ties.
    """
    if x.size == 0:
        return x.astype(float)
    atol = rel_tol * float(np.max(np.abs(x)))
    order = np.argsort(x, kind='stable')
    groups = np.concatenate(([0], np.cumsum(np.diff(x[order]) > atol)))
    snapped = np.empty(x.size, dtype=float)
    snapped[order] = groups
    return snapped


def reference_ranks(r: np.ndarray) -> np.ndarray:
    """Zero-based ranks by descending score; tied items share their average rank."""
    return stats.rankdata(-r, method='average') - 1.0


def weighted_kendall_tau(r: Scores, s: Scores,
                         weight_scheme: WeightScheme = WeightScheme.HYPERBOLIC,
                         tie_tol: float = TIE_TOLERANCE) -> ComparisonResult:
    """
    Weighted Kendall tau between two score vectors.

    tau_w = <r, s>_w / (||r||_w ||s||_w) with
    <r, s>_w = sum_{i<j} w(i, j) sgn(r_i - r_j) sgn(s_i - s_j).
    The hyperbolic scheme uses w(i, j) = 1/(rho(i)+1) + 1/(rho(j)+1), rho
    being the rank in the first argument; the constant scheme uses w = 1.
    Scores within tie_tol * max|score| of each other count as tied.

    Raises:
        ValueError: If the lengths differ or are below 2
        UndefinedMeasureError: If either ranking is completely tied
    """
    x = _as_array(r)
    y = _as_array(s)
    if x.shape != y.shape:
        raise ValueError(f"rankings differ in length: {x.size} vs {y.size}")
    n = x.size
    if n < 2:
        raise ValueError("weighted tau needs at least two items")
    x = snap_ties(x, tie_tol)
    y = snap_ties(y, tie_tol)
    scheme = WeightScheme(weight_scheme)
    if scheme is WeightScheme.HYPERBOLIC:
        item_weight = 1.0 / (reference_ranks(x) + 1.0)
    else:
        item_weight = np.full(n, 0.5)

    cross = norm_x = norm_y = 0.0
    ties_x = ties_y = 0
    # upper triangle only, a block of rows at a time
    for start in range(0, n, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, n)
        sx = np.sign(x[start:stop, None] - x[None, :])
        sy = np.sign(y[start:stop, None] - y[None, :])
        w = item_weight[start:stop, None] + item_weight[None, :]
        upper = np.arange(n)[None, :] > np.arange(start, stop)[:, None]
        w = np.where(upper, w, 0.0)
        cross += float((w * sx * sy).sum())
        norm_x += float((w * sx * sx).sum())
        norm_y += float((w * sy * sy).sum())
        ties_x += int(np.count_nonzero(upper & (sx == 0)))
        ties_y += int(np.count_nonzero(upper & (sy == 0)))

    if norm_x == 0 or norm_y == 0:
        raise UndefinedMeasureError("weighted tau is undefined for a completely tied ranking")
    tau = cross / math.sqrt(norm_x * norm_y)
    return ComparisonResult(tau_w=max(-1.0, min(1.0, tau)), n_items=n, tie_counts=(ties_x, ties_y))


def multijaccard(m: MultiplexNetwork) -> float:
    """
    Average Jaccard similarity of layer edge sets over ordered layer pairs.

    Edges are (src, dst) pairs, weights ignored; two empty layers count as 1.

    Raises:
        ValueError: If the multiplex has fewer than two layers
    """
    if m.layer_count < 2:
        raise ValueError("MultiJaccard needs at least two layers")
    edge_sets = [layer.edge_set() for layer in m.layers]
    total = 0.0
    for a, b in itertools.permutations(range(m.layer_count), 2):
        union = edge_sets[a] | edge_sets[b]
        total += 1.0 if not union else len(edge_sets[a] & edge_sets[b]) / len(union)
    return total / (m.layer_count * (m.layer_count - 1))


def t_quantile(df: int, confidence: float = 0.95) -> float:
    """Two-sided Student-t critical value."""
    return float(stats.t.ppf(0.5 + confidence / 2.0, df))


def confidence_interval(samples: Sequence[float], confidence: float = 0.95) -> ConfidenceInterval:
    """
    Student-t interval mean ± t* s / sqrt(N), s with N-1 denominator.

    Raises:
        ValueError: If fewer than two samples are given
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("a confidence interval needs at least two samples")
    mean = float(x.mean())
    half = t_quantile(x.size - 1, confidence) * float(x.std(ddof=1)) / math.sqrt(x.size)
    return ConfidenceInterval(lo=mean - half, hi=mean + half, mean=mean)


COST_METHODS = ('pagerank', 'pagerank-like', 'hits', 'hits-like', 'versatile', 'versatile-like', 'framework')


def cost_model(method: str, n: int, layers: int, k: Optional[int] = None) -> CostModelEntry:
    """
    Operation count of one iteration of a method.

    pagerank L·n², hits L·(n³ + n²), versatile n·(L·n)·n, framework
    (k-1)·n³ + n²; pagerank-like and versatile-like use k = L, hits-like k = 2L.

    Raises:
        ValueError: For an unknown method or a missing/invalid k
    """
    if n < 1 or layers < 1:
        raise ValueError("n and layers must be at least 1")
    if method == 'pagerank':
        ops = layers * n * n
    elif method == 'hits':
        ops = layers * (n ** 3 + n ** 2)
    elif method == 'versatile':
        ops = n * (layers * n) * n
    elif method in ('pagerank-like', 'versatile-like', 'hits-like', 'framework'):
        if method == 'hits-like':
            k = 2 * layers
        elif method != 'framework':
            k = layers
        if k is None or k < 1:
            raise ValueError("framework cost needs a configuration length k >= 1")
        ops = (k - 1) * n ** 3 + n ** 2
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {COST_METHODS}")
    return CostModelEntry(method=method, n=n, layers=layers, operations=int(ops))


def cost_table(nodes: Sequence[int] = TABLE_NODE_SIZES, layers: int = 2) -> pd.DataFrame:
    """Operation counts for every method (columns) and node count (rows)."""
    headers = {
        'pagerank': 'PageRank', 'pagerank-like': 'PageRank-like', 'hits': 'HITS',
        'hits-like': 'HITS-like', 'versatile': 'Versatile', 'versatile-like': 'Versatile-like',
    }
    rows = []
    for n in nodes:
        row = {'|V|': int(n)}
        for method, header in headers.items():
            row[header] = cost_model(method, int(n), layers).operations
        rows.append(row)
    return pd.DataFrame(rows, columns=['|V|'] + list(headers.values()))
