"""
Model layer for multiplex networks.
Holds the sparse layer matrices, the multiplex container, score vectors,
and reading/writing of the layered edge-list text format.
"""
import logging
import math
import os
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, aslinearoperator

logger = logging.getLogger(__name__)

SCORE_SUM_TOLERANCE = 1e-12


class EdgeListParseError(ValueError):
    """Raised when a layered edge list cannot be parsed."""

    def __init__(self, line_number: Optional[int], message: str):
        self.line_number = line_number
        where = f"line {line_number}" if line_number is not None else "edge list"
        super().__init__(f"{where}: {message}")


class DimensionError(ValueError):
    """Raised when a vector or matrix does not match the vertex count."""


class Layer(Protocol):
    """Anything the solver can apply as a matrix atom (raw layer or Google matrix)."""

    n: int

    def operator(self, transposed: bool = False) -> LinearOperator:
        ...

    def to_dense(self, transposed: bool = False) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """
    Nonnegative weighted adjacency matrix of one layer.

    Entry (i, j) holds the weight of the arc i -> j. Storage is compiled to
    CSR once at construction; the transpose is a view (``csr.T``), never a copy.
    """
    n: int
    csr: sparse.csr_matrix = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int, float]]) -> 'SparseMatrix':
        """
        Build a matrix from (row, col, weight) triples.

        Args:
            n: Vertex count
            edges: Iterable of (row, col, weight) with weight > 0

        Returns:
            The compiled matrix

        Raises:
            ValueError: On a non-positive weight, an index outside [0, n),
                or a duplicate (row, col) pair
        """
        if n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {n}")
        rows: List[int] = []
        cols: List[int] = []
        weights: List[float] = []
        seen = set()
        for row, col, weight in edges:
            if not (0 <= row < n and 0 <= col < n):
                raise ValueError(f"entry ({row}, {col}) outside [0, {n})")
            if not weight > 0 or not math.isfinite(weight):
                raise ValueError(f"entry ({row}, {col}) has non-positive weight {weight}")
            if (row, col) in seen:
                raise ValueError(f"duplicate entry ({row}, {col})")
            seen.add((row, col))
            rows.append(row)
            cols.append(col)
            weights.append(float(weight))
        csr = sparse.csr_matrix(
            (np.asarray(weights, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(n, n),
        )
        csr.sort_indices()
        return cls(n=n, csr=csr)

    @classmethod
    def from_arrays(cls, n: int, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray) -> 'SparseMatrix':
        """Vectorized from_edges for generated data; same checks."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise ValueError(f"entries outside [0, {n})")
        if np.any(~(weights > 0)) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be positive and finite")
        if np.unique(rows * max(n, 1) + cols).size != rows.size:
            raise ValueError("duplicate entries")
        csr = sparse.csr_matrix((weights, (rows, cols)), shape=(n, n))
        csr.sort_indices()
        return cls(n=n, csr=csr)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> 'SparseMatrix':
        """Build a matrix from a square dense array; zeros are absent entries."""
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {dense.shape}")
        rows, cols = np.nonzero(dense)
        return cls.from_edges(dense.shape[0], zip(rows.tolist(), cols.tolist(), dense[rows, cols].tolist()))

    @property
    def nnz(self) -> int:
        return int(self.csr.nnz)

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        """Yield (row, col, weight) in row-major order."""
        coo = self.csr.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for idx in order:
            yield int(coo.row[idx]), int(coo.col[idx]), float(coo.data[idx])

    def edge_set(self) -> frozenset:
        """Set of (row, col) pairs, weights ignored."""
        coo = self.csr.tocoo()
        return frozenset(zip(coo.row.tolist(), coo.col.tolist()))

    def scaled(self, factor: float) -> 'SparseMatrix':
        """Return a copy with every weight multiplied by a positive factor."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return SparseMatrix(n=self.n, csr=(self.csr * factor).tocsr())

    def matvec(self, v: np.ndarray, transposed: bool = False) -> np.ndarray:
        return matvec(self, transposed, v)

    def operator(self, transposed: bool = False) -> LinearOperator:
        return aslinearoperator(self.csr.T if transposed else self.csr)

    def to_dense(self, transposed: bool = False) -> np.ndarray:
        dense = self.csr.toarray()
        return dense.T.copy() if transposed else dense

    def same_entries(self, other: 'SparseMatrix') -> bool:
        """True when both matrices hold identical entries and weights."""
        if self.n != other.n or self.nnz != other.nnz:
            return False
        return (self.csr != other.csr).nnz == 0


def matvec(m: SparseMatrix, transpose: bool, v: Sequence[float]) -> np.ndarray:
    """
    Compute A·v or Aᵀ·v exactly, without normalization.

    Args:
        m: The layer matrix
        transpose: Apply the transpose view instead of the matrix
        v: Vector of length n

    Returns:
        The product as a new float array

    Raises:
        DimensionError: If len(v) != n
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != m.n:
        raise DimensionError(f"vector of length {v.shape[0] if v.ndim else 0} does not match n={m.n}")
    if transpose:
        return np.asarray(m.csr.T @ v, dtype=float)
    return np.asarray(m.csr @ v, dtype=float)


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Nonnegative vector whose entries sum to 1."""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DimensionError("a score vector must be a non-empty 1-d array")
        if np.any(values < 0):
            raise ValueError("score vector entries must be nonnegative")
        if abs(values.sum() - 1.0) > SCORE_SUM_TOLERANCE:
            raise ValueError(f"score vector must sum to 1, sums to {values.sum()!r}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def normalize(cls, raw: Sequence[float]) -> 'ScoreVector':
        """L1-normalize a nonnegative, nonzero vector."""
        raw = np.asarray(raw, dtype=float)
        total = raw.sum()
        if not total > 0:
            raise ValueError("cannot normalize a vector with zero mass")
        return cls(raw / total)

    @classmethod
    def uniform(cls, n: int) -> 'ScoreVector':
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def order(self) -> np.ndarray:
        """Vertex indices sorted by descending score (stable on ties)."""
        return np.argsort(-self.values, kind='stable')

    def l1_distance(self, other: 'ScoreVector') -> float:
        return float(np.abs(self.values - other.values).sum())

    def to_list(self) -> List[float]:
        return self.values.tolist()


@dataclass(frozen=True, eq=False)
class SuperpositionDiagnostic:
    """Advisory connectivity report for the union graph of a multiplex."""
    irreducible: bool
    aperiodic: bool
    period: Optional[int]
    components: int


@dataclass(frozen=True, eq=False)
class MultiplexNetwork:
    """
    Shared vertex set plus an ordered list of directed layers.

    ``vertex_ids[i]`` is the file id of internal vertex ``i``.
    """
    n: int
    layers: Tuple[SparseMatrix, ...]
    vertex_ids: Tuple[int, ...] = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 1:
            raise ValueError("a multiplex needs at least one layer")
        if self.n < 1:
            raise ValueError("a multiplex needs at least one vertex")
        for index, layer in enumerate(layers):
            if layer.n != self.n:
                raise DimensionError(f"layer {index} has n={layer.n}, expected {self.n}")
        ids = tuple(self.vertex_ids) if self.vertex_ids else tuple(range(self.n))
        if len(ids) != self.n or len(set(ids)) != self.n:
            raise ValueError("vertex_ids must list n distinct ids")
        object.__setattr__(self, 'layers', layers)
        object.__setattr__(self, 'vertex_ids', ids)

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    def union_matrix(self) -> sparse.csr_matrix:
        """Pattern of the superposition graph G = (V, ∪E_ℓ)."""
        union = sparse.csr_matrix((self.n, self.n), dtype=float)
        for layer in self.layers:
            union = union + (layer.csr != 0).astype(float)
        return union.tocsr()

    def same_as(self, other: 'MultiplexNetwork') -> bool:
        return (
            self.n == other.n
            and self.vertex_ids == other.vertex_ids
            and self.layer_count == other.layer_count
            and all(a.same_entries(b) for a, b in zip(self.layers, other.layers))
        )


def superposition_check(m: MultiplexNetwork) -> SuperpositionDiagnostic:
    """
    Check irreducibility and aperiodicity of the union of all layers.

    The result is advisory only; the solver runs regardless. The period of a
    strongly connected graph is the gcd of level[u] + 1 - level[v] over its
    arcs u -> v, with levels taken from a BFS. For a reducible union, the
    graph is reported aperiodic only when every strongly connected component
    that carries a cycle has period 1.
    """
    union = m.union_matrix()
    n_components, labels = csgraph.connected_components(union, directed=True, connection='strong')
    periods = []
    for component in range(n_components):
        members = np.flatnonzero(labels == component)
        sub = union[members][:, members].tocsr()
        if sub.nnz == 0:
            continue
        periods.append(_component_period(sub))
    irreducible = n_components == 1 and union.nnz > 0
    aperiodic = bool(periods) and all(p == 1 for p in periods)
    period = periods[0] if irreducible else None
    if not irreducible:
        logger.info("superposition has %d strongly connected components", n_components)
    return SuperpositionDiagnostic(irreducible=irreducible, aperiodic=aperiodic, period=period,
                                   components=int(n_components))


def _component_period(sub: sparse.csr_matrix) -> int:
    levels = csgraph.shortest_path(sub, method='D', unweighted=True, indices=0)
    coo = sub.tocoo()
    gaps = levels[coo.row] + 1 - levels[coo.col]
    return int(np.gcd.reduce(np.abs(gaps).astype(np.int64)))


_HEADER_NODES = re.compile(r'^nodes\s+(\d+)$')
_HEADER_LAYERS = re.compile(r'^layers\s+(\d+)$')
_HEADER_VERTEX = re.compile(r'^vertex\s+(\d+)$')


def load_multiplex(source: str) -> MultiplexNetwork:
    """
    Parse layered edge-list text into a multiplex.

    One edge per line, ``<layer> <src> <dst> <weight>``, ``#`` comments.
    Optional headers: ``nodes <n>`` declares ids 0..n-1, ``vertex <id>``
    declares a single isolate, ``layers <L>`` declares the layer count so
    that layers without edges are kept. Vertex ids are compacted to [0, n)
    in ascending id order.

    Args:
        source: The file contents

    Returns:
        The parsed multiplex

    Raises:
        EdgeListParseError: On a malformed line, non-positive weight,
            duplicate edge or a gap in the layer ids
    """
    declared_ids = set()
    declared_layers: Optional[int] = None
    raw_edges: List[Tuple[int, int, int, float, int]] = []

    for line_number, line in enumerate(source.splitlines(), start=1):
        text = line.split('#', 1)[0].strip()
        if not text:
            continue
        match = _HEADER_NODES.match(text)
        if match:
            declared_ids.update(range(int(match.group(1))))
            continue
        match = _HEADER_VERTEX.match(text)
        if match:
            declared_ids.add(int(match.group(1)))
            continue
        match = _HEADER_LAYERS.match(text)
        if match:
            declared_layers = int(match.group(1))
            if declared_layers < 1:
                raise EdgeListParseError(line_number, "layer count must be at least 1")
            continue
        parts = text.split()
        if len(parts) != 4:
            raise EdgeListParseError(line_number, f"expected '<layer> <src> <dst> <weight>', got {text!r}")
        try:
            layer, src, dst = (int(token) for token in parts[:3])
            weight = float(parts[3])
        except ValueError:
            raise EdgeListParseError(line_number, f"cannot parse {text!r}") from None
        if layer < 0 or src < 0 or dst < 0:
            raise EdgeListParseError(line_number, "layer and vertex ids must be nonnegative")
        if not weight > 0 or not math.isfinite(weight):
            raise EdgeListParseError(line_number, f"weight must be positive, got {parts[3]}")
        raw_edges.append((layer, src, dst, weight, line_number))

    used_layers = {edge[0] for edge in raw_edges}
    if declared_layers is None:
        layer_count = max(used_layers) + 1 if used_layers else 1
        missing = sorted(set(range(layer_count)) - used_layers) if used_layers else []
        if missing:
            first_line = min(edge[4] for edge in raw_edges if edge[0] > missing[0])
            raise EdgeListParseError(first_line, f"layer id gap: layer {missing[0]} has no edges "
                                                 f"(declare 'layers <L>' to allow empty layers)")
    else:
        layer_count = declared_layers
        for layer, _, _, _, line_number in raw_edges:
            if layer >= layer_count:
                raise EdgeListParseError(line_number, f"layer {layer} exceeds declared count {layer_count}")

    ids = set(declared_ids)
    for _, src, dst, _, _ in raw_edges:
        ids.add(src)
        ids.add(dst)
    if not ids:
        raise EdgeListParseError(None, "no vertices declared and no edges given")
    vertex_ids = tuple(sorted(ids))
    index: Dict[int, int] = {vid: i for i, vid in enumerate(vertex_ids)}
    n = len(vertex_ids)

    per_layer: List[List[Tuple[int, int, float]]] = [[] for _ in range(layer_count)]
    seen = set()
    for layer, src, dst, weight, line_number in raw_edges:
        key = (layer, src, dst)
        if key in seen:
            raise EdgeListParseError(line_number, f"duplicate edge {src} -> {dst} in layer {layer}")
        seen.add(key)
        per_layer[layer].append((index[src], index[dst], weight))

    layers = tuple(SparseMatrix.from_edges(n, edges) for edges in per_layer)
    logger.debug("loaded multiplex: n=%d, layers=%d, edges=%d", n, layer_count, len(raw_edges))
    return MultiplexNetwork(n=n, layers=layers, vertex_ids=vertex_ids)


def dump_multiplex(m: MultiplexNetwork) -> str:
    """
    Render the canonical edge-list text of a multiplex.

    Headers first (``layers``, then ``nodes`` when the ids are exactly
    0..n-1, otherwise one ``vertex`` line per isolate), then edges sorted by
    (layer, src, dst) with weights in shortest round-trip form.
    """
    lines = [f"layers {m.layer_count}"]
    if m.vertex_ids == tuple(range(m.n)):
        lines.append(f"nodes {m.n}")
    else:
        touched = set()
        for layer in m.layers:
            for row, col in layer.edge_set():
                touched.add(row)
                touched.add(col)
        lines.extend(f"vertex {m.vertex_ids[i]}" for i in range(m.n) if i not in touched)
    for layer_index, layer in enumerate(m.layers):
        for row, col, weight in layer.edges():
            lines.append(f"{layer_index} {m.vertex_ids[row]} {m.vertex_ids[col]} {weight!r}")
    return "\n".join(lines) + "\n"


def read_multiplex(file_path: str) -> MultiplexNetwork:
    """
    Read a layered edge-list file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        EdgeListParseError: If the contents are malformed
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"Edge list not found: {file_path}")
    with open(file_path, 'r', encoding='utf-8') as f:
        return load_multiplex(f.read())


def save_multiplex(m: MultiplexNetwork, file_path: str) -> None:
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(dump_multiplex(m))


def load_example_ring(file_path: Optional[str] = None) -> MultiplexNetwork:
    """
    Load the six-vertex ring split across two layers.

    Layer 0 holds arcs 0->1, 2->3, 4->5 and layer 1 holds 1->2, 3->4, 5->0,
    so the union is a directed 6-cycle while A0ᵀA0A1ᵀA1 is the zero matrix.

    Args:
        file_path: Path to the edge list. If None, uses data/ring6.edges
                   relative to this module.
    """
    if file_path is None:
        module_dir = os.path.dirname(os.path.abspath(__file__))
        file_path = os.path.join(module_dir, 'data', 'ring6.edges')
    return read_multiplex(file_path)
