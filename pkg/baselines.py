"""
Single-layer baselines and framework presets.

Native PageRank, HITS and eigenvector centrality run per layer; the
framework presets express PageRank-like, HITS-like and Versatile-like
rankings as configurations over the whole multiplex.
"""
import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator

from configurations import ShiftedConfiguration, parse_config
from engine import SolveReport, SolverSettings, solve
from multiplex import Layer, MultiplexNetwork, ScoreVector, SparseMatrix

logger = logging.getLogger(__name__)

DEFAULT_DAMPING = 0.85


class ConvergenceError(RuntimeError):
    """Raised when a native power iteration exceeds its iteration cap."""


class PresetKind(str, enum.Enum):
    PAGERANK = 'pagerank'
    HITS = 'hits'
    EIGENVECTOR = 'eigenvector'
    PAGERANK_LIKE = 'pagerank-like'
    HITS_LIKE = 'hits-like'
    VERSATILE_LIKE = 'versatile-like'

    @property
    def is_framework(self) -> bool:
        return self in (PresetKind.PAGERANK_LIKE, PresetKind.HITS_LIKE, PresetKind.VERSATILE_LIKE)


# native reference for each framework preset in the compare-methods batch
METHOD_PAIRS: Tuple[Tuple[PresetKind, PresetKind], ...] = (
    (PresetKind.PAGERANK, PresetKind.PAGERANK_LIKE),
    (PresetKind.HITS, PresetKind.HITS_LIKE),
    (PresetKind.EIGENVECTOR, PresetKind.VERSATILE_LIKE),
)


@dataclass(frozen=True)
class BaselinePreset:
    kind: PresetKind
    damping: float = DEFAULT_DAMPING

    def __post_init__(self):
        object.__setattr__(self, 'kind', PresetKind(self.kind))
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")


class GoogleMatrix:
    """
    Column-stochastic PageRank matrix of one layer, kept implicit.

    G = d (P + u dᵀ) + (1 - d)/n · 1 1ᵀ where P = Aᵀ D_out⁻¹ moves mass along
    arcs, dangling (out-degree 0) columns are replaced by uniform 1/n, and u
    is the uniform vector. Products cost O(nnz + n).
    """

    def __init__(self, a: SparseMatrix, damping: float = DEFAULT_DAMPING):
        if a.n == 0:
            raise ValueError("cannot build a Google matrix for an empty graph")
        if not 0 < damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {damping}")
        self.n = a.n
        self.damping = damping
        out_weight = np.asarray(a.csr.sum(axis=1)).ravel()
        self.dangling = out_weight == 0
        inverse = np.where(self.dangling, 0.0, 1.0 / np.where(self.dangling, 1.0, out_weight))
        # row-scale A by 1/out-weight, then transpose: P[j, i] = w(i -> j) / out(i)
        self.transition = a.csr.multiply(inverse[:, None]).tocsr().T.tocsr()

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        d, n = self.damping, self.n
        dangling_mass = x[self.dangling].sum()
        return d * (self.transition @ x) + (d * dangling_mass + (1.0 - d) * x.sum()) / n

    def _rmatvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        d, n = self.damping, self.n
        out = d * (self.transition.T @ x) + (1.0 - d) * x.sum() / n
        out[self.dangling] += d * x.sum() / n
        return out

    def operator(self, transposed: bool = False) -> LinearOperator:
        if transposed:
            return LinearOperator((self.n, self.n), matvec=self._rmatvec, rmatvec=self._matvec, dtype=float)
        return LinearOperator((self.n, self.n), matvec=self._matvec, rmatvec=self._rmatvec, dtype=float)

    def to_dense(self, transposed: bool = False) -> np.ndarray:
        dense = self.damping * self.transition.toarray()
        dense[:, self.dangling] = self.damping / self.n
        dense += (1.0 - self.damping) / self.n
        return dense.T.copy() if transposed else dense


def google_matrix(a: SparseMatrix, damping: float = DEFAULT_DAMPING) -> GoogleMatrix:
    return GoogleMatrix(a, damping)


def _check_tol(tol: float, max_iter: int) -> None:
    if not tol > 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")


def classic_pagerank(a: SparseMatrix, damping: float = DEFAULT_DAMPING,
                     tol: float = 1e-13, max_iter: int = 10_000) -> ScoreVector:
    """
    PageRank by power iteration on the Google matrix, L1 stopping rule.

    Raises:
        ConvergenceError: If max_iter iterations do not reach tol
    """
    _check_tol(tol, max_iter)
    g = GoogleMatrix(a, damping)
    x = np.full(a.n, 1.0 / a.n)
    for _ in range(max_iter):
        x_new = g._matvec(x)
        x_new /= x_new.sum()
        err = np.abs(x_new - x).sum()
        x = x_new
        if err <= tol:
            return ScoreVector.normalize(x)
    raise ConvergenceError(f"pagerank: power iteration failed to converge in {max_iter} iterations")


def classic_hits(a: SparseMatrix, tol: float = 1e-13,
                 max_iter: int = 10_000) -> Tuple[ScoreVector, ScoreVector]:
    """
    HITS authority and hub vectors, L1-normalized after each half-step.

    a <- Aᵀ h, h <- A a starting from uniform hubs; stops when the joint L1
    change of both vectors is at most tol.

    Returns:
        (authority, hub)

    Raises:
        ConvergenceError: If the graph has no arcs or max_iter is exceeded
    """
    _check_tol(tol, max_iter)
    if a.nnz == 0:
        raise ConvergenceError("hits: graph has no arcs")
    hub = np.full(a.n, 1.0 / a.n)
    auth = np.zeros(a.n)
    for _ in range(max_iter):
        new_auth = a.csr.T @ hub
        new_auth /= new_auth.sum()
        new_hub = a.csr @ new_auth
        new_hub /= new_hub.sum()
        err = np.abs(new_auth - auth).sum() + np.abs(new_hub - hub).sum()
        auth, hub = new_auth, new_hub
        if err <= tol:
            return ScoreVector.normalize(auth), ScoreVector.normalize(hub)
    raise ConvergenceError(f"hits: failed to converge in {max_iter} iterations")


def classic_eigenvector(a: SparseMatrix, tol: float = 1e-13,
                        max_iter: int = 100_000) -> ScoreVector:
    """
    Eigenvector centrality x ∝ A x, by power iteration on A + I.

    The identity shift keeps periodic graphs from oscillating without
    changing the Perron vector.
    """
    _check_tol(tol, max_iter)
    if a.nnz == 0:
        raise ConvergenceError("eigenvector: graph has no arcs")
    x = np.full(a.n, 1.0 / a.n)
    for _ in range(max_iter):
        x_new = a.csr @ x + x
        x_new /= x_new.sum()
        err = np.abs(x_new - x).sum()
        x = x_new
        if err <= tol:
            return ScoreVector.normalize(x)
    raise ConvergenceError(f"eigenvector: failed to converge in {max_iter} iterations")


def framework_pagerank(a: SparseMatrix, damping: float = DEFAULT_DAMPING,
                       settings: Optional[SolverSettings] = None) -> ScoreVector:
    """PageRank as the single self-loop ring [G]."""
    report = solve([GoogleMatrix(a, damping)], parse_config("A0", 1), settings)
    return report.rankings[0]


def framework_hits(a: SparseMatrix,
                   settings: Optional[SolverSettings] = None) -> Tuple[ScoreVector, ScoreVector]:
    """HITS as the two-node ring ``A0 A0T``: r_0 is the hub vector, r_1 the authority."""
    report = solve([a], parse_config("A0 A0T", 1), settings)
    hub, authority = report.rankings
    return authority, hub


def preset_config_text(kind: PresetKind, layer_count: int) -> str:
    """Configuration string of a framework preset for L layers."""
    kind = PresetKind(kind)
    if layer_count < 1:
        raise ValueError("layer count must be at least 1")
    if kind in (PresetKind.PAGERANK_LIKE, PresetKind.VERSATILE_LIKE):
        return " ".join(f"A{layer}" for layer in range(layer_count))
    if kind is PresetKind.HITS_LIKE:
        return " ".join(f"A{layer}T A{layer}" for layer in range(layer_count))
    raise ValueError(f"{kind.value} is a native method, not a framework preset")


def preset_configuration(kind: PresetKind, network: MultiplexNetwork,
                         damping: float = DEFAULT_DAMPING) -> Tuple[List[Layer], ShiftedConfiguration]:
    """
    Matrices and shifted configuration for a framework preset.

    pagerank-like uses Google-transformed layers (each layer transformed on
    its own) with A0 A1 ... ; hits-like uses the raw layers with
    A0T A0 A1T A1 ... ; versatile-like uses the raw layers with A0 A1 ... .

    Raises:
        ValueError: For a native (non-framework) kind
    """
    kind = PresetKind(kind)
    sc = parse_config(preset_config_text(kind, network.layer_count), network.layer_count)
    if kind is PresetKind.PAGERANK_LIKE:
        layers: List[Layer] = [GoogleMatrix(layer, damping) for layer in network.layers]
    else:
        layers = list(network.layers)
    return layers, sc


def run_method(network: MultiplexNetwork, preset: BaselinePreset,
               settings: Optional[SolverSettings] = None) -> Tuple[List[ScoreVector], Optional[SolveReport]]:
    """
    All rankings a method produces on a multiplex, in comparison order.

    Native methods give one ranking per layer (HITS: authority then hub per
    layer); framework presets give r_0 ... r_{k-1}.

    Returns:
        (rankings, solve report or None for native methods)
    """
    kind = preset.kind
    if kind is PresetKind.PAGERANK:
        return [classic_pagerank(layer, preset.damping) for layer in network.layers], None
    if kind is PresetKind.HITS:
        rankings: List[ScoreVector] = []
        for layer in network.layers:
            rankings.extend(classic_hits(layer))
        return rankings, None
    if kind is PresetKind.EIGENVECTOR:
        return [classic_eigenvector(layer) for layer in network.layers], None
    layers, sc = preset_configuration(kind, network, preset.damping)
    report = solve(layers, sc, settings)
    return report.rankings, report
