"""
Seeded random graph generators and the synthetic multiplex synthesizer.
"""
import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from multiplex import MultiplexNetwork, SparseMatrix

logger = logging.getLogger(__name__)

EDGE_WEIGHT = 1.0

# stream keys under the spec seed; layer streams append the layer index
_BASE_STREAM = 0
_LAYER_STREAM = 1
_ASSIGN_STREAM = 2


class GeneratorSpecError(ValueError):
    """Raised for an invalid generator or multiplex spec."""


class GeneratorKind(str, enum.Enum):
    ERDOS_RENYI = 'erdos_renyi'
    SBM = 'sbm'


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=stream)))


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Base graph recipe: G(n, p) or SBM(n, block sizes, block probabilities).
    """
    kind: GeneratorKind
    n: int
    p: float = 0.0
    block_sizes: Tuple[int, ...] = ()
    block_probs: Tuple[Tuple[float, ...], ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', GeneratorKind(self.kind))
        object.__setattr__(self, 'block_sizes', tuple(int(b) for b in self.block_sizes))
        object.__setattr__(self, 'block_probs', tuple(tuple(float(x) for x in row) for row in self.block_probs))
        if self.n < 1:
            raise GeneratorSpecError(f"n must be at least 1, got {self.n}")
        if not 0 <= self.seed < 2 ** 64:
            raise GeneratorSpecError("seed must be a 64-bit unsigned integer")
        if self.kind is GeneratorKind.ERDOS_RENYI:
            if not 0.0 <= self.p <= 1.0:
                raise GeneratorSpecError(f"edge probability must lie in [0, 1], got {self.p}")
            return
        blocks = len(self.block_sizes)
        if blocks == 0 or any(b < 1 for b in self.block_sizes) or sum(self.block_sizes) != self.n:
            raise GeneratorSpecError(f"block sizes {self.block_sizes} must be positive and sum to n={self.n}")
        probs = np.asarray(self.block_probs, dtype=float)
        if probs.shape != (blocks, blocks):
            raise GeneratorSpecError(f"block probability matrix must be {blocks}x{blocks}")
        if np.any(probs < 0) or np.any(probs > 1):
            raise GeneratorSpecError("block probabilities must lie in [0, 1]")

    @classmethod
    def erdos_renyi(cls, n: int, p: float, seed: int = 0) -> 'GeneratorSpec':
        return cls(GeneratorKind.ERDOS_RENYI, n=n, p=p, seed=seed)

    @classmethod
    def sbm(cls, block_sizes: Sequence[int], block_probs: Sequence[Sequence[float]],
            seed: int = 0) -> 'GeneratorSpec':
        return cls(GeneratorKind.SBM, n=int(sum(block_sizes)), block_sizes=tuple(block_sizes),
                   block_probs=tuple(tuple(row) for row in block_probs), seed=seed)

    @classmethod
    def two_block_sbm(cls, n: int, p_in: float = 0.5, p_out: float = 0.2, seed: int = 0) -> 'GeneratorSpec':
        """Two equal communities (the larger one takes the odd vertex)."""
        half = n // 2
        return cls.sbm((n - half, half), ((p_in, p_out), (p_out, p_in)), seed=seed)

    def with_seed(self, seed: int) -> 'GeneratorSpec':
        return GeneratorSpec(self.kind, self.n, self.p, self.block_sizes, self.block_probs, seed)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'n': self.n,
            'p': self.p,
            'block_sizes': list(self.block_sizes),
            'block_probs': [list(row) for row in self.block_probs],
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'GeneratorSpec':
        return cls(
            kind=data['kind'],
            n=int(data['n']),
            p=float(data.get('p', 0.0)),
            block_sizes=tuple(data.get('block_sizes', ())),
            block_probs=tuple(tuple(row) for row in data.get('block_probs', ())),
            seed=int(data.get('seed', 0)),
        )


@dataclass(frozen=True)
class MultiplexSpec:
    """
    How base edges are spread over layers.

    independent=True: each arc enters layer l with probability p_l on its own.
    independent=False: each arc goes to exactly one layer drawn from p (sums to 1).
    """
    base: GeneratorSpec
    layer_probs: Tuple[float, ...]
    independent: bool = True
    seed: int = 0

    def __post_init__(self):
        probs = tuple(float(p) for p in self.layer_probs)
        object.__setattr__(self, 'layer_probs', probs)
        if not probs:
            raise GeneratorSpecError("at least one layer probability is required")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise GeneratorSpecError(f"layer probabilities must lie in [0, 1], got {probs}")
        if not self.independent and abs(sum(probs) - 1.0) > 1e-9:
            raise GeneratorSpecError(f"exclusive layer probabilities must sum to 1, got {sum(probs)}")
        if not 0 <= self.seed < 2 ** 64:
            raise GeneratorSpecError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            'base': self.base.to_dict(),
            'layer_probs': list(self.layer_probs),
            'independent': self.independent,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'MultiplexSpec':
        return cls(
            base=GeneratorSpec.from_dict(data['base']),
            layer_probs=tuple(data['layer_probs']),
            independent=bool(data.get('independent', True)),
            seed=int(data.get('seed', 0)),
        )


def _pair_probabilities(spec: GeneratorSpec, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if spec.kind is GeneratorKind.ERDOS_RENYI:
        return np.full(rows.shape, spec.p)
    block_of = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    probs = np.asarray(spec.block_probs, dtype=float)
    return probs[block_of[rows], block_of[cols]]


def _base_arcs(spec: GeneratorSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Arcs of the base graph: one draw per unordered pair, both directions kept."""
    rows, cols = np.triu_indices(spec.n, k=1)
    draws = _rng(spec.seed, _BASE_STREAM).random(rows.shape[0])
    keep = draws < _pair_probabilities(spec, rows, cols)
    rows, cols = rows[keep], cols[keep]
    src = np.concatenate([rows, cols])
    dst = np.concatenate([cols, rows])
    order = np.lexsort((dst, src))
    return src[order], dst[order]


def _to_matrix(n: int, src: np.ndarray, dst: np.ndarray) -> SparseMatrix:
    return SparseMatrix.from_arrays(n, src, dst, np.full(len(src), EDGE_WEIGHT))


def generate_base(spec: GeneratorSpec) -> SparseMatrix:
    """
    Draw the base graph of a spec.

    Every unordered pair {i, j}, i != j, is drawn once (ER: probability p;
    SBM: probability P[block(i), block(j)]) and an included pair yields both
    arcs i->j and j->i with weight 1. No self-loops.
    """
    src, dst = _base_arcs(spec)
    logger.debug("generated %s base graph: n=%d, arcs=%d", spec.kind.value, spec.n, len(src))
    return _to_matrix(spec.n, src, dst)


def generate_multiplex(mspec: MultiplexSpec, layer_count: Optional[int] = None) -> MultiplexNetwork:
    """
    Spread the arcs of the base graph over layers.

    Each layer draws from its own stream, so the base graph and the existing
    layers are unchanged when more layers are added.

    Args:
        mspec: The multiplex spec
        layer_count: Optional check against len(mspec.layer_probs)

    Returns:
        A multiplex on the base graph's vertex set

    Raises:
        GeneratorSpecError: If layer_count disagrees with the spec
    """
    count = len(mspec.layer_probs)
    if layer_count is not None and layer_count != count:
        raise GeneratorSpecError(f"spec has {count} layer probabilities, {layer_count} layers requested")
    src, dst = _base_arcs(mspec.base)
    layers: List[SparseMatrix] = []
    if mspec.independent:
        for layer, p in enumerate(mspec.layer_probs):
            keep = _rng(mspec.seed, _LAYER_STREAM, layer).random(len(src)) < p
            layers.append(_to_matrix(mspec.base.n, src[keep], dst[keep]))
    else:
        probs = np.asarray(mspec.layer_probs)
        assignment = _rng(mspec.seed, _ASSIGN_STREAM).choice(count, size=len(src), p=probs / probs.sum())
        for layer in range(count):
            keep = assignment == layer
            layers.append(_to_matrix(mspec.base.n, src[keep], dst[keep]))
    return MultiplexNetwork(n=mspec.base.n, layers=tuple(layers))
