"""
Configuration algebra.

A configuration is a cyclic class of non-empty sequences of matrix atoms
(A_l or A_l transposed). The class is represented by its lexicographically
smallest rotation; a shift h selects the rotation written first.
"""
import itertools
import math
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple


class ConfigurationError(ValueError):
    """Raised for empty or malformed configuration text and sequences."""


class LayerIndexError(ConfigurationError):
    """Raised when an atom refers to a layer the multiplex does not have."""


@dataclass(frozen=True, order=True)
class Atom:
    """One matrix of the multiplex: layer index plus transpose flag."""
    layer: int
    transposed: bool = False

    def __str__(self) -> str:
        return f"A{self.layer}{'T' if self.transposed else ''}"


def rotate(seq: Sequence[Atom], h: int) -> Tuple[Atom, ...]:
    """Shift a sequence left by h positions."""
    seq = tuple(seq)
    if not seq:
        return seq
    h %= len(seq)
    return seq[h:] + seq[:h]


def format_sequence(seq: Sequence[Atom]) -> str:
    return " ".join(str(atom) for atom in seq)


@dataclass(frozen=True)
class Configuration:
    """Canonical representative of a cyclic class of atom sequences."""
    sequence: Tuple[Atom, ...]

    def __post_init__(self):
        seq = tuple(self.sequence)
        if not seq:
            raise ConfigurationError("a configuration needs at least one atom")
        if min(rotate(seq, h) for h in range(len(seq))) != seq:
            raise ConfigurationError(f"{format_sequence(seq)} is not the canonical rotation of its class")
        object.__setattr__(self, 'sequence', seq)

    @property
    def k(self) -> int:
        return len(self.sequence)

    def members(self) -> List[Tuple[Atom, ...]]:
        return members(self)

    def max_layer(self) -> int:
        return max(atom.layer for atom in self.sequence)

    def __str__(self) -> str:
        return format_sequence(self.sequence)


@dataclass(frozen=True)
class ShiftedConfiguration:
    """A configuration plus the shift h selecting the member to compute."""
    config: Configuration
    shift: int = 0

    def __post_init__(self):
        if not 0 <= self.shift < self.config.k:
            raise ConfigurationError(f"shift {self.shift} outside [0, {self.config.k})")

    @property
    def sequence(self) -> Tuple[Atom, ...]:
        return rotate(self.config.sequence, self.shift)

    @property
    def k(self) -> int:
        return self.config.k

    def check_layers(self, layer_count: int) -> None:
        """Raise LayerIndexError if any atom needs a layer >= layer_count."""
        if self.config.max_layer() >= layer_count:
            raise LayerIndexError(
                f"configuration {self} uses layer {self.config.max_layer()}, "
                f"multiplex has {layer_count} layer(s)"
            )

    def __str__(self) -> str:
        return format_sequence(self.sequence)


def canonicalize(seq: Sequence[Atom]) -> Configuration:
    """
    Return the class of seq, represented by its smallest rotation.

    Atoms order by layer first, with A_l before its transpose. Two sequences
    canonicalize equal iff one is a rotation of the other.

    Raises:
        ConfigurationError: If seq is empty
    """
    seq = tuple(seq)
    if not seq:
        raise ConfigurationError("cannot canonicalize an empty sequence")
    return Configuration(min(rotate(seq, h) for h in range(len(seq))))


def members(c: Configuration) -> List[Tuple[Atom, ...]]:
    """All k rotations, indexed by shift; duplicates kept for symmetric sequences."""
    return [rotate(c.sequence, h) for h in range(c.k)]


def shift_of(c: Configuration, seq: Sequence[Atom]) -> int:
    """Smallest h such that rotate(c.sequence, h) == seq."""
    seq = tuple(seq)
    for h, member in enumerate(members(c)):
        if member == seq:
            return h
    raise ConfigurationError(f"{format_sequence(seq)} is not a member of {c}")


def all_atoms(layer_count: int) -> List[Atom]:
    return [Atom(layer, transposed) for layer in range(layer_count) for transposed in (False, True)]


def expected_config_count(layer_count: int) -> int:
    """Closed form for repetition-free configurations: sum_k C(2L, k) (k-1)!."""
    if layer_count <= 0:
        raise ConfigurationError("layer count must be at least 1")
    atoms = 2 * layer_count
    return sum(math.comb(atoms, k) * math.factorial(k - 1) for k in range(1, atoms + 1))


def enumerate_configs(layer_count: int, k: Optional[int] = None) -> List[Configuration]:
    """
    Enumerate every configuration without repeated atoms.

    Each class is produced once: its smallest atom is placed first and the
    remaining atoms are permuted after it.

    Args:
        layer_count: Number of layers L (2L atoms available)
        k: Optional sequence length filter

    Returns:
        Canonical configurations ordered by length, then lexicographically
    """
    if layer_count <= 0:
        raise ConfigurationError("layer count must be at least 1")
    atoms = all_atoms(layer_count)
    lengths = range(1, len(atoms) + 1) if k is None else [k]
    configs = []
    for length in lengths:
        if not 1 <= length <= len(atoms):
            continue
        for combo in itertools.combinations(atoms, length):
            head, rest = combo[0], combo[1:]
            for perm in itertools.permutations(rest):
                configs.append(Configuration((head,) + perm))
    return configs


_ATOM = re.compile(r'A(\d+)(T?)')


def parse_sequence(text: str) -> Tuple[Atom, ...]:
    """Parse ``A<digits>[T]`` atoms written with or without spaces."""
    tokens = (text or '').split()
    if not tokens:
        raise ConfigurationError("empty configuration text")
    atoms = []
    # atoms never straddle whitespace
    for token in tokens:
        position = 0
        for match in _ATOM.finditer(token):
            if match.start() != position:
                break
            atoms.append(Atom(int(match.group(1)), match.group(2) == 'T'))
            position = match.end()
        if position != len(token):
            raise ConfigurationError(f"cannot parse configuration {text!r} near {token[position:]!r}")
    return tuple(atoms)


def parse_config(text: str, layer_count: Optional[int] = None) -> ShiftedConfiguration:
    """
    Parse configuration text into its class and the shift of the written order.

    "A0T A0 A1T A1" gives the class A0 A1T A1 A0T with shift 3.

    Raises:
        ConfigurationError: On empty or malformed text
        LayerIndexError: If an atom's layer is >= layer_count
    """
    written = parse_sequence(text)
    config = canonicalize(written)
    shifted = ShiftedConfiguration(config, shift_of(config, written))
    if layer_count is not None:
        shifted.check_layers(layer_count)
    return shifted
