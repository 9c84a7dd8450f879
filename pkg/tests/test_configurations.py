"""Unit tests for the configuration algebra."""
import random

import pytest

from configurations import (Atom, Configuration, ConfigurationError, LayerIndexError, ShiftedConfiguration,
                            all_atoms, canonicalize, enumerate_configs, expected_config_count, members,
                            parse_config, parse_sequence, rotate, shift_of)


class TestAtoms:
    """Tests for atom ordering and parsing."""

    def test_atom_order(self):
        """Test that atoms order by layer, plain before transposed."""
        assert Atom(0) < Atom(0, True) < Atom(1) < Atom(1, True)
        assert str(Atom(3, True)) == "A3T"

    def test_parse_with_and_without_spaces(self):
        """Test that spacing is optional."""
        expected = (Atom(0, True), Atom(0), Atom(1, True), Atom(1))
        assert parse_sequence("A0T A0 A1T A1") == expected
        assert parse_sequence("A0TA0A1TA1") == expected
        assert parse_sequence("A12") == (Atom(12),)

    def test_parse_errors(self):
        """Test that empty and malformed text raise ConfigurationError."""
        for text in ("", "   ", "B0", "A", "A0 X", "0A"):
            with pytest.raises(ConfigurationError):
                parse_sequence(text)

    def test_atoms_do_not_span_whitespace(self):
        """Test that a layer index split by a space is refused, not joined."""
        for text in ("A1 0", "A0 T", "A 1"):
            with pytest.raises(ConfigurationError):
                parse_sequence(text)
        assert parse_sequence("A10") == (Atom(10),)


class TestCanonicalization:
    """Tests for cyclic classes and their canonical rotation."""

    def test_parse_config_hits_like(self):
        """Test the worked example: A0T A0 A1T A1 is shift 3 of A0 A1T A1 A0T."""
        sc = parse_config("A0T A0 A1T A1")
        assert str(sc.config) == "A0 A1T A1 A0T"
        assert sc.shift == 3
        assert str(sc) == "A0T A0 A1T A1"

    def test_rotations_share_a_class(self):
        """Test that every rotation canonicalizes to the same configuration."""
        seq = parse_sequence("A1 A0T A2 A0")
        canonical = canonicalize(seq)
        for h in range(len(seq)):
            assert canonicalize(rotate(seq, h)) == canonical

    def test_random_sequences(self):
        """Test canonicalization properties on random sequences."""
        rng = random.Random(7)
        atoms = all_atoms(3)
        for _ in range(10_000):
            seq = tuple(rng.choice(atoms) for _ in range(rng.randint(1, 6)))
            c = canonicalize(seq)
            h = rng.randrange(len(seq))
            assert canonicalize(rotate(seq, h)) == c
            assert c.sequence == min(members(c))
            assert rotate(c.sequence, shift_of(c, seq)) == seq

    def test_symmetric_sequence_members(self):
        """Test that a periodic sequence keeps duplicate members and the smallest shift."""
        c = canonicalize(parse_sequence("A0 A1 A0 A1"))
        assert len(members(c)) == 4
        assert shift_of(c, parse_sequence("A1 A0 A1 A0")) == 1

    def test_non_canonical_configuration_rejected(self):
        """Test that Configuration only accepts the canonical rotation."""
        with pytest.raises(ConfigurationError):
            Configuration(parse_sequence("A1 A0"))
        with pytest.raises(ConfigurationError):
            Configuration(())

    def test_shift_range(self):
        """Test that shifts must lie in [0, k)."""
        c = canonicalize(parse_sequence("A0 A1"))
        with pytest.raises(ConfigurationError):
            ShiftedConfiguration(c, 2)

    def test_layer_check(self):
        """Test LayerIndexError for a layer the multiplex lacks."""
        with pytest.raises(LayerIndexError):
            parse_config("A0 A2", layer_count=2)
        sc = parse_config("A0 A1")
        sc.check_layers(2)


class TestEnumeration:
    """Tests for enumerating repetition-free configurations."""

    @pytest.mark.parametrize("layers,count", [(1, 3), (2, 24), (3, 415)])
    def test_counts(self, layers, count):
        """Test enumeration sizes against the closed form."""
        configs = enumerate_configs(layers)
        assert len(configs) == count
        assert expected_config_count(layers) == count
        assert len(set(configs)) == count

    def test_single_layer(self):
        """Test the three single-layer classes."""
        assert [str(c) for c in enumerate_configs(1)] == ["A0", "A0T", "A0 A0T"]

    def test_full_length_two_layers(self):
        """Test the six four-atom classes on two layers."""
        configs = {str(c) for c in enumerate_configs(2, k=4)}
        assert configs == {
            "A0 A0T A1 A1T", "A0 A0T A1T A1", "A0 A1 A0T A1T",
            "A0 A1 A1T A0T", "A0 A1T A0T A1", "A0 A1T A1 A0T",
        }

    def test_all_canonical_no_repeats(self):
        """Test that every enumerated sequence is canonical and repetition free."""
        for c in enumerate_configs(3):
            assert canonicalize(c.sequence) == c
            assert len(set(c.sequence)) == c.k

    def test_invalid_layer_count(self):
        """Test that zero layers is refused."""
        with pytest.raises(ConfigurationError):
            enumerate_configs(0)
