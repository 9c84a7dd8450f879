"""Unit tests for the seeded graph generators."""
import numpy as np
import pytest

from generators import (GeneratorKind, GeneratorSpec, GeneratorSpecError, MultiplexSpec, generate_base,
                        generate_multiplex)


class TestGeneratorSpec:
    """Tests for spec validation and serialization."""

    def test_invalid_probability(self):
        """Test that p outside [0, 1] is refused."""
        with pytest.raises(GeneratorSpecError):
            GeneratorSpec.erdos_renyi(10, 1.5)

    def test_invalid_blocks(self):
        """Test that block sizes must sum to n and probabilities be square."""
        with pytest.raises(GeneratorSpecError):
            GeneratorSpec(GeneratorKind.SBM, n=10, block_sizes=(4, 4), block_probs=((0.5, 0.1), (0.1, 0.5)))
        with pytest.raises(GeneratorSpecError):
            GeneratorSpec.sbm((5, 5), ((0.5, 0.1),))

    def test_two_block_sizes(self):
        """Test the odd vertex goes to the first block."""
        spec = GeneratorSpec.two_block_sbm(9)
        assert spec.block_sizes == (5, 4)
        assert spec.block_probs == ((0.5, 0.2), (0.2, 0.5))

    def test_dict_round_trip(self):
        """Test to_dict/from_dict on both generator kinds."""
        for spec in (GeneratorSpec.erdos_renyi(12, 0.3, seed=4), GeneratorSpec.two_block_sbm(12, seed=5)):
            assert GeneratorSpec.from_dict(spec.to_dict()) == spec
        mspec = MultiplexSpec(GeneratorSpec.erdos_renyi(8, 0.5), (0.3, 0.7), independent=False, seed=2)
        assert MultiplexSpec.from_dict(mspec.to_dict()) == mspec

    def test_exclusive_probabilities_sum_to_one(self):
        """Test exclusive layer assignment needs a probability distribution."""
        with pytest.raises(GeneratorSpecError):
            MultiplexSpec(GeneratorSpec.erdos_renyi(8, 0.5), (0.3, 0.3), independent=False)


class TestBaseGraph:
    """Tests for base graph draws."""

    def test_deterministic(self):
        """Test that equal specs give identical graphs."""
        spec = GeneratorSpec.erdos_renyi(40, 0.3, seed=11)
        assert generate_base(spec).same_entries(generate_base(spec))
        assert not generate_base(spec).same_entries(generate_base(spec.with_seed(12)))

    def test_symmetric_without_loops(self):
        """Test that every drawn pair yields both arcs and no self-loops."""
        dense = generate_base(GeneratorSpec.two_block_sbm(30, seed=3)).to_dense()
        assert np.array_equal(dense, dense.T)
        assert not np.diag(dense).any()
        assert set(np.unique(dense)) <= {0.0, 1.0}

    def test_extreme_probabilities(self):
        """Test p = 0 gives no arcs and p = 1 the complete digraph."""
        assert generate_base(GeneratorSpec.erdos_renyi(10, 0.0)).nnz == 0
        assert generate_base(GeneratorSpec.erdos_renyi(10, 1.0)).nnz == 90

    def test_edge_density(self):
        """Test the ER arc count is close to p·n(n-1)."""
        nnz = generate_base(GeneratorSpec.erdos_renyi(200, 0.2, seed=1)).nnz
        assert abs(nnz - 0.2 * 200 * 199) < 0.05 * 200 * 199

    def test_sbm_block_densities(self):
        """Test within-block pairs are denser than cross-block pairs."""
        dense = generate_base(GeneratorSpec.two_block_sbm(200, 0.5, 0.1, seed=9)).to_dense()
        inner = dense[:100, :100].sum() / (100 * 99)
        cross = dense[:100, 100:].mean()
        assert abs(inner - 0.5) < 0.05
        assert abs(cross - 0.1) < 0.03


class TestMultiplexSynthesis:
    """Tests for spreading base arcs over layers."""

    def test_layers_are_subsets(self):
        """Test that every layer arc is a base arc."""
        base = GeneratorSpec.erdos_renyi(50, 0.4, seed=2)
        m = generate_multiplex(MultiplexSpec(base, (0.5, 0.5, 0.2), seed=6))
        base_arcs = generate_base(base).edge_set()
        assert m.layer_count == 3
        for layer in m.layers:
            assert layer.edge_set() <= base_arcs

    def test_layers_stable_when_adding_layers(self):
        """Test that adding a layer leaves existing layers unchanged."""
        base = GeneratorSpec.erdos_renyi(30, 0.5, seed=1)
        two = generate_multiplex(MultiplexSpec(base, (0.4, 0.6), seed=3))
        three = generate_multiplex(MultiplexSpec(base, (0.4, 0.6, 0.5), seed=3))
        assert all(a.same_entries(b) for a, b in zip(two.layers, three.layers))

    def test_layer_probabilities_one_and_zero(self):
        """Test p_l = 1 copies the base graph and p_l = 0 leaves the layer empty."""
        base = GeneratorSpec.erdos_renyi(20, 0.5, seed=8)
        m = generate_multiplex(MultiplexSpec(base, (1.0, 0.0)))
        assert m.layers[0].same_entries(generate_base(base))
        assert m.layers[1].nnz == 0

    def test_exclusive_partition(self):
        """Test exclusive mode places every base arc in exactly one layer."""
        base = GeneratorSpec.erdos_renyi(30, 0.5, seed=4)
        m = generate_multiplex(MultiplexSpec(base, (0.25, 0.25, 0.5), independent=False, seed=1))
        sets = [layer.edge_set() for layer in m.layers]
        assert sum(len(s) for s in sets) == generate_base(base).nnz
        assert not (sets[0] & sets[1]) and not (sets[1] & sets[2]) and not (sets[0] & sets[2])

    def test_layer_count_check(self):
        """Test that a mismatched layer count raises."""
        with pytest.raises(GeneratorSpecError):
            generate_multiplex(MultiplexSpec(GeneratorSpec.erdos_renyi(5, 0.5), (0.5,)), layer_count=2)
