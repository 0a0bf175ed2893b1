import numpy as np
import pytest

from conftest import complete_graph, er_graph, path_graph
from spectralgap.adjust import AdjustConfig, CombineMode
from spectralgap.eigen import LanczosConfig, lanczos_top_k
from spectralgap.embed import (OUTPUT, Activation, EmbedConfig, FeatureInit,
                               MessagePassingEmbedder, Readout, embed,
                               init_node_features, _feature_dim)
from spectralgap.graphs import build_graph, laplacian


class TestInitFeatures:
    def test_degree_scalar(self):
        X = init_node_features(path_graph(3), FeatureInit.DEGREE_SCALAR)
        np.testing.assert_array_equal(X, [[1], [2], [1]])

    def test_constant_one(self):
        X = init_node_features(complete_graph(4), FeatureInit.CONSTANT_ONE)
        np.testing.assert_array_equal(X, np.ones((4, 1)))

    def test_degree_one_hot(self):
        X = init_node_features(path_graph(3), FeatureInit.DEGREE_ONE_HOT, 3)
        np.testing.assert_array_equal(
            X, [[0, 1, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0]])

    def test_one_hot_clamps(self):
        X = init_node_features(complete_graph(5), FeatureInit.DEGREE_ONE_HOT, 2)
        np.testing.assert_array_equal(X[:, 2], np.ones(5))

    def test_attributes_missing(self):
        with pytest.raises(ValueError, match="attributes"):
            init_node_features(path_graph(3), FeatureInit.NODE_ATTRIBUTES)


class TestEmbed:
    def test_single_node_linear(self):
        g = build_graph(1, [], node_attributes=[[2.0, -1.0]])
        cfg = EmbedConfig(num_layers=1, hidden_dim=4,
                          activation=Activation.IDENTITY,
                          feature_init=FeatureInit.NODE_ATTRIBUTES)
        W0 = MessagePassingEmbedder(cfg, 2).weights[0]
        np.testing.assert_allclose(embed(g, cfg).vector,
                                   (np.array([[2.0, -1.0]]) @ W0)[0])

    def test_isomorphic_copies_match(self):
        g1 = path_graph(3)
        g2 = build_graph(3, [(2, 1), (1, 0)])
        cfg = EmbedConfig()
        assert np.array_equal(embed(g1, cfg).vector, embed(g2, cfg).vector)

    def test_zero_gap_adjust_equals_baseline(self):
        g = complete_graph(4)
        spectrum = lanczos_top_k(laplacian(g), LanczosConfig(seed=1))
        adjusted = embed(g, EmbedConfig(adjust_position=0), AdjustConfig(), spectrum)
        baseline = embed(g, EmbedConfig())
        assert np.array_equal(adjusted.vector, baseline.vector)

    def test_none_position_is_baseline(self, rng):
        g = er_graph(12, 0.4, rng)
        cfg = EmbedConfig(adjust_position=None)
        a = embed(g, cfg)
        b = embed(g, EmbedConfig())
        assert np.array_equal(a.vector, b.vector)

    def test_deterministic(self, rng):
        g = er_graph(15, 0.3, rng)
        cfg = EmbedConfig(weight_seed=9)
        assert np.array_equal(embed(g, cfg).vector, embed(g, cfg).vector)

    def test_output_dim_default(self, rng):
        g = er_graph(10, 0.4, rng)
        assert embed(g, EmbedConfig(hidden_dim=16)).vector.shape == (16,)

    def test_output_dim_concatenation_at_output(self, rng):
        g = er_graph(10, 0.4, rng)
        spectrum = lanczos_top_k(laplacian(g), LanczosConfig(seed=2))
        cfg = EmbedConfig(hidden_dim=16, adjust_position=OUTPUT)
        acfg = AdjustConfig(combine_mode=CombineMode.CONCATENATION)
        assert embed(g, cfg, acfg, spectrum).vector.shape == (32,)

    def test_concatenation_mid_network_keeps_hidden_dim(self, rng):
        g = er_graph(10, 0.4, rng)
        spectrum = lanczos_top_k(laplacian(g), LanczosConfig(seed=2))
        cfg = EmbedConfig(hidden_dim=16, adjust_position=1)
        acfg = AdjustConfig(combine_mode=CombineMode.CONCATENATION)
        assert embed(g, cfg, acfg, spectrum).vector.shape == (16,)

    def test_sum_pool(self, rng):
        g = er_graph(8, 0.5, rng)
        cfg_mean = EmbedConfig(readout=Readout.MEAN_POOL)
        cfg_sum = EmbedConfig(readout=Readout.SUM_POOL)
        np.testing.assert_allclose(embed(g, cfg_sum).vector,
                                   embed(g, cfg_mean).vector * g.num_nodes,
                                   rtol=1e-12)

    def test_permutation_invariance_with_adjustment(self, rng):
        # structure-derived features + eigenvector projection + sign fix
        lz = LanczosConfig(seed=3, tol=1e-13)
        cfg = EmbedConfig(adjust_position=0, feature_init=FeatureInit.DEGREE_SCALAR)
        checked = 0
        for trial in range(12):
            g = er_graph(12, 0.45, rng)
            spectrum = lanczos_top_k(laplacian(g), lz)
            if spectrum.eigenvalues[0] - spectrum.eigenvalues[1] < 0.05:
                continue  # exclude near-degenerate spectra
            perm = rng.permutation(g.num_nodes)
            remapped = build_graph(
                g.num_nodes, [(perm[u], perm[v]) for u, v in g.edges])
            spectrum_p = lanczos_top_k(laplacian(remapped, ), lz)
            a = embed(g, cfg, AdjustConfig(), spectrum)
            b = embed(remapped, cfg, AdjustConfig(), spectrum_p)
            np.testing.assert_allclose(a.vector, b.vector, atol=1e-9)
            checked += 1
        assert checked >= 5

    def test_adjust_requires_spectrum(self):
        g = path_graph(4)
        with pytest.raises(ValueError, match="spectrum"):
            embed(g, EmbedConfig(adjust_position=0))

    def test_position_validation(self):
        with pytest.raises(ValueError, match="adjust_position"):
            EmbedConfig(num_layers=2, adjust_position=5).validate()

    def test_isolated_node_propagation(self):
        # degree-0 node has zero degree feature and no neighbors: stays zero
        g = build_graph(3, [(0, 1)])
        cfg = EmbedConfig(num_layers=1, activation=Activation.IDENTITY,
                          feature_init=FeatureInit.DEGREE_SCALAR, hidden_dim=2)
        H = MessagePassingEmbedder(cfg, 1).node_features(g)
        np.testing.assert_array_equal(H[2], [0.0, 0.0])
