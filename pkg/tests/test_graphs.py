import numpy as np
import pytest

from conftest import complete_graph, er_graph, path_graph
from spectralgap.eigen import dense_eig
from spectralgap.graphs import (GraphConstructionError, LaplacianVariant,
                                build_graph, laplacian, spmv)


class TestBuildGraph:
    def test_path(self):
        g = build_graph(3, [(0, 1), (1, 2)])
        assert g.num_edges == 2
        np.testing.assert_array_equal(g.degrees, [1, 2, 1])

    def test_complete(self):
        g = complete_graph(4)
        assert g.num_edges == 6
        np.testing.assert_array_equal(g.degrees, [3, 3, 3, 3])

    def test_dedup_and_self_loops(self):
        g = build_graph(2, [(0, 1), (1, 0), (0, 0)])
        assert g.num_edges == 1
        assert g.self_loops_removed == 1

    def test_endpoint_out_of_range(self):
        with pytest.raises(GraphConstructionError, match=r"\(1, 5\)"):
            build_graph(3, [(0, 1), (1, 5)])

    def test_immutable_arrays(self):
        g = build_graph(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.indices[0] = 2

    def test_adjacency_symmetric(self, rng):
        for _ in range(20):
            g = er_graph(int(rng.integers(2, 40)), 0.3, rng)
            dense = np.zeros((g.num_nodes, g.num_nodes))
            for i in range(g.num_nodes):
                dense[i, g.neighbors(i)] = 1
            np.testing.assert_array_equal(dense, dense.T)


class TestLaplacian:
    def test_path_unnormalized(self):
        L = laplacian(path_graph(3), LaplacianVariant.UNNORMALIZED)
        np.testing.assert_array_equal(
            L.to_dense(), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_complete_normalized(self):
        M = laplacian(complete_graph(4), LaplacianVariant.NORMALIZED).to_dense()
        np.testing.assert_allclose(np.diag(M), 1.0)
        off = M[~np.eye(4, dtype=bool)]
        np.testing.assert_allclose(off, -1.0 / 3.0)

    def test_path_signless(self):
        Q = laplacian(path_graph(3), LaplacianVariant.SIGNLESS)
        np.testing.assert_array_equal(
            Q.to_dense(), [[1, 1, 0], [1, 2, 1], [0, 1, 1]])

    def test_isolated_node_normalized(self):
        # node 2 is isolated: its row is the bare diagonal 1
        g = build_graph(3, [(0, 1)])
        M = laplacian(g, LaplacianVariant.NORMALIZED).to_dense()
        np.testing.assert_array_equal(M[2], [0, 0, 1])
        np.testing.assert_allclose(M[0], [1, -1, 0])

    def test_symmetry_all_variants(self, rng):
        for _ in range(15):
            g = er_graph(int(rng.integers(2, 60)), float(rng.uniform(0.05, 0.7)), rng)
            for variant in LaplacianVariant:
                M = laplacian(g, variant).to_dense()
                assert np.abs(M - M.T).max() <= 1e-12

    def test_unnormalized_row_sums_zero(self, rng):
        for _ in range(10):
            g = er_graph(int(rng.integers(2, 60)), 0.3, rng)
            L = laplacian(g)
            np.testing.assert_allclose(L.matvec(np.ones(g.num_nodes)), 0.0, atol=1e-12)

    def test_psd_and_normalized_range(self, rng):
        for _ in range(12):
            g = er_graph(int(rng.integers(3, 80)), float(rng.uniform(0.05, 0.6)), rng)
            for variant in (LaplacianVariant.UNNORMALIZED, LaplacianVariant.NORMALIZED):
                w, _ = dense_eig(laplacian(g, variant))
                assert w[-1] >= -1e-10
                if variant is LaplacianVariant.NORMALIZED:
                    assert w[0] <= 2 + 1e-10


class TestSpmv:
    def test_path_ones(self):
        L = laplacian(path_graph(3))
        np.testing.assert_array_equal(spmv(L, [1, 1, 1]), [0, 0, 0])

    def test_path_first_column(self):
        L = laplacian(path_graph(3))
        np.testing.assert_array_equal(spmv(L, [1, 0, 0]), [1, -1, 0])

    def test_matches_dense_on_er(self, rng):
        g = er_graph(50, 0.2, rng)
        L = laplacian(g)
        x = rng.standard_normal(50)
        assert np.abs(spmv(L, x) - L.to_dense() @ x).max() <= 1e-12

    def test_matches_dense_many_graphs(self, rng):
        # invariant check across sizes and variants
        for _ in range(100):
            n = int(rng.integers(2, 200))
            g = er_graph(n, float(rng.uniform(0.02, 0.5)), rng)
            variant = list(LaplacianVariant)[int(rng.integers(3))]
            M = laplacian(g, variant)
            x = rng.standard_normal(n)
            assert np.abs(spmv(M, x) - M.to_dense() @ x).max() <= 1e-12

    def test_length_mismatch(self):
        L = laplacian(path_graph(3))
        with pytest.raises(ValueError, match="length"):
            spmv(L, [1.0, 2.0])
