from pathlib import Path

import numpy as np
import pytest

from conftest import er_graph
from spectralgap.datasets import (EmbeddingTable, GraphCollection, TEST, TRAIN,
                                  TuParseError, VAL, export_embeddings,
                                  import_embeddings, parse_tu_dataset,
                                  split_id_ood, write_tu_dataset)
from spectralgap.detect import DistLabel

DATA = Path(__file__).parent / "data"


class TestTuParsing:
    def test_fixture_counts(self):
        coll = parse_tu_dataset(DATA / "tiny", "TINY")
        assert len(coll) == 2
        assert coll.graphs[0].num_nodes == 3
        assert coll.graphs[0].num_edges == 3
        assert coll.graphs[1].num_nodes == 2
        assert coll.graphs[1].num_edges == 1
        assert coll.graph_labels == [1, 2]

    def test_both_directions_collapse(self):
        coll = parse_tu_dataset(DATA / "tiny", "TINY")
        # A file lists (4,5) and (5,4); result is a single undirected edge
        np.testing.assert_array_equal(coll.graphs[1].edges, [[0, 1]])

    def test_attributes_attached(self):
        coll = parse_tu_dataset(DATA / "attr", "ATTR")
        np.testing.assert_allclose(coll.graphs[0].node_attributes,
                                   [[0.5, 1.25], [-2.0, 0.75]])
        np.testing.assert_allclose(coll.graphs[1].node_attributes, [[3.5, 0.0]])

    def test_missing_file(self, tmp_path):
        with pytest.raises(TuParseError, match="missing mandatory"):
            parse_tu_dataset(tmp_path, "NOPE")

    def test_empty_indicator(self, tmp_path):
        (tmp_path / "X_A.txt").write_text("1, 2\n")
        (tmp_path / "X_graph_indicator.txt").write_text("")
        with pytest.raises(TuParseError, match="empty"):
            parse_tu_dataset(tmp_path, "X")

    def test_bad_graph_id(self, tmp_path):
        (tmp_path / "X_A.txt").write_text("1, 2\n")
        (tmp_path / "X_graph_indicator.txt").write_text("1\n0\n")
        with pytest.raises(TuParseError, match=":2"):
            parse_tu_dataset(tmp_path, "X")

    def test_edge_out_of_range(self, tmp_path):
        (tmp_path / "X_A.txt").write_text("1, 2\n1, 9\n")
        (tmp_path / "X_graph_indicator.txt").write_text("1\n1\n")
        with pytest.raises(TuParseError, match=":2"):
            parse_tu_dataset(tmp_path, "X")

    def test_cross_graph_edge(self, tmp_path):
        (tmp_path / "X_A.txt").write_text("1, 3\n")
        (tmp_path / "X_graph_indicator.txt").write_text("1\n1\n2\n")
        with pytest.raises(TuParseError, match="spans"):
            parse_tu_dataset(tmp_path, "X")

    def test_round_trip(self, tmp_path, rng):
        graphs = [er_graph(int(rng.integers(2, 15)), 0.4, rng) for _ in range(6)]
        coll = GraphCollection(graphs=graphs, name="RT",
                               graph_labels=[i % 2 for i in range(6)])
        write_tu_dataset(coll, tmp_path, "RT")
        back = parse_tu_dataset(tmp_path, "RT")
        assert len(back) == 6
        assert back.graph_labels == coll.graph_labels
        for a, b in zip(coll.graphs, back.graphs):
            assert a.num_nodes == b.num_nodes
            np.testing.assert_array_equal(a.edges, b.edges)


class TestSplit:
    def make(self, n, name, rng):
        return GraphCollection(
            graphs=[er_graph(6, 0.5, rng) for _ in range(n)], name=name)

    def test_protocol_arithmetic(self, rng):
        merged = split_id_ood(self.make(100, "id", rng), self.make(20, "ood", rng), 7)
        def count(split, dist):
            return len(merged.indices_where(split=split, dist=dist))
        assert count(TRAIN, DistLabel.ID) == 80
        assert count(VAL, DistLabel.ID) == 10
        assert count(VAL, DistLabel.OOD) == 10
        assert count(TEST, DistLabel.ID) == 10
        assert count(TEST, DistLabel.OOD) == 10
        assert count(TRAIN, DistLabel.OOD) == 0

    def test_insufficient_ood(self, rng):
        with pytest.raises(ValueError, match="need 2 OOD"):
            split_id_ood(self.make(10, "id", rng), self.make(0, "ood", rng), 7)

    def test_deterministic(self, rng):
        id_coll = self.make(50, "id", rng)
        ood_coll = self.make(30, "ood", rng)
        a = split_id_ood(id_coll, ood_coll, 3)
        b = split_id_ood(id_coll, ood_coll, 3)
        assert a.split == b.split
        assert all(x.edges is y.edges for x, y in zip(a.graphs, b.graphs))

    def test_odd_remainder(self, rng):
        merged = split_id_ood(self.make(105, "id", rng), self.make(25, "ood", rng), 7)
        n_train = len(merged.indices_where(split=TRAIN))
        n_val_id = len(merged.indices_where(split=VAL, dist=DistLabel.ID))
        n_test_id = len(merged.indices_where(split=TEST, dist=DistLabel.ID))
        assert n_train == 84
        assert n_val_id + n_test_id == 21
        assert len(merged.indices_where(split=VAL, dist=DistLabel.OOD)) == n_val_id
        assert len(merged.indices_where(split=TEST, dist=DistLabel.OOD)) == n_test_id


class TestEmbeddingsIO:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "emb.csv"
        path.write_text("graph_id,f0,f1\na,1.0,2.0\nb,3.0,4.0\n")
        table = import_embeddings(path)
        assert table.ids == ["a", "b"]
        np.testing.assert_array_equal(table.vectors, [[1, 2], [3, 4]])

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "emb.csv"
        path.write_text("graph_id,f0,f1\na,1.0,2.0\nb,3.0\n")
        with pytest.raises(ValueError, match=":3"):
            import_embeddings(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "emb.csv"
        path.write_text("id,f0\na,1.0\n")
        with pytest.raises(ValueError, match="graph_id"):
            import_embeddings(path)

    def test_round_trip_bit_identical(self, tmp_path, rng):
        table = EmbeddingTable(
            ids=[f"g{i}" for i in range(7)],
            vectors=rng.standard_normal((7, 5)))
        path = tmp_path / "emb.csv"
        export_embeddings(table, path)
        back = import_embeddings(path)
        assert back.ids == table.ids
        assert np.array_equal(back.vectors, table.vectors)
