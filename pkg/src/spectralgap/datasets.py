"""Dataset ingestion and persistence: labeled graph collections, the TU
text format, deterministic ID/OOD splits, and embedding CSV round trips.

TU layout for a dataset NAME inside a directory:

    NAME_A.txt                comma-separated edge pairs, 1-based global
                              node ids, both directions usually listed
    NAME_graph_indicator.txt  graph id (1-based) for node on each line
    NAME_graph_labels.txt     optional, integer label per graph
    NAME_node_attributes.txt  optional, comma-separated floats per node
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spectralgap.detect import DistLabel
from spectralgap.graphs import Graph, build_graph

TRAIN, VAL, TEST = "train", "val", "test"


class TuParseError(ValueError):
    pass


@dataclass
class GraphCollection:
    graphs: list[Graph]
    name: str = ""
    graph_labels: list[int] | None = None
    split: list[str] | None = None
    dist_label: list[DistLabel] | None = None

    def __post_init__(self):
        n = len(self.graphs)
        for attr in ("graph_labels", "split", "dist_label"):
            values = getattr(self, attr)
            if values is not None and len(values) != n:
                raise ValueError(
                    f"{attr} has {len(values)} entries for {n} graphs")

    def __len__(self) -> int:
        return len(self.graphs)

    def subset(self, indices, name: str | None = None) -> "GraphCollection":
        indices = list(indices)
        pick = lambda values: None if values is None else [values[i] for i in indices]
        return GraphCollection(
            graphs=[self.graphs[i] for i in indices],
            name=self.name if name is None else name,
            graph_labels=pick(self.graph_labels),
            split=pick(self.split),
            dist_label=pick(self.dist_label),
        )

    def indices_where(self, split=None, dist=None) -> list[int]:
        out = []
        for i in range(len(self.graphs)):
            if split is not None and (self.split is None or self.split[i] != split):
                continue
            if dist is not None and (self.dist_label is None or self.dist_label[i] is not dist):
                continue
            out.append(i)
        return out


def _read_int_lines(path: Path, what: str) -> list[int]:
    values = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            values.append(int(raw))
        except ValueError:
            raise TuParseError(f"{path.name}:{lineno}: expected an integer, got {raw!r}")
    if not values:
        raise TuParseError(f"{path.name}: file is empty; {what} is mandatory")
    return values


def parse_tu_dataset(directory, name: str) -> GraphCollection:
    """Load a TU-format dataset; nodes are renumbered 0-based per graph."""
    directory = Path(directory)
    a_path = directory / f"{name}_A.txt"
    ind_path = directory / f"{name}_graph_indicator.txt"
    for path in (a_path, ind_path):
        if not path.exists():
            raise TuParseError(f"missing mandatory file {path}")

    indicator = _read_int_lines(ind_path, "the graph indicator")
    num_graphs = max(indicator)
    for lineno, gid in enumerate(indicator, start=1):
        if gid < 1:
            raise TuParseError(
                f"{ind_path.name}:{lineno}: node references nonexistent graph id {gid}")

    # global node id (1-based) -> (graph index, local id)
    node_graph = np.asarray(indicator, dtype=np.int64) - 1
    local_id = np.zeros(len(indicator), dtype=np.int64)
    counts = np.zeros(num_graphs, dtype=np.int64)
    for i, g in enumerate(node_graph):
        local_id[i] = counts[g]
        counts[g] += 1

    edge_lists: list[list[tuple[int, int]]] = [[] for _ in range(num_graphs)]
    for lineno, raw in enumerate(a_path.read_text().splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split(",")
        if len(parts) != 2:
            raise TuParseError(f"{a_path.name}:{lineno}: expected 'u, v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TuParseError(f"{a_path.name}:{lineno}: non-integer endpoint in {raw!r}")
        if not (1 <= u <= len(indicator)) or not (1 <= v <= len(indicator)):
            raise TuParseError(
                f"{a_path.name}:{lineno}: node id outside 1..{len(indicator)}")
        gu, gv = node_graph[u - 1], node_graph[v - 1]
        if gu != gv:
            raise TuParseError(
                f"{a_path.name}:{lineno}: edge ({u}, {v}) spans graphs {gu + 1} and {gv + 1}")
        edge_lists[gu].append((int(local_id[u - 1]), int(local_id[v - 1])))

    attributes = None
    attr_path = directory / f"{name}_node_attributes.txt"
    if attr_path.exists():
        attributes = []
        for lineno, raw in enumerate(attr_path.read_text().splitlines(), start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                attributes.append([float(x) for x in raw.split(",")])
            except ValueError:
                raise TuParseError(f"{attr_path.name}:{lineno}: bad attribute row {raw!r}")
        if len(attributes) != len(indicator):
            raise TuParseError(
                f"{attr_path.name}: {len(attributes)} attribute rows for "
                f"{len(indicator)} nodes")

    labels = None
    label_path = directory / f"{name}_graph_labels.txt"
    if label_path.exists():
        labels = _read_int_lines(label_path, "graph labels")
        if len(labels) != num_graphs:
            raise TuParseError(
                f"{label_path.name}: {len(labels)} labels for {num_graphs} graphs")

    graphs = []
    for g in range(num_graphs):
        attrs = None
        if attributes is not None:
            rows = [attributes[i] for i in range(len(indicator)) if node_graph[i] == g]
            attrs = np.asarray(rows, dtype=np.float64)
        graphs.append(build_graph(int(counts[g]), edge_lists[g], node_attributes=attrs))
    return GraphCollection(graphs=graphs, name=name, graph_labels=labels)


def write_tu_dataset(collection: GraphCollection, directory, name: str) -> None:
    """Write a collection in TU format (both edge directions listed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    indicator, edges = [], []
    offset = 0
    for g_index, graph in enumerate(collection.graphs, start=1):
        indicator.extend([g_index] * graph.num_nodes)
        for u, v in graph.edges:
            edges.append((offset + u + 1, offset + v + 1))
            edges.append((offset + v + 1, offset + u + 1))
        offset += graph.num_nodes
    (directory / f"{name}_A.txt").write_text(
        "".join(f"{u}, {v}\n" for u, v in edges))
    (directory / f"{name}_graph_indicator.txt").write_text(
        "".join(f"{g}\n" for g in indicator))
    if collection.graph_labels is not None:
        (directory / f"{name}_graph_labels.txt").write_text(
            "".join(f"{label}\n" for label in collection.graph_labels))
    if all(g.node_attributes is not None for g in collection.graphs) and collection.graphs:
        rows = []
        for graph in collection.graphs:
            for row in graph.node_attributes:
                rows.append(",".join(repr(float(x)) for x in row))
        (directory / f"{name}_node_attributes.txt").write_text("\n".join(rows) + "\n")


def split_id_ood(id_collection: GraphCollection, ood_collection: GraphCollection,
                 seed: int) -> GraphCollection:
    """80/10/10 split of ID graphs; val and test get matching OOD counts.

    The ID shuffle and the without-replacement OOD draw are both seeded.
    """
    rng = np.random.default_rng(seed)
    n_id = len(id_collection)
    order = rng.permutation(n_id)
    n_train = int(0.8 * n_id)
    remaining = n_id - n_train
    n_val = remaining // 2
    n_test = remaining - n_val

    needed = n_val + n_test
    if len(ood_collection) < needed:
        raise ValueError(
            f"need {needed} OOD graphs to match val+test ID counts, "
            f"got {len(ood_collection)}")
    ood_order = rng.permutation(len(ood_collection))[:needed]

    graphs, labels, split, dist = [], [], [], []
    have_labels = (id_collection.graph_labels is not None
                   and ood_collection.graph_labels is not None)

    def push(source, idx, part, which):
        graphs.append(source.graphs[idx])
        split.append(part)
        dist.append(which)
        if have_labels:
            labels.append(source.graph_labels[idx])

    for i in order[:n_train]:
        push(id_collection, i, TRAIN, DistLabel.ID)
    for i in order[n_train:n_train + n_val]:
        push(id_collection, i, VAL, DistLabel.ID)
    for i in ood_order[:n_val]:
        push(ood_collection, i, VAL, DistLabel.OOD)
    for i in order[n_train + n_val:]:
        push(id_collection, i, TEST, DistLabel.ID)
    for i in ood_order[n_val:]:
        push(ood_collection, i, TEST, DistLabel.OOD)

    return GraphCollection(
        graphs=graphs,
        name=f"{id_collection.name}+{ood_collection.name}",
        graph_labels=labels if have_labels else None,
        split=split,
        dist_label=dist,
    )


@dataclass
class EmbeddingTable:
    """Dense embeddings keyed by graph id, in file order."""

    ids: list[str]
    vectors: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {gid: self.vectors[i] for i, gid in enumerate(self.ids)}


def import_embeddings(path) -> EmbeddingTable:
    """Read an embedding CSV with header ``graph_id,f0,f1,...``."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path.name}: empty embedding file")
        if not header or header[0] != "graph_id":
            raise ValueError(f"{path.name}:1: header must start with 'graph_id'")
        width = len(header) - 1
        if width < 1:
            raise ValueError(f"{path.name}:1: header declares no feature columns")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise ValueError(
                    f"{path.name}:{lineno}: expected {width + 1} columns, got {len(row)}")
            ids.append(row[0])
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError:
                raise ValueError(f"{path.name}:{lineno}: non-numeric feature value")
    return EmbeddingTable(ids=ids, vectors=np.asarray(rows, dtype=np.float64))


def export_embeddings(table: EmbeddingTable, path) -> None:
    """Write embeddings with full-precision floats (round-trips exactly)."""
    path = Path(path)
    width = table.vectors.shape[1] if table.vectors.size else 0
    header = "graph_id," + ",".join(f"f{i}" for i in range(width))
    lines = [header]
    for gid, row in zip(table.ids, table.vectors):
        lines.append(str(gid) + "," + ",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")
