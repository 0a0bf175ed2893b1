"""Deterministic message-passing graph embedder.

Stands in for a trained GNN: propagation is h <- act(P h W) with
P = rownorm(A + I) and weights drawn once from a seeded generator
(uniform Glorot range). The gap-based feature adjustment can be inserted
at any intermediate feature matrix: position ``0`` adjusts the initial
node features, position ``l`` the output of layer ``l``, and ``"output"``
the final node features right before readout. Positions are node-level
throughout; ``"output"`` behaves like the last layer position but is kept
as a distinct tag so ablations over all insertion points stay expressible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from spectralgap.adjust import AdjustConfig, CombineMode, adjust_features
from spectralgap.eigen import SpectralSummary
from spectralgap.graphs import Graph

OUTPUT = "output"


class Activation(Enum):
    RELU = "relu"
    IDENTITY = "identity"


class Readout(Enum):
    MEAN_POOL = "mean"
    SUM_POOL = "sum"


class FeatureInit(Enum):
    DEGREE_SCALAR = "degree_scalar"
    DEGREE_ONE_HOT = "degree_one_hot"
    CONSTANT_ONE = "constant_one"
    NODE_ATTRIBUTES = "node_attributes"


@dataclass(frozen=True)
class EmbedConfig:
    num_layers: int = 3
    hidden_dim: int = 32
    weight_seed: int = 0
    activation: Activation = Activation.RELU
    readout: Readout = Readout.MEAN_POOL
    adjust_position: int | str | None = None  # layer index, OUTPUT, or None
    feature_init: FeatureInit = FeatureInit.DEGREE_SCALAR
    max_degree: int = 10

    def validate(self) -> None:
        if self.num_layers < 1:
            raise ValueError(f"num_layers must be >= 1, got {self.num_layers}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        pos = self.adjust_position
        if pos is None or pos == OUTPUT:
            return
        if not isinstance(pos, int) or not 0 <= pos <= self.num_layers:
            raise ValueError(
                f"adjust_position must be None, {OUTPUT!r}, or a layer index "
                f"in 0..{self.num_layers}, got {pos!r}")


@dataclass(frozen=True)
class GraphEmbedding:
    vector: np.ndarray
    source_graph_id: object = None


def init_node_features(graph: Graph, scheme: FeatureInit, max_degree: int = 10) -> np.ndarray:
    """Deterministic initial node features X0 (one row per node)."""
    if scheme is FeatureInit.DEGREE_SCALAR:
        return graph.degrees.astype(np.float64)[:, None]
    if scheme is FeatureInit.CONSTANT_ONE:
        return np.ones((graph.num_nodes, 1))
    if scheme is FeatureInit.DEGREE_ONE_HOT:
        idx = np.minimum(graph.degrees, max_degree)
        X = np.zeros((graph.num_nodes, max_degree + 1))
        X[np.arange(graph.num_nodes), idx] = 1.0
        return X
    if scheme is FeatureInit.NODE_ATTRIBUTES:
        if graph.node_attributes is None:
            raise ValueError("graph carries no node attributes")
        return np.array(graph.node_attributes, dtype=np.float64)
    raise ValueError(f"unknown feature scheme {scheme!r}")


def _feature_dim(cfg: EmbedConfig, graph: Graph) -> int:
    if cfg.feature_init is FeatureInit.DEGREE_ONE_HOT:
        return cfg.max_degree + 1
    if cfg.feature_init is FeatureInit.NODE_ATTRIBUTES:
        if graph.node_attributes is None:
            raise ValueError("graph carries no node attributes")
        return graph.node_attributes.shape[1]
    return 1


def _layer_dims(cfg: EmbedConfig, in_dim: int, adjust_cfg: AdjustConfig | None):
    """Per-layer (fan_in, fan_out), accounting for concatenation widening."""
    widen_at = None
    if (adjust_cfg is not None and cfg.adjust_position is not None
            and adjust_cfg.combine_mode is CombineMode.CONCATENATION
            and adjust_cfg.num_eigenpairs >= 2):
        widen_at = cfg.adjust_position  # int layer index or OUTPUT
    dims = []
    width = in_dim
    if widen_at == 0:
        width *= 2
    for layer in range(cfg.num_layers):
        dims.append((width, cfg.hidden_dim))
        width = cfg.hidden_dim
        if widen_at == layer + 1:
            width *= 2
    if widen_at == OUTPUT:
        width *= 2
    return dims, width


def _weights(cfg: EmbedConfig, dims) -> list[np.ndarray]:
    rng = np.random.default_rng(cfg.weight_seed)
    weights = []
    for fan_in, fan_out in dims:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    return weights


def _propagate(graph: Graph, H: np.ndarray) -> np.ndarray:
    """Row-normalized (A + I) @ H via CSR segment sums."""
    neighbor_sum = np.zeros_like(H)
    if graph.indices.shape[0]:
        nonempty = graph.degrees > 0
        neighbor_sum[nonempty] = np.add.reduceat(
            H[graph.indices], graph.indptr[:-1][nonempty], axis=0)
    return (neighbor_sum + H) / (graph.degrees + 1.0)[:, None]


class MessagePassingEmbedder:
    """Immutable embedder; weights are fixed at construction per input width."""

    def __init__(self, cfg: EmbedConfig, in_dim: int, adjust_cfg: AdjustConfig | None = None):
        cfg.validate()
        self.cfg = cfg
        self.adjust_cfg = adjust_cfg
        dims, self.out_dim = _layer_dims(cfg, in_dim, adjust_cfg)
        self.weights = _weights(cfg, dims)

    def node_features(self, graph: Graph, spectrum: SpectralSummary | None = None) -> np.ndarray:
        """Final node-level feature matrix (pre-readout)."""
        cfg = self.cfg
        pos = cfg.adjust_position
        if pos is not None and (spectrum is None or self.adjust_cfg is None):
            raise ValueError("adjust_position set but spectrum or adjust config missing")

        H = init_node_features(graph, cfg.feature_init, cfg.max_degree)
        if pos == 0:
            H = adjust_features(H, spectrum, self.adjust_cfg)
        for layer, W in enumerate(self.weights):
            H = _propagate(graph, H) @ W
            if cfg.activation is Activation.RELU:
                H = np.maximum(H, 0.0)
            if pos == layer + 1:
                H = adjust_features(H, spectrum, self.adjust_cfg)
        if pos == OUTPUT:
            H = adjust_features(H, spectrum, self.adjust_cfg)
        return H

    def embed(self, graph: Graph, spectrum: SpectralSummary | None = None,
              graph_id=None) -> GraphEmbedding:
        H = self.node_features(graph, spectrum)
        if self.cfg.readout is Readout.MEAN_POOL:
            vec = H.mean(axis=0)
        else:
            vec = H.sum(axis=0)
        return GraphEmbedding(vector=vec, source_graph_id=graph_id)


def embed(graph: Graph, cfg: EmbedConfig, adjust_cfg: AdjustConfig | None = None,
          spectrum: SpectralSummary | None = None, graph_id=None) -> GraphEmbedding:
    """One-shot embedding; see :class:`MessagePassingEmbedder` for batch use."""
    embedder = MessagePassingEmbedder(cfg, _feature_dim(cfg, graph), adjust_cfg)
    return embedder.embed(graph, spectrum, graph_id)


def unadjusted(cfg: EmbedConfig) -> EmbedConfig:
    """Same embedder config with the adjustment turned off."""
    return replace(cfg, adjust_position=None)
