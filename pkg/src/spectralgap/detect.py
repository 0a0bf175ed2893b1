"""OOD scoring: Mahalanobis distance to the training cloud (SSD-style),
local outlier factor against the training set, and the plain
gap-threshold detector with explicit orientation.

Score convention everywhere: higher = more OOD.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DistLabel(Enum):
    ID = "id"
    OOD = "ood"


class Orientation(Enum):
    GAP_HIGH_MEANS_ID = "gap_high_means_id"
    GAP_HIGH_MEANS_OOD = "gap_high_means_ood"


@dataclass(frozen=True)
class GapDetectorConfig:
    tau: float
    orientation: Orientation  # always explicit, never defaulted


@dataclass(frozen=True)
class ScoredSample:
    score: float
    true_label: DistLabel
    graph_id: object = None


def _as_matrix(embeds, name: str) -> np.ndarray:
    X = np.asarray(embeds, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of embeddings, got shape {X.shape}")
    return X


def ssd_scores(train_embeds, test_embeds) -> np.ndarray:
    """Squared Mahalanobis distance to the fitted training Gaussian.

    Covariance is the sample covariance plus a relative ridge
    gamma = 1e-4 * trace(Sigma) / d to keep the solve well posed.
    """
    train = _as_matrix(train_embeds, "train_embeds")
    test = _as_matrix(test_embeds, "test_embeds")
    if train.shape[0] < 2:
        raise ValueError(f"need at least 2 training embeddings, got {train.shape[0]}")
    if train.shape[1] != test.shape[1]:
        raise ValueError(
            f"dimension mismatch: train d={train.shape[1]}, test d={test.shape[1]}")
    mu = train.mean(axis=0)
    sigma = np.atleast_2d(np.cov(train, rowvar=False, ddof=1))
    d = train.shape[1]
    gamma = 1e-4 * np.trace(sigma) / d
    if gamma <= 0.0:  # degenerate all-identical training cloud
        gamma = 1e-12
    centered = test - mu
    solved = np.linalg.solve(sigma + gamma * np.eye(d), centered.T)
    return np.einsum("ij,ji->i", centered, solved)


def lof_scores(train_embeds, test_embeds, k_neighbors: int = 20) -> np.ndarray:
    """Local outlier factor of test points against the training set.

    Brute-force exact neighbor search; exactly k neighbors per point with
    distance ties broken by index. Density ratio near 1 means inlier.
    """
    train = _as_matrix(train_embeds, "train_embeds")
    test = _as_matrix(test_embeds, "test_embeds")
    m = train.shape[0]
    if m <= k_neighbors:
        raise ValueError(f"training size {m} must exceed k_neighbors={k_neighbors}")
    if train.shape[1] != test.shape[1]:
        raise ValueError(
            f"dimension mismatch: train d={train.shape[1]}, test d={test.shape[1]}")

    d_tt = np.linalg.norm(train[:, None, :] - train[None, :, :], axis=2)
    np.fill_diagonal(d_tt, np.inf)
    nn = np.argsort(d_tt, axis=1, kind="stable")[:, :k_neighbors]
    k_dist = np.take_along_axis(d_tt, nn[:, -1:], axis=1)[:, 0]

    # local reachability density of each training point
    reach = np.maximum(k_dist[nn], np.take_along_axis(d_tt, nn, axis=1))
    with np.errstate(divide="ignore"):
        lrd = 1.0 / reach.mean(axis=1)

    d_qt = np.linalg.norm(test[:, None, :] - train[None, :, :], axis=2)
    nn_q = np.argsort(d_qt, axis=1, kind="stable")[:, :k_neighbors]
    reach_q = np.maximum(k_dist[nn_q], np.take_along_axis(d_qt, nn_q, axis=1))
    with np.errstate(divide="ignore"):
        lrd_q = 1.0 / reach_q.mean(axis=1)
    with np.errstate(invalid="ignore"):
        scores = lrd[nn_q].mean(axis=1) / lrd_q
    return np.where(np.isinf(lrd_q), 0.0, scores)


def gap_detect(gaps, cfg: GapDetectorConfig) -> list[DistLabel]:
    """Threshold detector; equality with tau always classifies as OOD."""
    gaps = np.asarray(gaps, dtype=np.float64)
    if not np.all(np.isfinite(gaps)):
        raise ValueError("gap values must be finite")
    if cfg.orientation is Orientation.GAP_HIGH_MEANS_ID:
        is_id = gaps > cfg.tau
    else:
        is_id = gaps < cfg.tau
    return [DistLabel.ID if flag else DistLabel.OOD for flag in is_id]


def _balanced_error(id_gaps, ood_gaps, tau, orientation) -> float:
    if orientation is Orientation.GAP_HIGH_MEANS_ID:
        id_err = np.mean(id_gaps <= tau)
        ood_err = np.mean(ood_gaps > tau)
    else:
        id_err = np.mean(id_gaps >= tau)
        ood_err = np.mean(ood_gaps < tau)
    return 0.5 * (id_err + ood_err)


def choose_tau(id_gaps, ood_gaps):
    """Fit (tau, orientation) minimizing balanced empirical error.

    Scans midpoints between adjacent distinct pooled gap values plus
    +-infinity, for both orientations. Ties prefer the smaller tau, then
    GAP_HIGH_MEANS_ID. Returns (tau, orientation, empirical_error).
    """
    id_gaps = np.asarray(id_gaps, dtype=np.float64)
    ood_gaps = np.asarray(ood_gaps, dtype=np.float64)
    if id_gaps.size == 0 or ood_gaps.size == 0:
        raise ValueError("both gap lists must be non-empty")
    pooled = np.unique(np.concatenate([id_gaps, ood_gaps]))
    candidates = [-np.inf]
    candidates.extend(0.5 * (pooled[:-1] + pooled[1:]))
    candidates.append(np.inf)

    best = None
    for tau in candidates:
        for orientation in (Orientation.GAP_HIGH_MEANS_ID, Orientation.GAP_HIGH_MEANS_OOD):
            err = _balanced_error(id_gaps, ood_gaps, tau, orientation)
            key = (err, tau, orientation is not Orientation.GAP_HIGH_MEANS_ID)
            if best is None or key < best[0]:
                best = (key, tau, orientation, err)
    _, tau, orientation, err = best
    return float(tau), orientation, float(err)
