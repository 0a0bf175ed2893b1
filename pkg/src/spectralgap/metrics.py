"""Detection metrics: AUC, AUPR, and FPR at 95% TPR.

OOD is the positive class and higher scores mean more OOD. Thresholds
sweep the distinct scores in descending order with ties handled as one
group; a sample is predicted positive when its score >= threshold.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from spectralgap.detect import DistLabel, ScoredSample


def _split_scores(samples):
    scores = np.array([s.score for s in samples], dtype=np.float64)
    is_ood = np.array([s.true_label is DistLabel.OOD for s in samples], dtype=bool)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not is_ood.any() or is_ood.all():
        raise ValueError("metrics need at least one ID and one OOD sample")
    return scores, is_ood


def make_samples(scores, is_ood, graph_ids=None) -> list[ScoredSample]:
    """Convenience constructor from parallel arrays."""
    if graph_ids is None:
        graph_ids = range(len(scores))
    return [
        ScoredSample(float(s), DistLabel.OOD if o else DistLabel.ID, g)
        for s, o, g in zip(scores, is_ood, graph_ids)
    ]


def auc(samples) -> float:
    """P(score_OOD > score_ID) + 0.5 P(tie), via tie-averaged ranks."""
    scores, is_ood = _split_scores(samples)
    n_ood = int(is_ood.sum())
    n_id = scores.shape[0] - n_ood
    ranks = rankdata(scores, method="average")
    u = ranks[is_ood].sum() - n_ood * (n_ood + 1) / 2.0
    return float(u / (n_id * n_ood))


def _threshold_groups(scores, is_ood):
    """Cumulative (tp, fp) after each distinct descending threshold group."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_ood = is_ood[order]
    # last index of each tie group
    boundaries = np.nonzero(np.diff(sorted_scores))[0]
    ends = np.concatenate([boundaries, [scores.shape[0] - 1]])
    tp = np.cumsum(sorted_ood)[ends]
    fp = np.cumsum(~sorted_ood)[ends]
    return tp, fp


def aupr(samples) -> float:
    """Area under precision-recall with the interpolated precision envelope.

    At each recall step the precision is the maximum achieved at that
    recall or beyond (descending-score sweep, ties grouped).
    """
    scores, is_ood = _split_scores(samples)
    n_ood = int(is_ood.sum())
    tp, fp = _threshold_groups(scores, is_ood)
    recall = tp / n_ood
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * envelope))


def fpr_at_95tpr(samples) -> float:
    """Smallest FPR among thresholds reaching TPR >= 0.95."""
    scores, is_ood = _split_scores(samples)
    n_ood = int(is_ood.sum())
    n_id = scores.shape[0] - n_ood
    tp, fp = _threshold_groups(scores, is_ood)
    feasible = tp / n_ood >= 0.95
    return float((fp[feasible] / n_id).min())
