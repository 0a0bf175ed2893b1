"""Spectral gap, gap ratio, and the gap-scaled feature-adjustment operator.

The default operator removes from an n x d feature matrix X the rank-1
component along the eigenvector paired with the second-largest Laplacian
eigenvalue, scaled by the spectral gap:

    v = X^T u,   X' = X - (lambda_n - lambda_{n-1}) * u v^T

Ablation knobs cover the scaling coefficient (gap, 1, gap ratio, or 0),
the combination rule (subtraction, per-row multiplicative damping, or
concatenation of the rank-1 term), the number of trailing eigenpairs
removed, and what to project on (eigenvector, a seeded random unit vector,
or nothing, in which case the whole matrix is shrunk uniformly).

Feature matrices are plain float ndarrays with one row per node.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from spectralgap.eigen import SpectralSummary


class GapMode(Enum):
    SCALED_SUBTRACTION = "scaled_subtraction"
    SIMPLE_SUBTRACTION = "simple_subtraction"
    RELATIVE_DIFFERENCE = "relative_difference"
    NO_ADJUSTMENT = "no_adjustment"


class CombineMode(Enum):
    SUBTRACTION = "subtraction"
    MULTIPLICATION = "multiplication"
    CONCATENATION = "concatenation"


class Projection(Enum):
    EIGENVECTOR = "eigenvector"
    RANDOM = "random"
    NO_PROJECTION = "no_projection"


@dataclass(frozen=True)
class AdjustConfig:
    gap_mode: GapMode = GapMode.SCALED_SUBTRACTION
    combine_mode: CombineMode = CombineMode.SUBTRACTION
    num_eigenpairs: int = 2
    projection: Projection = Projection.EIGENVECTOR
    projection_seed: int = 0

    def validate(self) -> None:
        if self.num_eigenpairs < 1:
            raise ValueError(f"num_eigenpairs must be >= 1, got {self.num_eigenpairs}")


def spectral_gap(summary: SpectralSummary) -> float:
    """Difference between the largest and second-largest eigenvalues."""
    if summary.eigenvalues.shape[0] < 2:
        raise ValueError("spectral gap needs at least 2 eigenvalues in the summary")
    return float(summary.eigenvalues[0] - summary.eigenvalues[1])


def spectral_gap_ratio(summary: SpectralSummary) -> float:
    """Scale-free gap (lambda_n - lambda_{n-1}) / lambda_n in [0, 1]."""
    gap = spectral_gap(summary)
    top = float(summary.eigenvalues[0])
    if top <= 0.0:
        raise ValueError(f"gap ratio undefined: largest eigenvalue is {top}")
    return min(max(gap / top, 0.0), 1.0)


def _coefficients(summary: SpectralSummary, cfg: AdjustConfig) -> np.ndarray:
    """Per-pair scaling c_i for trailing eigenpairs i = 1 .. num_eigenpairs-1."""
    top = float(summary.eigenvalues[0])
    gaps = top - summary.eigenvalues[1:cfg.num_eigenpairs]
    if cfg.gap_mode is GapMode.SCALED_SUBTRACTION:
        return gaps
    if cfg.gap_mode is GapMode.SIMPLE_SUBTRACTION:
        return np.ones_like(gaps)
    if cfg.gap_mode is GapMode.RELATIVE_DIFFERENCE:
        return gaps / top if top > 0.0 else np.zeros_like(gaps)
    return np.zeros_like(gaps)  # NO_ADJUSTMENT


def _projection_vectors(summary: SpectralSummary, cfg: AdjustConfig, n: int) -> np.ndarray:
    if cfg.projection is Projection.RANDOM:
        rng = np.random.default_rng(cfg.projection_seed)
        vecs = rng.standard_normal((n, cfg.num_eigenpairs - 1))
        vecs /= np.linalg.norm(vecs, axis=0)
        return vecs
    return summary.eigenvectors[:, 1:cfg.num_eigenpairs]


def adjust_features(X: np.ndarray, summary: SpectralSummary,
                    cfg: AdjustConfig = AdjustConfig()) -> np.ndarray:
    """Apply the configured adjustment to an n x d feature matrix.

    Identity configurations (num_eigenpairs = 1, or all coefficients zero)
    return the input values bit-for-bit. Concatenation widens d to 2d; the
    other modes preserve the shape.
    """
    cfg.validate()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite entries")
    if summary.eigenvalues.shape[0] < cfg.num_eigenpairs:
        raise ValueError(
            f"summary holds {summary.eigenvalues.shape[0]} eigenpairs, "
            f"config needs {cfg.num_eigenpairs}")
    n = summary.eigenvectors.shape[0]
    if X.shape[0] != n:
        raise ValueError(
            f"feature rows ({X.shape[0]}) must match eigenvector length ({n})")

    coeffs = _coefficients(summary, cfg)
    if cfg.projection is Projection.NO_PROJECTION:
        # uniform shrink: the whole matrix stands in for the projected component
        total = float(coeffs.sum())
        return X.copy() if total == 0.0 else X - total * X
    if coeffs.size == 0 or not np.any(coeffs):
        if cfg.combine_mode is CombineMode.CONCATENATION and coeffs.size > 0:
            # keep the 2d width contract even when the correction vanishes
            return np.concatenate([X, np.zeros_like(X)], axis=1)
        return X.copy()

    U = _projection_vectors(summary, cfg, n)
    if cfg.combine_mode is CombineMode.MULTIPLICATION:
        scale = np.ones(n)
        for i, c in enumerate(coeffs):
            scale *= 1.0 - c * U[:, i]
        return X * scale[:, None]

    rank_terms = np.zeros_like(X)
    for i, c in enumerate(coeffs):
        u = U[:, i]
        rank_terms += c * np.outer(u, X.T @ u)
    if cfg.combine_mode is CombineMode.CONCATENATION:
        return np.concatenate([X, rank_terms], axis=1)
    return X - rank_terms
