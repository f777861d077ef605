"""Feature-map pooling and normalization.

Turns an (N, H, W, D) activation batch into one D-dimensional vector per
sample: global average pooling over the spatial grid, then a signed
square-root power normalization, then L2 normalization. The same chain is
applied uniformly to every layer; for 1x1 spatial maps the pooling step is
the identity on values.

Arithmetic runs in float64 and results are stored as float32 in the
returned batches, so the stated tolerances survive accumulation over wide
maps and deep channels.
"""

from __future__ import annotations

import numpy as np

from .fileio import FeatureMapBatch, FeatureVectorBatch


def global_average_pool(maps: FeatureMapBatch) -> FeatureVectorBatch:
    """Per-channel spatial mean: output[a][j] = mean over H*W positions of channel j."""
    pooled = maps.data.astype(np.float64).mean(axis=(1, 2))
    return FeatureVectorBatch(pooled.astype(np.float32), list(maps.sample_ids))


def power_normalize(features: FeatureVectorBatch) -> FeatureVectorBatch:
    """Elementwise signed square root: sign(x) * sqrt(|x|)."""
    x = features.data.astype(np.float64)
    out = np.sign(x) * np.sqrt(np.abs(x))
    return FeatureVectorBatch(out.astype(np.float32), list(features.sample_ids))


def l2_normalize(features: FeatureVectorBatch) -> FeatureVectorBatch:
    """Divide each row by its Euclidean norm; all-zero rows pass through unchanged."""
    x = features.data.astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    out = x / np.where(norms == 0.0, 1.0, norms)[:, None]
    return FeatureVectorBatch(out.astype(np.float32), list(features.sample_ids))


def compute_initial_features(maps: FeatureMapBatch) -> FeatureVectorBatch:
    """Full chain: pool, then power-normalize, then L2-normalize."""
    return l2_normalize(power_normalize(global_average_pool(maps)))
