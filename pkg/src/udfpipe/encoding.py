"""Triangle encoding of feature vectors against a codebook.

Each sample is described by its Euclidean distances z_1..z_k to the k
centroids. With mu the mean of that sample's own k distances, component l
of the code is max(0, mu - z_l): centroids farther than the sample's mean
distance contribute zero, closer centroids contribute their margin below
the mean. The encoded dimension equals k, which is how the pipeline
shrinks wide activation features into short vectors.

Distances and codes are computed in float64; batch-level results are
stored as float32 in the returned vector batches. No renormalization is
applied after encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .fileio import FeatureVectorBatch, read_tensor_file, write_vector_file
from .kmeans import Codebook, read_codebook_file
from .pooling import compute_initial_features


def euclidean_distance(a, b) -> float:
    """sqrt of the summed squared differences, accumulated in float64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DataError("euclidean_distance expects 1-D vectors")
    if a.shape[0] != b.shape[0]:
        raise DataError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(np.sqrt((diff * diff).sum()))


def _distance_matrix(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    n, k = X.shape[0], centroids.shape[0]
    out = np.empty((n, k))
    block = max(1, 8_000_000 // (k * centroids.shape[1]))
    for s in range(0, n, block):
        diff = X[s:s + block, None, :] - centroids[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[s:s + block])
    np.sqrt(out, out=out)
    return out


def triangle_codes(X, centroids) -> tuple[np.ndarray, np.ndarray]:
    """Float64 triangle codes and per-sample mean distances for raw arrays.

    Returns (codes, mu) with codes[i, l] = max(0, mu[i] - z[i, l]) and
    mu[i] the mean of sample i's distances to all k centroids.
    """
    X = np.ascontiguousarray(np.asarray(X), dtype=np.float64)
    centroids = np.ascontiguousarray(np.asarray(centroids), dtype=np.float64)
    if X.ndim != 2 or centroids.ndim != 2:
        raise DataError("triangle_codes expects 2-D arrays")
    if centroids.shape[0] < 1:
        raise DataError("empty codebook")
    if X.shape[1] != centroids.shape[1]:
        raise DataError(
            f"dimension mismatch: features are {X.shape[1]}-D, codebook is {centroids.shape[1]}-D"
        )
    z = _distance_matrix(X, centroids)
    mu = z.sum(axis=1) / centroids.shape[0]
    codes = np.maximum(0.0, mu[:, None] - z)
    return codes, mu


@dataclass(eq=False)
class EncodedFeature:
    """Triangle code of a single sample plus its mean distance and source width."""

    values: np.ndarray
    mu: float
    source_dim: int


def encode_sample(vector, codebook: Codebook) -> EncodedFeature:
    """Encode one feature vector against a codebook."""
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise DataError("encode_sample expects a 1-D vector")
    codes, mu = triangle_codes(v[None, :], codebook.centroids)
    return EncodedFeature(values=codes[0], mu=float(mu[0]), source_dim=v.shape[0])


def triangle_encode(features: FeatureVectorBatch, codebook: Codebook) -> FeatureVectorBatch:
    """Encode every sample of a batch; output dimension equals the codebook's k."""
    codes, _ = triangle_codes(features.data, codebook.centroids)
    return FeatureVectorBatch(codes.astype(np.float32), list(features.sample_ids))


def encode_dataset(tensor_path, codebook_path, out_path) -> FeatureVectorBatch:
    """Pool + normalize a tensor file, encode against a stored codebook, write UDFV.

    Test-set tensors are encoded against the codebook learned on training
    features; the pooling chain is identical for both splits.
    """
    maps = read_tensor_file(tensor_path)
    codebook = read_codebook_file(codebook_path)
    initial = compute_initial_features(maps)
    encoded = triangle_encode(initial, codebook)
    write_vector_file(encoded, out_path)
    return encoded
