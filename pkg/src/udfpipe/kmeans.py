"""Codebook learning with Lloyd's algorithm.

Fits k centroids to a batch of feature vectors under Euclidean distance.
Initialization is seed-deterministic (k-means++ by default, plain random
point selection as an alternative); iteration alternates assignment and
mean updates until the relative inertia change drops below the tolerance
or the iteration cap is hit. Empty clusters are re-seeded with the point
farthest from its assigned centroid, so the codebook always keeps exactly
k centroids.

The assignment step may use the expanded form |a|^2 + |b|^2 - 2ab (clamped
at zero) to pick the nearest centroid, but distances that are reported or
summed into the inertia are recomputed with the plain difference form, so
a point sitting exactly on its centroid contributes exactly zero.

Identical input and config (including seed) reproduce the codebook
bitwise: the update step accumulates per-centroid sums over ascending
sample index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .fileio import FORMAT_VERSION, FeatureVectorBatch, check_magic, read_struct

CODEBOOK_MAGIC = b"UDFC"

INIT_METHODS = ("kmeans_plus_plus", "random_points")


@dataclass
class KMeansConfig:
    k: int = 250
    max_iterations: int = 300
    tolerance: float = 1e-4
    seed: int = 0
    init: str = "kmeans_plus_plus"

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"k must be positive, got {self.k}")
        if self.max_iterations < 1:
            raise DataError(f"max_iterations must be positive, got {self.max_iterations}")
        if self.tolerance < 0:
            raise DataError(f"tolerance must be non-negative, got {self.tolerance}")
        if self.seed < 0:
            raise DataError(f"seed must be non-negative, got {self.seed}")
        if self.init not in INIT_METHODS:
            raise DataError(f"init must be one of {INIT_METHODS}, got {self.init!r}")


@dataclass(eq=False)
class Codebook:
    """k centroids in feature space plus fit metadata.

    inertia is the sum of squared distances of the fit data to their
    nearest centroids; inertia_history holds one value per assignment pass
    (index 0 is the post-initialization assignment).
    """

    centroids: np.ndarray
    inertia: float
    iterations_run: int
    seed: int
    inertia_history: tuple[float, ...] = field(default=())

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.centroids), dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"centroids must be a non-empty 2-D array, got shape {np.shape(self.centroids)}")
        if not np.isfinite(arr).all():
            raise DataError("centroids contain non-finite values")
        if not np.isfinite(self.inertia) or self.inertia < 0:
            raise DataError(f"inertia must be finite and non-negative, got {self.inertia}")
        if self.iterations_run < 0:
            raise DataError(f"iterations_run must be non-negative, got {self.iterations_run}")
        self.centroids = arr
        self.inertia = float(self.inertia)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _as_matrix(features) -> np.ndarray:
    data = features.data if isinstance(features, FeatureVectorBatch) else np.asarray(features)
    return np.ascontiguousarray(data, dtype=np.float64)


def _init_plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[int(rng.integers(n))]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centroids[j] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _init_random_points(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(X.shape[0], size=k, replace=False)
    return X[idx].copy()


def _assign_step(X: np.ndarray, centroids: np.ndarray, x_sq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    d2 = x_sq[:, None] + c_sq[None, :] - 2.0 * (X @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    labels = np.argmin(d2, axis=1)
    diff = X - centroids[labels]
    sqmin = np.einsum("ij,ij->i", diff, diff)
    return labels, sqmin


def fit_codebook(features, config: KMeansConfig) -> Codebook:
    """Run Lloyd's algorithm and return the fitted codebook."""
    X = _as_matrix(features)
    n = X.shape[0]
    if not np.isfinite(X).all():
        raise DataError("clustering input contains non-finite values")
    if config.k > n:
        raise DataError(f"k = {config.k} exceeds the sample count {n}")

    rng = np.random.default_rng(config.seed)
    if config.init == "kmeans_plus_plus":
        centroids = _init_plus_plus(X, config.k, rng)
    else:
        centroids = _init_random_points(X, config.k, rng)

    x_sq = np.einsum("ij,ij->i", X, X)
    labels, sqmin = _assign_step(X, centroids, x_sq)
    inertia = float(sqmin.sum())
    history = [inertia]
    iterations = 0

    for _ in range(config.max_iterations):
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        counts = np.bincount(labels, minlength=config.k)
        nonempty = counts > 0
        new_centroids = centroids.copy()
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            # farthest-from-assigned points, one per empty cluster
            order = np.argsort(-sqmin, kind="stable")
            for slot, cluster in enumerate(empty):
                new_centroids[cluster] = X[order[slot]]
        centroids = new_centroids

        labels, sqmin = _assign_step(X, centroids, x_sq)
        new_inertia = float(sqmin.sum())
        iterations += 1
        history.append(new_inertia)
        done = inertia == 0.0 or (inertia - new_inertia) <= config.tolerance * inertia
        inertia = new_inertia
        if done:
            break

    return Codebook(
        centroids=centroids,
        inertia=inertia,
        iterations_run=iterations,
        seed=config.seed,
        inertia_history=tuple(history),
    )


def fit_codebook_restarts(features, config: KMeansConfig, restarts: int) -> Codebook:
    """Fit with seeds seed..seed+restarts-1 and keep the lowest-inertia codebook."""
    if restarts < 1:
        raise DataError(f"restarts must be positive, got {restarts}")
    best = None
    for i in range(restarts):
        candidate = fit_codebook(features, replace(config, seed=config.seed + i))
        if best is None or candidate.inertia < best.inertia:
            best = candidate
    return best


def assign(features, codebook: Codebook) -> np.ndarray:
    """Index of the nearest centroid per sample; ties go to the lowest index."""
    X = _as_matrix(features)
    if X.shape[1] != codebook.dim:
        raise DataError(f"dimension mismatch: features are {X.shape[1]}-D, codebook is {codebook.dim}-D")
    C = codebook.centroids
    labels = np.empty(X.shape[0], dtype=np.int64)
    block = max(1, 8_000_000 // (C.shape[0] * C.shape[1]))
    for s in range(0, X.shape[0], block):
        d2 = ((X[s:s + block, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        labels[s:s + block] = np.argmin(d2, axis=1)
    return labels


def write_codebook_file(codebook: Codebook, path) -> None:
    """Write a codebook as a UDFC container (centroids as 64-bit floats)."""
    blob = CODEBOOK_MAGIC + struct.pack(
        "<IIIQd", FORMAT_VERSION, codebook.k, codebook.dim, codebook.seed, codebook.inertia
    )
    Path(path).write_bytes(blob + codebook.centroids.astype("<f8", copy=False).tobytes())


def read_codebook_file(path) -> Codebook:
    """Read and validate a UDFC container; iterations_run is not stored on disk."""
    buf = Path(path).read_bytes()
    offset = check_magic(buf, CODEBOOK_MAGIC, path)
    (version, k, dim, seed, inertia), offset = read_struct(buf, offset, "<IIIQd", "header", path)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported UDFC version {version}")
    if k < 1 or dim < 1:
        raise FormatError(f"{path}: k and dim must be positive, got k={k}, dim={dim}")
    expected = k * dim * 8
    actual = len(buf) - offset
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise FormatError(f"{path}: {kind} payload: expected {expected} data bytes, found {actual}")
    centroids = np.frombuffer(buf, dtype="<f8", count=k * dim, offset=offset).reshape(k, dim).copy()
    if not np.isfinite(centroids).all():
        raise FormatError(f"{path}: centroids contain non-finite values")
    return Codebook(centroids=centroids, inertia=inertia, iterations_run=0, seed=seed)
