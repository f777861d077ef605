"""Deterministic synthetic feature-map datasets for tests and desk runs.

Samples latent cluster means in channel space and emits feature maps whose
per-channel means carry the cluster signal plus i.i.d. Gaussian noise, so
global average pooling recovers the signal. Cluster membership cycles
round-robin, which keeps class balance within rounding of the label rule.
The same spec always produces byte-identical output files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .fileio import (
    FeatureMapBatch,
    PRIVATE,
    PUBLIC,
    write_labels,
    write_tensor_file,
)


@dataclass
class SyntheticSpec:
    n_train: int
    n_test: int
    height: int
    width: int
    depth: int
    n_latent_clusters: int
    label_rule: tuple[int, ...]
    noise_sigma: float
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "n_test", "height", "width", "depth", "n_latent_clusters"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive, got {getattr(self, name)}")
        rule = tuple(int(v) for v in self.label_rule)
        if len(rule) != self.n_latent_clusters:
            raise DataError(
                f"label_rule must map all {self.n_latent_clusters} clusters, got {len(rule)} entries"
            )
        if any(v not in (PRIVATE, PUBLIC) for v in rule):
            raise DataError("label_rule entries must be +1 (private) or -1 (public)")
        if PRIVATE not in rule or PUBLIC not in rule:
            raise DataError("label_rule must produce both classes")
        if self.noise_sigma < 0:
            raise DataError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if self.seed < 0:
            raise DataError(f"seed must be non-negative, got {self.seed}")
        self.label_rule = rule


@dataclass(eq=False)
class SyntheticDataset:
    """Paths of the written files plus the latent structure behind them."""

    train_tensor: Path
    test_tensor: Path
    train_labels: Path
    test_labels: Path
    cluster_means: np.ndarray
    train_clusters: np.ndarray
    test_clusters: np.ndarray
    train_ids: list[str]
    test_ids: list[str]


def _make_split(spec: SyntheticSpec, rng: np.random.Generator, count: int, prefix: str,
                means: np.ndarray) -> tuple[FeatureMapBatch, np.ndarray, list[str]]:
    clusters = np.arange(count) % spec.n_latent_clusters
    noise = rng.normal(0.0, spec.noise_sigma, size=(count, spec.height, spec.width, spec.depth))
    data = means[clusters][:, None, None, :] + noise
    ids = [f"{prefix}_{i:05d}" for i in range(count)]
    return FeatureMapBatch(data.astype(np.float32), ids), clusters, ids


def generate(spec: SyntheticSpec, out_dir) -> SyntheticDataset:
    """Write train/test UDFT tensors and label CSVs under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    means = rng.normal(0.0, 1.0, size=(spec.n_latent_clusters, spec.depth))

    train_batch, train_clusters, train_ids = _make_split(spec, rng, spec.n_train, "train", means)
    test_batch, test_clusters, test_ids = _make_split(spec, rng, spec.n_test, "test", means)

    paths = {
        "train_tensor": out_dir / "train.udft",
        "test_tensor": out_dir / "test.udft",
        "train_labels": out_dir / "labels_train.csv",
        "test_labels": out_dir / "labels_test.csv",
    }
    write_tensor_file(train_batch, paths["train_tensor"])
    write_tensor_file(test_batch, paths["test_tensor"])
    write_labels(
        [(sid, spec.label_rule[c]) for sid, c in zip(train_ids, train_clusters)],
        paths["train_labels"],
    )
    write_labels(
        [(sid, spec.label_rule[c]) for sid, c in zip(test_ids, test_clusters)],
        paths["test_labels"],
    )
    return SyntheticDataset(
        train_tensor=paths["train_tensor"],
        test_tensor=paths["test_tensor"],
        train_labels=paths["train_labels"],
        test_labels=paths["test_labels"],
        cluster_means=means,
        train_clusters=train_clusters,
        test_clusters=test_clusters,
        train_ids=train_ids,
        test_ids=test_ids,
    )
