"""Shared helpers for the test suite."""

import numpy as np
import pytest

from udfpipe import FeatureMapBatch, FeatureVectorBatch


def make_map_batch(data, ids=None) -> FeatureMapBatch:
    data = np.asarray(data, dtype=np.float32)
    if ids is None:
        ids = [f"s{i}" for i in range(data.shape[0])]
    return FeatureMapBatch(data, ids)


def make_vector_batch(data, ids=None) -> FeatureVectorBatch:
    data = np.asarray(data, dtype=np.float32)
    if ids is None:
        ids = [f"s{i}" for i in range(data.shape[0])]
    return FeatureVectorBatch(data, ids)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_pipeline_config(
    path,
    dataset,
    output_dir,
    k=10,
    seed=0,
    c_values="1,10",
    folds=3,
    layer="feat",
    extra_sections="",
):
    """Write a single-layer pipeline config pointing at a synthetic dataset."""
    text = f"""
[pipeline]
k = {k}
seed = {seed}
output_dir = {output_dir}

[train_tensors]
{layer} = {dataset.train_tensor}

[test_tensors]
{layer} = {dataset.test_tensor}

[labels]
train = {dataset.train_labels}
test = {dataset.test_labels}

[classifier]
c_values = {c_values}
folds = {folds}
{extra_sections}
"""
    path.write_text(text, encoding="utf-8")
    return path


def oracle_accuracy(dataset, spec) -> float:
    """Nearest-latent-centroid accuracy computed directly from the written files."""
    from udfpipe import read_labels, read_tensor_file

    test = read_tensor_file(dataset.test_tensor)
    pooled = test.data.astype(np.float64).mean(axis=(1, 2))
    d2 = ((pooled[:, None, :] - dataset.cluster_means[None, :, :]) ** 2).sum(axis=2)
    rule = np.asarray(spec.label_rule)
    predicted = rule[d2.argmin(axis=1)]
    truth = read_labels(dataset.test_labels).vector_for(test.sample_ids)
    return float((predicted == truth).mean())
