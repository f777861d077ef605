"""Serial fusion: ordered row-wise concatenation of two feature batches.

The fused dimension is the sum of the source dimensions (e.g. two 250-D
encodings fuse into a 500-D batch) with the first batch's columns leading.
Sample ids must align one-to-one in order; misaligned dumps are a pipeline
bug and fail loudly rather than being joined silently.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .fileio import FeatureVectorBatch


def serial_fuse(a: FeatureVectorBatch, b: FeatureVectorBatch) -> FeatureVectorBatch:
    """Concatenate rows of a and b, a's components first; ids are preserved."""
    if a.count != b.count:
        raise DataError(f"count mismatch: {a.count} vs {b.count}")
    for i, (left, right) in enumerate(zip(a.sample_ids, b.sample_ids)):
        if left != right:
            raise DataError(f"sample id mismatch at index {i}: {left!r} vs {right!r}")
    data = np.concatenate([a.data, b.data], axis=1)
    return FeatureVectorBatch(data, list(a.sample_ids))
