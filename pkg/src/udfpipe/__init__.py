"""Codebook feature pipeline over binary feature containers.

Pools CNN activation maps into normalized per-image vectors, learns a
K-means codebook on the training split, triangle-encodes both splits
against it, optionally fuses two encodings, and classifies with
L2-regularized logistic regression. Runs from feature-map files alone; no
deep-learning runtime is required.
"""

from .classifier import (
    EvalReport,
    GridSearchConfig,
    GridSearchResult,
    GridSearchRow,
    LinearModel,
    evaluate,
    grid_search,
    lr_gradient,
    lr_objective,
    predict,
    read_model_file,
    stratified_folds,
    train,
    write_model_file,
)
from .encoding import (
    EncodedFeature,
    encode_dataset,
    encode_sample,
    euclidean_distance,
    triangle_codes,
    triangle_encode,
)
from .errors import DataError, FormatError
from .fileio import (
    FeatureMapBatch,
    FeatureVectorBatch,
    LabelSet,
    PRIVATE,
    PUBLIC,
    read_labels,
    read_tensor_file,
    read_vector_file,
    write_labels,
    write_tensor_file,
    write_vector_file,
)
from .fusion import serial_fuse
from .kmeans import (
    Codebook,
    KMeansConfig,
    assign,
    fit_codebook,
    fit_codebook_restarts,
    read_codebook_file,
    write_codebook_file,
)
from .pipeline import (
    PipelineConfig,
    load_pipeline_config,
    parse_c_values,
    run_k_sweep,
    run_pipeline,
)
from .pooling import (
    compute_initial_features,
    global_average_pool,
    l2_normalize,
    power_normalize,
)
from .synthetic import SyntheticDataset, SyntheticSpec, generate

__version__ = "0.1.0"
