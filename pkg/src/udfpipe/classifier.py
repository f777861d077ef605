"""L2-regularized logistic regression with a fixed unit bias feature.

The model scores a sample as w.x + b where b is the weight of an implicit
constant feature of value 1. Training minimizes

    0.5 * (|w|^2 + b^2) + C * sum_i log(1 + exp(-y_i * (w.x_i + b)))

over labels y in {+1, -1}; the bias weight participates in the L2 term
(the augmented-feature formulation), which keeps the objective strictly
convex in every coordinate. Minimization uses a deterministic quasi-Newton
solver (L-BFGS-B) against the hand-written objective/gradient pair, with
convergence declared once the gradient norm falls below tol * (1 + |obj|).

C is chosen by stratified k-fold cross-validation on the training split
only, over a configurable grid (default: integers 1..50), with ties
broken toward the smaller C; the test split never informs selection.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import DataError, FormatError
from .fileio import FORMAT_VERSION, FeatureVectorBatch, check_magic, read_struct

MODEL_MAGIC = b"UDFM"


@dataclass(eq=False)
class LinearModel:
    """Weight vector + bias weight for the fixed-unit-bias logistic model."""

    weights: np.ndarray
    bias_weight: float
    C: float
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights), dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise DataError(f"weights must be a non-empty 1-D vector, got shape {np.shape(self.weights)}")
        if not np.isfinite(w).all() or not np.isfinite(self.bias_weight):
            raise DataError("model weights contain non-finite values")
        if not np.isfinite(self.C) or self.C <= 0:
            raise DataError(f"C must be positive, got {self.C}")
        self.weights = w
        self.bias_weight = float(self.bias_weight)
        self.C = float(self.C)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class GridSearchConfig:
    c_values: tuple[float, ...] = tuple(float(c) for c in range(1, 51))
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        values = tuple(float(c) for c in self.c_values)
        if not values:
            raise DataError("c_values must be non-empty")
        if any(c <= 0 or not np.isfinite(c) for c in values):
            raise DataError("c_values must be strictly positive")
        if self.folds < 2:
            raise DataError(f"folds must be at least 2, got {self.folds}")
        if self.seed < 0:
            raise DataError(f"seed must be non-negative, got {self.seed}")
        self.c_values = values


@dataclass
class GridSearchRow:
    c: float
    mean_accuracy: float
    fold_accuracies: tuple[float, ...]


@dataclass
class GridSearchResult:
    best_c: float
    rows: tuple[GridSearchRow, ...]


@dataclass(eq=False)
class EvalReport:
    """Accuracy, 2x2 confusion matrix, and wall-clock prediction time.

    Confusion rows are true classes, columns predicted, ordered
    (private=+1, public=-1). predict_seconds covers prediction over the
    whole batch only; it excludes feature loading.
    """

    accuracy: float
    confusion: np.ndarray
    predict_seconds: float


def _as_matrix(X) -> np.ndarray:
    data = X.data if isinstance(X, FeatureVectorBatch) else np.asarray(X)
    out = np.ascontiguousarray(data, dtype=np.float64)
    if out.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got {out.ndim}-D")
    return out


def _as_labels(y, count: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64).ravel()
    if arr.shape[0] != count:
        raise DataError(f"label count {arr.shape[0]} does not match sample count {count}")
    if not np.isin(arr, (1.0, -1.0)).all():
        raise DataError("labels must be +1 or -1")
    return arr


def _objective_and_gradient(wb: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> tuple[float, np.ndarray]:
    w, b = wb[:-1], wb[-1]
    ym = y * (X @ w + b)
    obj = 0.5 * (w @ w + b * b) + C * np.logaddexp(0.0, -ym).sum()
    coef = -C * y * expit(-ym)
    grad = np.empty_like(wb)
    grad[:-1] = w + X.T @ coef
    grad[-1] = b + coef.sum()
    return float(obj), grad


def lr_objective(model: LinearModel, X, y) -> float:
    """Objective value of the model on (X, y)."""
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DataError(f"dimension mismatch: features are {X.shape[1]}-D, model is {model.dim}-D")
    y = _as_labels(y, X.shape[0])
    wb = np.concatenate([model.weights, [model.bias_weight]])
    obj, _ = _objective_and_gradient(wb, X, y, model.C)
    return obj


def lr_gradient(model: LinearModel, X, y) -> np.ndarray:
    """Gradient of the objective with respect to (weights, bias_weight)."""
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DataError(f"dimension mismatch: features are {X.shape[1]}-D, model is {model.dim}-D")
    y = _as_labels(y, X.shape[0])
    wb = np.concatenate([model.weights, [model.bias_weight]])
    _, grad = _objective_and_gradient(wb, X, y, model.C)
    return grad


def train(
    X,
    y,
    C: float,
    tol: float = 1e-6,
    max_iter: int = 1000,
    x0: np.ndarray | None = None,
    objective_callback: Callable[[float], None] | None = None,
) -> LinearModel:
    """Fit the model by deterministic convex minimization.

    Converged means |gradient| <= tol * (1 + |objective|). x0 optionally
    overrides the zero start (length dim + 1, bias weight last);
    objective_callback, when given, receives the objective value at each
    accepted iterate.
    """
    X = _as_matrix(X)
    y = _as_labels(y, X.shape[0])
    if not np.isfinite(C) or C <= 0:
        raise DataError(f"C must be positive, got {C}")
    if not np.isfinite(X).all():
        raise DataError("training features contain non-finite values")
    if not ((y == 1).any() and (y == -1).any()):
        raise DataError("training data contains a single class")

    if x0 is None:
        wb = np.zeros(X.shape[1] + 1)
    else:
        wb = np.asarray(x0, dtype=np.float64).copy()
        if wb.shape != (X.shape[1] + 1,):
            raise DataError(f"x0 must have length {X.shape[1] + 1}, got shape {wb.shape}")

    callback = None
    if objective_callback is not None:
        def callback(xk):
            objective_callback(_objective_and_gradient(xk, X, y, C)[0])

    total_iterations = 0
    obj, grad = _objective_and_gradient(wb, X, y, C)
    # a second pass polishes the rare case where the line search quits early
    for _ in range(3):
        remaining = max_iter - total_iterations
        if remaining <= 0 or np.linalg.norm(grad) <= tol * (1.0 + abs(obj)):
            break
        result = minimize(
            _objective_and_gradient,
            wb,
            args=(X, y, C),
            jac=True,
            method="L-BFGS-B",
            callback=callback,
            options={"maxiter": remaining, "ftol": 1e-15, "gtol": 1e-12, "maxls": 100},
        )
        wb = result.x
        total_iterations += result.nit
        obj, grad = _objective_and_gradient(wb, X, y, C)

    return LinearModel(
        weights=wb[:-1].copy(),
        bias_weight=float(wb[-1]),
        C=float(C),
        train_meta={"iterations": int(total_iterations), "final_objective": float(obj)},
    )


def predict(model: LinearModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and raw scores; a score of exactly 0 maps to +1."""
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DataError(f"dimension mismatch: features are {X.shape[1]}-D, model is {model.dim}-D")
    scores = X @ model.weights + model.bias_weight
    labels = np.where(scores >= 0.0, 1, -1).astype(np.int64)
    return labels, scores


def stratified_folds(y, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold indices: per-class shuffle, round-robin deal."""
    y = np.asarray(y)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    rng = np.random.default_rng(seed)
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        if idx.size < folds:
            raise DataError(f"degenerate folds: class {cls} has {idx.size} samples for {folds} folds")
        rng.shuffle(idx)
        for pos, sample in enumerate(idx):
            buckets[pos % folds].append(int(sample))
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def grid_search(X, y, config: GridSearchConfig) -> GridSearchResult:
    """Stratified k-fold cross-validation over c_values.

    Best C is the highest mean validation accuracy, ties broken toward the
    smaller C; deterministic for a fixed seed.
    """
    X = _as_matrix(X)
    y = _as_labels(y, X.shape[0])
    folds = stratified_folds(y, config.folds, config.seed)
    n = X.shape[0]
    rows = []
    for c in config.c_values:
        accuracies = []
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            model = train(X[mask], y[mask], C=c)
            labels, _ = predict(model, X[fold])
            accuracies.append(float((labels == y[fold]).mean()))
        rows.append(GridSearchRow(c, float(np.mean(accuracies)), tuple(accuracies)))
    best = min(rows, key=lambda row: (-row.mean_accuracy, row.c))
    return GridSearchResult(best_c=best.c, rows=tuple(rows))


def evaluate(model: LinearModel, X, y) -> EvalReport:
    """Accuracy, confusion matrix, and wall-clock prediction time for a batch."""
    X = _as_matrix(X)
    y = _as_labels(y, X.shape[0])
    start = time.perf_counter()
    labels, _ = predict(model, X)
    elapsed = time.perf_counter() - start
    tp = int(((y == 1) & (labels == 1)).sum())
    fn = int(((y == 1) & (labels == -1)).sum())
    fp = int(((y == -1) & (labels == 1)).sum())
    tn = int(((y == -1) & (labels == -1)).sum())
    confusion = np.array([[tp, fn], [fp, tn]], dtype=np.int64)
    return EvalReport(
        accuracy=float((tp + tn) / y.shape[0]),
        confusion=confusion,
        predict_seconds=float(elapsed),
    )


def write_model_file(model: LinearModel, path) -> None:
    """Write a trained model as a UDFM container (weights then bias, 64-bit)."""
    payload = np.concatenate([model.weights, [model.bias_weight]])
    blob = MODEL_MAGIC + struct.pack("<IId", FORMAT_VERSION, model.dim, model.C)
    Path(path).write_bytes(blob + payload.astype("<f8", copy=False).tobytes())


def read_model_file(path) -> LinearModel:
    """Read and validate a UDFM container; train_meta is not stored on disk."""
    buf = Path(path).read_bytes()
    offset = check_magic(buf, MODEL_MAGIC, path)
    (version, dim, c_value), offset = read_struct(buf, offset, "<IId", "header", path)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported UDFM version {version}")
    if dim < 1:
        raise FormatError(f"{path}: dim must be positive, got {dim}")
    expected = (dim + 1) * 8
    actual = len(buf) - offset
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise FormatError(f"{path}: {kind} payload: expected {expected} data bytes, found {actual}")
    payload = np.frombuffer(buf, dtype="<f8", count=dim + 1, offset=offset)
    if not np.isfinite(payload).all():
        raise FormatError(f"{path}: model weights contain non-finite values")
    return LinearModel(weights=payload[:-1].copy(), bias_weight=float(payload[-1]), C=c_value)
