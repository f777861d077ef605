"""Config-driven orchestration: the one-shot pipeline and the k sweep.

A run reads one or more layers' tensor files, pools them into initial
features, fits one codebook per layer on the training split, triangle-
encodes both splits, optionally fuses a configured pair of layers, selects
C by cross-validated grid search, trains the final model, and evaluates on
the test split. Every run writes a manifest of config values, seeds,
output checksums, and metrics; reruns with identical config and inputs
reproduce the manifest byte for byte (prediction wall-clock time lives in
the separate eval report, which is the one non-deterministic artifact and
is therefore not checksummed).

Config files are INI-style sections of key=value lines; see
``load_pipeline_config`` for the schema.
"""

from __future__ import annotations

import configparser
import hashlib
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .classifier import (
    EvalReport,
    GridSearchConfig,
    evaluate,
    grid_search,
    predict,
    train,
    write_model_file,
)
from .encoding import triangle_encode
from .errors import DataError
from .fileio import (
    FeatureVectorBatch,
    read_labels,
    read_tensor_file,
    write_labels,
    write_vector_file,
)
from .fusion import serial_fuse
from .kmeans import KMeansConfig, fit_codebook_restarts, write_codebook_file
from .pooling import compute_initial_features


@dataclass
class PipelineConfig:
    """Validated pipeline settings; paths are resolved and checked at load."""

    train_tensors: tuple[tuple[str, Path], ...]
    test_tensors: tuple[tuple[str, Path], ...]
    labels_train: Path
    labels_test: Path
    output_dir: Path
    k: int = 250
    seed: int = 0
    kmeans_max_iterations: int = 300
    kmeans_tolerance: float = 1e-4
    kmeans_init: str = "kmeans_plus_plus"
    kmeans_seed: int | None = None
    kmeans_restarts: int = 1
    fusion_pair: tuple[str, str] | None = None
    classifier: GridSearchConfig | None = None
    classifier_tol: float = 1e-6
    classifier_max_iter: int = 1000

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"k must be positive, got {self.k}")
        if not self.train_tensors:
            raise DataError("at least one training tensor must be configured")
        train_layers = [name for name, _ in self.train_tensors]
        test_layers = [name for name, _ in self.test_tensors]
        if train_layers != test_layers:
            raise DataError(
                f"train/test layer lists must match: {train_layers} vs {test_layers}"
            )
        if len(set(train_layers)) != len(train_layers):
            raise DataError(f"duplicate layer names in {train_layers}")
        if self.fusion_pair is not None:
            first, second = self.fusion_pair
            if first == second:
                raise DataError("fusion pair must name two distinct layers")
            for name in (first, second):
                if name not in train_layers:
                    raise DataError(f"fusion pair names unconfigured layer {name!r}")
        elif len(train_layers) > 1:
            raise DataError("configure exactly one layer or a fusion pair")
        if self.classifier is None:
            self.classifier = GridSearchConfig(seed=self.seed)
        if self.kmeans_seed is None:
            self.kmeans_seed = self.seed

    def kmeans_config(self, k: int | None = None) -> KMeansConfig:
        return KMeansConfig(
            k=self.k if k is None else k,
            max_iterations=self.kmeans_max_iterations,
            tolerance=self.kmeans_tolerance,
            seed=self.kmeans_seed,
            init=self.kmeans_init,
        )


def parse_c_values(text: str) -> tuple[float, ...]:
    """Parse a C grid: comma-separated numbers and/or inclusive a:b integer ranges."""
    values: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo_text, hi_text = part.split(":", 1)
            try:
                lo, hi = int(lo_text), int(hi_text)
            except ValueError as exc:
                raise DataError(f"bad C range {part!r}") from exc
            if lo > hi:
                raise DataError(f"bad C range {part!r}: start exceeds end")
            values.extend(float(c) for c in range(lo, hi + 1))
        else:
            try:
                values.append(float(part))
            except ValueError as exc:
                raise DataError(f"bad C value {part!r}") from exc
    if not values:
        raise DataError(f"no C values in {text!r}")
    return tuple(values)


def _resolve(base: Path, raw: str) -> Path:
    path = Path(raw)
    return path if path.is_absolute() else base / path


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise DataError(f"{what} file not found: {path}")
    return path


def load_pipeline_config(path) -> PipelineConfig:
    """Parse and validate an INI-style pipeline config.

    Sections and keys (defaults in parentheses)::

        [pipeline]       k (250), seed (0), output_dir (required)
        [train_tensors]  <layer name> = <UDFT path>   one per layer
        [test_tensors]   same layer names, test-split paths
        [labels]         train = <CSV path>, test = <CSV path>
        [kmeans]         max_iterations (300), tolerance (1e-4),
                         init (kmeans_plus_plus), seed (pipeline seed),
                         restarts (1)
        [fusion]         pair = <layer>, <layer>   required for >1 layer
        [classifier]     c_values (1:50), folds (5), seed (pipeline seed),
                         tol (1e-6), max_iter (1000)

    Relative paths are resolved against the config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise DataError(f"bad config file {path}: {exc}") from exc

    base = path.parent
    for section in ("pipeline", "train_tensors", "test_tensors", "labels"):
        if section not in parser:
            raise DataError(f"{path}: missing [{section}] section")

    pipe = parser["pipeline"]
    if "output_dir" not in pipe:
        raise DataError(f"{path}: [pipeline] must set output_dir")
    seed = pipe.getint("seed", fallback=0)

    train_tensors = tuple(
        (name, _require_file(_resolve(base, raw), f"training tensor {name!r}"))
        for name, raw in parser["train_tensors"].items()
    )
    test_tensors = tuple(
        (name, _require_file(_resolve(base, raw), f"test tensor {name!r}"))
        for name, raw in parser["test_tensors"].items()
    )
    labels = parser["labels"]
    for key in ("train", "test"):
        if key not in labels:
            raise DataError(f"{path}: [labels] must set {key}")

    fusion_pair = None
    if "fusion" in parser and parser["fusion"].get("pair"):
        parts = [p.strip() for p in parser["fusion"]["pair"].split(",")]
        if len(parts) != 2:
            raise DataError(f"{path}: fusion pair must name exactly two layers")
        fusion_pair = (parts[0], parts[1])

    km = parser["kmeans"] if "kmeans" in parser else {}
    cls = parser["classifier"] if "classifier" in parser else {}
    classifier = GridSearchConfig(
        c_values=parse_c_values(cls.get("c_values", "1:50")),
        folds=int(cls.get("folds", 5)),
        seed=int(cls.get("seed", seed)),
    )

    return PipelineConfig(
        train_tensors=train_tensors,
        test_tensors=test_tensors,
        labels_train=_require_file(_resolve(base, labels["train"]), "training labels"),
        labels_test=_require_file(_resolve(base, labels["test"]), "test labels"),
        output_dir=_resolve(base, pipe["output_dir"]),
        k=pipe.getint("k", fallback=250),
        seed=seed,
        kmeans_max_iterations=int(km.get("max_iterations", 300)),
        kmeans_tolerance=float(km.get("tolerance", 1e-4)),
        kmeans_init=km.get("init", "kmeans_plus_plus"),
        kmeans_seed=int(km["seed"]) if "seed" in km else None,
        kmeans_restarts=int(km.get("restarts", 1)),
        fusion_pair=fusion_pair,
        classifier=classifier,
        classifier_tol=float(cls.get("tol", 1e-6)),
        classifier_max_iter=int(cls.get("max_iter", 1000)),
    )


@contextmanager
def _stage(name: str):
    try:
        yield
    except DataError as exc:
        raise DataError(f"{name}: {exc}") from exc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _run_stages(config: PipelineConfig, k: int, out_dir: Path | None):
    """Shared pipeline core; writes artifacts only when out_dir is given.

    Returns (grid result, final model, eval report, test ids, predictions,
    written artifact paths).
    """
    artifacts: list[Path] = []

    def emit(name: str, writer, obj) -> None:
        if out_dir is None:
            return
        target = out_dir / name
        writer(obj, target)
        artifacts.append(target)

    with _stage("pool"):
        initial_train: dict[str, FeatureVectorBatch] = {}
        initial_test: dict[str, FeatureVectorBatch] = {}
        for layer, tensor_path in config.train_tensors:
            initial_train[layer] = compute_initial_features(read_tensor_file(tensor_path))
            emit(f"initial_train_{layer}.udfv", write_vector_file, initial_train[layer])
        for layer, tensor_path in config.test_tensors:
            initial_test[layer] = compute_initial_features(read_tensor_file(tensor_path))
            emit(f"initial_test_{layer}.udfv", write_vector_file, initial_test[layer])

    with _stage("kmeans-fit"):
        codebooks = {}
        for layer, _ in config.train_tensors:
            codebooks[layer] = fit_codebook_restarts(
                initial_train[layer], config.kmeans_config(k), config.kmeans_restarts
            )
            emit(f"codebook_{layer}.udfc", write_codebook_file, codebooks[layer])

    with _stage("encode"):
        encoded_train = {}
        encoded_test = {}
        for layer, _ in config.train_tensors:
            encoded_train[layer] = triangle_encode(initial_train[layer], codebooks[layer])
            encoded_test[layer] = triangle_encode(initial_test[layer], codebooks[layer])
            emit(f"encoded_train_{layer}.udfv", write_vector_file, encoded_train[layer])
            emit(f"encoded_test_{layer}.udfv", write_vector_file, encoded_test[layer])

    if config.fusion_pair is not None:
        with _stage("fuse"):
            first, second = config.fusion_pair
            train_features = serial_fuse(encoded_train[first], encoded_train[second])
            test_features = serial_fuse(encoded_test[first], encoded_test[second])
            emit("fused_train.udfv", write_vector_file, train_features)
            emit("fused_test.udfv", write_vector_file, test_features)
    else:
        only_layer = config.train_tensors[0][0]
        train_features = encoded_train[only_layer]
        test_features = encoded_test[only_layer]

    with _stage("grid-search"):
        labels_train = read_labels(config.labels_train)
        y_train = labels_train.vector_for(train_features.sample_ids)
        grid = grid_search(train_features.data, y_train, config.classifier)

    with _stage("train-lr"):
        model = train(
            train_features.data,
            y_train,
            C=grid.best_c,
            tol=config.classifier_tol,
            max_iter=config.classifier_max_iter,
        )
        emit("model.udfm", write_model_file, model)

    with _stage("eval"):
        labels_test = read_labels(config.labels_test)
        y_test = labels_test.vector_for(test_features.sample_ids)
        report = evaluate(model, test_features.data, y_test)
        predictions, _ = predict(model, test_features.data)
        if out_dir is not None:
            pred_path = out_dir / "predictions.csv"
            write_labels(zip(test_features.sample_ids, predictions.tolist()), pred_path)
            artifacts.append(pred_path)

    return grid, model, report, test_features.sample_ids, predictions, artifacts


def _config_lines(config: PipelineConfig) -> list[str]:
    lines = [
        f"config.pipeline.k={config.k}",
        f"config.pipeline.seed={config.seed}",
        f"config.pipeline.output_dir={config.output_dir}",
    ]
    for layer, path in config.train_tensors:
        lines.append(f"config.train_tensors.{layer}={path}")
    for layer, path in config.test_tensors:
        lines.append(f"config.test_tensors.{layer}={path}")
    lines += [
        f"config.labels.train={config.labels_train}",
        f"config.labels.test={config.labels_test}",
        f"config.kmeans.max_iterations={config.kmeans_max_iterations}",
        f"config.kmeans.tolerance={_format_value(config.kmeans_tolerance)}",
        f"config.kmeans.init={config.kmeans_init}",
        f"config.kmeans.seed={config.kmeans_seed}",
        f"config.kmeans.restarts={config.kmeans_restarts}",
    ]
    if config.fusion_pair is not None:
        lines.append(f"config.fusion.pair={config.fusion_pair[0]},{config.fusion_pair[1]}")
    lines += [
        "config.classifier.c_values=" + ",".join(_format_value(c) for c in config.classifier.c_values),
        f"config.classifier.folds={config.classifier.folds}",
        f"config.classifier.seed={config.classifier.seed}",
        f"config.classifier.tol={_format_value(config.classifier_tol)}",
        f"config.classifier.max_iter={config.classifier_max_iter}",
    ]
    return lines


def eval_report_lines(report: EvalReport, count: int) -> list[str]:
    (tp, fn), (fp, tn) = report.confusion.tolist()
    return [
        f"accuracy={_format_value(report.accuracy)}",
        f"confusion.true_private.pred_private={tp}",
        f"confusion.true_private.pred_public={fn}",
        f"confusion.true_public.pred_private={fp}",
        f"confusion.true_public.pred_public={tn}",
        f"count={count}",
        f"predict_seconds={_format_value(report.predict_seconds)}",
    ]


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage, write all artifacts plus manifest, return the metrics."""
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, model, report, test_ids, _, artifacts = _run_stages(config, config.k, out_dir)

    report_path = out_dir / "eval_report.txt"
    report_path.write_text("\n".join(eval_report_lines(report, len(test_ids))) + "\n", encoding="utf-8")

    manifest = _config_lines(config)
    for row in grid.rows:
        manifest.append(f"cv.{_format_value(row.c)}={_format_value(row.mean_accuracy)}")
    (tp, fn), (fp, tn) = report.confusion.tolist()
    manifest += [
        f"best_c={_format_value(grid.best_c)}",
        f"metrics.accuracy={_format_value(report.accuracy)}",
        f"metrics.confusion.true_private.pred_private={tp}",
        f"metrics.confusion.true_private.pred_public={fn}",
        f"metrics.confusion.true_public.pred_private={fp}",
        f"metrics.confusion.true_public.pred_public={tn}",
    ]
    for artifact in sorted(artifacts, key=lambda p: p.name):
        manifest.append(f"checksum.{artifact.name}={_sha256(artifact)}")
    manifest_path = out_dir / "manifest.txt"
    manifest_path.write_text("\n".join(manifest) + "\n", encoding="utf-8")

    return {
        "accuracy": report.accuracy,
        "best_c": grid.best_c,
        "confusion": report.confusion,
        "predict_seconds": report.predict_seconds,
        "manifest_path": manifest_path,
        "report_path": report_path,
        "output_dir": out_dir,
    }


def run_k_sweep(config: PipelineConfig, k_values: tuple[int, ...]) -> list[tuple[int, float]]:
    """Run the pipeline core once per k and write one accuracy row per k."""
    if not k_values:
        raise DataError("k sweep needs at least one k value")
    rows = []
    for k in k_values:
        if k < 1:
            raise DataError(f"k must be positive, got {k}")
        _, _, report, _, _, _ = _run_stages(config, k, out_dir=None)
        rows.append((k, report.accuracy))
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    table = [f"k={k} accuracy={_format_value(acc)}" for k, acc in rows]
    (out_dir / "k_sweep.txt").write_text("\n".join(table) + "\n", encoding="utf-8")
    return rows
