"""Command-line interface: one subcommand per stage plus the one-shot pipeline.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal
error. Errors go to stderr prefixed with the stage name. Setting
UDFPIPE_THREADS caps the numeric-library thread pools for the process
(applied before the compute modules are imported, which is why the heavy
imports below live inside the handlers).
"""

from __future__ import annotations

import argparse
import os
import sys


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _apply_thread_env() -> None:
    value = os.environ.get("UDFPIPE_THREADS")
    if not value:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udfpipe", description="Codebook feature pipeline over binary feature containers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--height", type=int, default=7)
    p.add_argument("--width", type=int, default=7)
    p.add_argument("--depth", type=int, default=32)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--label-rule", default=None,
                   help="comma-separated private/public per cluster (default: alternating)")
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("pool", help="tensor file -> pooled + normalized feature vectors")
    p.add_argument("--tensor", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("kmeans-fit", help="fit a codebook on a feature-vector file")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, default=250)
    p.add_argument("--max-iterations", type=int, default=300)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--init", default="kmeans_plus_plus", choices=("kmeans_plus_plus", "random_points"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="tensor file + codebook -> encoded feature vectors")
    p.add_argument("--tensor", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fuse", help="concatenate two feature-vector files row-wise")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-lr", help="train the logistic-regression model")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("grid-search", help="cross-validated search over C")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--c-values", default="1:50",
                   help="comma-separated values and/or inclusive a:b integer ranges")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional table file")

    p = sub.add_parser("predict", help="predict labels for a feature-vector file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate a model against a labeled feature-vector file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", default=None, help="optional report file")

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("k-sweep", help="run the pipeline core for several codebook sizes")
    p.add_argument("--config", required=True)
    p.add_argument("--k", required=True, help="comma-separated codebook sizes")

    return parser


def _cmd_synth(args) -> int:
    from .errors import DataError
    from .fileio import LABEL_TOKENS
    from .synthetic import SyntheticSpec, generate

    if args.label_rule is None:
        rule = tuple(1 if i % 2 == 0 else -1 for i in range(args.clusters))
    else:
        tokens = [t.strip() for t in args.label_rule.split(",")]
        for token in tokens:
            if token not in LABEL_TOKENS:
                raise DataError(f"unknown label {token!r} in --label-rule")
        rule = tuple(LABEL_TOKENS[t] for t in tokens)
    spec = SyntheticSpec(
        n_train=args.n_train,
        n_test=args.n_test,
        height=args.height,
        width=args.width,
        depth=args.depth,
        n_latent_clusters=args.clusters,
        label_rule=rule,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    dataset = generate(spec, args.out_dir)
    for path in (dataset.train_tensor, dataset.test_tensor, dataset.train_labels, dataset.test_labels):
        print(f"wrote {path}")
    return 0


def _cmd_pool(args) -> int:
    from .fileio import read_tensor_file, write_vector_file
    from .pooling import compute_initial_features

    features = compute_initial_features(read_tensor_file(args.tensor))
    write_vector_file(features, args.out)
    print(f"wrote {args.out} ({features.count} x {features.dim})")
    return 0


def _cmd_kmeans_fit(args) -> int:
    from .fileio import read_vector_file
    from .kmeans import KMeansConfig, fit_codebook_restarts, write_codebook_file

    config = KMeansConfig(
        k=args.k,
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        seed=args.seed,
        init=args.init,
    )
    codebook = fit_codebook_restarts(read_vector_file(args.features), config, args.restarts)
    write_codebook_file(codebook, args.out)
    print(
        f"wrote {args.out} (k={codebook.k}, dim={codebook.dim}, "
        f"inertia={codebook.inertia:.6g}, iterations={codebook.iterations_run})"
    )
    return 0


def _cmd_encode(args) -> int:
    from .encoding import encode_dataset

    encoded = encode_dataset(args.tensor, args.codebook, args.out)
    print(f"wrote {args.out} ({encoded.count} x {encoded.dim})")
    return 0


def _cmd_fuse(args) -> int:
    from .fileio import read_vector_file, write_vector_file
    from .fusion import serial_fuse

    fused = serial_fuse(read_vector_file(args.first), read_vector_file(args.second))
    write_vector_file(fused, args.out)
    print(f"wrote {args.out} ({fused.count} x {fused.dim})")
    return 0


def _cmd_train_lr(args) -> int:
    from .classifier import train, write_model_file
    from .fileio import read_labels, read_vector_file

    features = read_vector_file(args.features)
    y = read_labels(args.labels).vector_for(features.sample_ids)
    model = train(features.data, y, C=args.c, tol=args.tol, max_iter=args.max_iter)
    write_model_file(model, args.out)
    meta = model.train_meta
    print(
        f"wrote {args.out} (dim={model.dim}, C={model.C:g}, "
        f"iterations={meta['iterations']}, objective={meta['final_objective']:.6g})"
    )
    return 0


def _cmd_grid_search(args) -> int:
    from .classifier import GridSearchConfig, grid_search
    from .fileio import read_labels, read_vector_file
    from .pipeline import parse_c_values

    features = read_vector_file(args.features)
    y = read_labels(args.labels).vector_for(features.sample_ids)
    config = GridSearchConfig(c_values=parse_c_values(args.c_values), folds=args.folds, seed=args.seed)
    result = grid_search(features.data, y, config)
    lines = [f"c={row.c:g} mean_accuracy={row.mean_accuracy!r}" for row in result.rows]
    lines.append(f"best_c={result.best_c:g}")
    print("\n".join(lines))
    if args.out:
        from pathlib import Path

        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_predict(args) -> int:
    from .classifier import predict, read_model_file
    from .fileio import read_vector_file, write_labels

    features = read_vector_file(args.features)
    model = read_model_file(args.model)
    labels, _ = predict(model, features.data)
    write_labels(zip(features.sample_ids, labels.tolist()), args.out)
    print(f"wrote {args.out} ({features.count} predictions)")
    return 0


def _cmd_eval(args) -> int:
    from .classifier import evaluate, read_model_file
    from .fileio import read_labels, read_vector_file
    from .pipeline import eval_report_lines

    features = read_vector_file(args.features)
    model = read_model_file(args.model)
    y = read_labels(args.labels).vector_for(features.sample_ids)
    report = evaluate(model, features.data, y)
    lines = eval_report_lines(report, features.count)
    print("\n".join(lines))
    if args.out:
        from pathlib import Path

        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_pipeline(args) -> int:
    from .pipeline import load_pipeline_config, run_pipeline

    result = run_pipeline(load_pipeline_config(args.config))
    print(f"accuracy={result['accuracy']!r}")
    print(f"best_c={result['best_c']:g}")
    print(f"manifest={result['manifest_path']}")
    return 0


def _cmd_k_sweep(args) -> int:
    from .errors import DataError
    from .pipeline import load_pipeline_config, run_k_sweep

    try:
        k_values = tuple(int(part) for part in args.k.split(",") if part.strip())
    except ValueError as exc:
        raise DataError(f"bad k list {args.k!r}") from exc
    config = load_pipeline_config(args.config)
    rows = run_k_sweep(config, k_values)
    for k, accuracy in rows:
        print(f"k={k} accuracy={accuracy!r}")
    print(f"table={config.output_dir / 'k_sweep.txt'}")
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "pool": _cmd_pool,
    "kmeans-fit": _cmd_kmeans_fit,
    "encode": _cmd_encode,
    "fuse": _cmd_fuse,
    "train-lr": _cmd_train_lr,
    "grid-search": _cmd_grid_search,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
    "k-sweep": _cmd_k_sweep,
}


def main(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"udfpipe: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)

    from .errors import DataError

    stage = args.command
    try:
        return _HANDLERS[stage](args)
    except _UsageError as exc:
        print(f"{stage}: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"{stage}: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"{stage}: error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"{stage}: internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
