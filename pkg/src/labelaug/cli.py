"""Command-line surface: search, construct, train, preview, metrics.

Every command is a pure function of (inputs, config, seed); outputs are
byte-stable across reruns. Exit codes: 0 ok, 2 config error, 3 evaluator
error, 4 IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, load_config
from .data import (LabeledDataset, SplitSpec, load_cifar10_binary,
                   load_records, make_synthetic, split_train_val)
from .errors import (ConfigError, DataFormatError, EvaluatorError,
                     InvalidInputError, LabelAugError)
from .evaluator import (BuiltinEvaluator, ClassifierConfig,
                        DatasetLevelEvaluator, ExternalEvaluator,
                        pretrain_classifier, save_classifier)
from .ops import OP_NAMES
from .policy import (CompositePolicy, LabelPolicy, ScoreParams,
                     construct_policy, load_policy, save_policy, topk_policy)
from .predictor import load_predictor, save_predictor
from .rng import SplitMix64, hash_seed
from .search import (SearchConfig, load_history, metrics_over_iterations,
                     run_search)
from .train import TrainRunConfig, train_with_policy

CONFIG_ENV_VAR = "LABELAUG_CONFIG"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3
EXIT_IO = 4


def _require_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        raise ConfigError(
            f"no config file: pass --config or set {CONFIG_ENV_VAR}")
    return load_config(path)


def _build_dataset(cfg: RunConfig, seed_offset: int = 0) -> LabeledDataset:
    kind = cfg["dataset.kind"]
    if kind == "synthetic":
        plan = cfg.get("dataset.plan") or None
        return make_synthetic(
            cfg["dataset.classes"], cfg["dataset.per_class"],
            size=cfg["dataset.height"], channels=cfg["dataset.channels"],
            plan=list(plan) if plan else None, noise=cfg["dataset.noise"],
            jitter=cfg["dataset.jitter"], seed=cfg["seed"] + seed_offset)
    paths = cfg.get("dataset.paths")
    if not paths:
        raise ConfigError(f"dataset.kind={kind} requires dataset.paths")
    for p in paths:
        if not os.path.exists(p):
            raise ConfigError(f"dataset path does not exist: {p}")
    if kind == "cifar10":
        return load_cifar10_binary(paths)
    if kind == "records":
        return load_records(paths, cfg["dataset.height"], cfg["dataset.width"],
                            cfg["dataset.channels"], cfg["dataset.classes"])
    raise ConfigError(f"unknown dataset.kind {kind!r}")


def _split(cfg: RunConfig, ds: LabeledDataset):
    spec = SplitSpec(cfg["split.mode"].replace("_", "-"),
                     cfg["split.val_size"], seed=hash_seed(cfg["seed"], 17) % 2**32)
    return split_train_val(ds, spec)


def _file_sha(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def cmd_search(args) -> int:
    cfg = apply_overrides(_require_config(args), {
        "seed": args.seed,
        "search.iterations": args.iterations,
        "search.warmup": args.warmup,
    })
    out_dir = args.out_dir
    ds = _build_dataset(cfg)
    train_ds, val_ds = _split(cfg, ds)

    if cfg["evaluator.kind"] == "builtin":
        clf = pretrain_classifier(
            train_ds,
            ClassifierConfig(hidden=tuple(cfg["classifier.hidden"]),
                             epochs=cfg["classifier.epochs"],
                             lr=cfg["classifier.lr"],
                             batch_size=cfg["classifier.batch"]),
            seed=hash_seed(cfg["seed"], 23) % 2**32)
        evaluator = BuiltinEvaluator(clf, val_ds)
    elif cfg["evaluator.kind"] == "external":
        command = cfg.get("evaluator.command")
        if not command:
            raise ConfigError("evaluator.kind=external requires evaluator.command")
        clf = None
        evaluator = ExternalEvaluator(
            list(command), num_labels=ds.num_classes,
            val_spec=json.loads(cfg["evaluator.val_spec"]))
    else:
        raise ConfigError(f"unknown evaluator.kind {cfg['evaluator.kind']!r}")

    if not cfg["search.label_aware"]:
        if not isinstance(evaluator, BuiltinEvaluator):
            raise ConfigError(
                "label_aware=false needs the builtin evaluator")
        evaluator = DatasetLevelEvaluator(evaluator)

    os.makedirs(out_dir, exist_ok=True)
    search_cfg = SearchConfig(
        total_iterations=cfg["search.iterations"],
        warmup_iterations=cfg["search.warmup"],
        n_mutate=cfg["search.n_mutate"],
        n_unexplored=cfg["search.n_unexplored"],
        n_explored=cfg["search.n_explored"],
        master_seed=cfg["seed"],
        predictor_epochs=cfg["predictor.epochs"],
        predictor_lr=cfg["predictor.lr"],
        predictor_batch=cfg["predictor.batch"])
    history_path = os.path.join(out_dir, "history.jsonl")
    try:
        history, final_predictor = run_search(
            search_cfg, evaluator, history_path=history_path,
            resume=args.resume)
    finally:
        if isinstance(evaluator, ExternalEvaluator):
            evaluator.close()

    save_predictor(final_predictor, os.path.join(out_dir, "predictor.json"))
    if clf is not None:
        save_classifier(clf, os.path.join(out_dir, "classifier.json"))
    meta = {
        "version": __version__,
        "config_digest": cfg.digest(),
        "num_labels": evaluator.num_labels,
        "label_aware": bool(cfg["search.label_aware"]),
        "records": len(history),
        "iterations": cfg["search.iterations"],
        "warmup": cfg["search.warmup"],
    }
    with open(os.path.join(out_dir, "search_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    print(f"search complete: {len(history)} records -> {history_path}")
    return EXIT_OK


def cmd_construct(args) -> int:
    predictor = load_predictor(args.predictor)
    digest = _file_sha(args.predictor)
    if args.topk is not None:
        policy = topk_policy(predictor, args.topk,
                             config_digest=f"topk:{args.topk}:{digest}")
    else:
        params = ScoreParams(alpha=args.alpha, n_cand=args.n_cand)
        policy = construct_policy(
            predictor, params,
            config_digest=f"mrmr:{args.alpha}:{args.n_cand}:{digest}")
    if args.broadcast_labels:
        from .policy import broadcast_policy

        policy = broadcast_policy(policy, args.broadcast_labels)
    save_policy(policy, args.out)
    if args.histogram:
        from . import report
        report.write_histogram_csv(policy, args.histogram + ".csv")
        report.render_histogram_png(policy, args.histogram + ".png")
    print(f"policy written to {args.out} "
          f"({policy.method}, {policy.num_labels} labels, "
          f"{policy.n_cand} triples/label)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = apply_overrides(_require_config(args), {
        "seed": args.seed,
        "train.seeds": args.seeds,
        "train.epochs": args.epochs,
    })
    policy = None
    mode = args.baseline or "policy"
    if mode == "policy":
        if not args.policy:
            raise ConfigError("either --policy or --baseline is required")
        policy = load_policy(args.policy)

    if cfg["dataset.kind"] == "synthetic":
        train_ds = _build_dataset(cfg)
        test_ds = _build_dataset(cfg, seed_offset=1000)
    else:
        train_ds = _build_dataset(cfg)
        if not args.test_paths:
            raise ConfigError("non-synthetic training needs --test-paths")
        test_cfg = apply_overrides(cfg, {"dataset.paths": args.test_paths})
        test_ds = _build_dataset(test_cfg)

    run_cfg = TrainRunConfig(
        epochs=cfg["train.epochs"], lr=cfg["train.lr"],
        batch_size=cfg["train.batch"], hidden=tuple(cfg["train.hidden"]),
        seeds=tuple(hash_seed(cfg["seed"], 29, i) % 2**32
                    for i in range(cfg["train.seeds"])),
        mode=mode)
    report_doc = train_with_policy(train_ds, test_ds, run_cfg, policy,
                                   config_digest=cfg.digest())

    from .report import format_train_table
    table = format_train_table(report_doc)
    if args.out:
        with open(args.out + ".json", "w") as fh:
            json.dump(report_doc, fh, indent=2, sort_keys=True)
        with open(args.out + ".txt", "w") as fh:
            fh.write(table)
    sys.stdout.write(table)
    return EXIT_OK


def _load_image(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        arr = np.load(path)
    else:
        import matplotlib.image as mpimg

        arr = mpimg.imread(path)
        if arr.dtype != np.uint8:
            arr = (np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
        if arr.ndim == 3 and arr.shape[2] == 4:
            arr = arr[:, :, :3]
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidInputError(f"{path}: not a uint8 (H, W, 1|3) image")
    return arr


def _save_image(arr: np.ndarray, path: str) -> None:
    if path.endswith(".npy"):
        np.save(path, arr)
        return
    import matplotlib.image as mpimg

    img = arr[:, :, 0] if arr.shape[2] == 1 else arr
    mpimg.imsave(path, img, cmap="gray" if arr.shape[2] == 1 else None,
                 vmin=0, vmax=255)


def cmd_preview(args) -> int:
    from .ops import apply_triple_traced
    from .train import augment_sample

    policy = load_policy(args.policy)
    image = _load_image(args.image)
    rng = SplitMix64(hash_seed(args.seed, 31))
    triples = policy.for_label(args.label).triples
    triple = triples[rng.randbelow(len(triples))]
    out, trace = apply_triple_traced(image, triple, rng)
    _save_image(out, args.out)
    lines = [f"label {args.label} triple "
             f"{[OP_NAMES[t] for t in triple]} (seed {args.seed})"]
    for name, magnitude in trace:
        lines.append(f"  {name}: {magnitude}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_metrics(args) -> int:
    history = load_history(args.history)
    num_labels = args.num_labels or (max(r.label for r in history.records) + 1)
    metrics = metrics_over_iterations(
        history, num_labels, [history.last_iteration() + 1],
        split_seed=args.split_seed)[0][1]
    doc = {
        "spearman": metrics.spearman,
        "mae": metrics.mae,
        "train_size": metrics.train_size,
        "test_size": metrics.test_size,
        "degenerate": metrics.degenerate,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.curve:
        total = history.last_iteration() + 1
        first = max(5, total // args.points)
        iters = sorted({int(round(t)) for t in
                        np.linspace(first, total, args.points)})
        rows = metrics_over_iterations(history, num_labels, iters,
                                       split_seed=args.split_seed)
        from . import report
        report.write_metrics_csv(rows, args.curve + ".csv")
        report.render_metrics_png(rows, args.curve + ".png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelaug",
        description="Label-aware augmentation policy search")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--threads", type=int, default=1, metavar="N",
        help="cap on worker threads; results never depend on it "
             "(the current pipeline runs single-threaded)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run stage-1 exploration")
    p.add_argument("--config", help=f"config file (or ${CONFIG_ENV_VAR})")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--resume", action="store_true",
                   help="continue from an existing history prefix")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("construct", help="run stage-2 policy construction")
    p.add_argument("--predictor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=2.5)
    p.add_argument("--n-cand", type=int, default=100)
    p.add_argument("--topk", type=int,
                   help="top-k ablation instead of greedy mRMR")
    p.add_argument("--broadcast-labels", type=int, metavar="N",
                   help="replicate a 1-label (label-invariant) policy to N labels")
    p.add_argument("--histogram", metavar="PREFIX",
                   help="write composition report PREFIX.png and PREFIX.csv")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("train", help="train the desk classifier with a policy")
    p.add_argument("--config", help=f"config file (or ${CONFIG_ENV_VAR})")
    p.add_argument("--policy")
    p.add_argument("--baseline", choices=["none", "random"],
                   help="control arm instead of a policy file")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, help="number of training seeds")
    p.add_argument("--epochs", type=int)
    p.add_argument("--test-paths", nargs="+")
    p.add_argument("--out", metavar="PREFIX",
                   help="write PREFIX.json and PREFIX.txt")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("preview", help="apply a policy draw to one image")
    p.add_argument("--policy", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--label", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("metrics", help="predictor holdout quality report")
    p.add_argument("--history", required=True)
    p.add_argument("--num-labels", type=int)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--curve", metavar="PREFIX",
                   help="write quality-over-iterations PREFIX.png/.csv")
    p.add_argument("--points", type=int, default=8)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EvaluatorError as exc:
        print(f"evaluator error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except (OSError, DataFormatError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LabelAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
