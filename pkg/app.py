from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from analysis.ensemble import average_probabilities
from analysis.saliency import region_contrast, saliency_map, write_saliency_csv, write_saliency_pgm
from config import RunConfig, load_config
from errors import ConfigError, DataError, SegmentationError
from experiments import (
    CNN_METHODS,
    ENSEMBLE_METHOD,
    METHODS,
    SVM_METHODS,
    Dataset,
    cnn_plan,
    feature_table,
    run_cnn,
    run_ensemble,
    run_svm,
)
from features.extract import FEATURE_MODES, extract, write_feature_csv
from features.mask import compute_mask
from hsdc.cube import normalize_max, ss_image
from hsdc.manifest import read_manifest
from metrics.evaluation import evaluate, render_confusion
from metrics.repetition import repeat_protocol, summarize, write_boxplot_csv, write_summary
from metrics.report import write_report
from runlog import error, log
from svm.model_io import save_svm_model
from synthgen.dataset import generate_dataset
from tensornet.architectures import FAMILIES
from tensornet.checkpoint import load_checkpoint, save_checkpoint
from training.loop import predict_batch, write_history_csv


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ricehsi", description="Hyperspectral seed classification experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides config and RICEHSI_OUTPUT_DIR)")
    common.add_argument("--seed", type=int, help="master seed")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", type=Path, required=True, help="dataset directory or manifest.tsv")

    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    synth.add_argument("--kind", help="benchmark kind")
    synth.add_argument("--size", help="desk or full")
    synth.add_argument("--per-class", type=int, dest="per_class")
    synth.add_argument("--rotation", action="store_true", help="allow random seed orientation")
    synth.add_argument("--workers", type=int)

    features = sub.add_parser("features", parents=[common, data], help="extract a feature CSV")
    features.add_argument("--mode", choices=FEATURE_MODES)

    svm = sub.add_parser("train-svm", parents=[common, data], help="train and test one SVM")
    svm.add_argument("--mode", choices=FEATURE_MODES)

    cnn = sub.add_parser("train-cnn", parents=[common, data], help="train and test one network")
    cnn.add_argument("--family", choices=FAMILIES)
    cnn.add_argument("--epochs", type=int)

    ev = sub.add_parser("eval", parents=[common, data], help="repeat methods over seeds")
    ev.add_argument("--method", action="append", choices=METHODS, help="repeatable; default all")
    ev.add_argument("--repetitions", type=int)

    ens = sub.add_parser("ensemble", parents=[common, data], help="average saved networks on the test split")
    ens.add_argument("--checkpoint", type=Path, action="append", required=True)

    sal = sub.add_parser("saliency", parents=[common, data], help="write saliency maps")
    sal.add_argument("--checkpoint", type=Path, required=True)
    sal.add_argument("--index", type=int, action="append", help="manifest row; repeatable (default 0)")
    sal.add_argument("--target", type=int, help="class index (default: predicted class)")

    rep = sub.add_parser("report", parents=[common], help="merge summary CSVs into one table")
    rep.add_argument("--summary", type=Path, action="append", required=True)
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags win over the config file."""
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    dataset = cfg.dataset
    for flag, key in (("kind", "kind"), ("size", "size"), ("per_class", "cubes_per_class"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            dataset = replace(dataset, **{key: value})
    if getattr(args, "rotation", False):
        dataset = replace(dataset, allow_rotation=True)
    cfg = replace(cfg, dataset=dataset)
    if getattr(args, "mode", None) is not None:
        cfg = replace(cfg, svm=replace(cfg.svm, mode=args.mode))
    if getattr(args, "family", None) is not None:
        cfg = replace(cfg, cnn=replace(cfg.cnn, family=args.family))
    if getattr(args, "epochs", None) is not None:
        if args.epochs < 1:
            raise ConfigError("--epochs must be >= 1")
        cfg = replace(cfg, cnn=replace(cfg.cnn, adam=replace(cfg.cnn.adam, epochs=args.epochs)))
    if getattr(args, "repetitions", None) is not None:
        if args.repetitions < 1:
            raise ConfigError("--repetitions must be >= 1")
        cfg = replace(cfg, metrics=replace(cfg.metrics, repetitions=args.repetitions))
    if cfg.dataset.cubes_per_class < 1 or cfg.dataset.workers < 1:
        raise ConfigError("--per-class and --workers must be >= 1")
    return cfg


def _dataset(args: argparse.Namespace) -> Dataset:
    return Dataset.from_manifest(read_manifest(args.data))


def cmd_synth(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = cfg.dataset.to_spec()
    manifest = generate_dataset(spec, cfg.seed, cfg.output_dir, workers=cfg.dataset.workers)
    log("synth", "done", cubes=len(manifest), classes=manifest.num_classes, out=cfg.output_dir)
    return EXIT_OK


def cmd_features(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = read_manifest(args.data)
    mode = cfg.svm.mode
    params = cfg.features.params()
    vectors = [extract(cube, mode, params) for cube in manifest.load_cubes()]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    destination = cfg.output_dir / f"features_{mode}.csv"
    write_feature_csv(vectors, manifest.labels, destination)
    log("features", "written", mode=mode, rows=len(vectors), path=destination)
    return EXIT_OK


def cmd_train_svm(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = _dataset(args)
    mode = cfg.svm.mode
    matrix = feature_table(dataset, mode, cfg.features.params())
    model, report = run_svm(matrix, dataset, cfg.svm, cfg.seed)
    out = cfg.output_dir / f"svm_{mode}"
    out.mkdir(parents=True, exist_ok=True)
    save_svm_model(model, out / "model.json")
    write_summary(summarize(f"svm-{mode}", [cfg.seed], [report]), out)
    log("svm", "done", mode=mode, top1=report.top1, top2=report.top2, macro_f=report.macro_f, out=out)
    return EXIT_OK


def cmd_train_cnn(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = _dataset(args)
    net, history, report = run_cnn(dataset, cfg.cnn, cfg.seed)
    out = cfg.output_dir / f"cnn_{cfg.cnn.family}"
    save_checkpoint(net, out / "checkpoint.hsnn")
    write_history_csv(history, out / "history.csv")
    write_summary(summarize(cfg.cnn.family, [cfg.seed], [report]), out)
    log(
        "cnn",
        "done",
        family=cfg.cnn.family,
        conv_layers=net.conv_layer_count(),
        params=net.parameter_count(),
        top1=report.top1,
        out=out,
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = _dataset(args)
    methods = args.method or list(METHODS)
    repetitions = cfg.metrics.repetitions
    summaries = []
    for method in methods:
        if method in SVM_METHODS:
            svm_cfg = replace(cfg.svm, mode=SVM_METHODS[method])
            matrix = feature_table(dataset, svm_cfg.mode, cfg.features.params())

            def run(seed: int, svm_cfg=svm_cfg, matrix=matrix):
                return run_svm(matrix, dataset, svm_cfg, seed)[1]

        elif method in CNN_METHODS:
            cnn_cfg = replace(cfg.cnn, family=method)

            def run(seed: int, cnn_cfg=cnn_cfg):
                return run_cnn(dataset, cnn_cfg, seed)[2]

        else:

            def run(seed: int):
                return run_ensemble(dataset, cfg.cnn, seed)[1]

        summaries.append(
            repeat_protocol(run, repetitions, cfg.seed, method=method, ddof=cfg.metrics.ddof, workers=cfg.metrics.workers)
        )
    out = cfg.output_dir / "eval"
    for summary in summaries:
        write_summary(summary, out)
    write_boxplot_csv(summaries, out / "boxplot_top1.csv")
    log("eval", "done", methods=len(summaries), repetitions=repetitions, out=out)
    return EXIT_OK


def cmd_ensemble(args: argparse.Namespace, cfg: RunConfig) -> int:
    dataset = _dataset(args)
    nets = [load_checkpoint(path)[0] for path in args.checkpoint]
    plan = cnn_plan(dataset.labels, cfg.cnn, cfg.seed)
    test_cubes = [dataset.cubes[i] for i in plan.test]
    test_labels = dataset.labels[list(plan.test)]
    outputs = []
    for path, net in zip(args.checkpoint, nets):
        probabilities = predict_batch(net, test_cubes)
        member = evaluate(probabilities, test_labels, dataset.class_names)
        log("ensemble", "member", checkpoint=path, top1=member.top1)
        outputs.append(probabilities)
    report = evaluate(average_probabilities(outputs), test_labels, dataset.class_names)
    write_summary(summarize(ENSEMBLE_METHOD, [cfg.seed], [report]), cfg.output_dir / "ensemble")
    log("ensemble", "done", members=len(nets), top1=report.top1, top2=report.top2)
    print(render_confusion(report.confusion, report.class_names), end="", flush=True)
    return EXIT_OK


def cmd_saliency(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = read_manifest(args.data)
    net, _ = load_checkpoint(args.checkpoint)
    out = cfg.output_dir / "saliency"
    for index in args.index or [0]:
        if not 0 <= index < len(manifest):
            raise ConfigError(f"--index {index} outside [0, {len(manifest)})")
        cube = manifest.load_cubes([index])[0]
        saliency = saliency_map(net, cube, args.target)
        stem = f"cube_{index:04d}"
        write_saliency_pgm(saliency, out / f"{stem}.pgm")
        write_saliency_csv(saliency, out / f"{stem}.csv")
        try:
            mask = compute_mask(ss_image(normalize_max(cube)), cfg.features.mask)
            contrast: float | str = region_contrast(saliency, mask.values)
        except SegmentationError:
            contrast = "-"
        log("saliency", "written", index=index, target=saliency.target_class, seed_contrast=contrast, path=out / f"{stem}.pgm")
    return EXIT_OK


def cmd_report(args: argparse.Namespace, cfg: RunConfig) -> int:
    write_report(args.summary, cfg.output_dir / "report.csv")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "features": cmd_features,
    "train-svm": cmd_train_svm,
    "train-cnn": cmd_train_cnn,
    "eval": cmd_eval,
    "ensemble": cmd_ensemble,
    "saliency": cmd_saliency,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        cfg = apply_overrides(load_config(args.config), args)
        return COMMANDS[stage](args, cfg)
    except ConfigError as exc:
        error(stage, f"failed: {exc}")
        return EXIT_CONFIG
    except DataError as exc:
        error(stage, f"failed: {exc}")
        return EXIT_DATA
    except RuntimeError as exc:
        # NumericalError and uninitialised network state both land here.
        error(stage, f"failed: {exc}")
        return EXIT_NUMERICAL
    except OSError as exc:
        error(stage, f"failed: {exc}")
        return EXIT_DATA
    except ValueError as exc:
        error(stage, f"failed: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
