from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from analysis.ensemble import average_probabilities
from config import CnnConfig, SvmConfig
from features.extract import FeatureParams, extract, feature_matrix
from hsdc.cube import Datacube
from hsdc.manifest import Manifest
from metrics.evaluation import MetricsReport, evaluate
from runlog import log
from svm.multiclass import SvmModel, predict_scores, train_multiclass
from svm.selection import cross_validate, default_grid
from tensornet.architectures import build_network
from tensornet.network import Network
from training.loop import TrainHistory, predict_batch, train
from training.split import SplitPlan, split_dataset

SVM_METHODS = {"svm-spatial": "spatial", "svm-spectral": "spectral", "svm-spatio-spectral": "spatio-spectral"}
CNN_METHODS = ("vgg", "resnet", "resnet-b")
ENSEMBLE_METHOD = "ensemble"
METHODS = (*SVM_METHODS, *CNN_METHODS, ENSEMBLE_METHOD)


@dataclass
class Dataset:
    cubes: list[Datacube]
    labels: np.ndarray
    class_names: tuple[str, ...]

    @classmethod
    def from_manifest(cls, manifest: Manifest) -> Dataset:
        cubes = manifest.load_cubes()
        log("eval", "dataset loaded", cubes=len(cubes), classes=manifest.num_classes, root=manifest.root)
        return cls(cubes, np.asarray(manifest.labels, dtype=np.int64), tuple(manifest.class_names))

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return self.cubes[0].shape


def feature_table(dataset: Dataset, mode: str, params: FeatureParams) -> np.ndarray:
    started = time.perf_counter()
    matrix = feature_matrix([extract(cube, mode, params) for cube in dataset.cubes])
    log("features", "extracted", mode=mode, rows=matrix.shape[0], dims=matrix.shape[1], seconds=time.perf_counter() - started)
    return matrix


def svm_plan(labels: np.ndarray, cfg: SvmConfig, seed: int) -> SplitPlan:
    return split_dataset(labels, (1.0 - cfg.test_fraction, 0.0, cfg.test_fraction), seed)


def run_svm(
    matrix: np.ndarray,
    dataset: Dataset,
    cfg: SvmConfig,
    seed: int,
) -> tuple[SvmModel, MetricsReport]:
    """Split, cross-validate the grid on the training part, fit and score the test part."""
    plan = svm_plan(dataset.labels, cfg, seed)
    train_idx, test_idx = list(plan.train), list(plan.test)
    x_train, y_train = matrix[train_idx], dataset.labels[train_idx]
    grid = default_grid(matrix.shape[1], cfg.c_grid, cfg.gamma_multipliers)
    started = time.perf_counter()
    hyper = cross_validate(x_train, y_train, grid, n_iter=cfg.cv_iterations, seed=seed)
    model = train_multiclass(x_train, y_train, hyper, dataset.class_names)
    train_seconds = time.perf_counter() - started
    started = time.perf_counter()
    scores = predict_scores(model, matrix[test_idx])
    test_seconds = time.perf_counter() - started
    report = evaluate(scores, dataset.labels[test_idx], dataset.class_names, train_seconds, test_seconds)
    log("svm", "evaluated", seed=seed, C=hyper.C, gamma=hyper.gamma, top1=report.top1, top2=report.top2)
    return model, report


def cnn_plan(labels: np.ndarray, cfg: CnnConfig, seed: int) -> SplitPlan:
    return split_dataset(labels, cfg.split, seed)


def fit_cnn(dataset: Dataset, cfg: CnnConfig, plan: SplitPlan, seed: int) -> tuple[Network, TrainHistory]:
    arch = cfg.arch(dataset.num_classes, dataset.input_shape)
    net = build_network(arch, seed=seed)
    return train(net, dataset.cubes, dataset.labels, plan, cfg.train_config(arch, seed))


def score_networks(
    nets: list[Network],
    dataset: Dataset,
    plan: SplitPlan,
    train_seconds: float = 0.0,
) -> MetricsReport:
    test_cubes = [dataset.cubes[i] for i in plan.test]
    started = time.perf_counter()
    probabilities = average_probabilities([predict_batch(net, test_cubes) for net in nets])
    test_seconds = time.perf_counter() - started
    return evaluate(probabilities, dataset.labels[list(plan.test)], dataset.class_names, train_seconds, test_seconds)


def run_cnn(dataset: Dataset, cfg: CnnConfig, seed: int) -> tuple[Network, TrainHistory, MetricsReport]:
    plan = cnn_plan(dataset.labels, cfg, seed)
    net, history = fit_cnn(dataset, cfg, plan, seed)
    report = score_networks([net], dataset, plan, history.seconds)
    log("cnn", "evaluated", family=cfg.family, seed=seed, top1=report.top1, top2=report.top2)
    return net, history, report


def run_ensemble(dataset: Dataset, cfg: CnnConfig, seed: int) -> tuple[list[Network], MetricsReport]:
    """Trains one network per family on the same split and averages their softmax outputs."""
    plan = cnn_plan(dataset.labels, cfg, seed)
    nets: list[Network] = []
    train_seconds = 0.0
    for family in CNN_METHODS:
        member_cfg = replace(cfg, family=family, stem_width=None, stage_widths=None, blocks_per_stage=None)
        net, history = fit_cnn(dataset, member_cfg, plan, seed)
        nets.append(net)
        train_seconds += history.seconds
    report = score_networks(nets, dataset, plan, train_seconds)
    log("ensemble", "evaluated", seed=seed, members=len(nets), top1=report.top1, top2=report.top2)
    return nets, report
