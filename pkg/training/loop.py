from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError, DataError, NumericalError, ShapeMismatchError
from hsdc.cube import Datacube, normalize_max
from runlog import debug, log
from tensornet.adam import AdamHyper, AdamState, adam_step
from tensornet.architectures import ArchConfig
from tensornet.network import Network
from tensornet.ops import softmax, softmax_cross_entropy
from training.augment import AugmentParams, expand_training_set, expanded_labels
from training.split import SplitPlan

PREDICT_CHUNK = 32
HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc", "seconds")


@dataclass(frozen=True)
class EarlyStopping:
    enabled: bool = False
    patience: int = 10


@dataclass(frozen=True)
class TrainConfig:
    arch: ArchConfig
    adam: AdamHyper = field(default_factory=AdamHyper)
    augment: AugmentParams = field(default_factory=AugmentParams)
    augment_factor: int = 11
    early_stopping: EarlyStopping = field(default_factory=EarlyStopping)
    # Without early stopping the final fit also uses the validation split.
    fit_on_validation: bool = True
    seed: int = 0

    def validate(self) -> None:
        self.arch.validate()
        self.adam.validate()
        self.augment.validate()
        if self.augment_factor < 1:
            raise ConfigError("augment_factor must be >= 1")
        if self.early_stopping.enabled and self.early_stopping.patience < 1:
            raise ConfigError("early_stopping.patience must be >= 1")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False
    updates: int = 0
    seconds: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(record) for record in self.records], columns=list(HISTORY_COLUMNS))


def write_history_csv(history: TrainHistory, destination: Path | str) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    history.to_frame().to_csv(path, index=False, float_format="%.10g")
    return path


def _stack(cubes: list[Datacube]) -> np.ndarray:
    if not cubes:
        return np.zeros((0, 0, 0, 0))
    shapes = {cube.shape for cube in cubes}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"cubes have differing shapes: {sorted(shapes)}")
    return np.stack([cube.values for cube in cubes])


def _logits_in_chunks(net: Network, x: np.ndarray, chunk: int = PREDICT_CHUNK) -> np.ndarray:
    return np.concatenate([net.logits(x[i : i + chunk], "infer") for i in range(0, len(x), chunk)])


def _evaluate(net: Network, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if len(x) == 0:
        return float("nan"), float("nan")
    logits = _logits_in_chunks(net, x)
    loss, _ = softmax_cross_entropy(logits, y)
    return loss, float(np.mean(logits.argmax(axis=1) == y))


def train(
    net: Network,
    cubes: list[Datacube],
    labels: list[int] | np.ndarray,
    plan: SplitPlan,
    cfg: TrainConfig,
) -> tuple[Network, TrainHistory]:
    """Mini-batch Adam on max-normalized, pre-augmented cubes.

    With early stopping the validation loss is monitored each epoch and the
    best-epoch parameters are restored at the end.
    """
    cfg.validate()
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(cubes):
        raise DataError(f"{len(labels)} labels for {len(cubes)} cubes")
    if not plan.train:
        raise DataError("training split is empty")
    early = cfg.early_stopping
    if early.enabled and not plan.validation:
        raise ConfigError("early stopping needs a non-empty validation split")

    fit_indices = list(plan.train)
    if cfg.fit_on_validation and not early.enabled:
        fit_indices += list(plan.validation)
    normalized = {i: normalize_max(cubes[i]) for i in fit_indices + list(plan.validation)}

    expanded = expand_training_set(
        [normalized[i] for i in fit_indices], cfg.augment, cfg.augment_factor, seed=cfg.seed
    )
    x_train = _stack(expanded)
    y_train = expanded_labels(labels[fit_indices], cfg.augment_factor)
    x_val = _stack([normalized[i] for i in plan.validation])
    y_val = labels[list(plan.validation)]
    log(
        "train",
        "start",
        family=cfg.arch.family,
        samples=len(x_train),
        validation=len(x_val),
        epochs=cfg.adam.epochs,
        batch=cfg.adam.batch_size,
        early_stopping=early.enabled,
    )

    state = AdamState()
    history = TrainHistory()
    best_loss = np.inf
    best_state: dict | None = None
    waited = 0
    started = time.perf_counter()
    batch = cfg.adam.batch_size
    for epoch in range(1, cfg.adam.epochs + 1):
        epoch_start = time.perf_counter()
        order = np.random.default_rng([int(cfg.seed) & (2**64 - 1), epoch]).permutation(len(x_train))
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(order), batch):
            index = order[start : start + batch]
            logits = net.logits(x_train[index], "train")
            loss, grad = softmax_cross_entropy(logits, y_train[index])
            if not np.isfinite(loss):
                raise NumericalError(f"training loss became non-finite at epoch {epoch}")
            net.backward(grad)
            history.updates += 1
            adam_step(net.parameters(), net.gradients(), state, cfg.adam, history.updates)
            loss_sum += loss * len(index)
            correct += int(np.sum(logits.argmax(axis=1) == y_train[index]))

        val_loss, val_acc = _evaluate(net, x_val, y_val)
        record = EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / len(order),
            train_acc=correct / len(order),
            val_loss=val_loss,
            val_acc=val_acc,
            seconds=time.perf_counter() - epoch_start,
        )
        history.records.append(record)
        debug("train", "epoch", **asdict(record))

        if early.enabled:
            if val_loss < best_loss:
                best_loss = val_loss
                best_state = net.snapshot()
                history.best_epoch = epoch
                waited = 0
            else:
                waited += 1
                if waited >= early.patience:
                    history.stopped_early = True
                    break

    if best_state is not None:
        net.restore(best_state)
    history.seconds = time.perf_counter() - started
    last = history.records[-1]
    log(
        "train",
        "done",
        epochs=len(history.records),
        best_epoch=history.best_epoch if history.best_epoch is not None else "-",
        train_loss=last.train_loss,
        train_acc=last.train_acc,
        seconds=history.seconds,
    )
    return net, history


def predict_batch(net: Network, cubes: list[Datacube], chunk: int = PREDICT_CHUNK) -> np.ndarray:
    """Inference-mode class probabilities for max-normalized cubes, one row per cube."""
    if not cubes:
        raise DataError("no cubes to predict")
    x = _stack([normalize_max(cube) for cube in cubes])
    return softmax(_logits_in_chunks(net, x, chunk))
