from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from errors import ConfigError, DataError, NumericalError, ShapeMismatchError
from hsdc.cube import Datacube
from tensornet.adam import AdamHyper
from tensornet.architectures import ArchConfig, build_network
from tensornet.ops import softmax_cross_entropy
from training import loop
from training.augment import (
    AugmentParams,
    augment,
    expand_training_set,
    expanded_labels,
    shift,
)
from training.loop import (
    HISTORY_COLUMNS,
    EarlyStopping,
    TrainConfig,
    predict_batch,
    train,
    write_history_csv,
)
from training.split import SplitPlan, split_dataset

_SHAPE = (8, 12, 3)


def _band_cubes(rng, per_class: int = 4) -> tuple[list[Datacube], np.ndarray]:
    cubes = []
    labels = []
    for label, bright in ((0, 0), (1, 2)):
        for _ in range(per_class):
            values = rng.uniform(0.05, 0.15, size=_SHAPE)
            values[:, :, bright] += 0.9
            cubes.append(Datacube(values, 950.0, 10.0))
            labels.append(label)
    return cubes, np.array(labels)


def _arch() -> ArchConfig:
    return ArchConfig(
        "vgg", _SHAPE, 2, stem_width=4, stage_widths=(4,), blocks_per_stage=(1,), head_hidden=8
    )


def _config(epochs: int, factor: int = 1, **overrides) -> TrainConfig:
    values = {
        "arch": _arch(),
        "adam": AdamHyper(lr0=0.04, batch_size=4, epochs=epochs),
        "augment_factor": factor,
        "seed": 7,
    }
    values.update(overrides)
    return TrainConfig(**values)


def _all_train(n: int) -> SplitPlan:
    return SplitPlan(train=tuple(range(n)), validation=(), test=())


def test_split_rounding_on_published_class_size() -> None:
    labels = np.repeat([0, 1], 232)
    plan = split_dataset(labels, (0.65, 0.20, 0.15), seed=1)

    for label in (0, 1):
        assert sum(labels[i] == label for i in plan.test) == 35
        assert sum(labels[i] == label for i in plan.validation) == 46
        assert sum(labels[i] == label for i in plan.train) == 151
    plan.check(len(labels))


def test_split_is_a_seeded_partition() -> None:
    labels = np.repeat([0, 1, 2], [10, 7, 9])

    first = split_dataset(labels, (0.6, 0.2, 0.2), seed=3)
    assert first == split_dataset(labels, (0.6, 0.2, 0.2), seed=3)
    assert first != split_dataset(labels, (0.6, 0.2, 0.2), seed=4)
    first.check(len(labels))
    assert first.all_indices() == list(range(len(labels)))
    assert list(first.train) == sorted(first.train)


def test_split_rejects_bad_fractions_and_small_classes() -> None:
    with pytest.raises(ConfigError, match="sum to 1"):
        split_dataset([0, 0, 0], (0.5, 0.2, 0.2), seed=0)
    with pytest.raises(ConfigError, match="non-negative"):
        split_dataset([0, 0, 0], (1.2, -0.2, 0.0), seed=0)
    with pytest.raises(DataError, match="class 1 has 2 samples"):
        split_dataset([0, 0, 0, 1, 1], (0.6, 0.2, 0.2), seed=0)


def test_split_plan_check_detects_overlap() -> None:
    with pytest.raises(DataError, match="overlap"):
        SplitPlan((0, 1), (1,), (2,)).check(3)
    with pytest.raises(DataError, match="exactly 4"):
        SplitPlan((0, 1), (2,), ()).check(4)


def test_shift_fills_vacated_pixels_with_zero() -> None:
    values = np.arange(12, dtype=np.float64).reshape(3, 4, 1) + 1.0

    moved = shift(values, 1, -1)
    np.testing.assert_array_equal(moved[0], 0.0)
    np.testing.assert_array_equal(moved[:, 3], 0.0)
    np.testing.assert_array_equal(moved[1:, :3], values[:2, 1:])
    np.testing.assert_array_equal(shift(values, 3, 0), 0.0)


def test_augment_shift_stays_within_bounds(rng) -> None:
    values = np.zeros((25, 50, 2))
    values[12, 25] = 1.0
    cube = Datacube(values, 950.0, 10.0)
    params = AugmentParams(allow_hflip=False, allow_vflip=False, max_shift_fraction=0.08)
    assert params.shift_bounds(25, 50) == (2, 4)

    for _ in range(40):
        out = augment(cube, params, rng)
        r, c = np.argwhere(out.values[:, :, 0] > 0)[0]
        assert abs(r - 12) <= 2
        assert abs(c - 25) <= 4


def test_augment_flips_only_when_allowed(rng) -> None:
    cube = Datacube(rng.uniform(size=(6, 9, 2)), 950.0, 10.0)
    frozen = AugmentParams(allow_hflip=False, allow_vflip=False, max_shift_fraction=0.0)
    np.testing.assert_array_equal(augment(cube, frozen, rng).values, cube.values)

    flips = AugmentParams(max_shift_fraction=0.0)
    candidates = [
        cube.values,
        cube.values[:, ::-1],
        cube.values[::-1, :],
        cube.values[::-1, ::-1],
    ]
    for _ in range(10):
        out = augment(cube, flips, rng).values
        assert any(np.array_equal(out, candidate) for candidate in candidates)


def test_augment_validates_shift_fraction() -> None:
    with pytest.raises(ConfigError, match="max_shift_fraction"):
        AugmentParams(max_shift_fraction=0.5).validate()


def test_expand_training_set_layout(rng) -> None:
    cubes = [Datacube(rng.uniform(size=(16, 48, 3)), 950.0, 10.0) for _ in range(10)]

    expanded = expand_training_set(cubes, AugmentParams(), factor=11, seed=2)
    assert len(expanded) == 110
    for index, cube in enumerate(cubes):
        assert expanded[index * 11] is cube
    np.testing.assert_array_equal(expanded_labels(list(range(10)), 11)[:12], [0] * 11 + [1])

    again = expand_training_set(cubes, AugmentParams(), factor=11, seed=2)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(expanded, again))


def test_expand_training_set_is_per_cube_seeded(rng) -> None:
    cubes = [Datacube(rng.uniform(size=(16, 48, 3)), 950.0, 10.0) for _ in range(3)]

    full = expand_training_set(cubes, AugmentParams(), factor=4, seed=5)
    head = expand_training_set(cubes[:2], AugmentParams(), factor=4, seed=5)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(full, head))


def test_expand_training_set_rejects_zero_factor(rng) -> None:
    with pytest.raises(ConfigError, match="factor"):
        expand_training_set([], AugmentParams(), factor=0)


def test_train_fits_a_separable_set(rng) -> None:
    cubes, labels = _band_cubes(rng)
    net = build_network(_arch(), seed=1)

    net, history = train(net, cubes, labels, _all_train(len(cubes)), _config(epochs=60))

    assert len(history.records) == 60
    assert history.updates == 60 * 2
    assert history.records[-1].train_loss < history.records[0].train_loss
    assert np.isnan(history.records[-1].val_loss)
    probs = predict_batch(net, cubes)
    np.testing.assert_array_equal(probs.argmax(axis=1), labels)


def test_train_loss_falls_within_five_epochs(rng) -> None:
    cubes, labels = _band_cubes(rng)
    net = build_network(_arch(), seed=1)

    _, history = train(net, cubes, labels, _all_train(len(cubes)), _config(epochs=5))
    losses = [record.train_loss for record in history.records]

    assert len(losses) == 5
    assert all(np.isfinite(losses))
    assert losses[-1] < losses[0]
    assert float(np.mean(losses[2:])) < float(np.mean(losses[:2]))


def test_train_is_deterministic(rng) -> None:
    cubes, labels = _band_cubes(rng)
    plan = _all_train(len(cubes))

    first, _ = train(build_network(_arch(), seed=1), cubes, labels, plan, _config(epochs=3, factor=2))
    second, _ = train(build_network(_arch(), seed=1), cubes, labels, plan, _config(epochs=3, factor=2))

    a, b = first.parameters(), second.parameters()
    assert all(np.array_equal(a[name], b[name]) for name in a)


def test_train_uses_validation_when_not_stopping_early(rng) -> None:
    cubes, labels = _band_cubes(rng)
    plan = SplitPlan(train=(0, 1, 2, 4, 5, 6), validation=(3, 7), test=())

    adam = AdamHyper(lr0=0.01, batch_size=1, epochs=1)

    _, merged = train(build_network(_arch()), cubes, labels, plan, _config(epochs=1, adam=adam))
    _, held_out = train(
        build_network(_arch()),
        cubes,
        labels,
        plan,
        _config(epochs=1, adam=adam, fit_on_validation=False),
    )

    assert merged.updates == 8
    assert held_out.updates == 6
    assert np.isfinite(merged.records[0].val_loss)


def test_early_stopping_restores_the_best_epoch(rng) -> None:
    cubes, labels = _band_cubes(rng)
    n = len(cubes)
    # The validation half repeats the training cubes with swapped labels.
    all_cubes = cubes + cubes
    all_labels = np.concatenate([labels, 1 - labels])
    plan = SplitPlan(train=tuple(range(n)), validation=tuple(range(n, 2 * n)), test=())
    patience = 2
    cfg = _config(epochs=50, early_stopping=EarlyStopping(enabled=True, patience=patience))

    net, history = train(build_network(_arch(), seed=1), all_cubes, all_labels, plan, cfg)

    assert history.stopped_early
    assert len(history.records) == history.best_epoch + patience
    best = min(record.val_loss for record in history.records)
    assert history.records[history.best_epoch - 1].val_loss == best
    probs = predict_batch(net, all_cubes[n:])
    restored = -np.mean(np.log(probs[np.arange(n), all_labels[n:]]))
    assert restored == pytest.approx(best, rel=1e-9)


def test_early_stopping_needs_validation(rng) -> None:
    cubes, labels = _band_cubes(rng)
    cfg = _config(epochs=1, early_stopping=EarlyStopping(enabled=True, patience=2))
    with pytest.raises(ConfigError, match="non-empty validation"):
        train(build_network(_arch()), cubes, labels, _all_train(len(cubes)), cfg)


def test_train_rejects_bad_inputs(rng) -> None:
    cubes, labels = _band_cubes(rng)
    with pytest.raises(DataError, match="training split is empty"):
        train(build_network(_arch()), cubes, labels, SplitPlan((), (), tuple(range(8))), _config(epochs=1))
    with pytest.raises(DataError, match="7 labels for 8 cubes"):
        train(build_network(_arch()), cubes, labels[:7], _all_train(8), _config(epochs=1))


def test_train_raises_on_non_finite_loss(monkeypatch, rng) -> None:
    cubes, labels = _band_cubes(rng)

    def _nan_loss(logits, y):
        return float("nan"), np.zeros_like(logits)

    monkeypatch.setattr(loop, "softmax_cross_entropy", _nan_loss)
    with pytest.raises(NumericalError, match="epoch 1"):
        train(build_network(_arch()), cubes, labels, _all_train(len(cubes)), _config(epochs=1))


def test_predict_batch_rows(rng) -> None:
    cubes, _ = _band_cubes(rng)
    net = build_network(_arch(), seed=2)
    train(net, cubes, np.array([0, 0, 0, 0, 1, 1, 1, 1]), _all_train(8), _config(epochs=1))

    probs = predict_batch(net, cubes + [cubes[0]])
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(probs[-1], probs[0], rtol=1e-12)

    order = rng.permutation(len(cubes))
    permuted = predict_batch(net, [cubes[i] for i in order], chunk=3)
    np.testing.assert_allclose(permuted, probs[:-1][order], rtol=1e-12)


def test_predict_batch_rejects_empty_and_mixed_shapes(rng) -> None:
    net = build_network(_arch())
    with pytest.raises(DataError, match="no cubes"):
        predict_batch(net, [])
    mixed = [Datacube(np.ones(_SHAPE), 950.0, 10.0), Datacube(np.ones((8, 10, 3)), 950.0, 10.0)]
    with pytest.raises(ShapeMismatchError, match="differing shapes"):
        predict_batch(net, mixed)


def test_history_csv(tmp_path, rng) -> None:
    cubes, labels = _band_cubes(rng)
    _, history = train(build_network(_arch()), cubes, labels, _all_train(8), _config(epochs=2))

    path = write_history_csv(history, tmp_path / "out" / "history.csv")
    frame = pd.read_csv(path)
    assert tuple(frame.columns) == HISTORY_COLUMNS
    assert frame["epoch"].tolist() == [1, 2]


def test_softmax_loss_matches_recorded_training_loss(rng) -> None:
    cubes, labels = _band_cubes(rng)
    plan = SplitPlan(train=(0, 1, 2, 4, 5, 6), validation=(3, 7), test=())
    cfg = _config(epochs=1, fit_on_validation=False)
    net, history = train(build_network(_arch()), cubes, labels, plan, cfg)

    probs = predict_batch(net, [cubes[3], cubes[7]])
    logits = np.log(probs)
    loss, _ = softmax_cross_entropy(logits, labels[[3, 7]])
    assert loss == pytest.approx(history.records[0].val_loss, rel=1e-9)
