from __future__ import annotations

import json

import numpy as np
import pytest

from errors import DataError, ShapeMismatchError
from svm.kernel import KernelRowCache, rbf, rbf_matrix
from svm.model_io import load_svm_model, model_to_dict, save_svm_model
from svm.multiclass import predict_labels, predict_scores, scores_from_decisions, train_multiclass
from svm.selection import cross_validate, default_grid
from svm.smo import KKT_TOLERANCE, SvmHyper, train_binary

_XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
_XOR_Y = np.array([1.0, 1.0, -1.0, -1.0])


def _blobs(rng, per_class: int = 12, spread: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    centers = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 1.0], [0.0, 4.0, -1.0]])
    x = np.vstack([center + rng.normal(0.0, spread, size=(per_class, 3)) for center in centers])
    labels = np.repeat(np.arange(3), per_class)
    return x, labels


def test_rbf_basic_properties(rng) -> None:
    a, b = rng.normal(size=4), rng.normal(size=4)

    assert rbf(a, a, 0.5) == 1.0
    assert rbf(a, b, 0.5) == pytest.approx(rbf(b, a, 0.5))
    assert 0.0 < rbf(a, b, 0.5) <= 1.0
    assert rbf([0.0, 0.0], [1.0, 1.0], 1.0) == pytest.approx(np.exp(-2.0))


def test_rbf_rejects_unequal_lengths() -> None:
    with pytest.raises(ValueError, match="equal length"):
        rbf([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ValueError, match="equal length"):
        rbf_matrix(np.zeros((2, 3)), np.zeros((2, 2)), 1.0)


def test_rbf_gram_matrix_is_positive_semidefinite(rng) -> None:
    x = rng.normal(size=(20, 5))
    gram = rbf_matrix(x, x, 0.3)

    np.testing.assert_allclose(gram, gram.T)
    assert np.linalg.eigvalsh(gram).min() >= -1e-10
    np.testing.assert_allclose(np.diag(gram), 1.0)


def test_kernel_row_cache_matches_matrix(rng) -> None:
    x = rng.normal(size=(6, 3))
    cache = KernelRowCache(x, 0.7)

    np.testing.assert_allclose(cache.row(2), rbf_matrix(x, x, 0.7)[2])
    cache.row(2)
    assert len(cache) == 1


def test_svm_hyper_requires_positive_values() -> None:
    with pytest.raises(ValueError, match="C must be > 0"):
        SvmHyper(C=0.0, gamma=1.0)
    with pytest.raises(ValueError, match="gamma must be > 0"):
        SvmHyper(C=1.0, gamma=-1.0)


def test_binary_svm_separates_xor() -> None:
    model = train_binary(_XOR_X, _XOR_Y, SvmHyper(C=10.0, gamma=1.0))

    np.testing.assert_array_equal(np.sign(model.decision(_XOR_X)), _XOR_Y)


def _full_alpha(model, x: np.ndarray) -> np.ndarray:
    # Multipliers for every training row; rows that are not support vectors get zero.
    alpha = np.zeros(x.shape[0])
    for vector, coef in zip(model.support_vectors, model.dual_coef):
        row = int(np.flatnonzero(np.all(x == vector, axis=1))[0])
        alpha[row] = abs(coef)
    return alpha


def _noisy_halves(rng, n: int = 30) -> tuple[np.ndarray, np.ndarray]:
    x = rng.normal(size=(n, 2))
    y = np.where(x[:, 0] + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    return x, y


def test_binary_svm_satisfies_dual_constraints(rng) -> None:
    x, y = _noisy_halves(rng)
    hyper = SvmHyper(C=2.0, gamma=0.5)

    model = train_binary(x, y, hyper)
    alpha = _full_alpha(model, x)

    assert alpha.shape == (30,)
    assert np.all(alpha >= 0.0)
    assert np.all(alpha <= hyper.C)
    assert np.count_nonzero(alpha) == model.support_vectors.shape[0]
    assert float(alpha @ y) == pytest.approx(0.0, abs=1e-9)


def test_binary_svm_kkt_conditions_at_default_tolerance(rng) -> None:
    x, y = _noisy_halves(rng)
    hyper = SvmHyper(C=5.0, gamma=0.5)

    model = train_binary(x, y, hyper)
    alpha = _full_alpha(model, x)
    margins = y * model.decision(x)
    free = (alpha > 0) & (alpha < hyper.C)

    assert free.any()
    assert np.all(np.abs(margins[free] - 1.0) <= KKT_TOLERANCE)
    assert np.all(margins[alpha == 0] >= 1.0 - KKT_TOLERANCE)
    assert np.all(margins[alpha == hyper.C] <= 1.0 + KKT_TOLERANCE)


def test_binary_svm_margin_conditions(rng) -> None:
    x = rng.normal(size=(25, 2))
    y = np.where(x[:, 1] > 0, 1.0, -1.0)
    hyper = SvmHyper(C=5.0, gamma=0.5)

    model = train_binary(x, y, hyper, tolerance=1e-6)
    margins = y * model.decision(x)
    support = {tuple(v) for v in model.support_vectors}
    for point, margin in zip(x, margins):
        if tuple(point) not in support:
            assert margin >= 1.0 - 1e-3


def test_binary_svm_rejects_bad_labels() -> None:
    with pytest.raises(ValueError, match="-1 or \\+1"):
        train_binary(_XOR_X, np.array([0.0, 1.0, 1.0, 0.0]), SvmHyper(C=1.0, gamma=1.0))
    with pytest.raises(DataError, match="both classes"):
        train_binary(_XOR_X, np.ones(4), SvmHyper(C=1.0, gamma=1.0))
    with pytest.raises(DataError, match=">= 2"):
        train_binary(_XOR_X[:1], np.ones(1), SvmHyper(C=1.0, gamma=1.0))


def test_multiclass_fits_separable_blobs(rng) -> None:
    x, labels = _blobs(rng)
    model = train_multiclass(x, labels, SvmHyper(C=10.0, gamma=0.5), class_names=("a", "b", "c"))

    assert model.num_classes == 3
    assert set(model.pair_models) == {(0, 1), (0, 2), (1, 2)}
    np.testing.assert_array_equal(predict_labels(model, x), labels)

    scores = predict_scores(model, x)
    assert scores.shape == (x.shape[0], 3)
    np.testing.assert_array_equal(np.argmax(scores, axis=1), labels)


def test_multiclass_labels_survive_per_feature_affine_rescaling(rng) -> None:
    x, labels = _blobs(rng, spread=0.5)
    hyper = SvmHyper(C=10.0, gamma=0.5)
    scale = np.array([3.0, 0.01, 250.0])
    offset = np.array([-7.0, 40.0, 0.5])

    plain = predict_labels(train_multiclass(x, labels, hyper), x)
    rescaled = predict_labels(train_multiclass(x * scale + offset, labels, hyper), x * scale + offset)

    np.testing.assert_array_equal(rescaled, plain)


def test_multiclass_relabeling_permutes_predictions(rng) -> None:
    x, labels = _blobs(rng)
    perm = np.array([2, 0, 1])
    hyper = SvmHyper(C=10.0, gamma=0.5)

    original = predict_labels(train_multiclass(x, labels, hyper), x)
    relabeled = predict_labels(train_multiclass(x, perm[labels], hyper), x)

    np.testing.assert_array_equal(relabeled, perm[original])


def test_xor_training_accuracy_does_not_drop_as_c_grows() -> None:
    accuracies = []
    for c in (0.01, 0.1, 1.0, 10.0):
        model = train_binary(_XOR_X, _XOR_Y, SvmHyper(C=c, gamma=1.0))
        accuracies.append(float(np.mean(np.sign(model.decision(_XOR_X)) == _XOR_Y)))

    assert all(later >= earlier for earlier, later in zip(accuracies, accuracies[1:]))
    assert accuracies[-1] == 1.0


def test_duplicated_training_sample_keeps_the_decisions() -> None:
    hyper = SvmHyper(C=10.0, gamma=1.0)
    single = train_binary(_XOR_X, _XOR_Y, hyper)
    doubled = train_binary(np.vstack([_XOR_X, _XOR_X[:1]]), np.append(_XOR_Y, _XOR_Y[0]), hyper)

    np.testing.assert_array_equal(np.sign(doubled.decision(_XOR_X)), np.sign(single.decision(_XOR_X)))
    np.testing.assert_array_equal(np.sign(doubled.decision(_XOR_X)), _XOR_Y)


def test_multiclass_rejects_one_class_and_shape_mismatch(rng) -> None:
    x = rng.normal(size=(5, 2))
    with pytest.raises(DataError, match=">= 2 classes"):
        train_multiclass(x, np.zeros(5, dtype=int), SvmHyper(C=1.0, gamma=1.0))
    with pytest.raises(ShapeMismatchError):
        train_multiclass(x, np.zeros(4, dtype=int), SvmHyper(C=1.0, gamma=1.0))


def test_predict_scores_checks_feature_width(rng) -> None:
    x, labels = _blobs(rng, per_class=4)
    model = train_multiclass(x, labels, SvmHyper(C=1.0, gamma=0.5))
    with pytest.raises(ShapeMismatchError, match="expects 3 features"):
        predict_scores(model, np.zeros((2, 4)))


def test_vote_ties_break_on_decision_sums() -> None:
    # Each class wins exactly one pair; class 2 wins its pair by the widest margin.
    decisions = {
        (0, 1): np.array([0.2]),
        (1, 2): np.array([0.1]),
        (0, 2): np.array([-3.0]),
    }
    scores = scores_from_decisions(decisions, (0, 1, 2), 1)

    assert np.all(np.floor(scores) == 1)
    assert int(np.argmax(scores[0])) == 2


def test_default_grid_scales_gamma_by_dimension() -> None:
    grid = default_grid(40, c_values=(1.0, 10.0), gamma_multipliers=(0.1, 1.0))

    assert [h.C for h in grid] == [1.0, 1.0, 10.0, 10.0]
    assert [h.gamma for h in grid] == pytest.approx([0.0025, 0.025, 0.0025, 0.025])


def test_cross_validate_is_deterministic(rng) -> None:
    x, labels = _blobs(rng, per_class=8, spread=1.5)
    grid = default_grid(3, c_values=(0.1, 10.0), gamma_multipliers=(0.1, 1.0))

    first = cross_validate(x, labels, grid, n_iter=2, seed=9)
    second = cross_validate(x, labels, grid, n_iter=2, seed=9)
    assert first == second
    assert first in grid


def test_cross_validate_prefers_a_sensible_gamma(rng) -> None:
    x, labels = _blobs(rng)
    sensible = SvmHyper(C=1.0, gamma=1.0 / x.shape[1])
    # Smaller C would win a tie, so only a strictly better score picks the sensible point.
    degenerate = SvmHyper(C=0.5, gamma=1e6)

    assert cross_validate(x, labels, [degenerate, sensible], n_iter=3, seed=4) == sensible


def test_cross_validate_edge_cases(rng) -> None:
    x, labels = _blobs(rng, per_class=4)
    only = SvmHyper(C=3.0, gamma=0.2)

    assert cross_validate(x, labels, [only]) is only
    with pytest.raises(ValueError, match="must not be empty"):
        cross_validate(x, labels, [])
    labels = labels.copy()
    labels[-1] = 7
    with pytest.raises(DataError, match="at least 2 samples"):
        cross_validate(x, labels, default_grid(3))


def test_svm_model_round_trip_is_exact(tmp_path, rng) -> None:
    x, labels = _blobs(rng)
    model = train_multiclass(x, labels, SvmHyper(C=10.0, gamma=0.5), class_names=("a", "b", "c"))
    dest = tmp_path / "model.json"

    save_svm_model(model, dest)
    loaded = load_svm_model(dest)

    assert loaded.class_names == ("a", "b", "c")
    assert loaded.hyper == model.hyper
    queries = rng.normal(size=(10, 3))
    np.testing.assert_array_equal(predict_scores(loaded, queries), predict_scores(model, queries))


def test_svm_model_rejects_other_schema_versions(tmp_path, rng) -> None:
    x, labels = _blobs(rng, per_class=4)
    data = model_to_dict(train_multiclass(x, labels, SvmHyper(C=1.0, gamma=0.5)))
    data["schema_version"] = 99
    dest = tmp_path / "model.json"
    dest.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(DataError, match="schema version 99"):
        load_svm_model(dest)
