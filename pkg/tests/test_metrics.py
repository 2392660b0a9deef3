from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from errors import ConfigError, DataError, ShapeMismatchError
from metrics.evaluation import (
    SCALAR_METRICS,
    MetricsReport,
    confusion,
    evaluate,
    macro_prf,
    per_class_prf,
    render_confusion,
    topk_accuracy,
)
from metrics.report import TABLE_COLUMNS, merge_summaries, read_summary, write_report
from metrics.repetition import (
    repeat_protocol,
    summarize,
    summary_frame,
    write_boxplot_csv,
    write_summary,
)


def _report(top1: float, top2: float = 1.0) -> MetricsReport:
    return MetricsReport(
        top1=top1,
        top2=top2,
        macro_precision=top1,
        macro_recall=top1,
        macro_f=top1,
        confusion=np.array([[2, 0], [1, 1]]),
        class_names=("early", "late"),
        train_seconds=1.5,
        test_seconds=0.25,
    )


def test_confusion_counts() -> None:
    matrix = confusion([0, 1, 1, 2], [0, 1, 0, 2], 3)
    np.testing.assert_array_equal(matrix, [[1, 0, 0], [1, 1, 0], [0, 0, 1]])
    assert matrix.sum() == 4


def test_confusion_edge_cases() -> None:
    np.testing.assert_array_equal(confusion([], [], 2), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="predicted labels"):
        confusion([0, 1], [0, 2], 2)
    with pytest.raises(ValueError, match="true labels"):
        confusion([-1, 1], [0, 1], 2)
    with pytest.raises(ShapeMismatchError):
        confusion([0, 1], [0], 2)


def test_topk_accuracy() -> None:
    probs = np.array([[0.5, 0.3, 0.2], [0.1, 0.6, 0.3]])
    labels = [1, 2]

    assert topk_accuracy(probs, labels, 1) == 0.0
    assert topk_accuracy(probs, labels, 2) == 1.0
    assert topk_accuracy(probs, labels, 3) == 1.0


def test_topk_ties_rank_the_lower_class_first() -> None:
    probs = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert topk_accuracy(probs, [0, 1], 1) == 0.5


def test_topk_validates_arguments() -> None:
    probs = np.full((2, 3), 1 / 3)
    with pytest.raises(ValueError, match="k must lie"):
        topk_accuracy(probs, [0, 1], 4)
    with pytest.raises(ShapeMismatchError):
        topk_accuracy(probs, [0], 1)
    with pytest.raises(DataError, match="empty"):
        topk_accuracy(np.zeros((0, 3)), [], 1)


def test_macro_prf_all_predicted_as_one_class() -> None:
    matrix = confusion([0, 0, 1, 1], [0, 0, 0, 0], 2)

    precision, recall, f = per_class_prf(matrix)
    np.testing.assert_allclose(precision, [0.5, 0.0])
    np.testing.assert_allclose(recall, [1.0, 0.0])
    np.testing.assert_allclose(f, [2 / 3, 0.0])
    assert macro_prf(matrix) == pytest.approx((0.25, 0.5, 1 / 3))


def test_macro_prf_perfect_classifier() -> None:
    assert macro_prf(np.diag([3, 4, 5])) == pytest.approx((1.0, 1.0, 1.0))


def test_evaluate_builds_a_report() -> None:
    probs = np.array([[0.7, 0.2, 0.1], [0.2, 0.3, 0.5], [0.1, 0.8, 0.1], [0.4, 0.5, 0.1]])
    report = evaluate(probs, [0, 1, 1, 0], class_names=("a", "b", "c"), train_seconds=2.0)

    assert report.top1 == pytest.approx(0.5)
    assert report.top2 == pytest.approx(1.0)
    np.testing.assert_array_equal(report.confusion, [[1, 1, 0], [0, 1, 1], [0, 0, 0]])
    assert report.class_names == ("a", "b", "c")
    assert tuple(report.scalars()) == SCALAR_METRICS
    assert report.scalars()["train_seconds"] == 2.0


def test_evaluate_two_classes_top2_is_one(rng) -> None:
    probs = rng.dirichlet(np.ones(2), size=6)
    assert evaluate(probs, [0, 1, 0, 1, 1, 0]).top2 == 1.0


def test_render_confusion_uses_class_names() -> None:
    text = render_confusion(np.array([[12, 0], [3, 9]]), ("early", "late"))
    lines = text.splitlines()

    assert "early" in lines[0] and "late" in lines[0]
    assert lines[2].split() == ["early", "|", "12", "0"]
    assert render_confusion(np.array([[1]])).splitlines()[2].split() == ["0", "|", "1"]


def test_summarize_mean_and_std() -> None:
    reports = [_report(0.8), _report(0.9), _report(1.0)]

    population = summarize("svm-spatial", [0, 1, 2], reports)
    assert population.mean["top1"] == pytest.approx(0.9)
    assert population.std["top1"] == pytest.approx(np.sqrt(2 / 3) * 0.1)
    assert population.std["top2"] == 0.0
    assert population.representative_index() == 1
    assert population.repetitions == 3

    sample = summarize("svm-spatial", [0, 1, 2], reports, ddof=1)
    assert sample.std["top1"] == pytest.approx(0.1)


def test_summarize_rejects_bad_input() -> None:
    with pytest.raises(ConfigError, match="at least one"):
        summarize("m", [], [])
    with pytest.raises(ConfigError, match="ddof"):
        summarize("m", [0], [_report(0.5)], ddof=1)


def test_repeat_protocol_passes_consecutive_seeds() -> None:
    seen: list[int] = []

    def run(seed: int) -> MetricsReport:
        seen.append(seed)
        return _report(seed / 10)

    summary = repeat_protocol(run, 3, base_seed=4, method="cnn-vgg")
    assert sorted(seen) == [4, 5, 6]
    assert summary.seeds == (4, 5, 6)
    assert summary.mean["top1"] == pytest.approx(0.5)

    threaded = repeat_protocol(lambda seed: _report(seed / 10), 3, base_seed=4, workers=2)
    assert [r.top1 for r in threaded.reports] == [r.top1 for r in summary.reports]

    with pytest.raises(ConfigError):
        repeat_protocol(run, 0, base_seed=0)


def test_summary_frame_layout() -> None:
    frame = summary_frame(summarize("svm-spectral", [7, 8], [_report(0.5), _report(1.0)]))

    assert frame["row"].tolist() == ["rep0", "rep1", "mean", "std"]
    assert frame.loc[frame["row"] == "mean", "top1"].item() == pytest.approx(0.75)
    assert list(frame.columns) == ["method", "row", "seed", *SCALAR_METRICS]


def test_write_summary_files(tmp_path) -> None:
    summary = summarize("cnn-resnet", [0, 1, 2], [_report(0.8), _report(0.9), _report(1.0)])

    paths = write_summary(summary, tmp_path / "eval")
    assert paths["summary"].name == "cnn-resnet_summary.csv"
    text = paths["confusion"].read_text(encoding="utf-8")
    assert "repetition seed: 1" in text
    assert "top-1: 90.00%" in text
    assert "early" in text
    assert len(pd.read_csv(paths["summary"])) == 5


def test_boxplot_csv_has_one_column_per_method(tmp_path) -> None:
    first = summarize("a", [0, 1], [_report(0.5), _report(0.7)])
    second = summarize("b", [0], [_report(0.9)])

    path = write_boxplot_csv([first, second], tmp_path / "boxplot.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["a", "b"]
    assert frame["a"].tolist() == [0.5, 0.7]
    assert frame["b"].iloc[0] == 0.9
    assert np.isnan(frame["b"].iloc[1])


def test_report_merges_mean_rows(tmp_path) -> None:
    paths = []
    for method, values in (("svm-spatial", [0.8123, 0.9001]), ("cnn-resnet-b", [0.95, 0.99])):
        summary = summarize(method, [0, 1], [_report(v) for v in values])
        paths.append(write_summary(summary, tmp_path)["summary"])

    out = write_report(paths, tmp_path / "report" / "report.csv")
    table = pd.read_csv(out)

    assert tuple(table.columns) == TABLE_COLUMNS
    assert table["method"].tolist() == ["svm-spatial", "cnn-resnet-b"]
    assert table["top1_pct"].tolist() == [85.62, 97.0]
    assert table["precision"].tolist() == [0.8562, 0.97]


def test_report_rejects_foreign_csvs(tmp_path) -> None:
    bogus = tmp_path / "bogus.csv"
    bogus.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(DataError, match="not a summary CSV"):
        read_summary(bogus)
    with pytest.raises(DataError, match="no summary mean rows"):
        merge_summaries([])
