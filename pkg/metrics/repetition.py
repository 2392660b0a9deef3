from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError
from metrics.evaluation import SCALAR_METRICS, MetricsReport, render_confusion
from runlog import log

SUMMARY_ROWS = ("mean", "std")


@dataclass(frozen=True)
class RepetitionSummary:
    method: str
    seeds: tuple[int, ...]
    reports: tuple[MetricsReport, ...]
    mean: dict[str, float]
    std: dict[str, float]
    ddof: int = 0

    @property
    def repetitions(self) -> int:
        return len(self.reports)

    def representative_index(self) -> int:
        """Repetition whose top-1 is closest to the mean (first on ties)."""
        top1 = np.array([report.top1 for report in self.reports])
        return int(np.argmin(np.abs(top1 - self.mean["top1"])))

    def representative(self) -> MetricsReport:
        return self.reports[self.representative_index()]


def summarize(method: str, seeds: list[int], reports: list[MetricsReport], ddof: int = 0) -> RepetitionSummary:
    if not reports:
        raise ConfigError("at least one repetition is required")
    if ddof not in (0, 1) or (ddof == 1 and len(reports) < 2):
        raise ConfigError("std ddof must be 0, or 1 with at least 2 repetitions")
    table = np.array([[report.scalars()[name] for name in SCALAR_METRICS] for report in reports])
    return RepetitionSummary(
        method=method,
        seeds=tuple(seeds),
        reports=tuple(reports),
        mean=dict(zip(SCALAR_METRICS, table.mean(axis=0).tolist())),
        std=dict(zip(SCALAR_METRICS, table.std(axis=0, ddof=ddof).tolist())),
        ddof=ddof,
    )


def repeat_protocol(
    run: Callable[[int], MetricsReport],
    repetitions: int,
    base_seed: int,
    method: str = "method",
    ddof: int = 0,
    workers: int = 1,
) -> RepetitionSummary:
    """Runs `run(seed)` for seeds base_seed .. base_seed + R - 1 and aggregates."""
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    seeds = [base_seed + offset for offset in range(repetitions)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, seeds))
    else:
        reports = [run(seed) for seed in seeds]
    for seed, report in zip(seeds, reports):
        log("eval", "repetition", method=method, seed=seed, top1=report.top1, top2=report.top2)
    summary = summarize(method, seeds, reports, ddof)
    log(
        "eval",
        "summary",
        method=method,
        repetitions=repetitions,
        top1_mean=summary.mean["top1"],
        top1_std=summary.std["top1"],
    )
    return summary


def summary_frame(summary: RepetitionSummary) -> pd.DataFrame:
    """One row per repetition followed by mean and std rows."""
    rows = [
        {"method": summary.method, "row": f"rep{index}", "seed": seed, **report.scalars()}
        for index, (seed, report) in enumerate(zip(summary.seeds, summary.reports))
    ]
    rows.append({"method": summary.method, "row": "mean", "seed": None, **summary.mean})
    rows.append({"method": summary.method, "row": "std", "seed": None, **summary.std})
    return pd.DataFrame(rows, columns=["method", "row", "seed", *SCALAR_METRICS])


def write_summary(summary: RepetitionSummary, out_dir: Path | str) -> dict[str, Path]:
    """Summary CSV plus the representative confusion matrix as text."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    csv_path = root / f"{summary.method}_summary.csv"
    summary_frame(summary).to_csv(csv_path, index=False, float_format="%.10g")
    representative = summary.representative()
    text_path = root / f"{summary.method}_confusion.txt"
    text_path.write_text(
        f"method: {summary.method}\n"
        f"repetition seed: {summary.seeds[summary.representative_index()]}\n"
        f"top-1: {100 * representative.top1:.2f}%\n\n"
        + render_confusion(representative.confusion, representative.class_names),
        encoding="utf-8",
    )
    return {"summary": csv_path, "confusion": text_path}


def write_boxplot_csv(summaries: list[RepetitionSummary], destination: Path | str) -> Path:
    """Wide CSV of per-repetition top-1 values, one column per method."""
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {summary.method: pd.Series([report.top1 for report in summary.reports]) for summary in summaries}
    )
    frame.to_csv(path, index=False, float_format="%.10g")
    return path
