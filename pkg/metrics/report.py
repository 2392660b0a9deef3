from __future__ import annotations

from pathlib import Path

import pandas as pd

from errors import DataError
from runlog import log

TABLE_COLUMNS = ("method", "top1_pct", "top2_pct", "precision", "recall", "f_score")
_REQUIRED = {"method", "row", "top1", "top2", "macro_precision", "macro_recall", "macro_f"}


def read_summary(source: Path | str) -> pd.DataFrame:
    path = Path(source)
    frame = pd.read_csv(path)
    missing = _REQUIRED - set(frame.columns)
    if missing:
        raise DataError(f"{path} is not a summary CSV (missing {', '.join(sorted(missing))})")
    return frame


def merge_summaries(frames: list[pd.DataFrame]) -> pd.DataFrame:
    """Mean rows of several summaries as one table.

    Accuracies are percentages with 2 decimals; precision, recall and f-score
    stay fractions with 4 decimals.
    """
    rows = []
    for frame in frames:
        for _, row in frame[frame["row"] == "mean"].iterrows():
            rows.append(
                {
                    "method": row["method"],
                    "top1_pct": round(100 * float(row["top1"]), 2),
                    "top2_pct": round(100 * float(row["top2"]), 2),
                    "precision": round(float(row["macro_precision"]), 4),
                    "recall": round(float(row["macro_recall"]), 4),
                    "f_score": round(float(row["macro_f"]), 4),
                }
            )
    if not rows:
        raise DataError("no summary mean rows to merge")
    return pd.DataFrame(rows, columns=list(TABLE_COLUMNS))


def write_report(sources: list[Path | str], destination: Path | str) -> Path:
    table = merge_summaries([read_summary(source) for source in sources])
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    log("report", "written", path=path, methods=len(table))
    return path
