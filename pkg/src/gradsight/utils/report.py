import csv
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from loguru import logger

from ..models import MetricReport, PRCurve

METRIC_COLUMNS = ["name", "Fm", "Pmax", "meanPR", "AUC", "MAE", "RMSE", "CE"]
CURVE_COLUMNS = ["threshold", "P", "R", "notR"]


def write_rows(rows: Iterable[Dict[str, object]], columns: Sequence[str], csv_path: str | Path) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_metrics_csv(reports: Sequence[MetricReport], csv_path: str | Path) -> None:
    write_rows((r.as_row() for r in reports), METRIC_COLUMNS, csv_path)
    logger.info(f"💾 Saved {len(reports)} metric row(s) to {csv_path}")


def write_curve_csv(curve: PRCurve, csv_path: str | Path) -> None:
    write_rows(curve.rows(), CURVE_COLUMNS, csv_path)


def read_rows(csv_path: str | Path) -> List[Dict[str, str]]:
    with open(csv_path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
