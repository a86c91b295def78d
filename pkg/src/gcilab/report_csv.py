from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Union

from .models import CSV_COLUMNS, InequalityReport


def write_reports(path: Union[str, Path], reports: Iterable[InequalityReport]) -> int:
    """Write one row per report in the fixed column order; returns the row count."""
    out = Path(path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    rows = 0
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerow(report.to_row())
            rows += 1
    return rows


def read_reports(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
