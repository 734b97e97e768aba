"""CSV and JSON output of harness runs."""

import csv
import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from ..schemas.report import CSV_HEADER, ReportRow

log = logging.getLogger(__name__)


def make_rows(
    scenario: str,
    method: str,
    eta: float,
    seed: int,
    metrics: Mapping[str, float],
) -> List[ReportRow]:
    """One row per metric, in the mapping's order."""

    return [
        ReportRow(scenario=scenario, method=method, eta=eta, seed=seed, metric=name, value=value)
        for name, value in metrics.items()
    ]


def write_csv(rows: Iterable[ReportRow], path: Union[str, Path]) -> Path:
    """
    Write rows under the fixed header. Floats use their shortest round-trip
    form, so identical rows always give identical bytes.
    """

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, list(CSV_HEADER), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _cell(value) for name, value in row.dict().items()})
    return target


def read_csv(path: Union[str, Path]) -> List[ReportRow]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return [ReportRow(**record) for record in csv.DictReader(handle)]


def _cell(value: Any) -> Any:
    return repr(float(value)) if isinstance(value, float) else value


def _number(value: float) -> Union[float, str]:
    return value if math.isfinite(value) else repr(value)


def summarize(rows: Iterable[ReportRow]) -> Dict[str, Dict[str, Any]]:
    """
    Rows grouped by scenario, plus the mean over seeds of every
    (method, η, metric) combination.
    """

    grouped: Dict[str, List[ReportRow]] = defaultdict(list)
    for row in rows:
        grouped[row.scenario].append(row)

    summary: Dict[str, Dict[str, Any]] = {}
    for scenario, members in grouped.items():
        cells: Dict[Tuple[str, float, str], List[float]] = defaultdict(list)
        for row in members:
            cells[(row.method, row.eta, row.metric)].append(row.value)
        summary[scenario] = {
            "rows": [
                {**row.dict(), "eta": _number(row.eta), "value": _number(row.value)}
                for row in members
            ],
            "means": [
                {
                    "method": method,
                    "eta": _number(eta),
                    "metric": metric,
                    "value": _number(float(np.mean(values))),
                    "seeds": len(values),
                }
                for (method, eta, metric), values in cells.items()
            ],
        }
    return summary


def summary_path(csv_path: Union[str, Path]) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_report(
    rows: List[ReportRow], path: Union[str, Path], json_path: Optional[Union[str, Path]] = None
) -> Tuple[Path, Path]:
    """Write the CSV and its JSON summary next to it."""

    csv_target = write_csv(rows, path)
    json_target = Path(json_path) if json_path else summary_path(csv_target)
    json_target.write_text(
        json.dumps(summarize(rows), indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    log.info("Wrote %s rows to %s and %s", len(rows), csv_target, json_target)
    return csv_target, json_target
