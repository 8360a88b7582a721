"""
Reporting for accproxcg.

Writes metric rows to CSV and summarizes final sub-optimality per algorithm.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from accproxcg.schemas import MetricRow

logger = logging.getLogger("accproxcg.reporting")

CSV_FIELDS: List[str] = list(MetricRow.model_fields)


def format_value(value: Any) -> str:
    """CSV text of one cell; floats keep 17 significant digits."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv(rows: Iterable[MetricRow]) -> str:
    """Render rows as CSV text with a header line."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(CSV_FIELDS)
    for row in rows:
        values = row.model_dump()
        writer.writerow([format_value(values[name]) for name in CSV_FIELDS])
    return buffer.getvalue()


@retry(
    retry=retry_if_exception_type(OSError),
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=2),
    reraise=True,
)
def _replace(src: str, dst: str) -> None:
    os.replace(src, dst)


def _write_atomic(text: str, path: str, suffix: str) -> str:
    path = os.path.abspath(path)
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)

    fd, tmp_path = tempfile.mkstemp(prefix=".accproxcg-", suffix=suffix, dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        _replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return path


def emit_csv(rows: Sequence[MetricRow], path: str) -> str:
    """Write rows to ``path`` atomically.

    The file is written next to its destination and moved into place, so readers
    never see a partial file.

    Args:
        rows: Metric rows in output order
        path: Destination file

    Returns:
        str: The absolute path written

    Raises:
        OSError: If the file cannot be written
    """
    path = _write_atomic(rows_to_csv(rows), path, ".csv")
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def diagnostics_path(csv_path: str) -> str:
    """Sidecar location of the run diagnostics: ``<stem>.diagnostics.json``."""
    return os.path.splitext(csv_path)[0] + ".diagnostics.json"


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def emit_diagnostics(entries: Sequence[Dict[str, Any]], path: str) -> str:
    """Write per-run diagnostics as a JSON list, atomically.

    Non-finite floats are written as null.

    Returns:
        str: The absolute path written
    """
    text = json.dumps(_json_safe(list(entries)), indent=2) + "\n"
    path = _write_atomic(text, path, ".json")
    logger.info(f"Wrote diagnostics of {len(entries)} runs to {path}")
    return path


def read_csv(path: str) -> List[Dict[str, str]]:
    """Read an emitted CSV back as string dictionaries."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _median(values: List[float]) -> float:
    """NaN-ignoring median; NaN when no value is a number."""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0 or np.all(np.isnan(array)):
        return math.nan
    return float(np.nanmedian(array))


def summarize(rows: Sequence[MetricRow]) -> List[Dict[str, Any]]:
    """Per-algorithm medians of the final sub-optimality and gradient-mapping norm.

    Returns:
        List[Dict[str, Any]]: Sorted by median final sub-optimality, NaN last
    """
    finals: Dict[str, MetricRow] = {}
    for row in rows:
        current = finals.get(row.run_id)
        if current is None or row.epoch >= current.epoch:
            finals[row.run_id] = row

    groups: Dict[str, List[MetricRow]] = {}
    for row in finals.values():
        groups.setdefault(row.algo, []).append(row)

    summary = []
    for algo, group in groups.items():
        summary.append(
            {
                "algorithm": algo,
                "runs": len(group),
                "failures": sum(1 for r in group if math.isnan(r.objective)),
                "median_final_subopt": _median([r.subopt for r in group]),
                "median_final_gmap_sq": _median([r.gmap_sq for r in group]),
            }
        )
    summary.sort(
        key=lambda s: (math.isnan(s["median_final_subopt"]), s["median_final_subopt"])
    )
    return summary


def emit_summary(rows: Sequence[MetricRow], console: Optional[Console] = None) -> List[Dict[str, Any]]:
    """Print the per-algorithm summary table and return its rows."""
    summary = summarize(rows)
    console = console or Console()

    table = Table(title="Final metrics per algorithm")
    table.add_column("Algorithm", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Median subopt", justify="right")
    table.add_column("Median ||G||^2", justify="right")
    for entry in summary:
        table.add_row(
            entry["algorithm"],
            str(entry["runs"]),
            str(entry["failures"]),
            f"{entry['median_final_subopt']:.4e}",
            f"{entry['median_final_gmap_sq']:.4e}",
        )
    console.print(table)
    return summary


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


def emit_diagnostics_table(
    entries: Sequence[Dict[str, Any]], console: Optional[Console] = None
) -> None:
    """Print the measured diagnostics and the rate constants they imply, one row per run."""
    console = console or Console()

    table = Table(title="Run diagnostics")
    table.add_column("Run", style="cyan")
    table.add_column("beta_hat", justify="right")
    table.add_column("eta1", justify="right")
    table.add_column("sigma^2", justify="right")
    table.add_column("Restarts", justify="right")
    table.add_column("Resets", justify="right")
    table.add_column("delta", justify="right")
    table.add_column("xi", justify="right")
    table.add_column("xi_st", justify="right")
    table.add_column("Note", style="dim")
    for entry in entries:
        report = entry.get("theory") or {}
        table.add_row(
            entry["run_id"],
            _cell(entry["beta_hat"]),
            _cell(entry["eta1"]),
            _cell(entry["sigma_sq"]),
            _cell(entry["restarts"]),
            _cell(entry["ascent_resets"]),
            _cell(entry["delta"]),
            _cell(report.get("xi")),
            _cell(report.get("xi_st")),
            entry.get("note") or "",
        )
    console.print(table)
