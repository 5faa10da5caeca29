"""CSV/JSON emission and parsing of reports."""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__
from .config import RunConfig
from .optimize import SweepRow

CSV_HEADER = SweepRow.FIELDS


def fmt(value, precision: int = 6) -> str:
    """Scientific notation with ``precision`` significant digits; ``nan`` for n/a."""
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{precision - 1}e}"
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def sweep_csv(rows, precision: int = 6) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([fmt(getattr(row, name), precision) for name in CSV_HEADER])
    return buf.getvalue()


def row_to_dict(row: SweepRow) -> dict:
    d = {name: getattr(row, name) for name in CSV_HEADER}
    d["flag"] = row.flag
    return d


def row_from_dict(d: dict) -> SweepRow:
    return SweepRow(**{name: d[name] for name in CSV_HEADER}, flag=d.get("flag", "ok"))


def json_report(command: str, config: RunConfig, results: dict, meta: dict | None = None) -> str:
    doc = {
        "command": command,
        "version": __version__,
        "config": config.to_dict(),
        "meta": meta or {},
        "results": results,
    }
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def load_report(text: str):
    """Parse a JSON report back into ``(command, RunConfig, results, meta)``.

    Sweep results come back as :class:`SweepRow` objects.
    """
    doc = json.loads(text)
    results = doc["results"]
    if doc["command"] == "sweep":
        results = dict(results)
        results["rows"] = [row_from_dict(r) for r in results["rows"]]
    return doc["command"], RunConfig.from_dict(doc["config"]), results, doc.get("meta", {})


def key_value_csv(pairs, precision: int = 6) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("quantity", "value"))
    for key, value in pairs:
        writer.writerow((key, fmt(value, precision)))
    return buf.getvalue()


def table_csv(header, rows, precision: int = 6) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v, precision) for v in row])
    return buf.getvalue()
