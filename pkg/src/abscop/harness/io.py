"""Persisting and reading study results.

Floats are written with ``repr`` so that files round-trip exactly and a rerun
with the same configuration produces byte-identical output.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .study import AGGREGATE_FIELDS, RECORD_FIELDS, StudyResult

AGGREGATE_FILE = "aggregate.csv"
REPETITIONS_FILE = "repetitions.csv"
DRAWS_FILE = "posterior_draws.csv"
METADATA_FILE = "metadata.json"


def _cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _write_csv(path: Path, fields, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_cell(r[f]) for f in fields])


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_results(result: StudyResult, directory) -> Path:
    """Write aggregate, per-repetition, posterior-draw and metadata files."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        _write_csv(d / AGGREGATE_FILE, AGGREGATE_FIELDS, result.aggregates)
        _write_csv(d / REPETITIONS_FILE, RECORD_FIELDS, result.records)
        with (d / DRAWS_FILE).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dim", "rep", "kind", "draw", "value"])
            for dim, rep, kind, values in result.draws:
                for i, v in enumerate(values):
                    w.writerow([dim, rep, kind, i, repr(float(v))])
        (d / METADATA_FILE).write_text(json.dumps(_jsonable(result.metadata), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or d}: {exc.strerror}") from exc
    return d


def _parse(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_csv_rows(path) -> list:
    with Path(path).open(newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def read_aggregates(directory) -> list:
    return read_csv_rows(Path(directory) / AGGREGATE_FILE)


def read_records(directory) -> list:
    return read_csv_rows(Path(directory) / REPETITIONS_FILE)


def read_metadata(directory) -> dict:
    return json.loads((Path(directory) / METADATA_FILE).read_text())


def format_table(rows) -> str:
    """Aligned plain-text rendering of aggregate rows."""
    if not rows:
        return "(no aggregate rows)"
    fields = list(rows[0])

    def fmt(v):
        if isinstance(v, float):
            return "nan" if math.isnan(v) else f"{v:.4f}"
        return str(v)

    cells = [[fmt(r[f]) for f in fields] for r in rows]
    widths = [max(len(f), *(len(c[i]) for c in cells)) for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) if i >= 3 else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
              for row in cells]
    return "\n".join(lines)
