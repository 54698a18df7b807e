"""CSV emission: RFC-4180 quoting, CRLF rows, shortest round-trip floats."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    """Deterministic text for one cell; floats use ``repr`` (shortest round-trip)."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            for r in rows:
                if len(r) != len(header):
                    raise ValueError(f"row has {len(r)} cells, header has {len(header)}")
                w.writerow([fmt(v) for v in r])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def read_csv(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def write_echo(path, scenarios, settings: dict) -> Path:
    """Normalized scenarios plus run settings, so an output directory describes itself."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"settings": settings, "scenarios": [s.to_dict() for s in scenarios]}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
