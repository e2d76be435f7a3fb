"""Design files: a CSV of runs plus a JSON sidecar with metadata and metrics.

The CSV header is ``x1,...,xm,o1,...,om`` and each data row holds one run as
unquoted integers, LF line endings.  The sidecar for ``foo.csv`` is
``foo.meta.json``; it records run and component counts, the construction
route, the seed and the evaluated metrics (r_ave kept as an exact fraction).
Writing a design read back from disk reproduces both files byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import DesignError, QSDesign, QuantDesign, SeqDesign, evaluate


class DesignParseError(ValueError):
    """Malformed design file; the message names the offending row or column."""


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def design_to_csv(design: QSDesign) -> str:
    m = design.m
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(1, m + 1)] + [f"o{j}" for j in range(1, m + 1)])
    for xr, orow in zip(design.x.values.tolist(), design.o.values.tolist()):
        w.writerow(xr + orow)
    return buf.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def metadata_document(design: QSDesign) -> dict[str, Any]:
    meta = _jsonable(design.meta)
    return {
        "n": design.n,
        "m": design.m,
        "route": meta.get("route"),
        "seed": meta.get("seed"),
        "construction": meta,
        "metrics": evaluate(design).as_dict(),
    }


def metadata_to_json(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_design(path: str | Path, design: QSDesign) -> Path:
    """Write the CSV and its sidecar; returns the sidecar path."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(design_to_csv(design))
    side = sidecar_path(path)
    with open(side, "w", newline="", encoding="utf-8") as fh:
        fh.write(metadata_to_json(metadata_document(design)))
    return side


def parse_design_csv(text: str) -> QSDesign:
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not rows[-1]:
        rows.pop()
    if not rows:
        raise DesignParseError("empty file: expected a header row x1..xm,o1..om")
    header = [h.strip() for h in rows[0]]
    if len(header) % 2 or not header:
        raise DesignParseError(f"row 1: header has {len(header)} columns; expected x1..xm,o1..om")
    m = len(header) // 2
    expected = [f"x{j}" for j in range(1, m + 1)] + [f"o{j}" for j in range(1, m + 1)]
    for col, (got, want) in enumerate(zip(header, expected), start=1):
        if got != want:
            raise DesignParseError(f"row 1, column {col}: header {got!r}, expected {want!r}")
    if len(rows) < 2:
        raise DesignParseError("no data rows after the header")
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 2 * m:
            raise DesignParseError(f"row {r}: {len(row)} fields, expected {2 * m}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(int(cell.strip()))
            except ValueError:
                raise DesignParseError(f"row {r}, column {col} ({expected[col - 1]}): {cell!r} is not an integer") from None
        data.append(vals)
    a = np.array(data, dtype=np.int64)
    n = a.shape[0]
    for j in range(m):
        if sorted(a[:, j].tolist()) != list(range(1, n + 1)):
            raise DesignParseError(f"column {j + 1} (x{j + 1}) is not a permutation of 1..{n}")
    for i in range(n):
        if sorted(a[i, m:].tolist()) != list(range(1, m + 1)):
            raise DesignParseError(f"row {i + 2}: o1..o{m} is not a permutation of 1..{m}")
    try:
        return QSDesign(QuantDesign(a[:, :m]), SeqDesign(a[:, m:]))
    except DesignError as exc:  # pragma: no cover - checks above are stricter
        raise DesignParseError(str(exc)) from exc


def read_design(path: str | Path) -> QSDesign:
    """Load a design; construction metadata comes from the sidecar when present."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        design = parse_design_csv(fh.read())
    side = sidecar_path(path)
    if side.exists():
        try:
            doc = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DesignParseError(f"{side.name}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
        meta = doc.get("construction", {})
        design = QSDesign(design.x, design.o, dict(meta))
    return design
