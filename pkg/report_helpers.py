"""
Run reports and file writers shared by the CLI and the service.

Console output goes to stderr with the usual banners and markers, so stdout
stays free for the JSON report.
"""

import csv
import json
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
from openpyxl import Workbook
from openpyxl.styles import Font

from func_core import SchemaError

RULE = "=" * 70


# ============================================================================
# CONSOLE
# ============================================================================

def banner(title: str, stream=None) -> None:
    stream = stream or sys.stderr
    print(f"\n{RULE}", file=stream)
    print(title, file=stream)
    print(RULE, file=stream)


def ok(message: str, stream=None) -> None:
    print(f"✅ {message}", file=stream or sys.stderr)


def warn(message: str, stream=None) -> None:
    print(f"⚠️  {message}", file=stream or sys.stderr)


def fail(message: str, stream=None) -> None:
    print(f"❌ {message}", file=stream or sys.stderr)


# ============================================================================
# JSON
# ============================================================================

def jsonable(value: Any) -> Any:
    """numpy scalars and arrays to plain Python, recursively."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        # inf critical index and friends
        return str(value)
    return value


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}")
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}")
    if not isinstance(data, dict):
        raise SchemaError(f"{path} must hold a JSON object")
    return data


def write_json(path: str, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=False)
        fh.write("\n")


# ============================================================================
# TABLES
# ============================================================================

def _columns(rows: List[Mapping[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def write_csv(path: str, rows: Iterable[Mapping[str, Any]]) -> None:
    rows = [jsonable(r) for r in rows]
    columns = _columns(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def write_xlsx(path: str, sheets: Mapping[str, Iterable[Mapping[str, Any]]]) -> None:
    """One worksheet per entry, bold header row, frozen below the header."""
    workbook = Workbook()
    workbook.remove(workbook.active)
    for name, rows in sheets.items():
        rows = [jsonable(r) for r in rows]
        sheet = workbook.create_sheet(title=name[:31])
        columns = _columns(rows)
        for col, key in enumerate(columns, start=1):
            sheet.cell(row=1, column=col, value=key).font = Font(bold=True)
            sheet.column_dimensions[sheet.cell(row=1, column=col).column_letter].width = max(12, len(key) + 2)
        for idx, row in enumerate(rows, start=2):
            for col, key in enumerate(columns, start=1):
                value = row.get(key)
                if isinstance(value, (list, dict)):
                    value = json.dumps(value)
                sheet.cell(row=idx, column=col, value=value)
        sheet.freeze_panes = "A2"
    workbook.save(path)


def write_rows(path: str, rows: List[Mapping[str, Any]], sheet: str = "rows") -> None:
    """CSV, or a one-sheet workbook when the path ends in .xlsx."""
    if path.lower().endswith(".xlsx"):
        write_xlsx(path, {sheet: rows})
    else:
        write_csv(path, rows)


# ============================================================================
# RUN REPORT
# ============================================================================

@dataclass
class RunReport:
    """
    What one command did. Timings are wall-clock seconds per phase and are
    the only part allowed to differ between two runs with the same seed.
    """
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def to_dict(self) -> Dict[str, Any]:
        return jsonable({
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "timings": self.timings,
            "outputs": self.outputs,
            "metrics": self.metrics,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def metrics_json(self) -> str:
        """Canonical metrics text, for byte-level determinism checks."""
        return json.dumps(jsonable(self.metrics), sort_keys=True)
