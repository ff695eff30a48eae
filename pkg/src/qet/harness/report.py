"""Report records and their JSON / CSV serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

from .. import __version__

SCHEMA_VERSION = "1.0"
CSV_HEADER = ("name", "closed_form", "estimate", "std_error", "bound", "hypotheses_met", "verdict")


@dataclass
class Metric:
    name: str
    closed_form: float | None = None
    estimate: float | None = None
    std_error: float | None = None
    bound: float | None = None
    hypotheses_met: bool | None = None
    verdict: str = "n/a"
    invariant: str = ""


@dataclass
class Report:
    command: str
    config: dict
    metrics: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    wall_clock_seconds: float | None = None
    tool_version: str = __version__
    schema_version: str = SCHEMA_VERSION

    @property
    def verdict(self) -> str:
        return "fail" if any(m.verdict == "fail" for m in self.metrics) else "pass"

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "metrics": [asdict(m) for m in self.metrics],
            "tables": self.tables,
            "verdict": self.verdict,
        }
        if timing and self.wall_clock_seconds is not None:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return _clean(out)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        metrics = [Metric(**{k: _unclean(v) for k, v in m.items()}) for m in d.get("metrics", [])]
        return cls(d["command"], d["config"], metrics, d.get("tables", {}),
                   d.get("wall_clock_seconds"), d["tool_version"], d["schema_version"])


def _clean(x):
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "tolist"):
        return _clean(x.tolist())
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _unclean(v):
    return float(v) if v in ("inf", "-inf", "nan") else v


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else _clean(v)
    return str(v)


def emit(report: Report, fmt: str = "json", timing: bool = True) -> bytes:
    if fmt == "json":
        text = json.dumps(report.to_dict(timing), sort_keys=True, indent=2) + "\n"
        return text.encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for m in report.metrics:
            w.writerow([_csv_cell(getattr(m, k)) for k in CSV_HEADER])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path, data: bytes) -> None:
    """Write via a temporary file in the target directory and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qet-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
