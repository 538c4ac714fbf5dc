"""Result documents and their CSV / JSON renderings."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field

CSV_HEADER = ("ensemble", "design_rate", "method", "value", "unit", "trivial", "provenance")


@dataclass(frozen=True)
class ReportRow:
    method: str
    value: float | None
    unit: str
    provenance: str = "computed"
    ensemble: str = ""
    design_rate: float | None = None
    trivial: bool | None = None


@dataclass
class ReportDocument:
    command: list[str]
    version: str
    timestamp: str
    inputs: dict
    rows: list[ReportRow] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        data = json.loads(text)
        rows = [ReportRow(**r) for r in data.pop("rows")]
        return cls(rows=rows, **data)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.ensemble, _num(r.design_rate, ""), r.method, _num(r.value, r.unit),
                        r.unit, "" if r.trivial is None else str(r.trivial).lower(), r.provenance])
        return buf.getvalue()


def _num(v: float | None, unit: str) -> str:
    if v is None:
        return ""
    if unit == "dB":
        return f"{v:.4f}"
    return f"{v:.10g}"


def timestamp() -> str:
    """UTC time of the run; SOURCE_DATE_EPOCH pins it for reproducible output."""
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    secs = int(raw) if raw and raw.isdigit() else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(secs))
