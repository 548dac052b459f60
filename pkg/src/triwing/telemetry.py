"""Fixed-schema telemetry log and its CSV form.

Floats are written with ``repr`` so a saved log reads back bit-for-bit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

COLUMNS = (
    "t",
    "x", "y", "z",
    "vx", "vy", "vz",
    "roll", "pitch", "yaw",
    "wx", "wy", "wz",
    "u1", "u2", "u3", "mz_cmd",
    "f1", "f2", "f3",
    "thr1", "thr2", "thr3",
    "mode",
    "battery_mah",
    "sat1", "sat2", "sat3",
    "x_ref", "y_ref", "z_ref",
)
STRING_COLUMNS = {"mode"}
INT_COLUMNS = {"sat1", "sat2", "sat3"}


def _fmt(name: str, value) -> str:
    if name in STRING_COLUMNS:
        return str(value)
    if name in INT_COLUMNS:
        return str(int(bool(value)))
    return repr(float(value))


@dataclass
class TelemetryLog:
    rows: list = field(default_factory=list)
    events: list = field(default_factory=list)  # (t, kind, message)

    def append(self, **record) -> None:
        missing = [c for c in COLUMNS if c not in record]
        if missing:
            raise KeyError(f"telemetry record missing columns {missing}")
        t = float(record["t"])
        if self.rows and not t > self.rows[-1]["t"]:
            raise ValueError("telemetry time must be strictly increasing")
        self.rows.append({c: record[c] for c in COLUMNS})

    def event(self, t: float, kind: str, message: str = "") -> None:
        self.events.append((float(t), kind, message))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(c, r[c]) for c in COLUMNS])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def from_csv(cls, text: str) -> "TelemetryLog":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != COLUMNS:
            raise ValueError("telemetry header does not match the schema")
        log = cls()
        for line in reader:
            rec = {}
            for c, v in zip(COLUMNS, line):
                if c in STRING_COLUMNS:
                    rec[c] = v
                elif c in INT_COLUMNS:
                    rec[c] = int(v)
                else:
                    rec[c] = float(v)
            log.rows.append(rec)
        return log

    @classmethod
    def read_csv(cls, path) -> "TelemetryLog":
        return cls.from_csv(Path(path).read_text())

