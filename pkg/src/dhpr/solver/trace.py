"""Per-iteration metric records and their CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

COLUMNS = (
    "iter",
    "eta_re",
    "eta_kkt",
    "kkt_norm",
    "dual_gap",
    "sigma",
    "restart_flag",
    "comm_rounds_cum",
    "scalars_sent_cum",
    "wall_ms",
)


@dataclass
class TraceRow:
    iter: int
    eta_re: float | None
    eta_kkt: float | None
    kkt_norm: float | None
    dual_gap: float | None
    sigma: float | None
    restart_flag: int
    comm_rounds_cum: int
    scalars_sent_cum: int
    wall_ms: float | None = None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _parse(name, text):
    if text == "":
        return None
    if name in ("iter", "restart_flag", "comm_rounds_cum", "scalars_sent_cum"):
        return int(text)
    return float(text)


class Trace:
    """Ordered list of :class:`TraceRow` plus the solver name."""

    def __init__(self, solver="dhpr", rows=None):
        self.solver = solver
        self.rows = list(rows or [])

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def append(self, row: TraceRow):
        self.rows.append(row)

    def column(self, name):
        if name not in COLUMNS:
            raise KeyError(f"no trace column {name!r}")
        return [getattr(r, name) for r in self.rows]

    def iterations_to(self, threshold, metric="eta_re"):
        """First recorded iteration with ``metric <= threshold``, else None."""
        for r in self.rows:
            val = getattr(r, metric)
            if val is not None and val <= threshold:
                return r.iter
        return None

    def write_csv(self, path, timing=True):
        """Write the trace; ``timing=False`` leaves wall_ms blank for byte-stable output."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                vals = [getattr(r, c) for c in COLUMNS]
                if not timing:
                    vals[-1] = None
                w.writerow([_fmt(v) for v in vals])

    @classmethod
    def from_csv(cls, path, solver=None):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty trace file") from None
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise ValueError(f"{path}: missing trace column(s) {missing}")
            idx = {c: header.index(c) for c in COLUMNS}
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                try:
                    rows.append(TraceRow(**{c: _parse(c, rec[idx[c]]) for c in COLUMNS}))
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed trace row ({exc})") from None
        return cls(solver or str(path), rows)


assert tuple(f.name for f in fields(TraceRow)) == COLUMNS
