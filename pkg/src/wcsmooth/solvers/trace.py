"""Per-iteration run logs and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

TRACE_COLUMNS = ("k", "oracle_count", "f_true", "phi_eta", "gen_grad_norm",
                 "moreau_surrogate", "step", "Lhat", "ls_steps", "reason")
_INT_COLUMNS = {"k", "oracle_count"}
NAN = float("nan")


def fmt_float(v) -> str:
    """17 significant digits, which round-trips every double."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


class Trace:
    """Append-only table with the columns of :data:`TRACE_COLUMNS`.

    ``oracle_count`` must increase strictly from row to row. The termination
    reason is stored on the last row; other rows leave it empty.
    """

    def __init__(self, meta: dict | None = None, config: dict | None = None):
        self.rows: list[dict] = []
        self.meta = dict(meta or {})
        self.config = dict(config or {})
        self.summary: dict = {}

    def append(self, k, oracle_count, f_true=NAN, phi_eta=NAN, gen_grad_norm=NAN,
               moreau_surrogate=NAN, step=NAN, Lhat=NAN, ls_steps=NAN):
        if self.rows and oracle_count <= self.rows[-1]["oracle_count"]:
            raise ValueError(
                f"oracle_count must increase: {oracle_count} after {self.rows[-1]['oracle_count']}")
        self.rows.append(dict(k=int(k), oracle_count=int(oracle_count), f_true=f_true, phi_eta=phi_eta,
                              gen_grad_norm=gen_grad_norm, moreau_surrogate=moreau_surrogate,
                              step=step, Lhat=Lhat, ls_steps=ls_steps, reason=""))

    def finish(self, reason: str):
        if self.rows:
            self.rows[-1]["reason"] = reason

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [row[name] for row in self.rows]

    @property
    def reason(self) -> str:
        return self.rows[-1]["reason"] if self.rows else ""

    @property
    def final_f(self) -> float:
        return float(self.rows[-1]["f_true"]) if self.rows else NAN

    @property
    def oracle_count(self) -> int:
        return self.rows[-1]["oracle_count"] if self.rows else 0

    @property
    def iterations(self) -> int:
        return self.rows[-1]["k"] if self.rows else 0

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in self.rows:
            out = []
            for col in TRACE_COLUMNS:
                v = row[col]
                if col in _INT_COLUMNS:
                    out.append(str(v))
                elif col == "reason":
                    out.append(v)
                else:
                    out.append(fmt_float(v))
            w.writerow(out)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text) -> "Trace":
        text = str(path_or_text)
        if "\n" not in text:
            text = Path(text).read_text()
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {reader.fieldnames}")
        tr = cls()
        for rec in reader:
            row = {}
            for col in TRACE_COLUMNS:
                v = rec[col]
                row[col] = int(v) if col in _INT_COLUMNS else (v if col == "reason" else float(v))
            tr.rows.append(row)
        return tr

    def summary_csv(self, path=None) -> str:
        """One-row CSV with metadata and stationarity columns."""
        fields = {**{k: self.meta[k] for k in sorted(self.meta)}, **self.summary}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(fields))
        w.writerow([fmt_float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v
                    for v in fields.values()])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text
