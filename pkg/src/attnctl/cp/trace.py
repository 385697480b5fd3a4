"""Control signals and their timing record."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .primitives import TYPE_I, TYPE_II


@dataclass(frozen=True)
class ControlSignal:
    name: str  # primitive that issued the signal
    kind: str  # TypeI or TypeII
    t_on: int
    t_off: int
    params: tuple[str, ...] = ()
    target: str = ""  # mechanism the signal drives
    reference: object = None  # K_r, Type I only
    observed: object = None  # K_gamma, Type I only
    overrun: bool = False

    def __post_init__(self):
        if self.kind not in (TYPE_I, TYPE_II):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if not 0 <= self.t_on <= self.t_off:
            raise ValueError(f"signal {self.name}: need 0 <= t_on <= t_off, got [{self.t_on}, {self.t_off}]")
        if self.kind == TYPE_II and (self.reference is not None or self.observed is not None):
            raise ValueError("Type II signals carry no reference value")

    @property
    def duration(self) -> int:
        return self.t_off - self.t_on

    def param_text(self) -> str:
        parts = list(self.params)
        if self.kind == TYPE_I and self.reference is not None:
            parts.append(f"ref={_fmt(self.reference)}")
            parts.append(f"obs={_fmt(self.observed)}")
        return ";".join(parts)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (tuple, list)):
        return "(" + " ".join(_fmt(x) for x in v) + ")"
    return str(v)


@dataclass
class SignalTrace:
    t_i: int = 0
    t_c: int | None = None
    signals: list[ControlSignal] = field(default_factory=list)

    def add(self, sig: ControlSignal) -> None:
        if self.t_c is not None and sig.t_off > self.t_c and not sig.overrun:
            raise ValueError(f"signal {sig.name} ends at {sig.t_off}, past deadline {self.t_c}")
        self.signals.append(sig)

    def sorted(self) -> list[ControlSignal]:
        order = {id(s): i for i, s in enumerate(self.signals)}
        return sorted(self.signals, key=lambda s: (s.t_on, s.name, order[id(s)]))

    def names(self) -> list[str]:
        return [s.name for s in self.sorted()]

    def first(self, name: str) -> ControlSignal | None:
        for s in self.sorted():
            if s.name == name:
                return s
        return None

    def of(self, name: str) -> list[ControlSignal]:
        return [s for s in self.sorted() if s.name == name]

    def __len__(self) -> int:
        return len(self.signals)

    def to_records(self) -> list[dict]:
        return [
            {"signal": s.name, "kind": s.kind, "t_on": s.t_on, "t_off": s.t_off, "params": s.param_text()}
            for s in self.sorted()
        ]


CSV_COLUMNS = ("signal", "kind", "t_on", "t_off", "params")


def emit_trace(trace: SignalTrace, fmt: str = "csv") -> str:
    """Serialise a trace: CSV (normative) or an aligned text table."""
    rows = trace.to_records()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "text":
        table = [list(CSV_COLUMNS)] + [[str(r[c]) for c in CSV_COLUMNS] for r in rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(CSV_COLUMNS))]
        return "".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n" for row in table)
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown trace format {fmt!r}")


def parse_trace_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
