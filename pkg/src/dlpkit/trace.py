"""Search-trace records shared by the restoration, DDLMO and rendering code.

A trace file is line-delimited JSON, one event per line.  Restoration events
carry a bit-string ``vector`` and a ``chain_index``; model-search events carry
a ``model`` descriptor, the matched measure ``level`` and a ``score``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Iterator, Optional

TESTED = "tested"
INFERRED = "inferred"


@dataclass
class TraceEvent:
    seq: int
    verdict: int
    source: str = TESTED
    vector: Optional[str] = None
    chain_index: Optional[int] = None
    forced_by: Optional[int] = None
    model: Optional[str] = None
    level: Optional[float] = None
    score: Optional[float] = None
    depth: Optional[int] = None
    run: Optional[int] = None
    relocated: Optional[bool] = None
    arbitrary: Optional[bool] = None

    def __post_init__(self):
        if self.verdict not in (0, 1):
            raise ValueError(f"verdict must be 0 or 1, got {self.verdict!r}")
        if self.source not in (TESTED, INFERRED):
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def label(self) -> str:
        return f"{self.source}-{'verified' if self.verdict else 'refuted'}"

    @property
    def key(self) -> str:
        return self.vector if self.vector is not None else (self.model or f"#{self.seq}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown trace fields: {sorted(extra)}")
        if "seq" not in d or "verdict" not in d:
            raise ValueError("trace record needs 'seq' and 'verdict'")
        return cls(**d)


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def append(self, **kw) -> TraceEvent:
        ev = TraceEvent(seq=len(self.events), **kw)
        self.events.append(ev)
        return ev

    def tested(self) -> list[TraceEvent]:
        return [e for e in self.events if e.source == TESTED]

    def runs(self) -> dict[Optional[int], list[TraceEvent]]:
        out: dict[Optional[int], list[TraceEvent]] = {}
        for e in self.events:
            out.setdefault(e.run, []).append(e)
        return out

    def validate(self) -> None:
        seen = {}
        for i, e in enumerate(self.events):
            if e.seq != i:
                raise ValueError(f"event {i} has seq {e.seq}")
            if e.source == INFERRED:
                if e.forced_by is None or e.forced_by not in seen:
                    raise ValueError(f"inferred event {e.seq} lacks an earlier forcing event")
                if seen[e.forced_by].source != TESTED:
                    raise ValueError(f"event {e.seq} is forced by a non-tested event")
            seen[e.seq] = e

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "Trace":
        t = cls([TraceEvent.from_dict(r) for r in records])
        t.validate()
        return t

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        recs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                recs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cls.from_records(recs)

    @classmethod
    def read(cls, path) -> "Trace":
        return cls.from_jsonl(Path(path).read_text())
