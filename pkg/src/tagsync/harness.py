"""Deterministic step-driven transport connecting one RTI and N federates.

Transport time is an integer step counter unrelated to logical tags. A
federate processes one tag per step when it may advance on its own; each
signal is delivered ``latency`` steps after it is sent. Ties are broken by
insertion order, so a run is a pure function of its inputs.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .federate import Event, Federate
from .rti import Rti
from .signals import RTI, ProtocolError, Signal, SignalKind
from .tags import FOREVER, Tag, tag_from_json, tag_to_json
from .topology import Topology

EXEC = "EXEC"
DUMP = "DUMP"
FAULT = "FAULT"
SEND = "send"
RECV = "recv"


@dataclass(frozen=True)
class LatencyModel:
    """Signal latency in steps: ``zero``, ``fixed`` or per-channel."""

    mode: str = "zero"
    steps: int = 0
    per_channel: tuple[tuple[tuple[str, str], int], ...] = ()

    def __post_init__(self):
        if self.mode not in ("zero", "fixed", "channel"):
            raise ValueError(f"unknown latency mode {self.mode!r}")
        if self.steps < 0 or any(k < 0 for _, k in self.per_channel):
            raise ValueError("latency must be non-negative")

    @classmethod
    def parse(cls, text: str) -> LatencyModel:
        if text == "zero":
            return cls()
        if text.startswith("fixed:"):
            return cls("fixed", int(text.split(":", 1)[1]))
        raise ValueError(f"bad latency spec {text!r} (use zero or fixed:K)")

    def latency(self, src: str, dst: str) -> int:
        if self.mode == "zero":
            return 0
        if self.mode == "fixed":
            return self.steps
        return dict(self.per_channel).get((src, dst), self.steps)

    def __str__(self) -> str:
        if self.mode == "zero":
            return "zero"
        if self.mode == "fixed":
            return f"fixed:{self.steps}"
        return "channel"


ZERO_LATENCY = LatencyModel()


class TraceRecord(NamedTuple):
    seq: int
    step: int
    src: str
    dst: str
    kind: str
    tag: Tag
    note: str | None = None

    def to_json(self) -> dict:
        out = {
            "seq": self.seq,
            "step": self.step,
            "src": self.src,
            "dst": self.dst,
            "kind": self.kind,
            "tag": tag_to_json(self.tag),
        }
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, obj: dict) -> TraceRecord:
        note = obj.get("note")
        if note is not None and not isinstance(note, str):
            raise ValueError("note must be a string")
        for key in ("src", "dst", "kind"):
            if not isinstance(obj[key], str):
                raise ValueError(f"{key} must be a string")
        return cls(int(obj["seq"]), int(obj["step"]), obj["src"], obj["dst"], obj["kind"],
                   tag_from_json(obj["tag"]), note)


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    aborted: bool = False
    fault: str | None = None
    # populated by load(): (line number, error) for unparseable lines
    malformed: list[tuple[int, str]] = field(default_factory=list)
    # federates left with processable events at quiescence (deadlock)
    stalled: dict[str, Tag] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in self.records
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> Trace:
        trace = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                trace.records.append(TraceRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                trace.malformed.append((lineno, f"{type(exc).__name__}: {exc}"))
        trace.aborted = any(r.kind == FAULT for r in trace.records)
        return trace

    @classmethod
    def load(cls, path: str | Path) -> Trace:
        return cls.from_jsonl(Path(path).read_text())


def body_digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()[:16]


def exec_note(event: Event) -> str:
    return f"{event.action.value}:{body_digest(event.body)}"


@dataclass(frozen=True)
class Scenario:
    """A topology plus per-federate setup (reactions and initial events)."""

    name: str
    topology: Topology
    setup: Callable[[Federate], None]
    until: Tag = FOREVER
    params: dict = field(default_factory=dict)


def _dump_json(state: dict) -> str:
    def enc(v):
        if isinstance(v, Tag):
            return tag_to_json(v)
        if isinstance(v, list):
            return [enc(x) for x in v]
        if isinstance(v, dict):
            return {k: enc(x) for k, x in v.items()}
        return v

    return json.dumps(enc(state), separators=(",", ":"), sort_keys=True)


class _Sim:
    def __init__(self, topology, scenario, latency, dnet, until, max_steps):
        self.topology = topology
        self.latency = latency
        self.max_steps = max_steps
        self.rti = Rti(topology, dnet=dnet)
        bound = min(until, scenario.until)
        self.feds = [Federate(i, topology, dnet_enabled=dnet, until=bound) for i in range(topology.size)]
        for fed in self.feds:
            scenario.setup(fed)
        self.names = topology.names
        self.trace = Trace()
        self._seq = itertools.count()
        self._qseq = itertools.count()
        self._queue: list = []
        self._advance_pending: set[int] = set()
        self.step = 0

    def _name(self, ident: int) -> str:
        return "RTI" if ident == RTI else self.names[ident]

    def _record(self, src, dst, kind, tag, note=None):
        self.trace.records.append(TraceRecord(next(self._seq), self.step, src, dst, kind, tag, note))

    def _send(self, signals: Iterable[Signal]) -> None:
        for sig in signals:
            src, dst = self._name(sig.src), self._name(sig.dst)
            self._record(src, dst, sig.kind.value, sig.tag, SEND)
            if sig.kind is SignalKind.DNET:
                self._record("RTI", dst, DUMP, sig.tag, _dump_json(self.rti.dump()))
            at = self.step + self.latency.latency(src, dst)
            heapq.heappush(self._queue, (at, next(self._qseq), "deliver", sig))

    def _record_exec(self, fed: Federate, start: int) -> None:
        name = self.names[fed.id]
        for ev in fed.executed[start:]:
            self._record(name, name, EXEC, ev.tag, exec_note(ev))

    def _call_federate(self, fed: Federate, fn, *args) -> None:
        start = len(fed.executed)
        try:
            out = fn(*args)
        finally:
            self._record_exec(fed, start)
        self._send(out)
        self._maybe_schedule_advance(fed)

    def _maybe_schedule_advance(self, fed: Federate) -> None:
        if fed.id not in self._advance_pending and fed.can_advance():
            self._advance_pending.add(fed.id)
            heapq.heappush(self._queue, (self.step + 1, next(self._qseq), "advance", fed.id))

    def run(self) -> Trace:
        try:
            for fed in self.feds:
                self._call_federate(fed, fed.start)
            while self._queue:
                at, _, what, item = heapq.heappop(self._queue)
                self.step = at
                if at > self.max_steps:
                    raise ProtocolError(f"step budget {self.max_steps} exhausted")
                if what == "advance":
                    self._advance_pending.discard(item)
                    fed = self.feds[item]
                    self._call_federate(fed, fed.advance)
                    continue
                sig = item
                src, dst = self._name(sig.src), self._name(sig.dst)
                self._record(src, dst, sig.kind.value, sig.tag, RECV)
                if sig.dst == RTI:
                    self._send(self.rti.handle(sig))
                else:
                    fed = self.feds[sig.dst]
                    self._call_federate(fed, fed.handle, sig)
        except ProtocolError as exc:
            self.trace.aborted = True
            self.trace.fault = str(exc)
            self._record("harness", "harness", FAULT, FOREVER, str(exc))
            return self.trace
        for fed in self.feds:
            nxt = fed.next_event_tag()
            if nxt != FOREVER:
                self.trace.stalled[self.names[fed.id]] = nxt
        return self.trace


def run(
    topology: Topology,
    scenario: Scenario,
    latency: LatencyModel = ZERO_LATENCY,
    dnet: bool = False,
    until: Tag = FOREVER,
    max_steps: int = 50_000_000,
) -> Trace:
    """Run the coupled state machines to quiescence and return the trace."""
    if scenario.topology is not topology and scenario.topology != topology:
        raise ValueError("scenario was built for a different topology")
    return _Sim(topology, scenario, latency, dnet, until, max_steps).run()


def count_signals(trace: Trace | Iterable[TraceRecord], kind: SignalKind | str) -> Counter:
    """Sent signals of ``kind`` per source actor, plus a ``"total"`` entry."""
    kind = kind.value if isinstance(kind, SignalKind) else kind
    counts: Counter = Counter()
    for r in trace:
        if r.kind == kind and r.note == SEND:
            counts[r.src] += 1
    counts["total"] = sum(counts.values())
    return counts


def executed_events(trace: Trace | Iterable[TraceRecord]) -> dict[str, list[tuple[Tag, str]]]:
    """Per-federate processed events ``(tag, action:digest)`` in execution order."""
    out: dict[str, list[tuple[Tag, str]]] = {}
    for r in trace:
        if r.kind == EXEC:
            out.setdefault(r.src, []).append((r.tag, r.note))
    return out
