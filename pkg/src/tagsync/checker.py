"""Post-hoc trace verification.

Rules
-----
``malformed``      a trace line could not be parsed
``fault``          the run aborted on a detected protocol fault
``tardy-msg``      a MSG reached a federate at or before its latest completed tag
``tag-violated``   a MSG at or before an already delivered TAG reached the federate
``ltc-order``      a federate's LTC sequence is not strictly increasing
``tag-order``      a federate's TAG sequence is not strictly increasing
``dnet-value``     a DNET tag differs from the value recomputed from the state dump
``dnet-missing-dump``  a DNET send has no state dump following it
``dnet-to-cycle``  a DNET was sent to a zero-delay-cycle member
``divergence``     two traces processed different events
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .harness import DUMP, EXEC, FAULT, RECV, SEND, Trace, TraceRecord
from .tags import FOREVER, NEVER, Tag, tag_from_json, tag_subtract
from .topology import Topology


@dataclass(frozen=True)
class Violation:
    rule: str
    seq: int | None
    description: str

    def __str__(self) -> str:
        where = "-" if self.seq is None else str(self.seq)
        return f"[{self.rule}] seq={where}: {self.description}"


@dataclass
class Verdict:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, seq: int | None, description: str) -> None:
        self.violations.append(Violation(rule, seq, description))

    def extend(self, other: Verdict) -> Verdict:
        self.violations.extend(other.violations)
        return self

    def __bool__(self) -> bool:
        return self.ok


def _records(trace: Trace | Iterable[TraceRecord]) -> list[TraceRecord]:
    return list(trace.records if isinstance(trace, Trace) else trace)


def _structural(trace, verdict: Verdict) -> None:
    if isinstance(trace, Trace):
        for lineno, err in trace.malformed:
            verdict.add("malformed", None, f"line {lineno}: {err}")


def check_safety(trace: Trace | Iterable[TraceRecord]) -> Verdict:
    verdict = Verdict()
    _structural(trace, verdict)
    completed: dict[str, Tag] = {}
    granted: dict[str, Tag] = {}
    sent_grants: dict[str, Tag] = {}
    for r in _records(trace):
        if r.kind == FAULT:
            verdict.add("fault", r.seq, r.note or "run aborted")
        elif r.kind == "LTC" and r.note == SEND:
            prev = completed.get(r.src, NEVER)
            if r.tag <= prev:
                verdict.add("ltc-order", r.seq, f"{r.src} LTC {r.tag} after {prev}")
            else:
                completed[r.src] = r.tag
        elif r.kind == "TAG" and r.note == SEND:
            prev = sent_grants.get(r.dst)
            if prev is not None and r.tag <= prev:
                verdict.add("tag-order", r.seq, f"TAG {r.tag} to {r.dst} after {prev}")
            else:
                sent_grants[r.dst] = r.tag
        elif r.kind == "TAG" and r.note == RECV:
            prev = granted.get(r.dst, NEVER)
            if r.tag > prev:
                granted[r.dst] = r.tag
        elif r.kind == "MSG" and r.note == RECV and r.src == "RTI":
            done = completed.get(r.dst, NEVER)
            if r.tag <= done:
                verdict.add("tardy-msg", r.seq, f"MSG {r.tag} to {r.dst} already completed {done}")
            g = granted.get(r.dst, NEVER)
            if r.tag <= g:
                verdict.add("tag-violated", r.seq, f"MSG {r.tag} to {r.dst} after TAG {g}")
        elif r.kind == EXEC:
            done = completed.get(r.src, NEVER)
            if r.tag <= done:
                verdict.add("tardy-msg", r.seq, f"{r.src} executed {r.tag} after completing {done}")
    return verdict


def processed_events(trace: Trace | Iterable[TraceRecord]) -> dict[str, list[tuple[Tag, tuple[str, ...]]]]:
    """Per federate: list of ``(tag, sorted event notes)``.

    Events sharing a tag are logically simultaneous; their arrival order
    depends on signal timing, so they are compared as a sorted group.
    """
    groups: dict[str, list[tuple[Tag, list[str]]]] = {}
    for r in _records(trace):
        if r.kind != EXEC:
            continue
        seq = groups.setdefault(r.src, [])
        if seq and seq[-1][0] == r.tag:
            seq[-1][1].append(r.note or "")
        else:
            seq.append((r.tag, [r.note or ""]))
    return {k: [(t, tuple(sorted(ns))) for t, ns in v] for k, v in groups.items()}


def first_divergence(a, b) -> tuple[str, int, object, object] | None:
    ea, eb = processed_events(a), processed_events(b)
    for fed in sorted(set(ea) | set(eb)):
        sa, sb = ea.get(fed, []), eb.get(fed, [])
        for idx in range(max(len(sa), len(sb))):
            x = sa[idx] if idx < len(sa) else None
            y = sb[idx] if idx < len(sb) else None
            if x != y:
                return fed, idx, x, y
    return None


def check_equivalence(trace_a, trace_b) -> Verdict:
    verdict = Verdict()
    _structural(trace_a, verdict)
    _structural(trace_b, verdict)
    for t in (trace_a, trace_b):
        for r in _records(t):
            if r.kind == FAULT:
                verdict.add("fault", r.seq, r.note or "run aborted")
    div = first_divergence(trace_a, trace_b)
    if div is not None:
        fed, idx, x, y = div
        verdict.add("divergence", None, f"{fed} tag group #{idx}: {_fmt(x)} vs {_fmt(y)}")
    return verdict


def _fmt(group) -> str:
    if group is None:
        return "<nothing>"
    tag, notes = group
    return f"{tag} {list(notes)}"


def expected_dnet(topology: Topology, j: int, state: dict) -> Tag:
    """Recompute the DNET tag for federate ``j`` from a dumped RTI state."""
    best = FOREVER
    for i in topology.downstream_closure[j]:
        s = state[topology.names[i]]
        net = tag_from_json(s["net"])
        q = [tag_from_json(x) for x in s["in_transit"]]
        e = min([net] + q)
        if e != NEVER and e <= tag_from_json(s["last_granted"]):
            continue
        best = min(best, tag_subtract(e, topology.transitive[i][j]))
    return best


def check_dnet_consistency(trace: Trace | Iterable[TraceRecord], topology: Topology) -> Verdict:
    verdict = Verdict()
    _structural(trace, verdict)
    records = _records(trace)
    zdc = {topology.names[i] for i in topology.zero_delay_cycle_members}
    for idx, r in enumerate(records):
        if r.kind != "DNET" or r.note != SEND:
            continue
        if r.dst in zdc:
            verdict.add("dnet-to-cycle", r.seq, f"DNET sent to cycle member {r.dst}")
        nxt = records[idx + 1] if idx + 1 < len(records) else None
        if nxt is None or nxt.kind != DUMP or nxt.dst != r.dst:
            verdict.add("dnet-missing-dump", r.seq, f"DNET to {r.dst} has no state dump")
            continue
        try:
            state = json.loads(nxt.note or "")
            want = expected_dnet(topology, topology.index(r.dst), state)
        except (ValueError, KeyError, TypeError) as exc:
            verdict.add("dnet-value", nxt.seq, f"unreadable dump: {exc}")
            continue
        if want != r.tag:
            verdict.add("dnet-value", r.seq, f"DNET to {r.dst} is {r.tag}, recomputed {want}")
    return verdict
