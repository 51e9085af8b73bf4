"""Federate connection graph and minimum-delay analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .tags import FOREVER, FOREVER_TIME, NEVER_TIME, ZERO, Tag, delay_to_tag, tag_add


@dataclass(frozen=True)
class Connection:
    """A directed connection ``src -> dst`` with an after-delay in ns.

    ``delay`` of ``NEVER_TIME`` means no after-delay was specified.
    """

    src: int
    dst: int
    delay: int = NEVER_TIME

    @property
    def delay_tag(self) -> Tag:
        return delay_to_tag(self.delay)


@dataclass(frozen=True)
class Topology:
    """Immutable delay analysis of a federation.

    ``immediate[i][j]`` and ``transitive[i][j]`` are minimum tag increments
    for messages flowing from ``j`` to ``i`` (``FOREVER`` when unconnected).
    """

    size: int
    connections: tuple[Connection, ...]
    names: tuple[str, ...]
    immediate: tuple[tuple[Tag, ...], ...]
    transitive: tuple[tuple[Tag, ...], ...]
    upstream: tuple[frozenset[int], ...]
    downstream: tuple[frozenset[int], ...]
    downstream_closure: tuple[frozenset[int], ...]
    upstream_closure: tuple[frozenset[int], ...]
    zero_delay_cycle_members: frozenset[int]
    outgoing: tuple[tuple[Connection, ...], ...] = field(repr=False)

    def has_upstream(self, i: int) -> bool:
        return bool(self.upstream[i])

    def name(self, i: int) -> str:
        return self.names[i]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def to_json(self) -> dict:
        def enc(d: int):
            if d == NEVER_TIME:
                return "never"
            if d == FOREVER_TIME:
                return "forever"
            return d

        return {
            "federates": self.size,
            "names": list(self.names),
            "connections": [
                {"from": c.src, "to": c.dst, "delay_ns": enc(c.delay)} for c in self.connections
            ],
        }


def _transitive_delays(n: int, immediate: list[list[Tag]]) -> list[list[Tag]]:
    # Bellman-Ford style relaxation under the tag order. Every hop tag is
    # >= (0,0) and A never decreases its first argument, so no cycle can
    # improve a path and n rounds suffice.
    dist = [row[:] for row in immediate]
    for _ in range(n):
        changed = False
        for j in range(n):
            for k in range(n):
                via = dist[k][j]
                if via == FOREVER:
                    continue
                for i in range(n):
                    hop = immediate[i][k]
                    if hop == FOREVER:
                        continue
                    cand = tag_add(via, hop)
                    if cand < dist[i][j]:
                        dist[i][j] = cand
                        changed = True
        if not changed:
            break
    return dist


def _zero_delay_cycle_members(n: int, immediate: list[list[Tag]]) -> frozenset[int]:
    # Edges that add neither time nor microstep; a federate is flagged if it
    # can reach itself through them.
    succ = [[i for i in range(n) if immediate[i][j] == ZERO] for j in range(n)]
    members = set()
    for start in range(n):
        seen: set[int] = set()
        stack = list(succ[start])
        while stack:
            v = stack.pop()
            if v == start:
                members.add(start)
                break
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ[v])
    return frozenset(members)


def build(
    federates: int,
    connections: Iterable[Connection],
    names: Sequence[str] | None = None,
) -> Topology:
    """Analyse a federation of ``federates`` nodes joined by ``connections``."""
    n = federates
    if n < 1:
        raise ValueError("a federation needs at least one federate")
    conns = tuple(connections)
    if names is None:
        names = [f"F{i}" for i in range(n)]
    if len(names) != n or len(set(names)) != n or "RTI" in names:
        raise ValueError("federate names must be unique, one per federate, and not 'RTI'")

    immediate = [[FOREVER] * n for _ in range(n)]
    outgoing: list[list[Connection]] = [[] for _ in range(n)]
    for c in conns:
        if not (0 <= c.src < n and 0 <= c.dst < n):
            raise ValueError(f"connection endpoint out of range: {c}")
        if c.src == c.dst:
            raise ValueError(f"self-connection not allowed: {c}")
        if c.delay != NEVER_TIME and c.delay < 0:
            raise ValueError(f"negative delay: {c}")
        d = c.delay_tag
        if d < immediate[c.dst][c.src]:
            immediate[c.dst][c.src] = d
        outgoing[c.src].append(c)

    transitive = _transitive_delays(n, immediate)
    upstream = [frozenset(j for j in range(n) if immediate[i][j] != FOREVER) for i in range(n)]
    downstream = [frozenset(i for i in range(n) if immediate[i][j] != FOREVER) for j in range(n)]
    closure = [frozenset(i for i in range(n) if transitive[i][j] < FOREVER) for j in range(n)]
    up_closure = [frozenset(j for j in range(n) if transitive[i][j] < FOREVER) for i in range(n)]

    return Topology(
        size=n,
        connections=conns,
        names=tuple(names),
        immediate=tuple(tuple(r) for r in immediate),
        transitive=tuple(tuple(r) for r in transitive),
        upstream=tuple(upstream),
        downstream=tuple(downstream),
        downstream_closure=tuple(closure),
        upstream_closure=tuple(up_closure),
        zero_delay_cycle_members=_zero_delay_cycle_members(n, immediate),
        outgoing=tuple(tuple(o) for o in outgoing),
    )


def zero_delay_cycle_members(topology: Topology) -> frozenset[int]:
    return topology.zero_delay_cycle_members


def _decode_delay(value) -> int:
    if value == "never" or value is None:
        return NEVER_TIME
    if value == "forever":
        return FOREVER_TIME
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"bad delay_ns: {value!r}")
    return value


def from_json(obj: dict) -> Topology:
    conns = [
        Connection(int(c["from"]), int(c["to"]), _decode_delay(c.get("delay_ns", "never")))
        for c in obj.get("connections", [])
    ]
    return build(int(obj["federates"]), conns, obj.get("names"))


def load(path: str | Path) -> Topology:
    return from_json(json.loads(Path(path).read_text()))
