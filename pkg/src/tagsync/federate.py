"""Federate-side state machine: event queue, tag advancement, NET suppression."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .signals import RTI, ProtocolError, Signal, SignalKind
from .tags import FOREVER, NEVER, ZERO, Tag, delay_to_tag, tag_add
from .topology import Connection, Topology


class Action(str, Enum):
    TIMER = "TimerFire"
    MESSAGE = "MessageArrival"
    DETECTION = "Detection"


@dataclass(frozen=True)
class Event:
    tag: Tag
    action: Action
    body: bytes = b""


Reaction = Callable[["Federate", Event], None]


class Federate:
    """One federate.

    Reactions are plain callables keyed by :class:`Action`; they receive the
    federate and the event and may call :meth:`send_message` or
    :meth:`schedule`. Every public entry point returns the signals to send.

    The startup tag ``(0, 0)`` is processed by every federate without a
    grant; ``granted`` therefore starts at ``(0, 0)``.
    """

    def __init__(
        self,
        fid: int,
        topology: Topology,
        reactions: dict[Action, Reaction] | None = None,
        dnet_enabled: bool = False,
        until: Tag = FOREVER,
    ):
        self.id = fid
        self.topology = topology
        self.reactions = dict(reactions or {})
        self.dnet_enabled = dnet_enabled
        self.until = until
        self.has_upstream = topology.has_upstream(fid)
        self.current = NEVER
        self.granted = ZERO
        self.dn = NEVER
        self.sn = NEVER
        self._events: list[tuple[Tag, int, Event]] = []
        self._seq = itertools.count()
        self._out: list[Signal] = []
        self.executed: list[Event] = []

    # -- queue -------------------------------------------------------------

    def schedule(self, tag: Tag, action: Action, body: bytes = b"") -> None:
        """Queue a local event; it must lie strictly after the current tag."""
        if tag <= self.current:
            raise ProtocolError(f"federate {self.id}: cannot schedule at {tag}, current {self.current}")
        heapq.heappush(self._events, (tag, next(self._seq), Event(tag, action, body)))

    def next_event_tag(self) -> Tag:
        if self.current < ZERO:
            return ZERO
        if self._events:
            head = self._events[0][0]
            if head <= self.until:
                return head
        return FOREVER

    def pending_events(self) -> list[Event]:
        return [e for _, _, e in sorted(self._events)]

    def can_advance(self) -> bool:
        nxt = self.next_event_tag()
        if nxt == FOREVER:
            return False
        return not self.has_upstream or nxt <= self.granted

    # -- protocol ----------------------------------------------------------

    def start(self) -> list[Signal]:
        return [Signal(SignalKind.NET, ZERO, self.id, RTI)]

    def advance(self) -> list[Signal]:
        """Process the next tag if permitted; no-op otherwise."""
        if not self.can_advance():
            return []
        return self._process_tag(self.next_event_tag())

    def _process_tag(self, tag: Tag) -> list[Signal]:
        self._out = []
        self.current = tag
        events = self._events
        while events and events[0][0] == tag:
            _, _, ev = heapq.heappop(events)
            self.executed.append(ev)
            reaction = self.reactions.get(ev.action)
            if reaction is not None:
                reaction(self, ev)
        out = self._out
        self._out = []
        return out + self.on_tag_complete()

    def on_tag_complete(self) -> list[Signal]:
        out = [Signal(SignalKind.LTC, self.current, self.id, RTI)]
        nxt = self.next_event_tag()
        if self.has_upstream and self.granted < nxt:
            # Blocked: the RTI needs this NET to grant us.
            out.append(Signal(SignalKind.NET, nxt, self.id, RTI))
            self.sn = NEVER
        elif self.dnet_enabled and self.dn >= nxt:
            self.sn = nxt
        else:
            out.append(Signal(SignalKind.NET, nxt, self.id, RTI))
            self.sn = NEVER
        return out

    def on_dnet(self, tag: Tag) -> list[Signal]:
        if not self.dnet_enabled:
            raise ProtocolError(f"federate {self.id}: DNET received with DNET disabled")
        out = []
        if tag < self.sn:
            out.append(Signal(SignalKind.NET, self.sn, self.id, RTI))
            self.sn = NEVER
        self.dn = tag
        return out

    def send_message(self, dst: int, body: bytes = b"", delay: int | None = None) -> Tag:
        """Send ``body`` to ``dst`` from inside a reaction; returns the destination tag."""
        conn = self._connection_to(dst, delay)
        dest_tag = tag_add(self.current, delay_to_tag(conn.delay))
        self._out.extend(self.on_send_message(dst, dest_tag, body))
        return dest_tag

    def _connection_to(self, dst: int, delay: int | None) -> Connection:
        conns = [c for c in self.topology.outgoing[self.id] if c.dst == dst]
        if delay is not None:
            conns = [c for c in conns if c.delay == delay]
        if not conns:
            raise ProtocolError(f"federate {self.id} has no connection to {dst}")
        if len(conns) > 1:
            raise ProtocolError(f"ambiguous connection {self.id}->{dst}; pass delay")
        return conns[0]

    def on_send_message(self, dst: int, dest_tag: Tag, body: bytes) -> list[Signal]:
        if self.dnet_enabled and dest_tag < self.dn:
            self.dn = dest_tag
        return [Signal(SignalKind.MSG, dest_tag, self.id, RTI, body, self.id, dst)]

    def on_tag_grant(self, tag: Tag) -> list[Signal]:
        if tag <= self.granted:
            raise ProtocolError(f"federate {self.id}: TAG regression {tag} <= {self.granted}")
        self.granted = tag
        out = []
        while self.can_advance():
            out += self._process_tag(self.next_event_tag())
        return out

    def on_receive_msg(self, tag: Tag, body: bytes) -> None:
        if tag <= self.current:
            raise ProtocolError(
                f"federate {self.id}: tardy message at {tag}, current {self.current}"
            )
        heapq.heappush(self._events, (tag, next(self._seq), Event(tag, Action.MESSAGE, body)))

    def handle(self, signal: Signal) -> list[Signal]:
        kind = signal.kind
        if kind is SignalKind.TAG:
            return self.on_tag_grant(signal.tag)
        if kind is SignalKind.DNET:
            return self.on_dnet(signal.tag)
        if kind is SignalKind.MSG:
            self.on_receive_msg(signal.tag, signal.body)
            return []
        raise ProtocolError(f"federate {self.id} cannot accept {kind.value}")

    def dump(self) -> dict:
        return {
            "current": self.current,
            "granted": self.granted,
            "dn": self.dn,
            "sn": self.sn,
            "next": self.next_event_tag(),
        }
