"""Centralized coordinator: NET/LTC bookkeeping, TAG grants and DNET."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

from .signals import RTI, ProtocolError, Signal, SignalKind
from .tags import (
    FOREVER,
    NEVER,
    ZERO,
    Tag,
    tag_add,
    tag_predecessor,
    tag_subtract,
    tag_successor,
)
from .topology import Topology

log = logging.getLogger(__name__)


@dataclass
class RtiFederateState:
    """What the RTI knows about one federate."""

    net: Tag = NEVER
    ltc: Tag = NEVER
    in_transit: list[Tag] = field(default_factory=list)
    # Every federate starts at the common startup tag without a grant.
    last_granted: Tag = ZERO
    last_dnet: Tag | None = None

    @property
    def head(self) -> Tag:
        return self.in_transit[0] if self.in_transit else FOREVER

    @property
    def earliest(self) -> Tag:
        """``min(N, H(Q))``."""
        h = self.head
        return self.net if self.net < h else h


def completion_bound(completed: Tag, delay: Tag) -> Tag:
    """Latest tag at which a downstream federate is safe given upstream completion.

    An upstream federate that completed ``completed`` can only send from
    tags strictly later, so the earliest message it can still cause is
    ``A(successor(completed), delay)``; everything before that is safe.
    """
    if completed == NEVER:
        return NEVER
    if completed == FOREVER:
        return FOREVER
    return tag_predecessor(tag_add(tag_successor(completed), delay))


class Rti:
    """Single-threaded RTI state machine.

    Each ``handle_*`` call consumes one input signal and returns the signals
    to send, in a deterministic order: forwarded messages first, then TAGs
    in ascending federate id, then DNETs in ascending federate id.
    """

    def __init__(self, topology: Topology, dnet: bool = False):
        self.topology = topology
        self.dnet_enabled = dnet
        self.states = [RtiFederateState() for _ in range(topology.size)]
        self._eimt: list[Tag] | None = None

    # -- inputs ------------------------------------------------------------

    def handle(self, signal: Signal) -> list[Signal]:
        kind = signal.kind
        if kind is SignalKind.NET:
            return self.handle_net(signal.src, signal.tag)
        if kind is SignalKind.LTC:
            return self.handle_ltc(signal.src, signal.tag)
        if kind is SignalKind.MSG:
            return self.handle_msg(signal.origin, signal.target, signal.tag, signal.body)
        raise ProtocolError(f"RTI cannot accept {kind.value} signals")

    def handle_net(self, j: int, tag: Tag) -> list[Signal]:
        st = self.states[j]
        if tag == st.net:
            return []
        if tag < st.net:
            # Legitimate after processing a message earlier than the last
            # reported tag; keeping the larger value would be unsafe.
            log.debug("federate %d lowered NET from %s to %s", j, st.net, tag)
        st.net = tag
        self._eimt = None
        topo = self.topology
        return self._react(topo.downstream_closure[j] | {j}, topo.upstream_closure[j])

    def handle_ltc(self, j: int, tag: Tag) -> list[Signal]:
        st = self.states[j]
        if tag <= st.ltc:
            log.warning("ignoring stale LTC %s from federate %d (have %s)", tag, j, st.ltc)
            return []
        st.ltc = tag
        q = st.in_transit
        popped = False
        while q and q[0] <= tag:
            heapq.heappop(q)
            popped = True
        if popped:
            # Processing those messages may have scheduled events earlier
            # than the last NET; only "later than tag" is known until the
            # next NET arrives.
            nxt = tag_successor(tag)
            if nxt < st.net:
                st.net = nxt
        self._eimt = None
        topo = self.topology
        dnet_targets = topo.upstream_closure[j] if popped else frozenset()
        return self._react(topo.downstream_closure[j], dnet_targets)

    def handle_msg(self, src: int, dst: int, tag: Tag, body: bytes) -> list[Signal]:
        topo = self.topology
        if not (0 <= src < topo.size and 0 <= dst < topo.size):
            raise ProtocolError(f"message between unknown federates {src}->{dst}")
        if topo.transitive[dst][src] == FOREVER:
            raise ProtocolError(f"no connection path from {src} to {dst}")
        heapq.heappush(self.states[dst].in_transit, tag)
        self._eimt = None
        out = [Signal(SignalKind.MSG, tag, RTI, dst, body, src, dst)]
        out += self._react(topo.downstream_closure[dst] | {dst}, topo.upstream_closure[dst])
        return out

    def _react(self, grant_candidates, dnet_candidates) -> list[Signal]:
        out = []
        for i in sorted(grant_candidates):
            sig = self.try_grant_tag(i)
            if sig is not None:
                out.append(sig)
        if self.dnet_enabled:
            for j in sorted(dnet_candidates):
                sig = self.refresh_dnet(j)
                if sig is not None:
                    out.append(sig)
        return out

    # -- grants ------------------------------------------------------------

    def try_grant_tag(self, i: int) -> Signal | None:
        topo = self.topology
        ups = topo.upstream[i]
        if not ups:
            return None
        st = self.states[i]
        row = topo.immediate[i]
        states = self.states
        g = FOREVER
        for j in ups:
            b = completion_bound(states[j].ltc, row[j])
            if b < g:
                g = b
        if g >= st.net:
            cand = g
        else:
            cand = st.earliest
            # Nothing can be strictly later than FOREVER.
            if cand <= st.last_granted or cand == FOREVER:
                return None
            if not self.compute_eimt(i) > cand:
                return None
        if cand <= st.last_granted:
            return None
        st.last_granted = cand
        return Signal(SignalKind.TAG, cand, RTI, i)

    def compute_eimt(self, i: int) -> Tag:
        """Earliest tag of any future incoming message for federate ``i``."""
        if self._eimt is None:
            self._eimt = self._all_eimt()
        return self._eimt[i]

    def _all_eimt(self) -> list[Tag]:
        topo = self.topology
        n = topo.size
        zdc = topo.zero_delay_cycle_members
        states = self.states
        b = [NEVER if i in zdc else FOREVER for i in range(n)]
        # Greatest fixpoint of the recursive definition; sources keep
        # FOREVER, zero-delay-cycle members are pinned at the bottom.
        for _ in range(n + 1):
            changed = False
            for i in range(n):
                if i in zdc:
                    continue
                row = topo.immediate[i]
                best = FOREVER
                for j in topo.upstream[i]:
                    s = states[j]
                    e = s.earliest
                    if b[j] < e:
                        e = b[j]
                    v = tag_add(e, row[j])
                    if v < best:
                        best = v
                if best != b[i]:
                    b[i] = best
                    changed = True
            if not changed:
                break
        return b

    # -- DNET --------------------------------------------------------------

    def compute_dnet_tag(self, j: int) -> Tag:
        """Upper bound of NET tags from ``j`` that no downstream federate needs."""
        topo = self.topology
        best = FOREVER
        for i in topo.downstream_closure[j]:
            st = self.states[i]
            e = st.earliest
            if e != NEVER and e <= st.last_granted:
                # Already permitted to advance there; no TAG is pending.
                continue
            v = tag_subtract(e, topo.transitive[i][j])
            if v < best:
                best = v
        return best

    def refresh_dnet(self, j: int) -> Signal | None:
        if not self.dnet_enabled:
            return None
        topo = self.topology
        if j in topo.zero_delay_cycle_members or not topo.downstream_closure[j]:
            return None
        value = self.compute_dnet_tag(j)
        st = self.states[j]
        # Federates start with DN = NEVER, so an unsent DNET counts as NEVER.
        previous = NEVER if st.last_dnet is None else st.last_dnet
        if value == previous:
            return None
        st.last_dnet = value
        return Signal(SignalKind.DNET, value, RTI, j)

    # -- debugging ---------------------------------------------------------

    def dump(self) -> dict:
        """Per-federate state snapshot for trace checking."""
        out = {}
        for i, st in enumerate(self.states):
            out[self.topology.names[i]] = {
                "net": st.net,
                "ltc": st.ltc,
                "in_transit": sorted(st.in_transit),
                "last_granted": st.last_granted,
                "last_dnet": st.last_dnet,
            }
        return out
