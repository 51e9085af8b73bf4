"""Shipped scenarios and a random scenario generator."""

from __future__ import annotations

import random
import struct

from .federate import Action, Event, Federate
from .harness import Scenario
from .tags import FOREVER, M_MAX, MS, NEVER_TIME, SEC, Tag
from .topology import Connection, build


def _periodic(action: Action, period: int, horizon: int, body=None):
    """Reaction that reschedules itself every ``period`` up to ``horizon``."""

    def react(fed: Federate, ev: Event) -> None:
        nxt = ev.tag.time + period
        if nxt <= horizon:
            fed.schedule(Tag(nxt, 0), action, body(nxt) if body else b"")

    return react


def sparse_sender(
    period: int = 20 * MS,
    detection_period: int = 5 * SEC,
    duration: int = 500 * SEC,
    delay: int = NEVER_TIME,
) -> Scenario:
    """Upstream sensor polled every ``period``; a detection every
    ``detection_period`` sends one message to the downstream sink."""
    if period <= 0 or detection_period <= 0:
        raise ValueError("periods must be positive")
    topo = build(2, [Connection(0, 1, delay)], names=["sender", "receiver"])
    timer = _periodic(Action.TIMER, period, duration)
    detect_next = _periodic(Action.DETECTION, detection_period, duration)

    def on_detection(fed: Federate, ev: Event) -> None:
        fed.send_message(1, b"detected@%d" % ev.tag.time)
        detect_next(fed, ev)

    def setup(fed: Federate) -> None:
        if fed.id == 0:
            fed.reactions[Action.TIMER] = timer
            fed.reactions[Action.DETECTION] = on_detection
            fed.schedule(Tag(0, 0), Action.TIMER)
            if detection_period <= duration:
                fed.schedule(Tag(detection_period, 0), Action.DETECTION)

    params = dict(period_ns=period, detection_period_ns=detection_period, duration_ns=duration)
    return Scenario("sparse", topo, setup, Tag(duration, M_MAX), params)


def delays_chain(
    period: int = 20 * MS,
    detection_period: int = 100 * MS,
    duration: int = 1 * SEC,
) -> Scenario:
    """Three federates ``a -> b -> c`` with after-delays 10 ms and 0."""
    topo = build(
        3,
        [Connection(0, 1, 10 * MS), Connection(1, 2, 0)],
        names=["a", "b", "c"],
    )
    timer = _periodic(Action.TIMER, period, duration)
    detect_next = _periodic(Action.DETECTION, detection_period, duration)

    def on_detection(fed: Federate, ev: Event) -> None:
        fed.send_message(1, b"a@%d" % ev.tag.time)
        detect_next(fed, ev)

    def relay(fed: Federate, ev: Event) -> None:
        fed.send_message(2, b"b<" + ev.body)

    def setup(fed: Federate) -> None:
        if fed.id == 0:
            fed.reactions[Action.TIMER] = timer
            fed.reactions[Action.DETECTION] = on_detection
            fed.schedule(Tag(0, 0), Action.TIMER)
            fed.schedule(Tag(detection_period, 0), Action.DETECTION)
        elif fed.id == 1:
            fed.reactions[Action.MESSAGE] = relay
            fed.reactions[Action.TIMER] = _periodic(Action.TIMER, 4 * period, duration)
            fed.schedule(Tag(0, 0), Action.TIMER)

    params = dict(period_ns=period, detection_period_ns=detection_period, duration_ns=duration)
    return Scenario("chain", topo, setup, Tag(duration + 10 * MS, M_MAX), params)


def fan_in(
    period: int = 20 * MS,
    detection_period: int = 100 * MS,
    duration: int = 1 * SEC,
) -> Scenario:
    """Two sparse senders with different phases feeding one receiver.

    Every other detection of the second sender coincides with one of the
    first, so the receiver sees simultaneous messages.
    """
    topo = build(
        3,
        [Connection(0, 2, NEVER_TIME), Connection(1, 2, 1 * MS)],
        names=["left", "right", "sink"],
    )

    def sender(dst_body: bytes, det: int):
        detect_next = _periodic(Action.DETECTION, det, duration)

        def on_detection(fed: Federate, ev: Event) -> None:
            fed.send_message(2, dst_body + b"@%d" % ev.tag.time)
            detect_next(fed, ev)

        return on_detection

    def setup(fed: Federate) -> None:
        if fed.id == 0:
            fed.reactions[Action.TIMER] = _periodic(Action.TIMER, period, duration)
            fed.reactions[Action.DETECTION] = sender(b"left", detection_period)
            fed.schedule(Tag(0, 0), Action.TIMER)
            fed.schedule(Tag(detection_period, 0), Action.DETECTION)
        elif fed.id == 1:
            fed.reactions[Action.TIMER] = _periodic(Action.TIMER, period * 3 // 2, duration)
            fed.reactions[Action.DETECTION] = sender(b"right", detection_period // 2)
            fed.schedule(Tag(0, 0), Action.TIMER)
            fed.schedule(Tag(detection_period // 2 - 1 * MS, 0), Action.DETECTION)

    params = dict(period_ns=period, detection_period_ns=detection_period, duration_ns=duration)
    return Scenario("fanin", topo, setup, Tag(duration + 1 * MS, M_MAX), params)


def zero_delay_cycle(
    period: int = 20 * MS,
    detection_period: int = 100 * MS,
    duration: int = 1 * SEC,
) -> Scenario:
    """A sparse sender/receiver pair next to two federates joined by a
    zero-delay cycle.

    The cycle members only run the startup tag: without provisional grants
    any later event inside a zero-delay cycle could never be granted.
    """
    topo = build(
        4,
        [
            Connection(0, 1, NEVER_TIME),
            Connection(2, 3, NEVER_TIME),
            Connection(3, 2, NEVER_TIME),
        ],
        names=["sender", "receiver", "loop_a", "loop_b"],
    )
    inner = sparse_sender(period, detection_period, duration)

    def setup(fed: Federate) -> None:
        if fed.id in (0, 1):
            inner.setup(fed)

    params = dict(period_ns=period, detection_period_ns=detection_period, duration_ns=duration)
    return Scenario("zdc", topo, setup, Tag(duration, M_MAX), params)


SCENARIOS = {
    "sparse": sparse_sender,
    "chain": delays_chain,
    "fanin": fan_in,
    "zdc": zero_delay_cycle,
}


def make(name: str, period: int, detection_period: int, duration: int) -> Scenario:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return factory(period=period, detection_period=detection_period, duration=duration)


RANDOM_DELAYS = (NEVER_TIME, 0, 1 * MS, 10 * MS)


def random_scenario(seed: int, max_federates: int = 6, horizon: int = 100 * MS) -> Scenario:
    """A random small federation with a sparse event schedule.

    Topologies with zero-delay cycles are redrawn. Message bodies carry a
    hop budget so that forwarding around positive-delay cycles terminates.
    """
    rng = random.Random(seed)
    while True:
        n = rng.randint(2, max_federates)
        conns = []
        for _ in range(rng.randint(1, 2 * n)):
            a, b = rng.sample(range(n), 2)
            if all((c.src, c.dst) != (a, b) for c in conns):
                conns.append(Connection(a, b, rng.choice(RANDOM_DELAYS)))
        topo = build(n, conns)
        if not topo.zero_delay_cycle_members:
            break

    plans = []
    for i in range(n):
        period = rng.choice((0, 2 * MS, 5 * MS, 10 * MS))
        kicks = sorted({Tag(rng.randint(1, horizon // MS) * MS, rng.randint(0, 2))
                        for _ in range(rng.randint(0, 3))})
        # timer ticks that emit a message, chosen by tick index
        emit_every = rng.randint(2, 6)
        plans.append((period, kicks, emit_every, rng.randint(0, 3)))

    def fanout(fed: Federate, hops: int, origin: bytes) -> None:
        if hops <= 0:
            return
        for c in fed.topology.outgoing[fed.id]:
            fed.send_message(c.dst, struct.pack(">B", hops - 1) + origin, c.delay)

    def setup(fed: Federate) -> None:
        period, kicks, emit_every, hops = plans[fed.id]
        tick = bytes([fed.id])

        def on_timer(f: Federate, ev: Event) -> None:
            if period:
                nxt = ev.tag.time + period
                if nxt <= horizon:
                    f.schedule(Tag(nxt, 0), Action.TIMER)
                if (ev.tag.time // period) % emit_every == emit_every - 1:
                    fanout(f, hops, tick + b"t%d" % ev.tag.time)

        def on_kick(f: Federate, ev: Event) -> None:
            fanout(f, max(hops, 1), tick + b"k%d.%d" % ev.tag)

        def on_message(f: Federate, ev: Event) -> None:
            fanout(f, ev.body[0], ev.body[1:])

        fed.reactions[Action.TIMER] = on_timer
        fed.reactions[Action.DETECTION] = on_kick
        fed.reactions[Action.MESSAGE] = on_message
        if period:
            fed.schedule(Tag(period, 0), Action.TIMER)
        for k in kicks:
            fed.schedule(k, Action.DETECTION)

    return Scenario(f"random-{seed}", topo, setup, Tag(horizon + 20 * MS, M_MAX), {"seed": seed})
