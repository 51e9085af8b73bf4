"""Acceptance criteria, one test each.

Each test prints a ``criterion N: PASS|FAIL`` line; the summary hook in
``conftest.py`` repeats them at the end of the run.
"""

import itertools
import time

import pytest

from seeded import MUTATORS, base_runs
from tagsync.checker import check_dnet_consistency, check_equivalence, check_safety
from tagsync.harness import EXEC, RECV, SEND, LatencyModel, count_signals, run
from tagsync.scenarios import SCENARIOS, random_scenario, sparse_sender, zero_delay_cycle
from tagsync.signals import SignalKind
from tagsync.tags import FOREVER, FOREVER_TIME, M_MAX, MS, NEVER_TIME, SEC, ZERO, Tag, tag_add, tag_subtract

TIMES = [NEVER_TIME, 0, 1, 2, 3, 4, FOREVER_TIME]
MICROSTEPS = [0, 1, 2, 3, M_MAX]
LATENCIES = [LatencyModel.parse("zero"), LatencyModel.parse("fixed:3")]


def domain():
    out = []
    for t, m in itertools.product(TIMES, MICROSTEPS):
        try:
            out.append(Tag(t, m))
        except ValueError:
            pass
    return sorted(set(out))


@pytest.fixture
def report():
    state = {}

    def record(n, ok, detail=""):
        state["line"] = f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(state["line"])
        return ok

    return record


def test_criterion_1_subtract_matches_brute_force(report):
    start = time.perf_counter()
    dom = domain()
    bad = []
    for a in dom:
        for b in dom:
            if b == FOREVER or b.time == NEVER_TIME:
                continue
            want = max(g for g in dom if tag_add(g, b) <= a)
            if tag_subtract(a, b) != want:
                bad.append((a, b))
    elapsed = time.perf_counter() - start
    assert report(1, not bad and elapsed < 1.0, f"{elapsed:.3f}s, {len(bad)} mismatches")


def _sends(trace, kind, src=None, dst=None):
    return [r for r in trace if r.kind == kind and r.note == SEND
            and (src is None or r.src == src) and (dst is None or r.dst == dst)]


def test_criterion_2_baseline_shape(report):
    sc = sparse_sender(20 * MS, 100 * MS, 120 * MS)
    trace = run(sc.topology, sc)
    recv_nets = _sends(trace, "NET", src="receiver")
    first_after_startup = recv_nets[1].tag if len(recv_nets) > 1 else None
    sender_nets = {r.tag for r in _sends(trace, "NET", src="sender")}
    every_period = all(Tag(k * 20 * MS, 0) in sender_nets for k in range(1, 7))
    t100 = Tag(100 * MS, 0)
    tag_r = _sends(trace, "TAG", dst="receiver")
    tag_r = [r for r in tag_r if r.tag == t100]
    ltc_s = [r for r in trace if r.kind == "LTC" and r.note == RECV and r.src == "sender" and r.tag == t100]
    fwd = _sends(trace, "MSG", src="RTI", dst="receiver")
    ok = (
        first_after_startup == FOREVER
        and every_period
        and len(tag_r) == 1
        and bool(ltc_s) and ltc_s[0].seq < tag_r[0].seq
        and bool(fwd) and fwd[0].tag == t100 and fwd[0].seq < tag_r[0].seq
    )
    assert report(2, ok)


def test_criterion_3_dnet_shape(report):
    sc = sparse_sender(20 * MS, 100 * MS, 120 * MS)
    trace = run(sc.topology, sc, dnet=True)
    recs = trace.records
    recv_startup = next(r for r in recs if r.kind == "NET" and r.note == RECV and r.src == "receiver")
    dnets = _sends(trace, "DNET", dst="sender")
    dnet_after_startup = any(r.seq > recv_startup.seq for r in dnets)
    startup_done = next(r for r in _sends(trace, "LTC", src="sender") if r.tag == ZERO)
    detection = next(r for r in recs if r.kind == EXEC and r.src == "sender" and r.note.startswith("Detection"))
    early_nets = [r for r in _sends(trace, "NET", src="sender") if startup_done.seq < r.seq < detection.seq]
    msg = next(r for r in _sends(trace, "MSG", src="sender"))
    after = [r for r in recs if r.seq > msg.seq and r.note == SEND]
    dnet_100 = any(r.kind == "DNET" and r.dst == "sender" and r.tag == Tag(100 * MS, 0) for r in after)
    net_120 = any(r.kind == "NET" and r.src == "sender" and r.tag == Tag(120 * MS, 0) for r in after)
    ok = dnet_after_startup and not early_nets and msg.tag == Tag(100 * MS, 0) and dnet_100 and net_120
    assert report(3, ok, f"{len(early_nets)} early sender NETs")


REFERENCE_BASELINE = {5: 100161, 10: 50191, 20: 25193, 50: 10195, 100: 5195}


def test_criterion_4_net_reduction(report):
    rows, ok = [], True
    counts = {}
    for period_ms, expected in REFERENCE_BASELINE.items():
        sc = sparse_sender(period_ms * MS, 5 * SEC, 500 * SEC)
        for dnet in (False, True):
            start = time.perf_counter()
            trace = run(sc.topology, sc, dnet=dnet)
            elapsed = time.perf_counter() - start
            nets = count_signals(trace, SignalKind.NET)["total"]
            counts[(period_ms, dnet)] = nets
            ok &= elapsed < 30 and not trace.aborted
            if dnet:
                ok &= nets <= 1000
            else:
                ok &= abs(nets - expected) <= 0.02 * expected
            rows.append(f"{period_ms}ms dnet={'on' if dnet else 'off'}: {nets} NETs in {elapsed:.1f}s")
    ratio = counts[(5, False)] / counts[(5, True)]
    ok &= ratio >= 100
    print("\n".join(rows))
    assert report(4, ok, f"ratio at 5ms {ratio:.0f}x")


def _equivalent_and_safe(sc):
    base = run(sc.topology, sc)
    problems = []
    if base.aborted or base.stalled or not check_safety(base).ok:
        problems.append(f"{sc.name} baseline")
    for latency in LATENCIES:
        for dnet in (False, True):
            tr = run(sc.topology, sc, latency, dnet=dnet)
            verdict = check_safety(tr).extend(check_equivalence(base, tr))
            verdict.extend(check_dnet_consistency(tr, sc.topology))
            if not verdict.ok or tr.stalled:
                problems.append(f"{sc.name} {latency} dnet={dnet}")
    return problems


def test_criterion_5_equivalence_and_safety(report):
    scenarios = [SCENARIOS[name](20 * MS, 100 * MS, 1 * SEC) for name in sorted(SCENARIOS)]
    scenarios += [random_scenario(seed) for seed in range(50)]
    problems = [p for sc in scenarios for p in _equivalent_and_safe(sc)]
    assert report(5, not problems, f"{len(scenarios)} scenarios, {len(problems)} failures")


def test_criterion_6_seeded_faults_caught(report):
    total = caught = 0
    per_kind = {}
    for sc, trace in base_runs():
        for kind, mutate in MUTATORS.items():
            for bad in mutate(trace):
                hit = not check_safety(bad).extend(check_dnet_consistency(bad, sc.topology)).ok
                total += 1
                caught += hit
                n, c = per_kind.get(kind, (0, 0))
                per_kind[kind] = (n + 1, c + hit)
    ok = total > 0 and caught == total and all(n > 0 for n, _ in per_kind.values())
    assert report(6, ok, ", ".join(f"{k} {c}/{n}" for k, (n, c) in sorted(per_kind.items())))


def test_criterion_7_add_monotone(report):
    dom = domain()
    bad = [
        (a1, a2, b)
        for a1, a2 in itertools.combinations_with_replacement(dom, 2)
        for b in dom
        if tag_add(a1, b) > tag_add(a2, b)
    ]
    assert report(7, not bad, f"{len(bad)} violations")


def test_criterion_8_zero_delay_cycle(report):
    sc = zero_delay_cycle(20 * MS, 100 * MS, 1 * SEC)
    cycle = {"loop_a", "loop_b"}
    to_cycle = 0
    for latency in LATENCIES:
        tr = run(sc.topology, sc, latency, dnet=True)
        to_cycle += len([r for r in _sends(tr, "DNET") if r.dst in cycle])
    problems = _equivalent_and_safe(sc)
    assert report(8, to_cycle == 0 and not problems, f"{to_cycle} DNETs to cycle members")
