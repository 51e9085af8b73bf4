import json
import random

import pytest

from tagsync.tags import FOREVER, M_MAX, MS, NEVER_TIME, ZERO, Tag, delay_to_tag, tag_add
from tagsync.topology import Connection, build, from_json, load, zero_delay_cycle_members

DELAYS = [NEVER_TIME, 0, 1 * MS, 10 * MS]


def walks_oracle(n, conns):
    """Minimum A-fold over every walk j -> ... -> i of at most n hops."""
    best = [[FOREVER] * n for _ in range(n)]
    frontier = {}
    for c in conns:
        key = (c.src, c.dst)
        d = delay_to_tag(c.delay)
        frontier[key] = min(frontier.get(key, FOREVER), d)
    for _ in range(n):
        for (j, i), t in frontier.items():
            best[i][j] = min(best[i][j], t)
        nxt = {}
        for (j, k), t in frontier.items():
            for c in conns:
                if c.src == k:
                    key = (j, c.dst)
                    nxt[key] = min(nxt.get(key, FOREVER), tag_add(t, delay_to_tag(c.delay)))
        frontier = nxt
    return best


def random_graph(rng, n_max=5):
    n = rng.randint(1, n_max)
    conns = []
    for _ in range(rng.randint(0, n * 2)):
        a, b = rng.randrange(n), rng.randrange(n)
        if a != b:
            conns.append(Connection(a, b, rng.choice(DELAYS)))
    return n, conns


def test_single_never_edge():
    topo = build(2, [Connection(0, 1, NEVER_TIME)])
    assert topo.immediate[1][0] == ZERO
    assert topo.transitive[1][0] == ZERO
    assert topo.upstream[1] == {0}
    assert topo.downstream_closure[0] == {1}


def test_chain_fold():
    topo = build(3, [Connection(0, 1, 10 * MS), Connection(1, 2, 0)])
    assert topo.transitive[2][0] == Tag(10 * MS, 1)
    assert topo.immediate[2][0] == FOREVER


def test_no_path():
    topo = build(3, [Connection(0, 1, 10 * MS)])
    assert topo.transitive[2][0] == FOREVER
    assert topo.transitive[0][1] == FOREVER


def test_parallel_edges_take_minimum():
    topo = build(2, [Connection(0, 1, 10 * MS), Connection(0, 1, 0)])
    assert topo.immediate[1][0] == Tag(0, 1)


def test_rejects_bad_endpoints():
    with pytest.raises(ValueError):
        build(2, [Connection(0, 2, 0)])
    with pytest.raises(ValueError):
        build(2, [Connection(1, 1, 0)])


def test_zero_delay_cycles():
    pair = build(2, [Connection(0, 1, NEVER_TIME), Connection(1, 0, NEVER_TIME)])
    assert zero_delay_cycle_members(pair) == {0, 1}
    microstep_pair = build(2, [Connection(0, 1, 0), Connection(1, 0, 0)])
    assert zero_delay_cycle_members(microstep_pair) == frozenset()
    # the cycle still advances two microsteps
    assert microstep_pair.transitive[0][0] == Tag(0, 2)
    chain = build(3, [Connection(0, 1, NEVER_TIME), Connection(1, 2, NEVER_TIME)])
    assert zero_delay_cycle_members(chain) == frozenset()


def test_zero_cycle_with_tail():
    topo = build(
        4,
        [
            Connection(0, 1, NEVER_TIME),
            Connection(1, 2, NEVER_TIME),
            Connection(2, 1, NEVER_TIME),
            Connection(2, 3, 5 * MS),
        ],
    )
    assert zero_delay_cycle_members(topo) == {1, 2}


def test_random_graphs_against_walk_oracle():
    rng = random.Random(1234)
    for _ in range(200):
        n, conns = random_graph(rng)
        topo = build(n, conns)
        oracle = walks_oracle(n, conns)
        for i in range(n):
            for j in range(n):
                assert topo.transitive[i][j] == oracle[i][j]
                assert topo.transitive[i][j] <= topo.immediate[i][j]
                if topo.transitive[i][j] != FOREVER:
                    assert topo.transitive[i][j] >= ZERO
            assert topo.downstream_closure[i] == {
                k for k in range(n) if topo.transitive[k][i] < FOREVER
            }


def test_random_graphs_triangle_property():
    rng = random.Random(99)
    for _ in range(200):
        n, conns = random_graph(rng)
        topo = build(n, conns)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if topo.immediate[i][k] == FOREVER or topo.transitive[k][j] == FOREVER:
                        continue
                    assert topo.transitive[i][j] <= tag_add(topo.transitive[k][j], topo.immediate[i][k])


def test_adding_edge_never_increases_delays():
    rng = random.Random(7)
    for _ in range(100):
        n, conns = random_graph(rng)
        if n < 2:
            continue
        before = build(n, conns)
        a, b = rng.sample(range(n), 2)
        after = build(n, conns + [Connection(a, b, rng.choice(DELAYS))])
        for i in range(n):
            for j in range(n):
                assert after.transitive[i][j] <= before.transitive[i][j]


def test_json_round_trip(tmp_path):
    cfg = {
        "federates": 3,
        "connections": [
            {"from": 0, "to": 1, "delay_ns": "never"},
            {"from": 1, "to": 2, "delay_ns": 10000000},
            {"from": 2, "to": 0, "delay_ns": "forever"},
        ],
    }
    path = tmp_path / "topo.json"
    path.write_text(json.dumps(cfg))
    topo = load(path)
    assert topo.transitive[2][0] == Tag(10 * MS, 0)
    assert topo.immediate[0][2] == FOREVER
    assert from_json(topo.to_json()).transitive == topo.transitive
    assert topo.to_json() == {**cfg, "names": ["F0", "F1", "F2"]}
    named = build(2, [Connection(0, 1, 0)], names=["x", "y"])
    assert from_json(named.to_json()).names == ("x", "y")
    assert M_MAX == 2**32 - 1
