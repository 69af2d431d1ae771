import random

import pytest

from crowdtrace import (
    MemoryBackend,
    QueryParams,
    SegmentationConfig,
    Segment,
    Trajectory,
    XzConfig,
    ingest,
    irjq,
    irjq_unpruned,
    irq,
    segment,
    sft_build,
)
from crowdtrace.join import build_ttree
from conftest import build_workload, loc

P = QueryParams()
CFG = XzConfig(resolution=12)
SEG = SegmentationConfig()


def _seg(sid, east, t0, t1):
    return Segment.build(sid, sid.split("#")[0], [loc(east, 0, t0), loc(east, 0, t1)])


# --- index structure ---------------------------------------------------------------


def test_single_segment_tree():
    root = sft_build([_seg("a#0", 0, 0, 60)], resolution=10)
    quad_leaves = list(root.quad_leaves())
    assert len(quad_leaves) == 1
    assert quad_leaves[0].depth == 10
    tt_leaves = list(quad_leaves[0].time_tree.leaves())
    assert len(tt_leaves) == 1
    assert tt_leaves[0].entries[0].sid == "a#0"


def test_ttree_merges_overlapping_ranges():
    segs = [_seg("a#0", 0, 0, 100), _seg("a#1", 3, 50, 150), _seg("a#2", 6, 120, 200)]
    tree = build_ttree(segs, capacity=8, max_leaf_span=10_000)
    leaves = list(tree.leaves())
    assert len(leaves) == 1
    assert leaves[0].tr.start == 0 and leaves[0].tr.end == 200


def test_ttree_keeps_disjoint_ranges_apart():
    segs = [_seg("a#0", 0, 0, 100), _seg("a#1", 3, 500, 600)]
    tree = build_ttree(segs, capacity=8, max_leaf_span=10_000)
    assert len(list(tree.leaves())) == 2


def test_ttree_splits_overlapping_but_overlong_ranges():
    # overlapping in time, but the merged span exceeds the limit: two leaves
    segs = [_seg("a#0", 0, 0, 900), _seg("a#1", 3, 800, 1700)]
    tree = build_ttree(segs, capacity=8, max_leaf_span=1000)
    leaves = list(tree.leaves())
    assert len(leaves) == 2
    assert all(leaf.tr.end - leaf.tr.start <= 1000 for leaf in leaves)


def test_ttree_splits_on_capacity():
    segs = [_seg(f"a#{i}", float(i), 10 * i, 10 * i + 500) for i in range(10)]
    tree = build_ttree(segs, capacity=4, max_leaf_span=100_000)
    leaves = list(tree.leaves())
    assert all(len(leaf.entries) <= 4 for leaf in leaves)
    assert sum(len(leaf.entries) for leaf in leaves) == 10


def test_every_segment_reachable_exactly_once():
    rng = random.Random(8)
    segs = []
    for i in range(200):
        t0 = rng.randrange(0, 20_000)
        segs.append(
            _seg(f"t{i}#0", rng.uniform(-50_000, 50_000), t0, t0 + rng.randrange(0, 800))
        )
    root = sft_build(segs, resolution=9, capacity=8, max_leaf_span=3600)
    seen = []
    for quad_leaf in root.quad_leaves():
        for tt_leaf in quad_leaf.time_tree.leaves():
            for entry in tt_leaf.entries:
                seen.append(entry.sid)
                assert tt_leaf.mbr.contains(entry.mbr)
                assert tt_leaf.tr.start <= entry.st and entry.et <= tt_leaf.tr.end
    assert sorted(seen) == sorted(s.sid for s in segs)


# --- join vs single query -------------------------------------------------------------


def restrict(results, qid):
    return [(tid, ir) for q, tid, ir in results if q == qid]


def test_single_query_set_equals_irq():
    w = build_workload(seed=101, n_traj=300, contact_fraction=0.1)
    q = w.patient
    joined = irjq([q], P, w.backend, w.xz_cfg, w.seg_cfg)
    single = irq(q, P, w.backend, w.xz_cfg, w.seg_cfg)
    got = restrict(joined, q.id)
    assert [tid for tid, _ in got] == [tid for tid, _ in single]
    for (tid_a, ir_a), (tid_b, ir_b) in zip(got, single):
        assert ir_a == pytest.approx(ir_b, abs=1e-9)


def test_multi_query_set_equals_per_query_irq():
    w = build_workload(seed=103, n_traj=300, contact_fraction=0.1)
    query_set = w.trajectories[:8]
    joined = irjq(query_set, P, w.backend, w.xz_cfg, w.seg_cfg)
    for q in query_set:
        single = irq(q, P, w.backend, w.xz_cfg, w.seg_cfg)
        got = restrict(joined, q.id)
        assert [tid for tid, _ in got] == [tid for tid, _ in single]
        for (_, ir_a), (_, ir_b) in zip(got, single):
            assert ir_a == pytest.approx(ir_b, abs=1e-9)


def test_identical_queries_find_stored_duplicate():
    base = [loc(0, 0, 0), loc(4, 2, 70), loc(-3, 6, 150)]
    qa = Trajectory("qa", base)
    qb = Trajectory("qb", base)
    stored = Trajectory("twin", base)
    backend = MemoryBackend()
    ingest([stored], CFG, SEG, backend)
    results = irjq([qa, qb], P, backend, CFG, SEG)
    as_pairs = {(q, t): ir for q, t, ir in results}
    assert set(as_pairs) == {("qa", "twin"), ("qb", "twin")}
    for ir in as_pairs.values():
        assert ir == pytest.approx(1.0, abs=1e-12)


def test_theta_one_empty():
    base = [loc(0, 0, 0), loc(0, 0, 60)]
    backend = MemoryBackend()
    ingest([Trajectory("twin", base)], CFG, SEG, backend)
    assert irjq([Trajectory("q", base)], QueryParams(theta=1.0), backend, CFG, SEG) == []


def test_duplicate_query_ids_rejected():
    q = Trajectory("q", [loc(0, 0, 0)])
    with pytest.raises(ValueError):
        irjq([q, q], P, MemoryBackend(), CFG, SEG)


def test_unpruned_identical_results():
    w = build_workload(seed=107, n_traj=250, contact_fraction=0.1)
    query_set = w.trajectories[:6]
    pruned_counters: dict[str, int] = {}
    plain_counters: dict[str, int] = {}
    a = irjq(query_set, P, w.backend, w.xz_cfg, w.seg_cfg, counters=pruned_counters)
    b = irjq_unpruned(query_set, P, w.backend, w.xz_cfg, w.seg_cfg, counters=plain_counters)
    assert a == b
    assert plain_counters["pairs_removed"] == 0
    # extraction happens before pruning, so both issue the same lookups
    assert pruned_counters["scan_sets"] == plain_counters["scan_sets"]


def test_scan_sets_equal_leaf_count():
    w = build_workload(seed=109, n_traj=150, contact_fraction=0.1)
    query_set = w.trajectories[:6]
    all_segments = []
    for q in query_set:
        all_segments.extend(segment(q, w.seg_cfg))
    root = sft_build(all_segments, resolution=15, max_leaf_span=w.xz_cfg.period_seconds)
    n_leaves = sum(len(list(ql.time_tree.leaves())) for ql in root.quad_leaves())
    counters: dict[str, int] = {}
    irjq(query_set, P, w.backend, w.xz_cfg, w.seg_cfg, resolution=15, counters=counters)
    assert counters["scan_sets"] == n_leaves
    assert n_leaves <= len(all_segments)


def test_resolution_invariance():
    w = build_workload(seed=113, n_traj=200, contact_fraction=0.1)
    query_set = w.trajectories[:6]
    outputs = [
        irjq(query_set, P, w.backend, w.xz_cfg, w.seg_cfg, resolution=r)
        for r in (12, 15, 18)
    ]
    assert outputs[0] == outputs[1] == outputs[2]
