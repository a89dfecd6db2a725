import pytest

from zonegraph.exact import Q
from zonegraph.guidance.scorers import HeuristicScorer, RandomScorer
from zonegraph.proposals import BoolType, Canvas, apply_extrusion, replay
from zonegraph.search import SearchConfig, Status, is_complete, search
from zonegraph.synth import SynthConfig, build_example, generate_program
from zonegraph.zones import zone_graph_from_brep


def test_cube_one_step(cube):
    zg = zone_graph_from_brep(cube)
    res = search(zg, HeuristicScorer())
    assert res.status is Status.SUCCESS
    assert [e.canonical_key for e in res.sequence] == ["U:0"]
    assert res.best_iou == 1


def test_lprism_reconstructs_with_best_first_step(lprism):
    zg = zone_graph_from_brep(lprism)
    res = search(zg, HeuristicScorer())
    assert res.status is Status.SUCCESS and res.best_iou == 1
    # the three target facets on z=0 form one L-shaped sketch, so one union suffices
    assert len(res.sequence) == 1
    assert res.sequence[0].zones == zg.interior_ids


def test_lprism_heuristic_ranks_block_over_single_zone(lprism):
    from zonegraph.guidance.scorers import heuristic_score
    from zonegraph.proposals import zone_op

    zg = zone_graph_from_brep(lprism)
    block = zone_op(zg.zone_ids, BoolType.UNION)
    single = zone_op({min(zg.interior_ids)}, BoolType.UNION)
    assert heuristic_score(zg, Canvas(), block)[0] == Q(3, 4)
    assert heuristic_score(zg, Canvas(), single)[0] == Q(2, 4)
    after = apply_extrusion(Canvas(), block)
    notch = zone_op(set(zg.zone_ids) - zg.interior_ids, BoolType.DIFFERENCE)
    assert heuristic_score(zg, after, notch)[0] == 1


def test_tiny_budget_times_out(boss):
    zg = zone_graph_from_brep(boss)
    res = search(zg, HeuristicScorer(), SearchConfig(budget=0.001))
    assert res.status is Status.TIMEOUT
    assert 0 <= res.best_iou < 1
    assert replay(res.sequence) == res.final_canvas


def test_is_complete(lprism):
    zg = zone_graph_from_brep(lprism)
    assert is_complete(Canvas(zg.interior_ids), zg)
    assert not is_complete(Canvas(), zg)
    assert not is_complete(Canvas(frozenset(zg.zone_ids)), zg)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(width_k=0)
    with pytest.raises(ValueError):
        SearchConfig(budget=0)


def test_width_schedule():
    cfg = SearchConfig(width_k=5, k_decay=0.5, k_floor=1)
    assert [cfg.width_at(d) for d in range(10)] == [5, 5, 4, 4, 3, 3, 2, 2, 1, 1]


def _targets(n, max_ops=3):
    out = []
    for s in range(n):
        _, zg, _ = build_example(generate_program(1000 + s, SynthConfig(1, max_ops)))
        out.append(zg)
    return out


@pytest.fixture(scope="module")
def targets():
    return _targets(8)


def test_replay_and_prefix(targets):
    for zg in targets:
        for scorer in (HeuristicScorer(), RandomScorer(3)):
            res = search(zg, scorer, SearchConfig(budget=60))
            assert replay(res.sequence) == res.final_canvas
            assert res.stats.snapshots[0] == frozenset()
            for snap in res.stats.snapshots:
                assert snap <= set(zg.zone_ids)
            if res.status is Status.SUCCESS:
                assert res.final_canvas.filled == zg.interior_ids and res.best_iou == 1


def test_random_search_completes_small_targets(targets):
    for zg in targets:
        if zg.n_split_planes > 12:
            continue
        res = search(zg, RandomScorer(0), SearchConfig(width_k=10**6, budget=600))
        assert res.status is Status.SUCCESS


def test_node_budget_is_monotone(targets):
    zg = targets[-1]
    full = search(zg, RandomScorer(1), SearchConfig(budget=60))
    assert full.status is Status.SUCCESS
    n = full.stats.nodes_expanded
    prev = None
    for cap in range(1, n + 3):
        res = search(zg, RandomScorer(1), SearchConfig(budget=60, max_nodes=cap))
        if prev is not None and prev.status is Status.SUCCESS:
            assert res.status is Status.SUCCESS
            assert [e.canonical_key for e in res.sequence] == [e.canonical_key for e in prev.sequence]
        prev = res
    assert prev.status is Status.SUCCESS


def test_search_is_deterministic(targets):
    zg = targets[0]
    a = search(zg, RandomScorer(5), SearchConfig(max_nodes=50))
    b = search(zg, RandomScorer(5), SearchConfig(max_nodes=50))
    assert [e.canonical_key for e in a.sequence] == [e.canonical_key for e in b.sequence]
    assert a.stats.nodes_expanded == b.stats.nodes_expanded
