import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain
from zhmsp.edgeset import EdgeSet
from zhmsp.generators import gen_random_msp
from zhmsp.graph import (BadLabel, DanglingEdge, MalformedStage, build_graph, check_properties,
                         f_metric, is_omega_path, is_sigma_path, restrict, slice_edges,
                         validate_2msp)
from zhmsp.kernel import preprocess
from zhmsp.oracle import enumerate_sigma_paths


# ---------------------------------------------------------------- EdgeSet

def test_edgeset_algebra():
    a = EdgeSet.from_ids([0, 2, 5], 8)
    b = EdgeSet.from_ids([2, 3], 8)
    assert (a & b).ids() == [2]
    assert (a | b).ids() == [0, 2, 3, 5]
    assert (a - b).ids() == [0, 5]
    assert (a ^ b).ids() == [0, 3, 5]
    assert EdgeSet.from_ids([2], 8) <= a
    assert not b <= a
    assert 5 in a and 4 not in a
    assert len(a) == 3 and list(a) == [0, 2, 5]
    assert not EdgeSet(0, 8)


def test_edgeset_universe_mismatch():
    with pytest.raises(ValueError):
        EdgeSet(1, 4) | EdgeSet(1, 5)
    with pytest.raises(ValueError):
        EdgeSet.from_ids([9], 4)


# ----------------------------------------------------------- construction

def test_chain_builds(chain5):
    assert chain5.L == 5
    assert chain5.n_edges == 5
    assert chain5.n_vertices == 6
    assert [chain5.stage(v) for v in range(6)] == [0, 1, 2, 3, 4, 5]


def test_too_few_stages():
    with pytest.raises(MalformedStage):
        build_graph([1, 1], [(0, 0, 1)], {(1, 0): [0]})


def test_bad_shapes():
    with pytest.raises(MalformedStage):
        build_graph([1, 2, 1, 1, 1, 2], [], {})
    with pytest.raises(DanglingEdge):
        build_graph([1] * 6, [(0, 3, 1)], {})
    with pytest.raises(DanglingEdge):
        build_graph([1] * 6, [(0, 0, 1), (0, 0, 1)], {})


def test_bad_label_reports_location():
    with pytest.raises(BadLabel, match="3:0"):
        chain(5, {(3, 0): [0, 99]})
    with pytest.raises(BadLabel, match="has no label"):
        build_graph([1] * 6, [(0, 0, l) for l in range(1, 6)], {(1, 0): [0]})


def test_edge_ids_follow_stage_then_tail_then_head():
    g = build_graph([1, 2, 1, 1, 1, 1],
                    [(1, 0, 2), (0, 1, 1), (0, 0, 2), (0, 0, 1), (0, 0, 3), (0, 0, 4), (0, 0, 5)],
                    [None] + [0] * 6)
    assert g.edge_triples_local() == [(0, 0, 1), (0, 1, 1), (0, 0, 2), (1, 0, 2),
                                      (0, 0, 3), (0, 0, 4), (0, 0, 5)]


def test_f2_round_trips_through_build(f2_graph):
    g, _ = f2_graph
    again = build_graph(g.stage_sizes, g.edge_triples_local(), list(g.label_bits), min_L=1)
    assert again == g


# ------------------------------------------------------------- validators

def test_chain_is_2msp(chain5):
    assert validate_2msp(chain5) == []


def test_stage_l_minus_1_in_degree_two_is_flagged():
    # two vertices on stage 3 both feeding the single stage-4 vertex
    g = build_graph([1, 2, 2, 2, 1, 1],
                    [(0, 0, 1), (0, 1, 1), (0, 0, 2), (1, 1, 2), (0, 0, 3), (1, 1, 3),
                     (0, 0, 4), (1, 0, 4), (0, 0, 5)],
                    [None] + [list(range(9))] * 8)
    items = {v.item for v in validate_2msp(g)}
    assert "2" in items


def test_gadget_reduction_is_2msp():
    from zhmsp.reduction import CnfFormula, reduce_full
    g, _ = reduce_full(CnfFormula(3, [[1, 2, 3], [-1, 2, -3]]))
    assert validate_2msp(g) == []


def test_preprocessed_graphs_satisfy_properties():
    for seed in range(100):
        g = gen_random_msp(5 + seed % 5, 2 + seed % 3, 0.9, seed, repair=False)
        assert check_properties(preprocess(g)) == [], seed


def test_unreachable_label_edge_is_property_1_violation():
    # a second branch whose edge cannot reach v3
    g = build_graph([1, 2, 1, 1, 1, 1],
                    [(0, 0, 1), (0, 1, 1), (0, 0, 2), (0, 0, 3), (0, 0, 4), (0, 0, 5)],
                    {(1, 0): [0], (1, 1): [1], (2, 0): [0, 2], (3, 0): [0, 1, 2, 3],
                     (4, 0): [0, 2, 3, 4], (5, 0): list(range(6))})
    found = [v for v in check_properties(g) if v.item == "P1"]
    assert any(v.vertex == g.vertex(3, 0) and v.edge == 1 for v in found)


# ------------------------------------------------------------- operators

def diamond():
    # S->a (0), S->b (1), a->c (2); b is a dead end
    return build_graph([1, 2, 1, 1, 1, 1], [(0, 0, 1), (0, 1, 1), (0, 0, 2)],
                       [None] + [0] * 6)


def test_restrict_basics(chain5):
    E = chain5.all_edges()
    empty = EdgeSet(0, chain5.n_edges)
    assert restrict(chain5, empty, chain5.S, chain5.D) == empty
    assert restrict(chain5, E, chain5.S, chain5.D) == E


def test_restrict_drops_dead_branch():
    g = diamond()
    c = g.vertex(2, 0)
    assert restrict(g, g.all_edges(), g.S, c).ids() == [0, 2]


def test_slice(chain5):
    E = chain5.all_edges()
    assert slice_edges(chain5, E, 1, chain5.L) == E
    assert not slice_edges(chain5, E, 3, 2)
    assert slice_edges(chain5, E, 5, 5).ids() == [4]


def brute_restrict(g, bits, u, v):
    """Union of the edges of every u-v path inside ``bits``, by enumeration."""
    out = 0

    def walk(x, acc):
        nonlocal out
        if x == v:
            out |= acc
            return
        for i in g.out_edges[x]:
            if bits >> i & 1:
                walk(g.edges[i].v, acc | (1 << i))

    if g.stage(u) < g.stage(v):
        walk(u, 0)
    return out


def small_graphs():
    seeds = st.integers(0, 10_000)
    return st.builds(lambda s, w: gen_random_msp(5, w, 1.0, s, repair=False),
                     seeds, st.integers(1, 2))


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data())
def test_restrict_properties(g, data):
    bits = data.draw(st.integers(0, g.all_bits))
    u = data.draw(st.integers(0, g.n_vertices - 1))
    v = data.draw(st.integers(0, g.n_vertices - 1))
    es = EdgeSet(bits, g.n_edges)
    r = restrict(g, es, u, v)
    assert r <= es
    assert restrict(g, r, u, v) == r
    assert r.bits == brute_restrict(g, bits, u, v)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data())
def test_slice_union(g, data):
    es = EdgeSet(data.draw(st.integers(0, g.all_bits)), g.n_edges)
    k = data.draw(st.integers(1, g.L - 1))
    assert slice_edges(g, es, 1, k) | slice_edges(g, es, k + 1, g.L) == es


# ------------------------------------------------------------------ paths

def test_single_edge_omega_path(chain5):
    assert is_omega_path(chain5, chain5.edge_set([2]))


def test_prefix_violation_breaks_path():
    g = chain(5, {(2, 0): [1]})  # v2's label lacks the stage-1 edge
    assert not is_omega_path(g, g.edge_set([0, 1]))
    assert not is_sigma_path(g, g.all_edges())


def test_sigma_path_on_chain(chain5):
    assert is_sigma_path(chain5, chain5.all_edges())
    g = chain(5, {(5, 0): [0, 1, 2, 3]})
    assert not is_sigma_path(g, g.all_edges())


def independent_omega(g, ids):
    """Prefix check written against the definition, edge by edge."""
    ids = sorted(ids, key=lambda i: g.edges[i].l)
    for x, y in zip(ids, ids[1:]):
        if g.edges[x].v != g.edges[y].u:
            return False
    for n in range(1, len(ids) + 1):
        head = g.edges[ids[n - 1]].v
        if not all(g.label_bits[head] >> i & 1 for i in ids[:n]):
            return False
    return bool(ids)


def test_omega_agrees_with_independent_check():
    for seed in range(40):
        g = gen_random_msp(6, 3, 0.85, seed, repair=False)
        # every chain of consecutive edges starting anywhere
        for i in range(g.n_edges):
            path = [i]
            while g.edges[path[-1]].v != g.D:
                path.append(g.out_edges[g.edges[path[-1]].v][0])
                for k in range(len(path)):
                    sub = path[k:]
                    assert is_omega_path(g, g.edge_set(sub)) == independent_omega(g, sub)


def test_enumerated_paths_are_sigma_paths():
    for seed in range(30):
        g = gen_random_msp(7, 3, 0.95, seed)
        for p in enumerate_sigma_paths(g):
            assert is_sigma_path(g, p)


def test_f_metric(chain5):
    assert f_metric(chain5) == 0
    g = build_graph([1, 2, 1, 1, 1, 1],
                    [(0, 0, 1), (0, 1, 1), (0, 0, 2), (1, 0, 2), (0, 0, 3), (0, 0, 4), (0, 0, 5)],
                    [None] + [0] * 6)
    assert f_metric(g) == 1


def test_f_metric_recounted_from_dump():
    from zhmsp.reduction import CnfFormula, reduce_full
    g, _ = reduce_full(CnfFormula(3, [[1, 2, 3], [-1, -2, 3]]))
    indeg = {}
    for (t, h, l) in g.edge_triples_local():
        indeg[(l, h)] = indeg.get((l, h), 0) + 1
    expect = sum(d - 1 for (l, _), d in indeg.items() if l < g.L)
    assert f_metric(g) == expect
