import random

import pytest

from conftest import chain
from zhmsp.edgeset import EdgeSet
from zhmsp.generators import gen_random_msp
from zhmsp.graph import build_graph, check_properties
from zhmsp.kernel import (InvalidInstance, RMap, chi, compact_kernel, init_rmap, preprocess, psi,
                          rho, zh_solve)
from zhmsp.oracle import enumerate_sigma_paths, sigma_path_exists


# ------------------------------------------------------------ preprocess

def test_preprocess_fixpoint_leaves_labels():
    g = chain(5, {(l, 0): list(range(l)) for l in range(1, 6)})
    assert check_properties(g) == []
    assert preprocess(g).label_bits == g.label_bits


def test_preprocess_drops_unreachable_label_edge():
    g = build_graph([1, 2, 1, 1, 1, 1],
                    [(0, 0, 1), (0, 1, 1), (0, 0, 2), (0, 0, 3), (0, 0, 4), (0, 0, 5)],
                    {(1, 0): [0], (1, 1): [1], (2, 0): [0, 2], (3, 0): [0, 1, 2, 3],
                     (4, 0): [0, 2, 3, 4], (5, 0): list(range(6))})
    v3 = g.vertex(3, 0)
    assert g.label(v3).ids() == [0, 1, 2, 3]
    assert preprocess(g).label(v3).ids() == [0, 2, 3]


def test_preprocess_keeps_sigma_path_existence():
    for seed in range(120):
        g = gen_random_msp(5 + seed % 5, 2 + seed % 3, [0.85, 0.9, 0.95][seed % 3], seed,
                           repair=False)
        p = preprocess(g)
        assert sigma_path_exists(g) == sigma_path_exists(p), seed
        assert check_properties(p) == []
        assert preprocess(p).label_bits == p.label_bits


# ------------------------------------------------------------------- rho

def test_rho_of_final_edge_is_empty():
    for seed in range(30):
        g = preprocess(gen_random_msp(6, 3, 0.9, seed))
        for e in g.in_edges[g.D]:
            assert not rho(g, e)


def test_rho_contains_sigma_path_suffix():
    for seed in range(60):
        g = preprocess(gen_random_msp(6, 3, 0.95, seed))
        for p in enumerate_sigma_paths(g):
            ids = p.ids()
            for k, e in enumerate(ids):
                assert set(ids[k + 1:]) <= set(rho(g, e).ids())


def test_rho_broken_chain():
    # v4 does not hold the stage-1 edge, so no rho-path for it passes v4
    g = chain(5, {(4, 0): [1, 2, 3]})
    assert not rho(g, 0)
    assert rho(g, 1).ids() == [2, 3, 4]


# ------------------------------------------------------------------- chi

def test_chi_empty_and_chain(chain5):
    r = init_rmap(chain5)
    E = chain5.all_edges()
    assert not chi(chain5, r, chain5.D, EdgeSet(0, 5))
    assert chi(chain5, r, chain5.D, E) == E


def test_chi_idempotent_and_shrinking():
    rnd = random.Random(5)
    for seed in range(100):
        g = preprocess(gen_random_msp(5 + seed % 4, 2 + seed % 3, 0.9, seed))
        r = zh_solve(g, preprocessed=True).rmap
        v = rnd.randrange(1, g.n_vertices)
        es = EdgeSet(rnd.getrandbits(g.n_edges) | g.label_bits[v], g.n_edges)
        once = chi(g, r, v, es)
        assert once <= es
        assert chi(g, r, v, once) == once


def test_chi_rejects_source(chain5):
    with pytest.raises(ValueError):
        chi(chain5, init_rmap(chain5), chain5.S, chain5.all_edges())


# ------------------------------------------------------------------- psi

def test_psi_on_chain_changes_nothing(chain5):
    r = init_rmap(chain5)
    for e in range(1, 4):
        out, events = psi(chain5, r, e)
        assert out == r[e]
        assert events == []


def test_psi_only_shrinks():
    for seed in range(40):
        g = preprocess(gen_random_msp(7, 3, 0.9, seed))
        r = init_rmap(g)
        for e, (_, _, l) in enumerate(g.edges):
            if 1 < l < g.L:
                out, _ = psi(g, r, e)
                assert out <= r[e]


def test_psi_rejects_boundary_stages(chain5):
    with pytest.raises(ValueError):
        psi(chain5, init_rmap(chain5), 0)


def test_f3_stage_16_edges_leave_stage_11_rho_sets(f3_graph):
    g, _ = f3_graph
    res = zh_solve(g)
    assert g.L == 17
    late = {i for i, e in enumerate(res.graph.edges) if e.l == 16}
    for e, (_, _, l) in enumerate(res.graph.edges):
        if l == 11:
            assert not late & set(res.rmap[e].ids())


# ---------------------------------------------------------------- zh_solve

def test_chain_is_yes(chain5):
    res = zh_solve(chain5)
    assert res.answer == "yes"
    assert res.kernel == chain5.all_edges()


def test_fn_family_is_no(f2_graph, f3_graph):
    for g, _ in (f2_graph, f3_graph):
        res = zh_solve(g)
        assert res.answer == "no"
        assert not res.kernel


def test_strict_rejects_non_2msp():
    g = chain(5, {(5, 0): [0, 1]})
    with pytest.raises(InvalidInstance):
        zh_solve(g, strict=True)
    res = zh_solve(g)
    assert res.violations


def test_kernel_holds_every_sigma_path():
    for seed in range(500):
        g = gen_random_msp(5 + seed % 4, 2 + seed % 3, [0.9, 0.95, 1.0][seed % 3], seed,
                           repair=bool(seed % 2))
        res = zh_solve(g)
        paths = enumerate_sigma_paths(res.graph)
        union = 0
        for p in paths:
            union |= p.bits
        assert union & ~res.kernel.bits == 0, seed
        if paths:
            assert res.decision, seed


def test_stats_and_trace_shape(f2_graph):
    g, _ = f2_graph
    res = zh_solve(g, trace=True)
    kinds = {ev.kind for ev in res.trace}
    assert {"rho-init", "psi-prune", "fixpoint-pass"} <= kinds
    assert res.stats["prune_events"] == sum(ev.kind == "psi-prune" for ev in res.trace)
    assert res.stats["prune_events"] <= res.stats["r0_total"]
    d = res.trace[0].to_dict()
    assert list(d) == ["pass", "kind", "e", "e_prime", "reason"]


def test_compact_kernel_matches_solve(chain5):
    assert compact_kernel(chain5) == zh_solve(chain5).kernel


def test_rmap_copy_is_independent(chain5):
    r = init_rmap(chain5)
    c = r.copy()
    c.current[1] = 0
    assert r.current[1] != 0
    assert isinstance(c, RMap)


# ------------------------------------------------------------ invariants

def test_label_expansion_never_shrinks_r():
    checked = 0
    for seed in range(300):
        g = preprocess(gen_random_msp(5, 2, 0.8, seed, repair=False))
        if g.n_edges > 10:
            continue
        base = zh_solve(g, preprocessed=True).rmap.current
        for v in range(1, g.n_vertices):
            for e in range(g.n_edges):
                if g.label_bits[v] >> e & 1:
                    continue
                lab = list(g.label_bits)
                lab[v] |= 1 << e
                grown = zh_solve(g.with_labels(lab), preprocessed=True).rmap.current
                assert all(b & ~a == 0 for b, a in zip(base, grown)), (seed, v, e)
                checked += 1
    assert checked > 200


def test_surviving_chain_is_sigma_path():
    from zhmsp.graph import is_sigma_path
    rnd = random.Random(3)
    seen_yes = 0
    for _ in range(300):
        L = rnd.randint(5, 8)
        labels = {(l, 0): [i for i in range(l) if rnd.random() < 0.85] for l in range(1, L)}
        labels[(1, 0)] = [0]
        labels[(L, 0)] = list(range(L))
        g = preprocess(chain(L, labels))
        res = zh_solve(g, preprocessed=True)
        if res.decision:
            seen_yes += 1
            assert is_sigma_path(g, res.kernel)
    assert seen_yes > 10
