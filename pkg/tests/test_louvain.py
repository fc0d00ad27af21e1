import random

import pytest
from hypothesis import given, settings, strategies as st

from memclust.clustering import Clustering, modularity, overlay
from memclust.graph import Graph
from memclust.louvain import (
    ClusterVolumes,
    MoveConstraint,
    delta_q_insert,
    delta_q_remove,
    local_movement,
    louvain_multilevel,
    sclp,
)

from conftest import K4, TWO_TRIANGLES
from oracles import brute_force_optimum, random_connected_edges

OPT_TWO_TRIANGLES = 5 / 14


def _fresh_singleton(labels, u):
    out = list(labels)
    out[u] = max(labels) + 1
    return out


def test_remove_from_own_singleton_is_zero(two_triangles):
    labels = list(range(6))
    vols = ClusterVolumes(two_triangles, labels)
    assert delta_q_remove(two_triangles, vols, labels, 0) == 0.0


def test_remove_from_triangle_matches_recompute(triangle):
    labels = [0, 0, 0]
    vols = ClusterVolumes(triangle, labels)
    before = modularity(triangle, Clustering.from_labels(labels))
    after = modularity(triangle, Clustering.from_labels([0, 0, 1]))
    assert delta_q_remove(triangle, vols, labels, 2) == pytest.approx(after - before, abs=1e-12)


def test_delta_q_random_moves_match_recompute():
    rng = random.Random(8)
    n = 8
    edges = [(u, v, rng.randint(1, 3)) for u, v in random_connected_edges(rng, n, 0.4)]
    g = Graph.from_edges(n, edges)
    labels = [rng.randrange(3) for _ in range(n)]
    for _ in range(100):
        u = rng.randrange(n)
        vols = ClusterVolumes(g, labels, n + 2)
        q0 = modularity(g, Clustering.from_labels(labels))
        removed = _fresh_singleton(labels, u)
        q1 = modularity(g, Clustering.from_labels(removed))
        assert delta_q_remove(g, vols, labels, u) == pytest.approx(q1 - q0, abs=1e-10)
        target = rng.randrange(3)
        vols_r = ClusterVolumes(g, removed, n + 2)
        moved = list(removed)
        moved[u] = target
        q2 = modularity(g, Clustering.from_labels(moved))
        assert delta_q_insert(g, vols_r, removed, u, target) == pytest.approx(q2 - q1, abs=1e-10)
        labels = moved


def test_cluster_volumes_move_bookkeeping(two_triangles):
    labels = [0, 0, 0, 1, 1, 1]
    vols = ClusterVolumes(two_triangles, labels)
    assert vols.vol == [7, 7] and vols.intra == [3, 3]
    # vertex 2 (degree 3) moves into cluster 1: one edge to each side
    vols.move(3, 0, 0, 1, 2, 1)
    assert vols.vol == [4, 10]
    assert vols.intra == [1, 4]
    assert sum(vols.vol) == 2 * two_triangles.m


def test_local_movement_reaches_optimum(two_triangles, rng):
    c = local_movement(two_triangles, Clustering.singletons(6), rng)
    assert modularity(two_triangles, c) == pytest.approx(OPT_TWO_TRIANGLES)


def test_local_movement_fixed_point(two_triangles, rng):
    start = Clustering.from_labels([0, 0, 0, 1, 1, 1])
    out = local_movement(two_triangles, start, rng)
    assert out == start


def test_local_movement_respects_components(two_triangles, rng):
    comp = [0, 0, 0, 1, 1, 1]
    c = local_movement(two_triangles, Clustering.singletons(6), rng, MoveConstraint(comp))
    assert c.labels[2] != c.labels[3]


def test_local_movement_is_locally_optimal():
    rng = random.Random(2)
    for _ in range(30):
        n = rng.randint(3, 10)
        edges = random_connected_edges(rng, n, 0.3)
        g = Graph.from_edges(n, edges)
        start = Clustering.from_labels([rng.randrange(n) for _ in range(n)])
        out = local_movement(g, start, rng)
        q = modularity(g, out)
        assert q >= modularity(g, start)
        lab = out.labels
        for u in range(n):
            for c in {lab[v] for v, _ in g.adj[u]} - {lab[u]}:
                moved = list(lab)
                moved[u] = c
                assert modularity(g, Clustering.from_labels(moved)) <= q + 1e-12


def test_sclp_unit_bound_gives_singletons(two_triangles, rng):
    assert sclp(two_triangles, 1, rng) == Clustering.singletons(6)


def test_sclp_k4_one_cluster(k4):
    for seed in range(200):
        assert sclp(k4, 4, random.Random(seed), rounds=10).k == 1


def test_sclp_two_triangles_bound_three(two_triangles):
    triangles = Clustering.from_labels([0, 0, 0, 1, 1, 1])
    for seed in range(200):
        assert sclp(two_triangles, 3, random.Random(seed)) == triangles


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 12), st.integers(1, 5))
def test_sclp_respects_size_bound(seed, bound, rounds):
    rng = random.Random(seed)
    n = 14
    g = Graph.from_edges(n, random_connected_edges(rng, n, 0.3))
    c = sclp(g, bound, rng, rounds)
    assert max(c.sizes()) <= max(bound, 1)


def test_sclp_respects_components(two_triangles, rng):
    c = sclp(two_triangles, 6, rng, constraint=MoveConstraint([0, 0, 0, 1, 1, 1]))
    assert c.labels[2] != c.labels[3]


def test_sclp_counts_vertex_weight(rng):
    g = Graph.from_edges(3, [(0, 1), (1, 2)], vwgt=[3, 1, 1])
    c = sclp(g, 3, rng)
    assert c.labels[0] != c.labels[1]


def test_multilevel_plain_louvain(two_triangles):
    for seed in range(20):
        c = louvain_multilevel(two_triangles, random.Random(seed))
        assert modularity(two_triangles, c) == pytest.approx(OPT_TWO_TRIANGLES)


def test_multilevel_with_label_propagation_on_k4(k4):
    for seed in range(20):
        c = louvain_multilevel(k4, random.Random(seed), sclp_levels=4, size_bound=4)
        assert c.k == 1
        assert modularity(k4, c) == 0.0


def test_multilevel_single_edge():
    g = Graph.from_edges(2, [(0, 1)])
    assert modularity(g, Clustering.singletons(2)) == -0.5
    c = louvain_multilevel(g, random.Random(0))
    assert c.k == 1 and modularity(g, c) == 0.0


def test_multilevel_from_init_never_worse():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(4, 12)
        g = Graph.from_edges(n, random_connected_edges(rng, n, 0.3))
        init = Clustering.from_labels([rng.randrange(4) for _ in range(n)])
        c = louvain_multilevel(g, rng, init=init)
        assert modularity(g, c) >= modularity(g, init)


def test_constraint_soundness_blocked_edges_never_contracted():
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randint(5, 14)
        edges = random_connected_edges(rng, n, 0.3)
        g = Graph.from_edges(n, edges)
        c1 = Clustering.from_labels([rng.randrange(3) for _ in range(n)])
        c2 = Clustering.from_labels([rng.randrange(3) for _ in range(n)])
        comps = overlay(g, c1, c2).labels
        blocked = [(u, v) for u, v in edges
                   if c1.labels[u] != c1.labels[v] or c2.labels[u] != c2.labels[v]]
        levels = []
        louvain_multilevel(g, rng, sclp_levels=rng.randint(0, 4), size_bound=n,
                           constraint=MoveConstraint(comps), levels_out=levels)
        fine_to_coarse = list(range(n))
        for level in levels:
            fine_to_coarse = [level.map_list[a] for a in fine_to_coarse]
            for u, v in blocked:
                assert fine_to_coarse[u] != fine_to_coarse[v]


def test_multilevel_finds_brute_force_optimum_small_graphs():
    rng = random.Random(99)
    for _ in range(8):
        n = rng.randint(4, 8)
        edges = random_connected_edges(rng, n, 0.35)
        g = Graph.from_edges(n, edges)
        opt, _ = brute_force_optimum(n, edges)
        best = max(modularity(g, louvain_multilevel(g, random.Random(s))) for s in range(50))
        assert best == pytest.approx(float(opt), abs=1e-12)
