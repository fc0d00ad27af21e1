import math
import random
from collections import Counter

import pytest

from memclust.clustering import Clustering, CutEdgeSet, modularity, overlay
from memclust.graph import Graph
from memclust.memetic import (
    FRESH_PARTITION,
    FRESH_SCLP,
    MUTATION,
    RECOMBINE_OPERATORS,
    Individual,
    OperatorConfig,
    Population,
    better_of,
    choose_operator,
    create_individual,
    evolution_round,
    flat_recombine,
    insert_with_eviction,
    multilevel_recombine,
    mutate,
    mutate_and_recombine,
    recombine_apply_input,
    recombine_with_fresh_partner,
    split_count,
    tournament_select,
)

from oracles import random_connected_edges

OPT = 5 / 14
CFG = OperatorConfig()


def fake(fitness, cuts=(), labels=(0,)):
    return Individual(Clustering.from_labels(labels), fitness, CutEdgeSet.of(cuts))


def ind(g, labels):
    return Individual.of(g, Clustering.from_labels(labels))


def test_create_individual_plain_louvain(two_triangles):
    hits = 0
    for seed in range(30):
        x = create_individual(two_triangles, CFG, random.Random(seed), sclp_levels=0)
        assert x.fitness == modularity(two_triangles, x.clustering)
        hits += x.fitness == pytest.approx(OPT)
    assert hits == 30


def test_create_individual_random_levels(two_triangles):
    results = [create_individual(two_triangles, CFG, random.Random(s)).fitness for s in range(50)]
    assert sum(r == pytest.approx(OPT) for r in results) >= 45


def test_tournament_picks_fitter():
    pop = [fake(0.3), fake(0.5)]
    for s in range(20):
        assert tournament_select(pop, random.Random(s)).fitness == 0.5


def test_tournament_ties_are_fair():
    a, b = fake(0.4), fake(0.4)
    rng = random.Random(0)
    wins = sum(tournament_select([a, b], rng) is a for _ in range(4000))
    assert abs(wins / 4000 - 0.5) < 0.03


def test_tournament_distribution_size_three():
    pop = [fake(0.1), fake(0.2), fake(0.3)]
    rng = random.Random(1)
    counts = Counter(tournament_select(pop, rng).fitness for _ in range(10_000))
    # max of a uniform 2-subset of 3: P(best) = 2/3, P(middle) = 1/3, P(worst) = 0
    assert counts[0.1] == 0
    assert abs(counts[0.3] / 10_000 - 2 / 3) < 0.02
    assert abs(counts[0.2] / 10_000 - 1 / 3) < 0.02


def test_eviction_rejects_worse_offspring():
    pop = Population(3, [fake(0.5), fake(0.6), fake(0.7)])
    before = list(pop.individuals)
    assert not insert_with_eviction(pop, fake(0.4))
    assert pop.individuals == before


def test_eviction_replaces_identical_twin():
    twin = fake(0.5, [(0, 1)])
    pop = Population(3, [fake(0.4, [(1, 2), (2, 3)]), twin, fake(0.7)])
    clone = fake(0.5, [(0, 1)])
    assert insert_with_eviction(pop, clone)
    assert pop.individuals[1] is clone
    assert [x.fitness for x in pop] == [0.4, 0.5, 0.7]


def test_eviction_picks_most_similar_eligible():
    offspring = fake(0.35, [(0, 1)])
    far = fake(0.2, [(1, 2), (2, 3), (3, 4), (4, 5)])  # distance 5
    near = fake(0.3, [])  # distance 1
    best = fake(0.4, [(0, 1)])  # distance 0 but fitter, not eligible
    pop = Population(3, [far, near, best])
    assert insert_with_eviction(pop, offspring)
    assert pop.individuals == [far, offspring, best]


def test_eviction_ties_prefer_lower_fitness_then_index():
    off = fake(0.9, [(0, 1)])
    a, b, c = fake(0.5, []), fake(0.3, []), fake(0.3, [])
    pop = Population(3, [a, b, c])
    insert_with_eviction(pop, off)
    assert pop.individuals == [a, off, c]


def test_better_of_tie_rule(two_triangles):
    p = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    q = Individual(Clustering.from_labels([0, 1, 1, 1, 1, 1]), p.fitness, p.cuts)
    assert better_of(p, q) is p and better_of(q, p) is p


def test_flat_recombine_at_least_overlay(two_triangles):
    p = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    for s in range(20):
        child = flat_recombine(two_triangles, p, p, CFG, random.Random(s))
        assert child.fitness >= modularity(two_triangles, overlay(two_triangles, p.clustering, p.clustering))


def test_flat_recombine_triangles_and_optimum(two_triangles):
    p1 = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    p2 = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    child = flat_recombine(two_triangles, p1, p2, CFG, random.Random(0))
    assert child.fitness == pytest.approx(OPT)


def test_flat_recombine_degenerate_overlay_is_louvain(two_triangles):
    s = ind(two_triangles, list(range(6)))
    child = flat_recombine(two_triangles, s, ind(two_triangles, [0] * 6), CFG, random.Random(3))
    assert child.fitness == pytest.approx(OPT)


def test_apply_input_examples(two_triangles):
    opt = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    weak = ind(two_triangles, [0, 0, 1, 1, 2, 2])
    assert weak.fitness < 0.2
    for s in range(20):
        assert recombine_apply_input(two_triangles, opt, opt, CFG, random.Random(s)).fitness == pytest.approx(OPT)
        assert recombine_apply_input(two_triangles, weak, opt, CFG, random.Random(s)).fitness >= opt.fitness


def _random_instance(rng, max_n=8):
    n = rng.randint(3, max_n)
    g = Graph.from_edges(n, random_connected_edges(rng, n, 0.3))
    return g, n


def test_apply_input_never_decreases():
    rng = random.Random(17)
    for _ in range(100):
        g, n = _random_instance(rng)
        p1 = ind(g, [rng.randrange(n) for _ in range(n)])
        p2 = ind(g, [rng.randrange(3) for _ in range(n)])
        child = recombine_apply_input(g, p1, p2, CFG, rng)
        assert child.fitness >= max(p1.fitness, p2.fitness)


def test_fresh_partner_partition_two_blocks(two_triangles):
    cfg = OperatorConfig(blocks=(2, 2))
    p1 = ind(two_triangles, [0, 1, 2, 3, 4, 5])
    child = recombine_with_fresh_partner(two_triangles, p1, FRESH_PARTITION, cfg, random.Random(2))
    assert child.fitness == pytest.approx(OPT)


def test_fresh_partner_unit_sclp_is_louvain_from_p1(two_triangles):
    cfg = OperatorConfig(size_bound=(0.01, 0.01))  # U clamps to 1 -> singleton partner
    p1 = ind(two_triangles, [0, 0, 1, 1, 2, 2])
    child = recombine_with_fresh_partner(two_triangles, p1, FRESH_SCLP, cfg, random.Random(0))
    assert child.fitness >= p1.fitness


def test_fresh_partner_never_below_p1():
    rng = random.Random(23)
    for i in range(100):
        g, n = _random_instance(rng)
        p1 = ind(g, [rng.randrange(n) for _ in range(n)])
        src = FRESH_SCLP if i % 2 else FRESH_PARTITION
        assert recombine_with_fresh_partner(g, p1, src, CFG, rng).fitness >= p1.fitness


def test_multilevel_recombine_examples(two_triangles):
    opt = ind(two_triangles, [0, 0, 0, 1, 1, 1])
    rng = random.Random(4)
    assert multilevel_recombine(two_triangles, opt, opt, CFG, rng).fitness == pytest.approx(OPT)
    for _ in range(20):
        other = ind(two_triangles, [rng.randrange(6) for _ in range(6)])
        assert multilevel_recombine(two_triangles, opt, other, CFG, rng).fitness == pytest.approx(OPT)


def test_multilevel_recombine_blocked_edge_audit():
    rng = random.Random(31)
    for _ in range(40):
        g, n = _random_instance(rng, 14)
        p1 = ind(g, [rng.randrange(4) for _ in range(n)])
        p2 = ind(g, [rng.randrange(4) for _ in range(n)])
        blocked = set(p1.cuts.edges) | set(p2.cuts.edges)
        levels = []
        child = multilevel_recombine(g, p1, p2, CFG, rng, levels_out=levels)
        assert child.fitness >= max(p1.fitness, p2.fitness)
        f2c = list(range(n))
        for level in levels:
            f2c = [level.map_list[a] for a in f2c]
            assert all(f2c[u] != f2c[v] for u, v in blocked)


def test_split_count():
    assert split_count(0.05, 40) == 2
    assert split_count(0.01, 5) == 1


def test_mutate_singletons_unchanged(two_triangles, rng):
    s = ind(two_triangles, list(range(6)))
    assert mutate(two_triangles, s, CFG, rng) is s


def test_mutate_splits_clusters(two_triangles, rng):
    whole = ind(two_triangles, [0] * 6)
    m = mutate(two_triangles, whole, CFG, rng)
    assert m.k == 2


def test_mutate_and_recombine_floor():
    rng = random.Random(41)
    for _ in range(40):
        g, n = _random_instance(rng, 10)
        pop = Population(4, [ind(g, [rng.randrange(3) for _ in range(n)]) for _ in range(4)])
        # raises FloorViolation if the child falls below the better mutant
        child = mutate_and_recombine(g, pop, CFG, rng)
        assert child.fitness == modularity(g, child.clustering)


def test_operator_histogram():
    rng = random.Random(0)
    counts = Counter(choose_operator(CFG, rng) for _ in range(100_000))
    assert abs(counts[MUTATION] / 100_000 - 0.1) <= 0.01
    for op in RECOMBINE_OPERATORS:
        assert abs(counts[op] / 100_000 - 0.18) <= 0.01


def test_evolution_rounds_contracts():
    rng = random.Random(5)
    n = 12
    g = Graph.from_edges(n, random_connected_edges(rng, n, 0.25))
    pop = Population(6)
    for _ in range(6):
        pop.add(create_individual(g, CFG, rng))
    log = []
    clock = iter(range(10**6))
    best = pop.best().fitness
    for _ in range(150):
        evolution_round(g, pop, CFG, rng, log, lambda: float(next(clock)))
        assert len(pop) == 6
        assert pop.best().fitness >= best
        best = pop.best().fitness
        for x in pop:
            assert x.fitness == modularity(g, x.clustering)
    qs = [q for _, q in log]
    assert all(a < b for a, b in zip(qs, qs[1:]))


def test_population_capacity_bounds():
    with pytest.raises(ValueError):
        Population(2)
    with pytest.raises(ValueError):
        Population(101)
    p = Population(3)
    for f in (0.1, 0.2, 0.3):
        p.add(fake(f))
    with pytest.raises(ValueError):
        p.add(fake(0.4))


def test_operator_config_validation():
    with pytest.raises(ValueError):
        OperatorConfig(mutation_ratio=1.5)
    with pytest.raises(ValueError):
        OperatorConfig(blocks=(1, 64))
