"""Population management, recombination and mutation operators."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .clustering import Clustering, CutEdgeSet, cut_edges, distance, modularity, overlay
from .graph import Graph, contract, project
from .louvain import SCLP_ROUNDS, MoveConstraint, louvain_multilevel, sclp
from .partition import PartitionParams, bisect_cluster, partition

MIN_POPULATION = 3
MAX_POPULATION = 100

FLAT = "flat"
APPLY_INPUT = "apply_input"
FRESH_SCLP = "fresh_sclp"
FRESH_PARTITION = "fresh_partition"
MULTILEVEL = "multilevel"
MUTATION = "mutation"
RECOMBINE_OPERATORS = (FLAT, APPLY_INPUT, FRESH_SCLP, FRESH_PARTITION, MULTILEVEL)

Objective = Callable[[Graph, Clustering], float]


class FloorViolation(AssertionError):
    """An operator that promises non-decreasing fitness returned a worse offspring."""


@dataclass(frozen=True)
class OperatorConfig:
    mutation_ratio: float = 0.1
    split_prob: tuple[float, float] = (0.01, 0.1)
    sclp_levels: tuple[int, int] = (0, 4)
    # size bound U is drawn from [lo * W, hi * W], W = total vertex weight
    size_bound: tuple[float, float] = (0.1, 1.0)
    blocks: tuple[int, int] = (2, 64)
    imbalance: tuple[float, float] = (0.03, 0.5)
    sclp_rounds: int = SCLP_ROUNDS
    objective: Objective = modularity

    def __post_init__(self):
        if not 0.0 <= self.mutation_ratio <= 1.0:
            raise ValueError("mutation_ratio must lie in [0, 1]")
        lo, hi = self.split_prob
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("bad split probability range")
        if not 0 <= self.sclp_levels[0] <= self.sclp_levels[1]:
            raise ValueError("bad label-propagation level range")
        if not 0.0 < self.size_bound[0] <= self.size_bound[1]:
            raise ValueError("bad size bound range")
        if not 2 <= self.blocks[0] <= self.blocks[1]:
            raise ValueError("bad block count range")
        if not 0.0 <= self.imbalance[0] <= self.imbalance[1] <= 1.0:
            raise ValueError("bad imbalance range")

    def draw_levels(self, rng: random.Random) -> int:
        return rng.randint(*self.sclp_levels)

    def draw_size_bound(self, g: Graph, rng: random.Random) -> float:
        total = g.total_vertex_weight
        return max(1.0, rng.uniform(self.size_bound[0] * total, self.size_bound[1] * total))


@dataclass(frozen=True, eq=False)
class Individual:
    clustering: Clustering
    fitness: float
    cuts: CutEdgeSet

    @classmethod
    def of(cls, g: Graph, clustering: Clustering, objective: Objective = modularity) -> "Individual":
        c = clustering if clustering.is_normalized() else clustering.normalized()
        return cls(c, objective(g, c), cut_edges(g, c))

    @property
    def k(self) -> int:
        return self.clustering.k


@dataclass
class Population:
    capacity: int = MAX_POPULATION
    individuals: list[Individual] = field(default_factory=list)

    def __post_init__(self):
        if not MIN_POPULATION <= self.capacity <= MAX_POPULATION:
            raise ValueError(f"capacity must lie in [{MIN_POPULATION}, {MAX_POPULATION}]")

    def __len__(self):
        return len(self.individuals)

    def __iter__(self):
        return iter(self.individuals)

    def __getitem__(self, i):
        return self.individuals[i]

    def add(self, ind: Individual) -> None:
        """Unconditional append, used while building the initial population."""
        if len(self.individuals) >= self.capacity:
            raise ValueError("population is full")
        self.individuals.append(ind)

    def best(self) -> Individual:
        return max(self.individuals, key=lambda ind: ind.fitness)


def _check_floor(offspring: Individual, floor: float, op: str) -> Individual:
    if offspring.fitness < floor:
        raise FloorViolation(f"{op}: offspring {offspring.fitness!r} below floor {floor!r}")
    return offspring


def better_of(p1: Individual, p2: Individual) -> Individual:
    """Fitter parent; equal fitness goes to the lexicographically smaller assignment."""
    if p1.fitness != p2.fitness:
        return p1 if p1.fitness > p2.fitness else p2
    return p1 if p1.clustering.labels <= p2.clustering.labels else p2


def create_individual(g: Graph, cfg: OperatorConfig, rng: random.Random,
                      sclp_levels: int | None = None) -> Individual:
    levels = cfg.draw_levels(rng) if sclp_levels is None else sclp_levels
    bound = cfg.draw_size_bound(g, rng)
    c = louvain_multilevel(g, rng, sclp_levels=levels, size_bound=bound, sclp_rounds=cfg.sclp_rounds)
    return Individual.of(g, c, cfg.objective)


def tournament_select(pop, rng: random.Random) -> Individual:
    """Fitter of two distinct uniformly drawn members; ties go either way."""
    if len(pop) < 2:
        raise ValueError("tournament needs at least two individuals")
    a, b = rng.sample(range(len(pop)), 2)
    ra, rb = pop[a], pop[b]
    if ra.fitness == rb.fitness:
        return ra if rng.random() < 0.5 else rb
    return ra if ra.fitness > rb.fitness else rb


def insert_with_eviction(pop: Population, offspring: Individual) -> bool:
    """Replace the most similar member that is not fitter than ``offspring``.

    Similarity is the cut-edge distance; ties go to the lower fitness, then
    the lower index. Returns False (population untouched) if every member is
    strictly fitter.
    """
    victim = None
    victim_key = None
    for i, ind in enumerate(pop.individuals):
        if ind.fitness > offspring.fitness:
            continue
        key = (distance(ind.cuts, offspring.cuts), ind.fitness, i)
        if victim_key is None or key < victim_key:
            victim, victim_key = i, key
    if victim is None:
        return False
    pop.individuals[victim] = offspring
    return True


def _start_on(level_map: list[int], k_coarse: int, parent: Clustering) -> Clustering:
    """Express a clustering on a coarse graph whose vertices never straddle its clusters."""
    lab = [-1] * k_coarse
    for v, a in enumerate(level_map):
        x = parent.labels[v]
        if lab[a] < 0:
            lab[a] = x
        elif lab[a] != x:
            raise AssertionError("coarse vertex straddles two clusters of the parent")
    return Clustering.from_labels(lab)


def flat_recombine(g: Graph, p1: Individual, p2: Individual, cfg: OperatorConfig,
                   rng: random.Random) -> Individual:
    """Louvain from scratch on the contracted overlay of both parents."""
    level = contract(g, overlay(g, p1.clustering, p2.clustering))
    c = louvain_multilevel(
        level.coarse, rng,
        sclp_levels=cfg.draw_levels(rng),
        size_bound=cfg.draw_size_bound(g, rng),
        sclp_rounds=cfg.sclp_rounds,
    )
    return Individual.of(g, project(level, c), cfg.objective)


def _apply_input(g: Graph, start: Individual, other: Clustering, cfg: OperatorConfig,
                 rng: random.Random, op: str) -> Individual:
    level = contract(g, overlay(g, start.clustering, other))
    init = _start_on(level.map_list, level.coarse.n, start.clustering)
    c = louvain_multilevel(level.coarse, rng, init=init)
    return _check_floor(Individual.of(g, project(level, c), cfg.objective), start.fitness, op)


def recombine_apply_input(g: Graph, p1: Individual, p2: Individual, cfg: OperatorConfig,
                          rng: random.Random) -> Individual:
    """Louvain on the contracted overlay, seeded with the better parent."""
    best = better_of(p1, p2)
    other = p2 if best is p1 else p1
    return _apply_input(g, best, other.clustering, cfg, rng, APPLY_INPUT)


def fresh_partner(g: Graph, source: str, cfg: OperatorConfig, rng: random.Random) -> Clustering:
    if source == FRESH_SCLP:
        return sclp(g, cfg.draw_size_bound(g, rng), rng, cfg.sclp_rounds)
    if source == FRESH_PARTITION:
        if g.n < 2:
            return Clustering.singletons(g.n)
        k = rng.randint(cfg.blocks[0], max(cfg.blocks[0], min(cfg.blocks[1], g.n)))
        k = min(k, g.n)
        eps = rng.uniform(*cfg.imbalance)
        return partition(g, PartitionParams(k, eps), rng)
    raise ValueError(f"unknown partner source {source!r}")


def recombine_with_fresh_partner(g: Graph, p1: Individual, source: str, cfg: OperatorConfig,
                                 rng: random.Random) -> Individual:
    """Recombine ``p1`` with a clustering built on the spot; never worse than ``p1``."""
    partner = fresh_partner(g, source, cfg, rng)
    return _apply_input(g, p1, partner, cfg, rng, source)


def multilevel_recombine(g: Graph, p1: Individual, p2: Individual, cfg: OperatorConfig,
                         rng: random.Random, levels_out: list | None = None) -> Individual:
    """Coarsen without contracting any parent cut edge, install the better parent
    on the coarsest graph, then refine unconstrained while uncoarsening."""
    best = better_of(p1, p2)
    comps = overlay(g, p1.clustering, p2.clustering).labels

    def install(levels, coarse):
        fine_to_coarse = list(range(g.n))
        for level in levels:
            lm = level.map_list
            fine_to_coarse = [lm[a] for a in fine_to_coarse]
        return _start_on(fine_to_coarse, coarse.n, best.clustering)

    c = louvain_multilevel(
        g, rng,
        sclp_levels=cfg.draw_levels(rng),
        size_bound=cfg.draw_size_bound(g, rng),
        constraint=MoveConstraint(comps),
        coarsest=install,
        refine_constrained=False,
        sclp_rounds=cfg.sclp_rounds,
        levels_out=levels_out,
    )
    return _check_floor(Individual.of(g, c, cfg.objective), best.fitness, MULTILEVEL)


def split_count(p_s: float, k: int) -> int:
    return math.ceil(p_s * k)


def mutate(g: Graph, ind: Individual, cfg: OperatorConfig, rng: random.Random) -> Individual:
    """Bisect ``ceil(p_s * k)`` distinct non-singleton clusters."""
    c = ind.clustering
    splittable = [i for i, size in enumerate(c.sizes().tolist()) if size >= 2]
    if not splittable:
        return ind
    budget = split_count(rng.uniform(*cfg.split_prob), c.k)
    chosen = rng.sample(splittable, min(budget, len(splittable)))
    for cid in chosen:
        c = bisect_cluster(g, c, cid, rng)
    return Individual.of(g, c, cfg.objective)


def mutate_and_recombine(g: Graph, pop, cfg: OperatorConfig, rng: random.Random) -> Individual:
    m1 = mutate(g, tournament_select(pop, rng), cfg, rng)
    m2 = mutate(g, tournament_select(pop, rng), cfg, rng)
    child = multilevel_recombine(g, m1, m2, cfg, rng)
    return _check_floor(child, max(m1.fitness, m2.fitness), MUTATION)


def choose_operator(cfg: OperatorConfig, rng: random.Random) -> str:
    if rng.random() < cfg.mutation_ratio:
        return MUTATION
    return rng.choice(RECOMBINE_OPERATORS)


def apply_operator(op: str, g: Graph, pop, cfg: OperatorConfig, rng: random.Random) -> Individual:
    if op == MUTATION:
        return mutate_and_recombine(g, pop, cfg, rng)
    p1 = tournament_select(pop, rng)
    if op in (FRESH_SCLP, FRESH_PARTITION):
        return recombine_with_fresh_partner(g, p1, op, cfg, rng)
    p2 = tournament_select(pop, rng)
    if op == FLAT:
        return flat_recombine(g, p1, p2, cfg, rng)
    if op == APPLY_INPUT:
        return recombine_apply_input(g, p1, p2, cfg, rng)
    if op == MULTILEVEL:
        return multilevel_recombine(g, p1, p2, cfg, rng)
    raise ValueError(f"unknown operator {op!r}")


def evolution_round(g: Graph, pop: Population, cfg: OperatorConfig, rng: random.Random,
                    log: list | None = None, clock: Callable[[], float] | None = None) -> tuple[str, bool]:
    """One generation: a single offspring, inserted by the eviction rule.

    Appends ``(elapsed, fitness)`` to ``log`` when the population best improves.
    Returns the operator used and whether the offspring was accepted.
    """
    before = pop.best().fitness
    op = choose_operator(cfg, rng)
    child = apply_operator(op, g, pop, cfg, rng)
    accepted = insert_with_eviction(pop, child)
    if log is not None and accepted and child.fitness > before:
        log.append((clock() if clock else 0.0, child.fitness))
    return op, accepted
