"""Modularity local search: vertex moves, size-constrained label propagation,
and the multi-level driver used both for fresh clusterings and recombination.

All move gains are compared as exact integers scaled by ``4 m**2``, so there
are no floating-point near-ties to break.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .clustering import Clustering
from .graph import CoarseningLevel, Graph, contract, project

MAX_MOVE_ROUNDS = 100
SCLP_ROUNDS = 10
SCLP_STOP_FRACTION = 0.05
# a level must merge at least this fraction of its vertices to be kept
MIN_CONTRACTION = 0.02


@dataclass(frozen=True)
class MoveConstraint:
    """Restrictions on which clusters a vertex may join.

    ``component``: vertices may only join clusters of their own component.
    ``size_bound``: maximum total vertex weight of a cluster (label propagation).
    """

    component: Sequence[int] | None = None
    size_bound: float | None = None


class ClusterVolumes:
    """Per-cluster volume and intra-cluster weight, maintained under moves."""

    def __init__(self, g: Graph, labels: Sequence[int], k: int | None = None):
        if k is None:
            k = max(labels, default=-1) + 1
        self.vol = [0] * k
        self.intra = [0] * k
        deg = g.degrees
        internal = g.internal.tolist()
        for v, c in enumerate(labels):
            self.vol[c] += deg[v]
            self.intra[c] += internal[v]
        for u, v, w in g.edges():
            if labels[u] == labels[v]:
                self.intra[labels[u]] += w

    @classmethod
    def of(cls, g: Graph, c: Clustering) -> "ClusterVolumes":
        return cls(g, c.labels, c.k)

    def move(self, d: int, internal: int, src: int, dst: int, s_src: int, s_dst: int) -> None:
        """Account for a vertex of degree ``d`` moving ``src -> dst``.

        ``s_src``/``s_dst`` are its edge weights into ``src`` (itself
        excluded) and ``dst``.
        """
        self.vol[src] -= d
        self.vol[dst] += d
        self.intra[src] -= s_src + internal
        self.intra[dst] += s_dst + internal


def _weight_into(g: Graph, labels: Sequence[int], u: int, cluster: int) -> int:
    return sum(w for v, w in g.adj[u] if labels[v] == cluster)


def delta_q_remove(g: Graph, vols: ClusterVolumes, labels: Sequence[int], u: int) -> float:
    """Modularity change when ``u`` leaves its cluster to become a singleton."""
    m = g.m
    d = g.degrees[u]
    c = labels[u]
    s = _weight_into(g, labels, u, c)
    return (-4 * m * s + 2 * d * (vols.vol[c] - d)) / (4 * m * m)


def delta_q_insert(g: Graph, vols: ClusterVolumes, labels: Sequence[int], u: int, target: int) -> float:
    """Modularity change when singleton ``u`` joins ``target``.

    ``vols.vol[target]`` must not include ``u``.
    """
    m = g.m
    d = g.degrees[u]
    s = _weight_into(g, labels, u, target)
    return (4 * m * s - 2 * d * vols.vol[target]) / (4 * m * m)


def local_movement(
    g: Graph,
    init: Clustering,
    rng: random.Random,
    constraint: MoveConstraint | None = None,
    max_rounds: int = MAX_MOVE_ROUNDS,
) -> Clustering:
    """Greedy vertex moves to the best neighboring cluster until no move gains.

    Never decreases modularity. The result is normalized.
    """
    n = g.n
    if n == 0 or g.m == 0:
        return init.normalized()
    labels = list(init.labels)
    comp = None if constraint is None else constraint.component
    if comp is not None:
        comp = list(comp)
    vols = ClusterVolumes(g, labels, max(init.k, max(labels) + 1))
    vol = vols.vol
    deg = g.degrees
    adj = g.adj
    two_m = 2 * g.m
    order = list(range(n))

    for _ in range(max_rounds):
        rng.shuffle(order)
        moved = 0
        for u in order:
            nbrs = adj[u]
            if not nbrs:
                continue
            cu = labels[u]
            conn: dict[int, int] = {}
            if comp is None:
                for v, w in nbrs:
                    cv = labels[v]
                    conn[cv] = conn.get(cv, 0) + w
            else:
                ku = comp[u]
                for v, w in nbrs:
                    if comp[v] == ku:
                        cv = labels[v]
                        conn[cv] = conn.get(cv, 0) + w
            du = deg[u]
            s_own = conn.get(cu, 0)
            own_rest = vol[cu] - du
            best_gain = 0
            best: list[int] = []
            for c, s in conn.items():
                if c == cu:
                    continue
                # gain * 2m^2 of moving u from cu to c
                gain = two_m * (s - s_own) - du * (vol[c] - own_rest)
                if gain > best_gain:
                    best_gain = gain
                    best = [c]
                elif gain == best_gain and best:
                    best.append(c)
            if not best:
                continue
            target = best[0] if len(best) == 1 else rng.choice(best)
            vol[cu] -= du
            vol[target] += du
            labels[u] = target
            moved += 1
        if not moved:
            break
    return Clustering.from_labels(labels)


def sclp(
    g: Graph,
    size_bound: float,
    rng: random.Random,
    rounds: int = SCLP_ROUNDS,
    constraint: MoveConstraint | None = None,
) -> Clustering:
    """Size-constrained label propagation starting from singletons.

    Each vertex joins the cluster it is most strongly connected to, provided
    the target stays within ``size_bound`` total vertex weight. Stops after
    ``rounds`` rounds or once fewer than 5% of the vertices change cluster.
    """
    if size_bound < 1 or rounds < 1:
        raise ValueError("size_bound and rounds must be >= 1")
    n = g.n
    labels = list(range(n))
    vw = g.vertex_weights
    size = list(vw)
    adj = g.adj
    comp = None if constraint is None else constraint.component
    order = list(range(n))

    for _ in range(rounds):
        rng.shuffle(order)
        changed = 0
        for v in order:
            nbrs = adj[v]
            if not nbrs:
                continue
            own = labels[v]
            conn: dict[int, int] = {}
            kv = None if comp is None else comp[v]
            for u, w in nbrs:
                if kv is not None and comp[u] != kv:
                    continue
                cu = labels[u]
                conn[cu] = conn.get(cu, 0) + w
            wv = vw[v]
            best = conn.get(own, 0)
            cands = [own]
            for c, w in conn.items():
                if c == own or size[c] + wv > size_bound:
                    continue
                if w > best:
                    best = w
                    cands = [c]
                elif w == best:
                    cands.append(c)
            target = cands[0] if len(cands) == 1 else rng.choice(cands)
            if target != own:
                size[own] -= wv
                size[target] += wv
                labels[v] = target
                changed += 1
        if changed < SCLP_STOP_FRACTION * n:
            break
    return Clustering.from_labels(labels)


def _coarse_components(level: CoarseningLevel, comp: Sequence[int]) -> list[int]:
    out = [-1] * level.coarse.n
    for v, a in enumerate(level.map_list):
        if out[a] < 0:
            out[a] = comp[v]
        elif out[a] != comp[v]:
            raise AssertionError("a coarse vertex spans two constraint components")
    return out


CoarsestHook = Callable[[list[CoarseningLevel], Graph], Clustering]


def louvain_multilevel(
    g: Graph,
    rng: random.Random,
    sclp_levels: int = 0,
    size_bound: float | None = None,
    constraint: MoveConstraint | None = None,
    init: Clustering | None = None,
    coarsest: CoarsestHook | None = None,
    refine_constrained: bool = True,
    sclp_rounds: int = SCLP_ROUNDS,
    levels_out: list | None = None,
) -> Clustering:
    """Multi-level Louvain with optional label-propagation coarsening.

    The first ``sclp_levels`` levels are clustered by :func:`sclp` with
    ``size_bound``; later levels by :func:`local_movement`. Coarsening stops
    when a level merges (almost) nothing. With ``sclp_levels=0`` and no hooks
    this is the plain Louvain method.

    Args:
        init: start the first clustering phase from this clustering instead of
            singletons (label propagation is skipped on that level).
        coarsest: replaces the clustering of the coarsest graph; receives the
            hierarchy and the coarsest graph.
        refine_constrained: keep the component constraint while uncoarsening.
        levels_out: if given, every contraction performed is appended to it.
    """
    comp = None
    if constraint is not None and constraint.component is not None:
        comp = list(constraint.component)
    levels: list[CoarseningLevel] = []
    comps = [comp]
    cur = g
    start = init
    depth = 0

    while True:
        c = None
        if start is None and depth < sclp_levels and size_bound is not None and cur.n > 1:
            c = sclp(cur, size_bound, rng, sclp_rounds, MoveConstraint(comp))
            if cur.n - c.k < max(1.0, MIN_CONTRACTION * cur.n):
                c = None
        if c is None:
            c = local_movement(cur, start or Clustering.singletons(cur.n), rng, MoveConstraint(comp))
        start = None
        merged = cur.n - c.k
        if merged == 0 or merged < MIN_CONTRACTION * cur.n:
            break
        level = contract(cur, c)
        levels.append(level)
        if comp is not None:
            comp = _coarse_components(level, comp)
        comps.append(comp)
        cur = level.coarse
        depth += 1

    if levels_out is not None:
        levels_out.extend(levels)
    if coarsest is not None:
        c = coarsest(levels, cur)
    c = local_movement(cur, c, rng, MoveConstraint(comp if refine_constrained else None))
    graphs = [g] + [lv.coarse for lv in levels[:-1]]
    for fine, level, fine_comp in zip(reversed(graphs), reversed(levels), reversed(comps[:-1])):
        c = project(level, c)
        c = local_movement(fine, c, rng, MoveConstraint(fine_comp if refine_constrained else None))
    return c
