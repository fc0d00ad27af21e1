"""Balanced k-way partitioning and cluster bisection.

Multi-level recursive bisection: label-propagation coarsening, greedy graph
growing on the coarsest graph, and FM-style boundary refinement with rollback
to the best prefix of each pass while uncoarsening.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass

from .clustering import Clustering
from .graph import Graph, contract
from .louvain import sclp

SPLIT_EPSILON = 0.03
COARSEST_SIZE = 40
INITIAL_TRIES = 4
FM_PASSES = 8
FM_PATIENCE = 50


@dataclass(frozen=True)
class PartitionParams:
    k: int
    epsilon: float = SPLIT_EPSILON
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")

    def l_max(self, total_weight: int) -> float:
        return (1.0 + self.epsilon) * math.ceil(total_weight / self.k)


class _Bounds:
    """Per-side weight caps and minimum vertex counts for a bisection."""

    def __init__(self, max_w: tuple[float, float], min_count: tuple[int, int] = (1, 1)):
        self.max_w = max_w
        self.min_count = min_count

    def violation(self, w: list[int], cnt: list[int]) -> float:
        return sum(max(0.0, w[s] - self.max_w[s]) + max(0, self.min_count[s] - cnt[s]) for s in (0, 1))


def cut_weight(g: Graph, labels) -> int:
    return sum(w for u, v, w in g.edges() if labels[u] != labels[v])


def _gains(g: Graph, side: list[int]) -> list[int]:
    """Cut reduction if each vertex switched sides."""
    out = [0] * g.n
    for u, nbrs in enumerate(g.adj):
        s = side[u]
        out[u] = sum(w if side[v] != s else -w for v, w in nbrs)
    return out


def _fm(g: Graph, side: list[int], bounds: _Bounds, rng: random.Random) -> list[int]:
    """Two-way FM refinement; minimizes (balance violation, cut) lexicographically."""
    n = g.n
    adj = g.adj
    vw = g.vertex_weights
    side = list(side)
    for _ in range(FM_PASSES):
        w = [0, 0]
        cnt = [0, 0]
        for v in range(n):
            w[side[v]] += vw[v]
            cnt[side[v]] += 1
        gain = _gains(g, side)
        cut = cut_weight(g, side)
        start_key = (bounds.violation(w, cnt), cut)
        best_key = start_key
        best_len = 0
        heaps: list[list] = [[], []]
        for v in range(n):
            if len(adj[v]) == 0 and start_key[0] == 0:
                continue
            heapq.heappush(heaps[side[v]], (-gain[v], rng.random(), v))
        locked = [False] * n
        moves: list[int] = []
        since_best = 0
        while since_best < FM_PATIENCE:
            pick = None
            for s in (0, 1):
                h = heaps[s]
                t = 1 - s
                while h:
                    ng, _, v = h[0]
                    if locked[v] or side[v] != s or -ng != gain[v]:
                        heapq.heappop(h)
                        continue
                    fits = w[t] + vw[v] <= bounds.max_w[t] or w[s] > bounds.max_w[s]
                    if not fits or cnt[s] - 1 < bounds.min_count[s] and cnt[t] >= bounds.min_count[t]:
                        heapq.heappop(h)
                        continue
                    if pick is None or gain[v] > gain[pick]:
                        pick = v
                    break
            if pick is None:
                break
            v = pick
            s, t = side[v], 1 - side[v]
            cut -= gain[v]
            side[v] = t
            locked[v] = True
            w[s] -= vw[v]
            w[t] += vw[v]
            cnt[s] -= 1
            cnt[t] += 1
            gain[v] = -gain[v]
            for u, wt in adj[v]:
                if locked[u]:
                    continue
                # u on side t lost an external edge; u on side s gained one
                gain[u] += -2 * wt if side[u] == t else 2 * wt
                heapq.heappush(heaps[side[u]], (-gain[u], rng.random(), u))
            moves.append(v)
            key = (bounds.violation(w, cnt), cut)
            if key < best_key:
                best_key = key
                best_len = len(moves)
                since_best = 0
            else:
                since_best += 1
        for v in moves[best_len:]:
            side[v] = 1 - side[v]
        if best_key >= start_key:
            break
    return side


def _grow(g: Graph, target_a: float, rng: random.Random) -> list[int]:
    """Greedy graph growing: side 0 grows from a random seed until ``target_a``."""
    n = g.n
    vw = g.vertex_weights
    side = [1] * n
    conn = [0] * n  # weight into side 0 minus weight into side 1
    for v, nbrs in enumerate(g.adj):
        conn[v] = -sum(w for _, w in nbrs)
    heap: list = []
    weight = 0
    remaining = list(range(n))
    rng.shuffle(remaining)
    while weight < target_a:
        v = None
        while heap:
            _, _, u = heapq.heappop(heap)
            if side[u] == 1:
                v = u
                break
        if v is None:
            while remaining and side[remaining[-1]] == 0:
                remaining.pop()
            if not remaining:
                break
            v = remaining.pop()
        side[v] = 0
        weight += vw[v]
        for u, w in g.adj[v]:
            if side[u] == 1:
                conn[u] += 2 * w
                heapq.heappush(heap, (-conn[u], rng.random(), u))
    return side


def _initial(g: Graph, bounds: _Bounds, target_a: float, rng: random.Random) -> list[int]:
    best = None
    best_key = None
    for _ in range(INITIAL_TRIES):
        side = _fm(g, _grow(g, target_a, rng), bounds, rng)
        w = [0, 0]
        cnt = [0, 0]
        for v, s in enumerate(side):
            w[s] += g.vertex_weights[v]
            cnt[s] += 1
        key = (bounds.violation(w, cnt), cut_weight(g, side))
        if best_key is None or key < best_key:
            best, best_key = side, key
    return best


def bisect(g: Graph, bounds: _Bounds, target_a: float, rng: random.Random) -> list[int]:
    """Multi-level two-way split of ``g``; returns side labels 0/1."""
    levels = []
    cur = g
    size_bound = max(1.0, min(bounds.max_w) / 4.0)
    while cur.n > COARSEST_SIZE:
        c = sclp(cur, size_bound, rng)
        if cur.n - c.k < 0.02 * cur.n:
            break
        level = contract(cur, c)
        levels.append((cur, level))
        cur = level.coarse
    side = _initial(cur, bounds, target_a, rng)
    for fine, level in reversed(levels):
        side = [side[a] for a in level.map_list]
        side = _fm(fine, side, bounds, rng)
    return side


def _recurse(g: Graph, verts: list[int], k: int, base: int, cap: int,
             labels: list[int], rng: random.Random) -> None:
    if k == 1:
        for v in verts:
            labels[v] = base
        return
    k1 = k // 2
    k2 = k - k1
    sub, _ = g.subgraph(verts)
    total = sub.total_vertex_weight
    bounds = _Bounds((k1 * cap, k2 * cap), (k1, k2))
    side = bisect(sub, bounds, total * k1 / k, rng)
    part = ([], [])
    for i, s in enumerate(side):
        part[s].append(verts[i])
    _recurse(g, part[0], k1, base, cap, labels, rng)
    _recurse(g, part[1], k2, base + k1, cap, labels, rng)


def partition(g: Graph, params: PartitionParams, rng: random.Random | None = None) -> Clustering:
    """Split ``g`` into exactly ``params.k`` blocks of weight at most L_max.

    Raises:
        ValueError: if ``k`` exceeds the number of vertices.
        RuntimeError: if the heuristic could not meet the balance constraint
            (only possible with non-unit vertex weights).
    """
    n = g.n
    k = params.k
    if k > n:
        raise ValueError(f"cannot split {n} vertices into {k} nonempty blocks")
    rng = rng or random.Random(params.seed)
    l_max = params.l_max(g.total_vertex_weight)
    cap = math.floor(l_max + 1e-9)
    labels = [0] * n
    _recurse(g, list(range(n)), k, 0, cap, labels, rng)
    out = Clustering(labels, k)
    weights = [0] * k
    for v, b in enumerate(labels):
        weights[b] += g.vertex_weights[v]
    if min(weights, default=1) <= 0 or len(set(labels)) != k:
        raise RuntimeError("partition produced an empty block")
    if max(weights, default=0) > l_max + 1e-9:
        raise RuntimeError(f"block weight {max(weights)} exceeds L_max {l_max}")
    return out


def bisect_cluster(g: Graph, c: Clustering, cluster_id: int, rng: random.Random,
                   epsilon: float = SPLIT_EPSILON) -> Clustering | None:
    """Split one cluster into two balanced halves with a small cut.

    The second half gets the new ID ``c.k``; every other vertex keeps its ID.
    Returns ``None`` when the cluster has fewer than two vertices.
    """
    members = [v for v, x in enumerate(c.labels) if x == cluster_id]
    if len(members) < 2:
        return None
    sub, _ = g.subgraph(members)
    total = sub.total_vertex_weight
    cap = math.ceil((1.0 + epsilon) / 2.0 * total)
    side = bisect(sub, _Bounds((cap, cap)), total / 2.0, rng)
    if 0 not in side or 1 not in side:
        raise RuntimeError("bisection left one side empty")
    labels = list(c.labels)
    for i, s in enumerate(side):
        if s:
            labels[members[i]] = c.k
    return Clustering(labels, c.k + 1)
