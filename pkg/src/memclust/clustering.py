"""Clusterings, quality scores, overlays and cut-edge fingerprints."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .graph import Graph


class EmptyGraphError(ValueError):
    """Raised when a score is requested on a graph without edge weight."""


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Clustering:
    """A partition of ``range(n)`` given as one cluster ID per vertex.

    Instances built through :meth:`from_labels` are normalized: IDs are
    contiguous in ``[0, k)`` and numbered by first occurrence.
    """

    assign: np.ndarray
    k: int

    def __post_init__(self):
        if not isinstance(self.assign, np.ndarray) or self.assign.flags.writeable:
            object.__setattr__(self, "assign", _frozen(self.assign))

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> "Clustering":
        return cls(*normalize_labels(labels))

    @classmethod
    def singletons(cls, n: int) -> "Clustering":
        return cls(np.arange(n, dtype=np.int64), n)

    @classmethod
    def single(cls, n: int) -> "Clustering":
        return cls(np.zeros(n, dtype=np.int64), 1 if n else 0)

    @property
    def n(self) -> int:
        return len(self.assign)

    def __len__(self) -> int:
        return len(self.assign)

    def __getitem__(self, v):
        return self.assign[v]

    @cached_property
    def labels(self) -> list[int]:
        """Assignment as a plain list (fast element access in hot loops)."""
        return self.assign.tolist()

    def normalized(self) -> "Clustering":
        return Clustering.from_labels(self.labels)

    def is_normalized(self) -> bool:
        seen = -1
        for c in self.labels:
            if c > seen + 1:
                return False
            seen = max(seen, c)
        return seen + 1 == self.k

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.k)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.labels):
            out[c].append(v)
        return out

    def as_partition(self) -> frozenset:
        """Cluster structure with IDs forgotten."""
        return frozenset(frozenset(b) for b in self.blocks() if b)

    def same_partition(self, other: "Clustering") -> bool:
        return len(self) == len(other) and np.array_equal(
            self.normalized().assign, other.normalized().assign
        )

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assign, other.assign)

    def __hash__(self):
        return hash((self.k, self.assign.tobytes()))

    def __repr__(self):
        return f"Clustering(k={self.k}, assign={self.labels})"


def normalize_labels(labels: Iterable[int]) -> tuple[np.ndarray, int]:
    """Relabel clusters by order of first occurrence."""
    remap: dict[int, int] = {}
    out = []
    for c in labels:
        c = int(c)
        new = remap.get(c)
        if new is None:
            new = remap[c] = len(remap)
        out.append(new)
    return np.array(out, dtype=np.int64), len(remap)


def _check(g: "Graph", c: Clustering) -> None:
    if len(c) != g.n:
        raise ValueError(f"clustering has {len(c)} entries, graph has {g.n} vertices")


def intra_weight(g: "Graph", c: Clustering) -> int:
    """Total weight of intra-cluster edges, internal (self) weight included."""
    _check(g, c)
    lab = c.labels
    total = int(g.internal.sum())
    for u, v, w in g.edges():
        if lab[u] == lab[v]:
            total += w
    return total


def volumes(g: "Graph", c: Clustering) -> np.ndarray:
    """Per-cluster sum of weighted degrees."""
    _check(g, c)
    return np.bincount(c.assign, weights=g.degrees_array, minlength=c.k).astype(np.int64)


def modularity_terms(g: "Graph", c: Clustering) -> tuple[int, int]:
    """Exact ``(numerator, denominator)`` of modularity over the integers.

    ``Q = (4 m m(C) - sum_i vol_i**2) / (4 m**2)``. Keeping both parts as
    Python ints means a single correctly-rounded division at the end, so two
    clusterings with equal integer objective always get bit-identical scores.
    """
    m = g.m
    if m <= 0:
        raise EmptyGraphError("modularity is undefined on a graph with m = 0")
    vol = volumes(g, c)
    sq = sum(int(x) * int(x) for x in vol.tolist())
    return 4 * m * intra_weight(g, c) - sq, 4 * m * m


def modularity(g: "Graph", c: Clustering) -> float:
    num, den = modularity_terms(g, c)
    return num / den


def coverage(g: "Graph", c: Clustering) -> float:
    if g.m <= 0:
        raise EmptyGraphError("coverage is undefined on a graph with m = 0")
    return intra_weight(g, c) / g.m


def overlay(g: "Graph", c1: Clustering, c2: Clustering) -> Clustering:
    """Connected components of ``g`` after dropping every edge cut by ``c1`` or ``c2``.

    Labels are assigned in order of the smallest vertex of each component, so
    the result is already normalized.
    """
    _check(g, c1)
    _check(g, c2)
    a, b = c1.labels, c2.labels
    adj = g.adj
    comp = [-1] * g.n
    k = 0
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        comp[s] = k
        stack = [s]
        while stack:
            u = stack.pop()
            au, bu = a[u], b[u]
            for v, _ in adj[u]:
                if comp[v] < 0 and a[v] == au and b[v] == bu:
                    comp[v] = k
                    stack.append(v)
        k += 1
    return Clustering(np.array(comp, dtype=np.int64), k)


def pairwise_label_overlay(c1: Clustering, c2: Clustering) -> Clustering:
    """Label intersection of two clusterings via a hash map on ID pairs."""
    if len(c1) != len(c2):
        raise ValueError(f"length mismatch: {len(c1)} vs {len(c2)}")
    table: dict[tuple[int, int], int] = {}
    counter = 0
    out = []
    for i, j in zip(c1.labels, c2.labels):
        key = (i, j)
        cid = table.get(key)
        if cid is None:
            cid = table[key] = counter
            counter += 1
        out.append(cid)
    return Clustering(np.array(out, dtype=np.int64), counter)


@dataclass(frozen=True)
class CutEdgeSet:
    """Sorted, duplicate-free canonical ``(min, max)`` pairs of cut edges."""

    edges: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, pairs: Iterable[Sequence[int]]) -> "CutEdgeSet":
        canon = {(min(u, v), max(u, v)) for u, v in pairs}
        return cls(tuple(sorted(canon)))

    @cached_property
    def as_set(self) -> frozenset:
        return frozenset(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __contains__(self, edge) -> bool:
        u, v = edge
        return (min(u, v), max(u, v)) in self.as_set


def cut_edges(g: "Graph", c: Clustering) -> CutEdgeSet:
    _check(g, c)
    lab = c.labels
    # g.edges() yields u < v in increasing order, so the result is sorted
    return CutEdgeSet(tuple((u, v) for u, v, _ in g.edges() if lab[u] != lab[v]))


def distance(a: CutEdgeSet, b: CutEdgeSet) -> int:
    """Size of the symmetric difference of two cut-edge sets."""
    return len(a.as_set ^ b.as_set)
