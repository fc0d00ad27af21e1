"""Weighted undirected graphs, METIS I/O, and cluster contraction."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, TextIO

import numpy as np

from .clustering import Clustering


class GraphFormatError(ValueError):
    """Malformed METIS input. ``lineno`` is 1-based within the stream."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    """Static weighted graph in compressed adjacency form.

    Self-contribution of collapsed vertices lives in ``internal``; the
    adjacency arrays never contain self-edges. Weighted degree is
    ``sum(incident weights) + 2 * internal[v]``.
    """

    xadj: np.ndarray
    adjncy: np.ndarray
    adjwgt: np.ndarray
    internal: np.ndarray
    vwgt: np.ndarray

    def __post_init__(self):
        for name in ("xadj", "adjncy", "adjwgt", "internal", "vwgt"):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.xadj) - 1

    @cached_property
    def m(self) -> int:
        return int(self.adjwgt.sum()) // 2 + int(self.internal.sum())

    @cached_property
    def num_edges(self) -> int:
        """Number of distinct undirected edges (ignores weights)."""
        return len(self.adjncy) // 2

    @cached_property
    def adj(self) -> list[list[tuple[int, int]]]:
        """Per-vertex ``(neighbor, weight)`` lists."""
        xadj = self.xadj.tolist()
        nbr = self.adjncy.tolist()
        wgt = self.adjwgt.tolist()
        return [list(zip(nbr[xadj[v]:xadj[v + 1]], wgt[xadj[v]:xadj[v + 1]]))
                for v in range(self.n)]

    @cached_property
    def degrees_array(self) -> np.ndarray:
        incident = np.add.reduceat(self.adjwgt, self.xadj[:-1]) if len(self.adjncy) else None
        deg = 2 * self.internal.copy()
        if incident is not None:
            # reduceat misreports empty rows; zero them explicitly
            empty = self.xadj[:-1] == self.xadj[1:]
            incident = np.where(empty, 0, incident)
            deg += incident
        deg.setflags(write=False)
        return deg

    @cached_property
    def degrees(self) -> list[int]:
        return self.degrees_array.tolist()

    @cached_property
    def vertex_weights(self) -> list[int]:
        return self.vwgt.tolist()

    @property
    def total_vertex_weight(self) -> int:
        return int(self.vwgt.sum())

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Each undirected edge once as ``(u, v, w)`` with ``u < v``, sorted."""
        for u, nbrs in enumerate(self.adj):
            for v, w in sorted(nbrs):
                if u < v:
                    yield u, v, w

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, internal=None, vwgt=None) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples, 0-indexed."""
        rows: list[dict[int, int]] = [{} for _ in range(n)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = int(e[2]) if len(e) > 2 else 1
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if w < 0:
                raise ValueError(f"negative weight on edge ({u}, {v})")
            if v in rows[u]:
                raise ValueError(f"duplicate edge ({u}, {v})")
            rows[u][v] = w
            rows[v][u] = w
        return cls._from_rows(rows, internal, vwgt)

    @classmethod
    def _from_rows(cls, rows, internal=None, vwgt=None) -> "Graph":
        n = len(rows)
        xadj = [0]
        nbr: list[int] = []
        wgt: list[int] = []
        for row in rows:
            for v in sorted(row):
                nbr.append(v)
                wgt.append(row[v])
            xadj.append(len(nbr))
        return cls(
            np.array(xadj),
            np.array(nbr, dtype=np.int64),
            np.array(wgt, dtype=np.int64),
            np.zeros(n, dtype=np.int64) if internal is None else np.asarray(internal),
            np.ones(n, dtype=np.int64) if vwgt is None else np.asarray(vwgt),
        )

    def subgraph(self, vertices: list[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph on ``vertices``; returns it with the local-to-global map."""
        local = {v: i for i, v in enumerate(vertices)}
        rows: list[dict[int, int]] = []
        for v in vertices:
            rows.append({local[u]: w for u, w in self.adj[v] if u in local})
        sub = Graph._from_rows(
            rows,
            internal=self.internal[vertices],
            vwgt=self.vwgt[vertices],
        )
        return sub, list(vertices)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class CoarseningLevel:
    """A contracted graph and the fine-to-coarse vertex map."""

    coarse: Graph
    map: np.ndarray

    @cached_property
    def map_list(self) -> list[int]:
        return self.map.tolist()


def contract(g: Graph, c: Clustering) -> CoarseningLevel:
    """Collapse every cluster of ``c`` into a single vertex.

    Edges between two clusters are merged by summing weights; edges inside a
    cluster become internal weight of the coarse vertex, counted once each.
    """
    if len(c) != g.n:
        raise ValueError(f"clustering has {len(c)} entries, graph has {g.n} vertices")
    if not c.is_normalized():
        raise ValueError("contract needs contiguous cluster IDs; normalize first")
    k = c.k
    lab = c.labels
    rows: list[dict[int, int]] = [{} for _ in range(k)]
    internal = [0] * k
    vwgt = [0] * k
    gi = g.internal.tolist()
    gw = g.vertex_weights
    for v in range(g.n):
        internal[lab[v]] += gi[v]
        vwgt[lab[v]] += gw[v]
    for u, v, w in g.edges():
        a, b = lab[u], lab[v]
        if a == b:
            internal[a] += w
        else:
            rows[a][b] = rows[a].get(b, 0) + w
            rows[b][a] = rows[b].get(a, 0) + w
    coarse = Graph._from_rows(rows, internal=internal, vwgt=vwgt)
    return CoarseningLevel(coarse, c.assign)


def project(level: CoarseningLevel, c_coarse: Clustering) -> Clustering:
    """Lift a clustering of ``level.coarse`` back to the finer graph."""
    if len(c_coarse) != level.coarse.n:
        raise ValueError("clustering does not match the coarse graph")
    return Clustering(c_coarse.assign[level.map], c_coarse.k)


# --- METIS I/O -------------------------------------------------------------

def _lines(stream: TextIO) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if line.startswith("%"):
            continue
        yield lineno, line


def parse_graph(stream: TextIO | str) -> Graph:
    """Parse a METIS graph (1-indexed adjacency, ``%`` comments allowed).

    Only the edge-weight flag of ``fmt`` is honored; vertex sizes and vertex
    weights, when present, are skipped and every vertex gets weight one.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = _lines(stream)

    for lineno, line in lines:
        if line:
            break
    else:
        raise GraphFormatError("missing header")

    head = line.split()
    if len(head) < 2 or len(head) > 4:
        raise GraphFormatError(f"header must be 'n m [fmt [ncon]]', got {line!r}", lineno)
    try:
        n, m_header = int(head[0]), int(head[1])
        fmt = head[2] if len(head) > 2 else "0"
        ncon = int(head[3]) if len(head) > 3 else 1
    except ValueError:
        raise GraphFormatError(f"non-integer header {line!r}", lineno) from None
    if n < 0 or m_header < 0 or ncon < 0:
        raise GraphFormatError("negative count in header", lineno)
    if not fmt.isdigit() or len(fmt) > 3:
        raise GraphFormatError(f"bad fmt field {fmt!r}", lineno)
    fmt = fmt.zfill(3)
    has_vsize, has_vwgt, has_ewgt = fmt[0] == "1", fmt[1] == "1", fmt[2] == "1"
    skip = (1 if has_vsize else 0) + (ncon if has_vwgt else 0)
    step = 2 if has_ewgt else 1

    rows: list[dict[int, int]] = []
    where: list[int] = []
    for lineno, line in lines:
        if len(rows) == n:
            if line:
                raise GraphFormatError("more adjacency lines than vertices", lineno)
            continue
        u = len(rows)
        try:
            tok = [int(t) for t in line.split()]
        except ValueError:
            raise GraphFormatError("non-integer token in adjacency line", lineno) from None
        tok = tok[skip:]
        if len(tok) % step:
            raise GraphFormatError("dangling neighbor without edge weight", lineno)
        row: dict[int, int] = {}
        for i in range(0, len(tok), step):
            v = tok[i] - 1
            w = tok[i + 1] if has_ewgt else 1
            if not 0 <= v < n:
                raise GraphFormatError(f"vertex index {tok[i]} out of range 1..{n}", lineno)
            if v == u:
                raise GraphFormatError(f"self-loop on vertex {u + 1}", lineno)
            if w < 0:
                raise GraphFormatError(f"negative edge weight {w}", lineno)
            if v in row:
                raise GraphFormatError(f"duplicate edge to vertex {v + 1}", lineno)
            row[v] = w
        rows.append(row)
        where.append(lineno)
    if len(rows) < n:
        raise GraphFormatError(f"expected {n} adjacency lines, found {len(rows)}")

    for u, row in enumerate(rows):
        for v, w in row.items():
            if rows[v].get(u) != w:
                raise GraphFormatError(
                    f"asymmetric adjacency: edge {u + 1}-{v + 1} missing or weighted "
                    f"differently on vertex {v + 1}",
                    where[u],
                )
    count = sum(len(r) for r in rows) // 2
    if count != m_header:
        raise GraphFormatError(f"header declares {m_header} edges, found {count}")
    return Graph._from_rows(rows)


def read_graph(path: str | os.PathLike) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh)


def format_graph(g: Graph) -> str:
    """Serialize to METIS (edge weights written only when non-unit)."""
    if int(g.internal.sum()):
        raise ValueError("METIS format cannot carry internal (self-loop) weight")
    weighted = bool((g.adjwgt != 1).any())
    out = [f"{g.n} {g.num_edges}" + (" 1" if weighted else "")]
    for nbrs in g.adj:
        if weighted:
            out.append(" ".join(f"{v + 1} {w}" for v, w in nbrs))
        else:
            out.append(" ".join(str(v + 1) for v, _ in nbrs))
    return "\n".join(out) + "\n"


def write_clustering(path: str | os.PathLike, c: Clustering) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_clustering(c))


def format_clustering(c: Clustering) -> str:
    return "".join(f"{x}\n" for x in c.labels)


def parse_clustering(stream: TextIO | str, n: int | None = None) -> Clustering:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            x = int(line)
        except ValueError:
            raise GraphFormatError(f"bad cluster id {line!r}", lineno) from None
        if x < 0:
            raise GraphFormatError("negative cluster id", lineno)
        labels.append(x)
    if n is not None and len(labels) != n:
        raise GraphFormatError(f"expected {n} cluster ids, found {len(labels)}")
    return Clustering.from_labels(labels)


def read_clustering(path: str | os.PathLike, n: int | None = None) -> Clustering:
    with open(path, encoding="utf-8") as fh:
        return parse_clustering(fh, n)
