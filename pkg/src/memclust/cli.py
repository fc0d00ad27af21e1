"""Command-line front end: ``cluster``, ``bound`` and ``analyze``."""
from __future__ import annotations

import argparse
import csv
import heapq
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .clustering import Clustering, EmptyGraphError, modularity
from .graph import Graph, GraphFormatError, read_graph, write_clustering
from .island import IslandConfig, run
from .memetic import OperatorConfig

log = logging.getLogger("memclust")

CSV_HEADER = ("elapsed_seconds", "seed", "modularity")


@dataclass
class ConvergenceLog:
    """Improvement events ``(elapsed, seed, modularity)`` of one or more runs."""

    events: list[tuple[float, int, float]] = field(default_factory=list)

    def add_run(self, seed: int, run_events: Sequence[tuple[float, float]]) -> None:
        self.events.extend((t, seed, q) for t, q in run_events)

    def runs(self) -> dict[int, list[tuple[float, float]]]:
        out: dict[int, list[tuple[float, float]]] = {}
        for t, s, q in self.events:
            out.setdefault(s, []).append((t, q))
        for seq in out.values():
            seq.sort()
        return out

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for t, s, q in self.events:
                w.writerow((f"{t:.6f}", s, repr(q)))

    @classmethod
    def read_csv(cls, path: str | os.PathLike) -> "ConvergenceLog":
        out = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
                raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
            for row in reader:
                if row:
                    out.events.append((float(row[0]), int(row[1]), float(row[2])))
        return out


def event_average(runs: Sequence[Sequence[tuple[float, float]]]) -> list[tuple[float, float]]:
    """Event-based average of several convergence curves.

    The first point averages the first event of every run. Every later event,
    in time order, replaces its run's current score and emits the new mean.
    """
    if not runs:
        raise ValueError("need at least one run")
    if any(len(r) == 0 for r in runs):
        raise ValueError("every run needs at least one event")
    r = len(runs)
    current = [run[0][1] for run in runs]
    curve = [(sum(run[0][0] for run in runs) / r, sum(current) / r)]
    rest = sorted((t, s, q) for s, run in enumerate(runs) for t, q in run[1:])
    for t, s, q in rest:
        current[s] = q
        curve.append((t, sum(current) / r))
    return curve


def volume_balanced_clustering(g: Graph, k: int) -> Clustering:
    """Vertices by decreasing degree, each to the cluster of least volume
    (smallest ID among equals)."""
    if not 1 <= k <= g.n:
        raise ValueError(f"k must lie in [1, {g.n}]")
    deg = g.degrees
    heap = [(0, i) for i in range(k)]
    labels = [0] * g.n
    for v in sorted(range(g.n), key=lambda v: (-deg[v], v)):
        vol, i = heapq.heappop(heap)
        labels[v] = i
        heapq.heappush(heap, (vol + deg[v], i))
    return Clustering(labels, k)


def modularity_bound(g: Graph, k: int) -> float:
    """``1 - E[cov]`` of the greedy volume-balanced clustering into ``k`` clusters."""
    m = g.m
    if m <= 0:
        raise EmptyGraphError("bound is undefined on a graph with m = 0")
    c = volume_balanced_clustering(g, k)
    vol = [0] * k
    for v, i in enumerate(c.labels):
        vol[i] += g.degrees[v]
    num = 4 * m * m - sum(x * x for x in vol)
    bound = num / (4 * m * m)
    # sum(vol^2) >= (2m)^2 / k, with equality iff all volumes are equal
    if k * sum(x * x for x in vol) < 4 * m * m:
        raise AssertionError("volume bound exceeded 1 - 1/k")
    return bound


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memclust", description="Memetic modularity clustering.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="cluster a METIS graph")
    c.add_argument("graph")
    c.add_argument("--time", type=float, default=60.0, help="total time budget in seconds")
    c.add_argument("--islands", type=int, default=1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", help="clustering file (default: <graph>.clu)")
    c.add_argument("--log", help="convergence CSV (default: <output>.csv)")
    c.add_argument("--init-fraction", type=float, default=10.0)
    c.add_argument("--mutation-ratio", type=float, default=0.1)
    c.add_argument("--rounds", type=int, help="cap on evolution rounds per island")
    c.add_argument("--population", type=int, help="fixed population size (skips the estimate)")
    c.add_argument("--backend", choices=("thread", "process"), default="process")

    b = sub.add_parser("bound", help="print the volume-balancing modularity bound")
    b.add_argument("graph")
    b.add_argument("--k", type=int, required=True)

    a = sub.add_parser("analyze", help="event-averaged convergence curve of CSV logs")
    a.add_argument("logs", nargs="+")
    return p


def _cmd_cluster(args) -> int:
    g = read_graph(args.graph)
    if g.m == 0:
        raise EmptyGraphError("graph has no edges")
    cfg = IslandConfig(
        islands=args.islands,
        time_limit=args.time,
        init_fraction=args.init_fraction,
        seed=args.seed,
        rounds=args.rounds,
        population_size=args.population,
        backend=args.backend,
    )
    result = run(g, cfg, OperatorConfig(mutation_ratio=args.mutation_ratio))
    out = Path(args.output or f"{args.graph}.clu")
    log_path = Path(args.log or f"{out}.csv")
    best = result.best
    write_clustering(out, best.clustering)
    conv = ConvergenceLog()
    conv.add_run(args.seed, result.log)
    conv.write_csv(log_path)
    k = best.clustering.k
    bound = modularity_bound(g, k)
    q = modularity(g, best.clustering)
    print(f"modularity={q:.6f} k={k} bound={bound:.6f} ratio={q / bound:.6f}")
    return 0


def _cmd_bound(args) -> int:
    g = read_graph(args.graph)
    print(f"{modularity_bound(g, args.k):.6f}")
    return 0


def _cmd_analyze(args) -> int:
    runs = []
    for path in args.logs:
        runs.extend(ConvergenceLog.read_csv(path).runs().values())
    w = csv.writer(sys.stdout)
    w.writerow(("elapsed_seconds", "mean_modularity"))
    for t, q in event_average(runs):
        w.writerow((f"{t:.6f}", f"{q:.9f}"))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"cluster": _cmd_cluster, "bound": _cmd_bound, "analyze": _cmd_analyze}
    try:
        return handlers[args.command](args)
    except (OSError, GraphFormatError, ValueError) as exc:
        print(f"memclust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
