"""Island-model parallel engine with randomized rumor spreading.

Every island runs the memetic loop on its own population and random stream.
Islands only interact by exchanging serialized best individuals through a
non-blocking channel; nothing ever waits on a peer.
"""
from __future__ import annotations

import logging
import math
import multiprocessing as mp
import queue
import random
import threading
import time
from dataclasses import dataclass, field

from .clustering import Clustering
from .graph import Graph
from .memetic import (
    MAX_POPULATION,
    MIN_POPULATION,
    Individual,
    OperatorConfig,
    Population,
    create_individual,
    evolution_round,
    insert_with_eviction,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IslandConfig:
    """Run parameters shared by all islands.

    ``rounds`` and ``population_size`` are optional overrides: with both set
    (and a generous ``time_limit``) a single-island run is fully reproducible.
    """

    islands: int = 1
    time_limit: float = 60.0
    init_fraction: float = 10.0
    seed: int = 0
    rounds: int | None = None
    population_size: int | None = None
    backend: str = "thread"

    def __post_init__(self):
        if self.islands < 1:
            raise ValueError("need at least one island")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.init_fraction < 1:
            raise ValueError("init_fraction must be >= 1")
        if self.population_size is not None and not (
            MIN_POPULATION <= self.population_size <= MAX_POPULATION
        ):
            raise ValueError(f"population_size must lie in [{MIN_POPULATION}, {MAX_POPULATION}]")
        if self.backend not in ("thread", "process"):
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def gossip_interval(self) -> float:
        return max(1.0, self.time_limit / 1000.0)


def island_seed(base: int, island_id: int) -> int:
    return base * 1_000_003 + island_id


def estimate_population_size(t_bar: float, cfg: IslandConfig) -> int:
    """Population size whose creation takes about ``time_limit / init_fraction``."""
    if t_bar <= 0:
        return MAX_POPULATION
    target = (cfg.time_limit / cfg.init_fraction) / t_bar
    return int(min(MAX_POPULATION, max(MIN_POPULATION, round(target))))


# --- wire format -----------------------------------------------------------

def serialize_individual(ind: Individual) -> str:
    labels = ind.clustering.labels
    return f"{len(labels)}\n{' '.join(map(str, labels))}\n{ind.fitness!r}\n"


def deserialize_individual(g: Graph, payload: str, cfg: OperatorConfig | None = None) -> Individual:
    """Decode and re-score an individual; the sender's fitness is only a checksum."""
    parts = payload.split("\n")
    try:
        n = int(parts[0])
        labels = [int(x) for x in parts[1].split()] if n else []
        claimed = float(parts[2])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed individual payload: {exc}") from None
    if n != g.n or len(labels) != n:
        raise ValueError(f"payload has {len(labels)} labels for a graph with {g.n} vertices")
    if min(labels, default=0) < 0:
        raise ValueError("negative cluster id in payload")
    ind = Individual.of(g, Clustering.from_labels(labels), (cfg or OperatorConfig()).objective)
    if abs(ind.fitness - claimed) > 1e-9:
        log.warning("fitness checksum mismatch: claimed %r, rescored %r", claimed, ind.fitness)
    return ind


# --- channels ----------------------------------------------------------------

class QueueChannel:
    """In-process lossless mailboxes, one per island."""

    def __init__(self, p: int):
        self._boxes = [queue.SimpleQueue() for _ in range(p)]
        self._dead: set[int] = set()

    def send(self, dest: int, payload: str) -> None:
        if dest not in self._dead:
            self._boxes[dest].put_nowait(payload)

    def receive_all(self, island_id: int) -> list[str]:
        out = []
        box = self._boxes[island_id]
        while True:
            try:
                out.append(box.get_nowait())
            except queue.Empty:
                return out

    def mark_dead(self, island_id: int) -> None:
        self._dead.add(island_id)
        self.receive_all(island_id)


class ProcessChannel:
    """Mailboxes backed by ``multiprocessing`` queues; crosses process boundaries."""

    def __init__(self, p: int, ctx=None):
        ctx = ctx or mp.get_context()
        self._boxes = [ctx.Queue() for _ in range(p)]

    def send(self, dest: int, payload: str) -> None:
        try:
            self._boxes[dest].put_nowait(payload)
        except (queue.Full, ValueError, OSError):
            pass  # best effort: a closed or full peer just misses this message

    def receive_all(self, island_id: int) -> list[str]:
        out = []
        box = self._boxes[island_id]
        while True:
            try:
                out.append(box.get_nowait())
            except (queue.Empty, OSError, ValueError):
                return out


# --- rumor spreading ---------------------------------------------------------

@dataclass
class GossipState:
    """Peers already sent the current best, and that best's fingerprint."""

    served: set[int] = field(default_factory=set)
    best_key: object = None

    def observe(self, key) -> None:
        if key != self.best_key:
            self.best_key = key
            self.served.clear()


def fingerprint(ind: Individual):
    return (ind.fitness, ind.clustering.assign.tobytes())


def gossip_step(island_id: int, p: int, state: GossipState, best: Individual,
                rng: random.Random) -> list[tuple[int, Individual]]:
    """One communication step: up to ``ceil(log2 p)`` sends of the current best,
    each to a uniformly chosen peer that has not received it yet."""
    if p < 2:
        return []
    state.observe(fingerprint(best))
    eligible = [q for q in range(p) if q != island_id and q not in state.served]
    out = []
    for _ in range(math.ceil(math.log2(p))):
        if not eligible:
            break
        q = eligible.pop(rng.randrange(len(eligible)))
        state.served.add(q)
        out.append((q, best))
    return out


def receive_and_merge(pop: Population, incoming: Individual) -> bool:
    return insert_with_eviction(pop, incoming)


# --- islands -----------------------------------------------------------------

class Island:
    """One processing element: a population, a private RNG and a mailbox."""

    def __init__(self, g: Graph, island_id: int, cfg: IslandConfig,
                 op_cfg: OperatorConfig | None = None, channel=None,
                 start: float | None = None):
        self.g = g
        self.id = island_id
        self.cfg = cfg
        self.op_cfg = op_cfg or OperatorConfig()
        self.channel = channel
        self.rng = random.Random(island_seed(cfg.seed, island_id))
        self.start = time.perf_counter() if start is None else start
        self.deadline = self.start + cfg.time_limit
        self.pop: Population | None = None
        self.log: list[tuple[float, float]] = []
        self.rounds = 0
        self.t_bar: float | None = None
        self.gossip = GossipState()
        self._last_gossip = -math.inf
        self._gossiped_key = None

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def _note(self, fitness: float) -> None:
        if not self.log or fitness > self.log[-1][1]:
            self.log.append((self.elapsed(), fitness))

    def initialize(self) -> None:
        t0 = time.perf_counter()
        first = create_individual(self.g, self.op_cfg, self.rng)
        self.t_bar = time.perf_counter() - t0
        size = self.cfg.population_size or estimate_population_size(self.t_bar, self.cfg)
        self.pop = Population(size)
        self.pop.add(first)
        self._note(first.fitness)
        init_deadline = self.start + self.cfg.time_limit / self.cfg.init_fraction
        fixed = self.cfg.population_size is not None
        while len(self.pop) < size:
            if not fixed and len(self.pop) >= MIN_POPULATION and time.perf_counter() > init_deadline:
                break
            ind = create_individual(self.g, self.op_cfg, self.rng)
            self.pop.add(ind)
            self._note(ind.fitness)

    @property
    def best(self) -> Individual:
        return self.pop.best()

    def done(self) -> bool:
        if self.cfg.rounds is not None and self.rounds >= self.cfg.rounds:
            return True
        return time.perf_counter() >= self.deadline

    def step(self) -> str:
        op, _ = evolution_round(self.g, self.pop, self.op_cfg, self.rng)
        self.rounds += 1
        self._note(self.best.fitness)
        return op

    def communicate(self) -> None:
        if self.channel is None or self.cfg.islands < 2:
            return
        for payload in self.channel.receive_all(self.id):
            try:
                ind = deserialize_individual(self.g, payload, self.op_cfg)
            except ValueError as exc:
                log.warning("island %d dropped a message: %s", self.id, exc)
                continue
            receive_and_merge(self.pop, ind)
        self._note(self.best.fitness)
        best = self.best
        key = fingerprint(best)
        now = self.elapsed()
        if key != self._gossiped_key or now - self._last_gossip >= self.cfg.gossip_interval:
            self._gossiped_key = key
            self._last_gossip = now
            for dest, ind in gossip_step(self.id, self.cfg.islands, self.gossip, best, self.rng):
                self.channel.send(dest, serialize_individual(ind))

    def run(self) -> Individual:
        self.initialize()
        self.communicate()
        while not self.done():
            self.step()
            self.communicate()
        return self.best


@dataclass
class RunResult:
    best: Individual
    log: list[tuple[float, float]]
    island_logs: list[list[tuple[float, float]]]
    rounds: list[int]


def merge_logs(logs: list[list[tuple[float, float]]]) -> list[tuple[float, float]]:
    """Global-best events over all islands, strictly increasing in fitness."""
    events = sorted((t, q) for lg in logs for t, q in lg)
    out: list[tuple[float, float]] = []
    for t, q in events:
        if not out or q > out[-1][1]:
            out.append((t, q))
    return out


def _thread_main(island: Island, results: dict, channel: QueueChannel) -> None:
    try:
        island.run()
        results[island.id] = island
    except Exception:
        log.exception("island %d failed", island.id)
        channel.mark_dead(island.id)


def _process_main(g, island_id, cfg, op_cfg, channel, start_wall, out_q) -> None:
    # perf_counter is per-process; align on wall-clock start instead
    offset = time.time() - start_wall
    island = Island(g, island_id, cfg, op_cfg, channel, start=time.perf_counter() - offset)
    try:
        island.run()
        out_q.put((island_id, serialize_individual(island.best), island.log, island.rounds))
    except Exception:
        log.exception("island %d failed", island_id)
        out_q.put((island_id, None, [], 0))


def run(g: Graph, cfg: IslandConfig, op_cfg: OperatorConfig | None = None) -> RunResult:
    """Run all islands until the time (or round) budget is spent.

    The answer is the fittest individual over all surviving islands.
    """
    op_cfg = op_cfg or OperatorConfig()
    p = cfg.islands
    if p == 1:
        island = Island(g, 0, cfg, op_cfg)
        island.run()
        return RunResult(island.best, list(island.log), [island.log], [island.rounds])

    if cfg.backend == "process":
        return _run_processes(g, cfg, op_cfg)

    channel = QueueChannel(p)
    start = time.perf_counter()
    islands = [Island(g, i, cfg, op_cfg, channel, start) for i in range(p)]
    results: dict[int, Island] = {}
    threads = [threading.Thread(target=_thread_main, args=(isl, results, channel), daemon=True)
               for isl in islands]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if not results:
        raise RuntimeError("every island failed")
    alive = [results[i] for i in sorted(results)]
    best = max(alive, key=lambda isl: isl.best.fitness).best
    logs = [isl.log for isl in alive]
    return RunResult(best, merge_logs(logs), logs, [isl.rounds for isl in alive])


def _run_processes(g: Graph, cfg: IslandConfig, op_cfg: OperatorConfig) -> RunResult:
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context("spawn")
    channel = ProcessChannel(cfg.islands, ctx)
    out_q = ctx.Queue()
    start_wall = time.time()
    procs = [ctx.Process(target=_process_main,
                         args=(g, i, cfg, op_cfg, channel, start_wall, out_q), daemon=True)
             for i in range(cfg.islands)]
    for proc in procs:
        proc.start()
    collected = {}
    grace = cfg.time_limit + 60.0
    while len(collected) < cfg.islands:
        try:
            island_id, payload, lg, rounds = out_q.get(timeout=grace)
        except queue.Empty:
            break
        collected[island_id] = (payload, lg, rounds)
    for proc in procs:
        proc.join(timeout=5)
        if proc.is_alive():
            proc.terminate()
    alive = {i: v for i, v in collected.items() if v[0] is not None}
    if not alive:
        raise RuntimeError("every island failed")
    ids = sorted(alive)
    inds = [deserialize_individual(g, alive[i][0], op_cfg) for i in ids]
    best = max(inds, key=lambda ind: ind.fitness)
    logs = [alive[i][1] for i in ids]
    return RunResult(best, merge_logs(logs), logs, [alive[i][2] for i in ids])

