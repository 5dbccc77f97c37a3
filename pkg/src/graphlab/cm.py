"""Configuration model: stub-matching sampler and the edge-by-edge exploration."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .degseq import DegreeSequence, nu_value
from .graph import MultiGraph, components, is_simple

START, NEW, BACK, RESTART = "start", "new", "back", "restart"


def _pair_stubs(degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    stubs = np.repeat(np.arange(len(degrees), dtype=np.int64), degrees)
    rng.shuffle(stubs)
    return stubs.reshape(-1, 2)


def sample_cm(d: DegreeSequence, seed=None) -> MultiGraph:
    """Uniform perfect matching of the m half-edges (shuffle and pair)."""
    rng = np.random.default_rng(seed)
    return MultiGraph(d.n, _pair_stubs(d.degrees, rng))


class SimpleProbability(NamedTuple):
    empirical: float
    square_sum_formula: float
    janson_asymptotic: float
    trials: int

    @property
    def stderr(self) -> float:
        p = self.empirical
        return math.sqrt(max(p * (1 - p), 1e-300) / self.trials)


def simple_probability(d: DegreeSequence, trials: int, seed=None) -> SimpleProbability:
    """Empirical P(CM simple) next to exp(-sum d^2/m) and exp(-nu/2 - nu^2/4)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hits = sum(is_simple(MultiGraph(d.n, _pair_stubs(d.degrees, rng))) for _ in range(trials))
    s1, s2, _, _ = d.power_sums
    nu = nu_value(d)
    return SimpleProbability(hits / trials, math.exp(-s2 / s1), math.exp(-nu / 2 - nu * nu / 4), trials)


@dataclass
class ExplorationTrace:
    """Time series of one exploration run. Index t = 0 is the start vertex."""

    x: list[int] = field(default_factory=list)
    m_t: list[int] = field(default_factory=list)
    q_t: list[float] = field(default_factory=list)
    r_t: list[float] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    added: list[int] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)
    tau_x: list[int] = field(default_factory=list)
    epochs: list[list[int]] = field(default_factory=list)
    vertex_count: int = 0

    def __len__(self):
        return len(self.x)

    def graph(self, stub_owner: np.ndarray) -> MultiGraph:
        """The multigraph realized by the matched half-edges."""
        pairs = np.array([p for p in self.pairs if p[0] >= 0], dtype=np.int64).reshape(-1, 2)
        return MultiGraph(self.vertex_count, stub_owner[pairs])

    def rows(self):
        for t in range(len(self.x)):
            yield t, self.x[t], self.m_t[t], self.q_t[t], self.r_t[t], self.events[t]


class CMExplorer:
    """State machine for the half-edge exploration of CM_n(d).

    Half-edges are numbered by (vertex, index within vertex), so "smallest
    unmatched half-edge" is the smallest stub id. While X_t > 0 the smallest
    unmatched stub e on the explored part is paired with a uniform unmatched
    stub f != e; when X_t = 0 a new vertex is drawn with probability
    proportional to its degree.
    """

    def __init__(self, d: DegreeSequence, start: int, seed=None):
        if not 0 <= start < d.n:
            raise ValueError("start vertex out of range")
        self.d = d
        self.rng = np.random.default_rng(seed)
        deg = d.degrees
        self.owner = np.repeat(np.arange(d.n, dtype=np.int64), deg)
        self.first_stub = np.concatenate(([0], np.cumsum(deg)[:-1]))
        # unmatched stubs live in pool[:size]; where[s] is s's position
        self.pool = np.arange(d.m, dtype=np.int64)
        self.where = np.arange(d.m, dtype=np.int64)
        self.size = d.m
        self.explored = np.zeros(d.n, dtype=bool)
        self.frontier: list[int] = []
        self.x = 0
        self.out_q_sum = int(np.dot(deg, deg - 2))
        self.out_r_sum = int(np.dot(deg, (deg - 2) ** 2))
        self.out_count = d.n
        self.trace = ExplorationTrace(vertex_count=d.n)
        self.epoch: list[int] = []
        self._add_vertex(start)
        self._record(START, start, (-1, -1))

    # -- bookkeeping -------------------------------------------------------
    def _remove_stub(self, s: int) -> None:
        i = self.where[s]
        last = self.pool[self.size - 1]
        self.pool[i] = last
        self.where[last] = i
        self.pool[self.size - 1] = s
        self.where[s] = self.size - 1
        self.size -= 1

    def _add_vertex(self, v: int) -> None:
        k = int(self.d.degrees[v])
        self.explored[v] = True
        self.out_q_sum -= k * (k - 2)
        self.out_r_sum -= k * (k - 2) ** 2
        self.out_count -= 1
        self.x += k
        first = int(self.first_stub[v])
        for s in range(first, first + k):
            heapq.heappush(self.frontier, s)
        self.epoch.append(v)

    def _is_unmatched(self, s: int) -> bool:
        return self.where[s] < self.size

    def _record(self, event: str, vertex: int, pair: tuple[int, int]) -> None:
        tr = self.trace
        mt = self.size
        tr.x.append(self.x)
        tr.m_t.append(mt)
        denom = mt - 1
        tr.q_t.append(self.out_q_sum / denom if denom > 0 else math.nan)
        tr.r_t.append(self.out_r_sum / denom if denom > 0 else math.nan)
        tr.events.append(event)
        tr.added.append(vertex)
        tr.pairs.append(pair)

    @property
    def t(self) -> int:
        return len(self.trace) - 1

    @property
    def finished(self) -> bool:
        return self.size == 0 and self.out_count == 0

    def smallest_frontier_stub(self) -> int:
        while self.frontier and not self._is_unmatched(self.frontier[0]):
            heapq.heappop(self.frontier)
        return self.frontier[0]

    # -- dynamics ----------------------------------------------------------
    def step(self) -> str:
        if self.x == 0:
            self._close_epoch()
            f = int(self.pool[self.rng.integers(self.size)])
            u = int(self.owner[f])
            self._add_vertex(u)
            self._record(RESTART, u, (-1, -1))
            return RESTART
        e = self.smallest_frontier_stub()
        self._remove_stub(e)
        f = int(self.pool[self.rng.integers(self.size)])
        self._remove_stub(f)
        u = int(self.owner[f])
        if self.explored[u]:
            self.x -= 2
            event, added = BACK, -1
        else:
            self._add_vertex(u)
            self.x -= 2
            event, added = NEW, u
        self._record(event, added, (e, f))
        if self.x == 0:
            self.trace.tau_x.append(self.t)
        return event

    def _close_epoch(self) -> None:
        if self.epoch:
            self.trace.epochs.append(self.epoch)
            self.epoch = []

    def run(self, max_steps: int | None = None) -> ExplorationTrace:
        steps = 0
        while not self.finished and (max_steps is None or steps < max_steps):
            self.step()
            steps += 1
        if self.finished:
            self._close_epoch()
        return self.trace

    # -- conditional law of the next increment -----------------------------
    def next_increment_moments(self) -> tuple[float, float]:
        """Exact E[eta_{t+1} | F_t] and E[eta_{t+1}^2 | F_t] for X_t > 0.

        Includes the back-edge term: the X_t - 1 other unmatched stubs on the
        explored part each give an increment of -2.
        """
        if self.x == 0:
            raise ValueError("increment law defined here only for X_t > 0")
        denom = self.size - 1
        back = self.x - 1
        mean = (self.out_q_sum - 2 * back) / denom
        second = (self.out_r_sum + 4 * back) / denom
        return mean, second

    def sample_next_increments(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw the next increment ``size`` times from the current state without advancing."""
        if self.x == 0:
            raise ValueError("X_t = 0")
        e = self.smallest_frontier_stub()
        pos_e = self.where[e]
        idx = rng.integers(self.size - 1, size=size)
        idx = idx + (idx >= pos_e)
        owners = self.owner[self.pool[idx]]
        deg = self.d.degrees[owners]
        return np.where(self.explored[owners], -2, deg - 2)

    def recompute_x(self, t: int) -> int:
        """X_t rebuilt from the recorded history alone."""
        tr = self.trace
        verts = [v for v in tr.added[: t + 1] if v >= 0]
        matched = 2 * sum(1 for p in tr.pairs[1 : t + 1] if p[0] >= 0)
        return int(self.d.degrees[verts].sum()) - matched


def explore_cm(d: DegreeSequence, start: int, seed=None) -> ExplorationTrace:
    """Run the exploration from ``start`` until every half-edge is matched.

    The loop continues past the point where all vertices are explored so the
    trace realizes the full matching and every component is swept.
    """
    return CMExplorer(d, start, seed).run()


@dataclass(frozen=True)
class L1Sample:
    l1: np.ndarray
    simple: np.ndarray

    def __len__(self):
        return len(self.l1)


def _trial_rngs(seed, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def l1_statistics(d: DegreeSequence, trials: int, seed=None) -> L1Sample:
    """Largest component size and simplicity flag of independent CM samples."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    l1 = np.empty(trials, dtype=np.int64)
    simple = np.empty(trials, dtype=bool)
    for i, rng in enumerate(_trial_rngs(seed, trials)):
        g = MultiGraph(d.n, _pair_stubs(d.degrees, rng))
        l1[i] = components(g).largest
        simple[i] = is_simple(g)
    return L1Sample(l1, simple)
