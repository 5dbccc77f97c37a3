"""Uniform simple graphs with given degrees: samplers and the vertex-by-vertex exploration.

Two samplers are provided. Rejection keeps the first simple configuration
model outcome, which is exactly uniform. The switching chain starts from a
Havel-Hakimi realization and applies degree-preserving double-edge swaps; its
proposal is symmetric, so the uniform law is stationary.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .cm import _pair_stubs, _trial_rngs
from .degseq import DegreeSequence, nu_value, r_value, subcritical_certificate
from .errors import AttemptsExhausted, NotGraphical, PreconditionError
from .graph import MultiGraph, is_simple

REJECTION_FLOOR = 1e-6
CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# Havel-Hakimi
# ---------------------------------------------------------------------------
def havel_hakimi(d: DegreeSequence) -> MultiGraph:
    """Greedy realization: the vertex of largest residual degree links to the next largest ones."""
    heap = [(-int(k), v) for v, k in enumerate(d.degrees)]
    heapq.heapify(heap)
    edges = []
    while heap:
        k, v = heapq.heappop(heap)
        k = -k
        if k == 0:
            continue
        if len(heap) < k:
            raise NotGraphical(f"vertex {v} needs {k} neighbours, {len(heap)} available")
        partners = [heapq.heappop(heap) for _ in range(k)]
        for r, u in partners:
            if r == 0:
                raise NotGraphical("degree sequence is not graphical")
            edges.append((v, u))
        for r, u in partners:
            if r + 1 < 0:
                heapq.heappush(heap, (r + 1, u))
    return MultiGraph(d.n, np.array(edges, dtype=np.int64).reshape(-1, 2))


# ---------------------------------------------------------------------------
# switching chain
# ---------------------------------------------------------------------------
@numba.njit(cache=True)
def _has_edge(nbr, start, deg, x, y):
    if deg[x] > deg[y]:
        x, y = y, x
    for k in range(start[x], start[x] + deg[x]):
        if nbr[k] == y:
            return True
    return False


@numba.njit(cache=True)
def _replace(nbr, start, deg, x, old, new):
    for k in range(start[x], start[x] + deg[x]):
        if nbr[k] == old:
            nbr[k] = new
            return


@numba.njit(cache=True)
def _switch_kernel(eu, ev, nbr, start, deg, pick_i, pick_j, orient):
    accepted = 0
    for s in range(len(pick_i)):
        i = pick_i[s]
        j = pick_j[s]
        if i == j:
            continue
        a, b = eu[i], ev[i]
        if orient[s] & 1:
            a, b = b, a
        c, dd = eu[j], ev[j]
        if orient[s] & 2:
            c, dd = dd, c
        if a == c or b == dd:
            continue
        if _has_edge(nbr, start, deg, a, c) or _has_edge(nbr, start, deg, b, dd):
            continue
        _replace(nbr, start, deg, a, b, c)
        _replace(nbr, start, deg, b, a, dd)
        _replace(nbr, start, deg, c, dd, a)
        _replace(nbr, start, deg, dd, c, b)
        eu[i], ev[i] = a, c
        eu[j], ev[j] = b, dd
        accepted += 1
    return accepted


class SwitchChain:
    """Mutable state of the switching chain; ``run(k)`` proposes k moves."""

    def __init__(self, g: MultiGraph, rng: np.random.Generator):
        if not is_simple(g):
            raise ValueError("switching chain needs a simple start state")
        self.n = g.vertex_count
        self.rng = rng
        self.eu = g.edges[:, 0].copy()
        self.ev = g.edges[:, 1].copy()
        self.deg = np.bincount(g.edges.ravel(), minlength=self.n).astype(np.int64)
        self.start = np.concatenate(([0], np.cumsum(self.deg)[:-1])).astype(np.int64)
        ends = np.concatenate((self.eu, self.ev))
        other = np.concatenate((self.ev, self.eu))
        order = np.argsort(ends, kind="stable")
        self.nbr = other[order].astype(np.int64)
        self.accepted = 0

    @property
    def edge_count(self) -> int:
        return len(self.eu)

    def run(self, proposals: int) -> None:
        e = self.edge_count
        if e < 2:
            return
        left = proposals
        while left > 0:
            k = min(left, CHUNK)
            pi = self.rng.integers(e, size=k)
            pj = self.rng.integers(e, size=k)
            orient = self.rng.integers(4, size=k)
            self.accepted += _switch_kernel(self.eu, self.ev, self.nbr, self.start, self.deg, pi, pj, orient)
            left -= k

    def graph(self) -> MultiGraph:
        return MultiGraph(self.n, np.stack((self.eu, self.ev), axis=1))


def sample_um_switching(d: DegreeSequence, burn_in: int | None = None, seed=None) -> MultiGraph:
    """Switching-chain state after ``burn_in`` proposals (default 20 m)."""
    rng = np.random.default_rng(seed)
    chain = SwitchChain(havel_hakimi(d), rng)
    chain.run(20 * d.m if burn_in is None else burn_in)
    return chain.graph()


# ---------------------------------------------------------------------------
# rejection
# ---------------------------------------------------------------------------
def janson_estimate(d: DegreeSequence) -> float:
    nu = nu_value(d)
    return math.exp(-nu / 2 - nu * nu / 4)


def sample_um_rejection(d: DegreeSequence, max_attempts: int = 10_000, seed=None) -> MultiGraph:
    if janson_estimate(d) < REJECTION_FLOOR:
        raise PreconditionError(
            f"estimated acceptance {janson_estimate(d):.2e} below {REJECTION_FLOOR}; use the switching sampler"
        )
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        g = MultiGraph(d.n, _pair_stubs(d.degrees, rng))
        if is_simple(g):
            return g
    raise AttemptsExhausted(f"no simple graph in {max_attempts} attempts")


def sample_um(d: DegreeSequence, seed=None, method: str = "auto", burn_in: int | None = None) -> MultiGraph:
    """Dispatch to a sampler. ``auto`` uses rejection when acceptance is at least 1e-2."""
    if method == "auto":
        method = "rejection" if janson_estimate(d) >= 1e-2 else "switching"
    if method == "rejection":
        return sample_um_rejection(d, seed=seed)
    if method == "switching":
        return sample_um_switching(d, burn_in, seed)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# exact enumeration for tiny instances
# ---------------------------------------------------------------------------
def enumerate_simple_graphs(degrees) -> list[frozenset]:
    """All simple graphs on range(len(degrees)) with the given degrees, as edge sets."""
    degrees = [int(x) for x in degrees]
    n = len(degrees)
    if n > 10:
        raise ValueError("enumeration limited to n <= 10")
    out: list[frozenset] = []

    def rec(v, residual, chosen):
        while v < n and residual[v] == 0:
            v += 1
        if v == n:
            out.append(frozenset(chosen))
            return
        cands = [u for u in range(v + 1, n) if residual[u] > 0]
        for combo in itertools.combinations(cands, residual[v]):
            res = residual.copy()
            res[v] = 0
            for u in combo:
                res[u] -= 1
            rec(v + 1, res, chosen + [(v, u) for u in combo])

    rec(0, degrees, [])
    return out


def _apply_switch(edges: frozenset, ab, cd):
    a, b = ab
    c, dd = cd
    if a == c or b == dd:
        return edges
    ac, bd = (min(a, c), max(a, c)), (min(b, dd), max(b, dd))
    if ac in edges or bd in edges:
        return edges
    return (edges - {(min(a, b), max(a, b)), (min(c, dd), max(c, dd))}) | {ac, bd}


def switch_transition_matrix(states: list[frozenset]) -> np.ndarray:
    """Exact one-proposal transition matrix of the switching chain over ``states``."""
    index = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        edges = sorted(s)
        e = len(edges)
        if e < 2:
            P[i, i] = 1.0
            continue
        w = 1.0 / (e * e * 4)
        for x, y in itertools.product(range(e), repeat=2):
            for o in range(4):
                if x == y:
                    P[i, i] += w
                    continue
                ab = edges[x][::-1] if o & 1 else edges[x]
                cd = edges[y][::-1] if o & 2 else edges[y]
                P[i, index[_apply_switch(s, ab, cd)]] += w
    return P


# ---------------------------------------------------------------------------
# vertex-by-vertex exploration
# ---------------------------------------------------------------------------
@dataclass
class UmTrace:
    """Series indexed by t = 0, 1, ...; ``eta[t]`` is eta_t (``eta[0]`` is unused, 0)."""

    v_t: list[int] = field(default_factory=list)
    x: list[int] = field(default_factory=list)
    m_t: list[int] = field(default_factory=list)
    l_t: list[int] = field(default_factory=list)
    eta: list[int] = field(default_factory=list)
    z: list[int] = field(default_factory=list)
    w: list[int] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    tau_x: int | None = None
    tau_z: int | None = None
    cap: int = 0
    T: float = 0.0
    m0: float = 0.0
    Q0: float = 0.0
    v0_degree_sum: int = 0
    n1: int = 0
    m: int = 0
    epochs: list[list[int]] = field(default_factory=list)

    def __len__(self):
        return len(self.x)

    def domination_violations(self) -> int:
        """Count of t <= tau_X with X_t > Z_t."""
        last = self.tau_x if self.tau_x is not None else len(self.x) - 1
        last = min(last, len(self.x) - 1)
        return sum(1 for t in range(last + 1) if self.x[t] > self.z[t])

    def lemma_items(self) -> dict[str, bool]:
        """Deterministic items (1), (4), (5) on the recorded prefix with t <= gamma T."""
        horizon = min(len(self.x), self.cap)
        return {
            "item1": self.v0_degree_sum <= 2 * abs(self.Q0) * self.T + 1e-9,
            "item4": all(2 * self.l_t[t] >= self.n1 for t in range(horizon)),
            "item5": all(3 * self.m_t[t] >= self.m for t in range(horizon)),
        }

    def rows(self):
        for t in range(len(self.x)):
            yield t, self.v_t[t], self.x[t], self.m_t[t], self.l_t[t], self.eta[t], self.z[t], self.events[t]


class _Explorer:
    def __init__(self, g: MultiGraph, d: DegreeSequence, rng: np.random.Generator):
        n = d.n
        deg = d.degrees
        if g.vertex_count != n or not np.array_equal(g.degrees(), deg):
            raise ValueError("graph degrees do not match the degree sequence")
        self.deg = deg
        self.rng = rng
        # adjacency lists in a uniformly random order per vertex
        ends = np.concatenate((g.edges[:, 0], g.edges[:, 1]))
        other = np.concatenate((g.edges[:, 1], g.edges[:, 0]))
        order = np.lexsort((rng.random(len(ends)), ends))
        self.nbr = other[order].tolist()
        self.start = np.concatenate(([0], np.cumsum(deg)[:-1])).tolist()
        self.ptr = list(self.start)
        self.explored = np.zeros(n, dtype=bool)
        self.heap: list[int] = []
        self.size = 0
        self.M = int(deg.sum())
        self.L = int((deg == 1).sum())
        self.stubs = np.repeat(np.arange(n, dtype=np.int64), deg)

    def add(self, w: int) -> int:
        """Mark w explored and return |E(w, V_t)| computed before adding it."""
        back = 0
        for k in range(self.start[w], self.start[w] + int(self.deg[w])):
            if self.explored[self.nbr[k]]:
                back += 1
        self.explored[w] = True
        self.size += 1
        self.M -= int(self.deg[w])
        if self.deg[w] == 1:
            self.L -= 1
        heapq.heappush(self.heap, w)
        return back

    def next_boundary(self) -> int | None:
        """w_{t+1} through the smallest explored vertex that still has an outside edge."""
        while self.heap:
            v = self.heap[0]
            p, end = self.ptr[v], self.start[v] + int(self.deg[v])
            while p < end and self.explored[self.nbr[p]]:
                p += 1
            self.ptr[v] = p
            if p < end:
                return self.nbr[p]
            heapq.heappop(self.heap)
        return None

    def restart_vertex(self) -> int:
        """u outside V_t with probability d_u / M_t."""
        if self.M * 8 < len(self.stubs):
            self.stubs = self.stubs[~self.explored[self.stubs]]
        while True:
            u = int(self.stubs[self.rng.integers(len(self.stubs))])
            if not self.explored[u]:
                return u


def explore_um(
    g: MultiGraph,
    d: DegreeSequence,
    m0: float,
    Q0: float,
    v: int,
    seed=None,
    gamma: float = 80,
    run_to: str = "taus",
) -> UmTrace:
    """Explore ``g`` from V_0 = S + {v}, advancing Z alongside X.

    X is updated as the number of edges leaving the explored set, that is
    ``X + d_w - 2|E(w, V_t)|``. The run stops once both tau_X and tau_Z are
    known (or capped at ceil(gamma T) + 1). ``run_to="cap"`` always runs to
    the cap and ``run_to="all"`` continues until V_t = [n].
    """
    if run_to not in ("taus", "cap", "all"):
        raise ValueError("run_to must be 'taus', 'cap' or 'all'")
    cert = subcritical_certificate(d, m0, Q0)
    if not cert.valid:
        raise PreconditionError(f"no valid ({m0}, {Q0}) certificate for this sequence")
    if not 0 <= v < d.n:
        raise ValueError("start vertex out of range")
    rng = np.random.default_rng(seed)
    ex = _Explorer(g, d, rng)
    T = cert.T
    cap = math.ceil(gamma * T) + 1
    tr = UmTrace(cap=cap, T=T, m0=float(m0), Q0=float(Q0), n1=d.n1, m=d.m)
    s_vertices = list(range(d.n - cert.set_size, d.n))
    v0 = sorted(set(s_vertices) | {v})
    x = 0
    for u in v0:
        back = ex.add(u)
        x += int(d.degrees[u]) - 2 * back
    tr.v0_degree_sum = int(d.degrees[v0].sum())
    z = 2 * abs(Q0) * T
    epoch = list(v0)
    _record(tr, ex, x, 0, z, -1, "start")
    if x == 0:
        tr.tau_x = 0
    if z <= 0:
        tr.tau_z = 0
    t = 0
    while ex.size < d.n:
        if run_to == "cap" and t >= cap:
            break
        if run_to == "taus" and (tr.tau_x is not None or t >= cap) and (tr.tau_z is not None or t >= cap):
            break
        if x == 0:
            tr.epochs.append(epoch)
            epoch = []
            w = ex.restart_vertex()
            event = "restart"
        else:
            w = ex.next_boundary()
            event = "boundary"
        back = ex.add(w)
        epoch.append(w)
        x += int(d.degrees[w]) - 2 * back
        eta = int(d.degrees[w]) - 2
        z += eta
        t += 1
        _record(tr, ex, x, eta, z, w, event)
        if tr.tau_x is None and x == 0:
            tr.tau_x = t
        if tr.tau_z is None and z <= 0:
            tr.tau_z = t
    # inf{...} ^ cap; None only if the graph ran out first
    tr.tau_x = _capped(tr.tau_x, cap, len(tr.x))
    tr.tau_z = _capped(tr.tau_z, cap, len(tr.z))
    if ex.size == d.n:
        tr.epochs.append(epoch)
    return tr


def _capped(tau, cap, length):
    if tau is not None:
        return min(tau, cap)
    return cap if length > cap else None


def _record(tr: UmTrace, ex: _Explorer, x, eta, z, w, event) -> None:
    tr.v_t.append(ex.size)
    tr.x.append(x)
    tr.m_t.append(ex.M)
    tr.l_t.append(ex.L)
    tr.eta.append(eta)
    tr.z.append(z)
    tr.w.append(w)
    tr.events.append(event)


# ---------------------------------------------------------------------------
# diagnostics over many samples
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MomentReport:
    times: np.ndarray
    mean: np.ndarray
    mean_se: np.ndarray
    second: np.ndarray
    second_se: np.ndarray
    mean_bound: float
    second_bound: float
    mean_violations: int
    second_violations: int
    degree1_ratio: float
    degree1_steps: int

    @property
    def degree1_ok(self) -> bool:
        return 0.9 <= self.degree1_ratio <= 1.1


def increment_moment_check(
    d: DegreeSequence, m0: float, Q0: float, trials: int, seed=None, n_times: int = 20, method: str = "auto"
) -> MomentReport:
    """Empirical mean and second moment of eta_{t+1} at ``n_times`` fixed t <= T.

    Each trial uses a fresh uniform graph and a uniform start vertex. A
    violation is a time where the estimate exceeds its bound by more than
    3 standard errors. The degree-1 ratio compares the number of steps that
    reach a degree-1 vertex with the sum of L_t / M_t over boundary steps.
    """
    cert = subcritical_certificate(d, m0, Q0)
    if not cert.valid:
        raise PreconditionError("invalid certificate")
    T = cert.T
    last = max(1, min(math.floor(T), 10 * d.n))
    times = np.unique(np.linspace(0, last - 1, n_times).astype(np.int64))
    samples = np.full((trials, len(times)), np.nan)
    hits = 0.0
    expected = 0.0
    steps = 0
    for i, rng in enumerate(_trial_rngs(seed, trials)):
        g = sample_um(d, seed=rng, method=method)
        v = int(rng.integers(d.n))
        tr = explore_um(g, d, m0, Q0, v, seed=rng, gamma=max(1.0, (last + 1) / T))
        for j, t in enumerate(times):
            if t + 1 < len(tr.eta):
                samples[i, j] = tr.eta[t + 1]
        for t in range(min(len(tr.x) - 1, last)):
            if tr.x[t] > 0 and tr.m_t[t] > 0:
                expected += tr.l_t[t] / tr.m_t[t]
                hits += tr.events[t + 1] == "boundary" and d.degrees[tr.w[t + 1]] == 1
                steps += 1
    mean = np.nanmean(samples, axis=0)
    sq = samples**2
    second = np.nanmean(sq, axis=0)
    cnt = np.sum(~np.isnan(samples), axis=0)
    mean_se = np.nanstd(samples, axis=0, ddof=1) / np.sqrt(np.maximum(cnt, 1))
    second_se = np.nanstd(sq, axis=0, ddof=1) / np.sqrt(np.maximum(cnt, 1))
    mean_bound = Q0 / 2
    second_bound = 4 * r_value(d)
    return MomentReport(
        times=times,
        mean=mean,
        mean_se=mean_se,
        second=second,
        second_se=second_se,
        mean_bound=mean_bound,
        second_bound=second_bound,
        mean_violations=int(np.sum(mean > mean_bound + 3 * np.nan_to_num(mean_se))),
        second_violations=int(np.sum(second > second_bound + 3 * np.nan_to_num(second_se))),
        degree1_ratio=hits / expected if expected > 0 else math.nan,
        degree1_steps=steps,
    )


@dataclass(frozen=True)
class TauZTail:
    fraction_exceeding: float
    one_over_lambda: float
    per_gamma: dict
    scaled: float
    trials: int


def tau_z_tail(
    d: DegreeSequence,
    m0: float,
    Q0: float,
    trials: int,
    seed=None,
    gammas=(20, 40, 80),
    method: str = "auto",
) -> TauZTail:
    """Empirical P(tau_Z > gamma T) with v uniform; events are nested across ``gammas``."""
    cert = subcritical_certificate(d, m0, Q0)
    if not cert.valid:
        raise PreconditionError("invalid certificate")
    if cert.lam < 10:
        raise PreconditionError(f"lambda = {cert.lam:.3g} < 10")
    top = max(gammas)
    taus = np.empty(trials)
    for i, rng in enumerate(_trial_rngs(seed, trials)):
        g = sample_um(d, seed=rng, method=method)
        v = int(rng.integers(d.n))
        tr = explore_um(g, d, m0, Q0, v, seed=rng, gamma=top)
        taus[i] = tr.tau_z if tr.tau_z is not None else math.inf
    T = cert.T
    per_gamma = {int(gm): float(np.mean(taus > gm * T)) for gm in sorted(gammas)}
    frac = per_gamma[int(top)]
    return TauZTail(frac, 1 / cert.lam, per_gamma, frac * cert.lam, trials)
