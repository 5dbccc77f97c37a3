"""Skip-free random walk W_t = s + beta_1 + ... + beta_t and its hitting time of 0.

Exact probabilities come from dynamic programs over lattice levels; they are
used to verify the tilting identity, the hitting-time (Spitzer) bound and the
explicit stopping-time bounds built from theta0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SupportTooLarge
from .latdist import MAX_SUPPORT, LatticeDistribution, convolve_dense, theta0_solve, tilt


@dataclass(frozen=True)
class WalkSpec:
    step: LatticeDistribution
    start: int

    def __post_init__(self):
        if self.step.values[0] != -1:
            raise ValueError("step law must have its smallest atom at -1")
        if self.start < 0:
            raise ValueError("start must be nonnegative")


class Censored(NamedTuple):
    cap: int


def simulate_stop(spec: WalkSpec, cap: int, seed=None):
    """First t with W_t = 0, or ``Censored(cap)`` if the walk survives ``cap`` steps."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if spec.start == 0:
        return 0
    rng = np.random.default_rng(seed)
    level, t = spec.start, 0
    chunk = max(16, min(cap, 4 * spec.start))
    while t < cap:
        steps = spec.step.sample(rng, size=min(chunk, cap - t))
        path = level + np.cumsum(steps)
        hit = np.flatnonzero(path <= 0)
        if hit.size:
            return t + int(hit[0]) + 1
        t += len(steps)
        level = int(path[-1])
    return Censored(cap)


def simulate_stops(spec: WalkSpec, cap: int, trials: int, seed=None) -> np.ndarray:
    """Vectorized ``simulate_stop``; censored trials are reported as -1."""
    rng = np.random.default_rng(seed)
    out = np.full(trials, -1, dtype=np.int64)
    if spec.start == 0:
        out[:] = 0
        return out
    level = np.full(trials, spec.start, dtype=np.int64)
    alive = np.ones(trials, dtype=bool)
    for t in range(1, cap + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        level[idx] += spec.step.sample(rng, size=idx.size)
        done = idx[level[idx] <= 0]
        out[done] = t
        alive[done] = False
    return out


def exact_hit_prob(spec: WalkSpec, t: int, max_support: int = MAX_SUPPORT) -> float:
    """P(W_t = 0) by exact convolution."""
    if t < 1:
        raise ValueError("t must be positive")
    law = convolve_dense(spec.step, t, max_support)
    k, r = divmod(-spec.start - law.start, law.step)
    if r or not 0 <= k < len(law.probs):
        return 0.0
    return float(law.probs[k])


def stop_distribution(spec: WalkSpec, tmax: int, max_support: int = MAX_SUPPORT) -> np.ndarray:
    """Array ``p`` with ``p[t] = P(tau_W = t)`` for t = 0..tmax.

    Levels above ``tmax`` can never reach 0 in time (steps are >= -1), so the
    level space is truncated there.
    """
    out = np.zeros(tmax + 1)
    if spec.start == 0:
        out[0] = 1.0
        return out
    top = tmax + 1
    if top * max(1, len(spec.step.values)) > max_support:
        raise SupportTooLarge(f"level space {top} too large")
    probs = {int(v): float(p) for v, p in zip(spec.step.values, spec.step.probs)}
    state = np.zeros(top + 1)
    if spec.start <= top:
        state[spec.start] = 1.0
    for t in range(1, tmax + 1):
        nxt = np.zeros_like(state)
        for v, p in probs.items():
            if v >= 0:
                nxt[v:] += p * state[: top + 1 - v]
            else:
                nxt[:-1] += p * state[1:]
        out[t] = nxt[0]
        nxt[0] = 0.0
        # levels that cannot come back down in the remaining steps are dropped
        nxt[tmax - t + 1 :] = 0.0
        state = nxt
    return out


def exact_stop_prob(spec: WalkSpec, t: int, max_support: int = MAX_SUPPORT) -> float:
    """P(tau_W = t): paths from ``start`` that stay positive before time t."""
    return float(stop_distribution(spec, t, max_support)[t])


def spitzer_check(spec: WalkSpec, t: int) -> bool:
    return exact_stop_prob(spec, t) <= spec.start / t * exact_hit_prob(spec, t) + 1e-12


def tilting_identity_check(spec: WalkSpec, theta: float, t: int, rtol: float = 1e-12) -> bool:
    """P(W_t = 0) == phi(theta)^t e^{theta s} P(W_{theta,t} = 0), both sides by DP."""
    lhs, rhs = tilting_identity_sides(spec, theta, t)
    return abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs)) or lhs == rhs == 0.0


def tilting_identity_sides(spec: WalkSpec, theta: float, t: int) -> tuple[float, float]:
    phi = float(np.dot(spec.step.probs, np.exp(theta * spec.step.values)))
    tilted = WalkSpec(tilt(spec.step, theta), spec.start)
    lhs = exact_hit_prob(spec, t)
    rhs = phi**t * math.exp(theta * spec.start) * exact_hit_prob(tilted, t)
    return lhs, rhs


def ub_up_bound(spec: WalkSpec, t: float) -> float:
    """2h s e^{theta0 s} phi''(theta0)^{-1/2} phi(theta0)^t / t^{3/2} for the step law."""
    sol = theta0_solve(spec.step)
    s = spec.start
    h = spec.step.step
    return 2 * h * s * math.exp(sol.theta0 * s) / math.sqrt(sol.phi2_at) * sol.phi_at**t / t**1.5


def tail_bound(spec: WalkSpec, t_beta: float, eps: float) -> float:
    """Geometric-sum bound on P(tau_W >= (1 + eps) T_beta)."""
    sol = theta0_solve(spec.step)
    s = spec.start
    phi = sol.phi_at
    return (
        2 * s * math.exp(sol.theta0 * s) / math.sqrt(sol.phi2_at)
        * phi ** ((1 + eps) * t_beta) / (t_beta**1.5 * (1 - phi))
    )


def tail_mass(spec: WalkSpec, t_from: int, tol: float = 1e-14, t_limit: int = 200_000) -> float:
    """P(t_from <= tau_W < infinity), summing exact stop probabilities.

    Summation continues until the tilted tail bound certifies the remainder
    below ``tol``; the walk must be subcritical (theta0 exists).
    """
    sol = theta0_solve(spec.step)
    s = spec.start
    h = spec.step.step
    const = 2 * h * s * math.exp(sol.theta0 * s) / math.sqrt(sol.phi2_at)
    tmax = max(t_from, 16)
    while True:
        remainder = const * sol.phi_at ** (tmax + 1) / ((tmax + 1) ** 1.5 * (1 - sol.phi_at))
        if remainder < tol or tmax >= t_limit:
            break
        tmax *= 2
    dist = stop_distribution(spec, tmax)
    return float(dist[t_from:].sum())
