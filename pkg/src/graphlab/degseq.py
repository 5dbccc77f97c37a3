"""Degree sequences and the scalar functionals that govern subcriticality."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .latdist import LatticeDistribution


@dataclass(frozen=True)
class DegreeSequence:
    """Nondecreasing positive degrees with even sum.

    Vertex ``i`` (0-based) has degree ``degrees[i]``, so the largest degrees
    sit at the end.
    """

    degrees: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.sort(np.asarray(self.degrees, dtype=np.int64).ravel())
        if d.size == 0:
            raise ValueError("empty degree sequence")
        if d[0] < 1:
            raise ValueError("all degrees must be >= 1")
        if int(d.sum()) % 2:
            raise ValueError(f"degree sum {int(d.sum())} is odd")
        d.flags.writeable = False
        object.__setattr__(self, "degrees", d)

    def __repr__(self):
        return f"DegreeSequence(n={self.n}, m={self.m}, max={self.delta})"

    def __len__(self):
        return self.n

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "DegreeSequence":
        """Build from ``{degree: number of vertices}``."""
        return cls(np.repeat(np.array(list(counts), dtype=np.int64), list(counts.values())))

    @property
    def n(self) -> int:
        return len(self.degrees)

    @cached_property
    def m(self) -> int:
        return int(self.degrees.sum())

    @property
    def delta(self) -> int:
        return int(self.degrees[-1])

    @cached_property
    def counts(self) -> dict[int, int]:
        vals, cnt = np.unique(self.degrees, return_counts=True)
        return dict(zip(vals.tolist(), cnt.tolist()))

    @property
    def n1(self) -> int:
        return self.counts.get(1, 0)

    @property
    def n2(self) -> int:
        return self.counts.get(2, 0)

    @cached_property
    def power_sums(self) -> tuple[int, int, int, int]:
        """Exact (sum d, sum d^2, sum d^3, sum d^4) as Python ints."""
        out = [0, 0, 0, 0]
        for k, c in self.counts.items():
            for j in range(4):
                out[j] += c * k ** (j + 1)
        return tuple(out)

    def moment(self, k: int) -> float:
        """E[D^k] for a uniformly random vertex."""
        return float(sum(c * v**k for v, c in self.counts.items())) / self.n


class LatticeStep(NamedTuple):
    b: int
    h: int
    degenerate: bool


@dataclass(frozen=True)
class SubcritCertificate:
    star_set_size: int
    m_star: int
    set_size: int
    set_degree_sum: int
    residual_q: float
    m0: float
    Q0: float
    valid: bool
    m0_ge_3mstar: bool = True
    log_condition: bool = True
    T: float = math.nan
    lam: float = math.nan

    @property
    def side_conditions(self) -> bool:
        return self.m0_ge_3mstar and self.log_condition


def q_value(d: DegreeSequence) -> float:
    s1, s2, _, _ = d.power_sums
    return (s2 - 2 * s1) / s1


def r_value(d: DegreeSequence) -> float:
    s1, s2, s3, _ = d.power_sums
    return (s3 - 4 * s2 + 4 * s1) / s1


def nu_value(d: DegreeSequence) -> float:
    """sum d_i (d_i - 1) / m, the parameter of the simple-graph probability."""
    s1, s2, _, _ = d.power_sums
    return (s2 - s1) / s1


def lattice_step(d: DegreeSequence) -> LatticeStep:
    vals = sorted(d.counts)
    h = reduce(math.gcd, (v - vals[0] for v in vals), 0)
    if h == 0:
        return LatticeStep(vals[0], 0, True)
    return LatticeStep(vals[0] % h, h, False)


def size_biased_pmf(d: DegreeSequence) -> LatticeDistribution:
    """P(D_hat = k) = k n_k / m."""
    ks = np.array(sorted(d.counts), dtype=np.int64)
    probs = np.array([k * d.counts[k] for k in ks.tolist()], dtype=float) / d.m
    return LatticeDistribution(ks, probs)


def eta_distribution(d: DegreeSequence) -> LatticeDistribution:
    """Exploration increment law D_hat - 2."""
    return size_biased_pmf(d).shift(-2)


def _greedy_residuals(d: DegreeSequence) -> tuple[np.ndarray, np.ndarray]:
    """Residual sum of d(d-2) and removed degree total after dropping the k largest, k=0..n."""
    desc = d.degrees[::-1].astype(np.int64)
    total = int(np.dot(d.degrees, d.degrees - 2))
    removed_terms = np.concatenate(([0], np.cumsum(desc * (desc - 2))))
    removed_degree = np.concatenate(([0], np.cumsum(desc)))
    return total - removed_terms, removed_degree


def star_set(d: DegreeSequence) -> SubcritCertificate:
    """Smallest set of largest-degree vertices leaving sum d(d-2) <= 0."""
    residual, removed = _greedy_residuals(d)
    k = int(np.argmax(residual <= 0))
    return SubcritCertificate(
        star_set_size=k,
        m_star=int(removed[k]),
        set_size=k,
        set_degree_sum=int(removed[k]),
        residual_q=float(residual[k]) / d.m,
        m0=float(removed[k]),
        Q0=float(residual[k]) / d.m,
        valid=True,
    )


def certificate_T_lambda(d: DegreeSequence, m0: float, Q0: float) -> tuple[float, float]:
    """(T, lambda) = (m0/|Q0|, n Q0^2 / (Delta |Q0| + R))."""
    a = abs(Q0)
    T = m0 / a if a > 0 else math.inf
    lam = d.n * Q0**2 / (d.delta * a + r_value(d))
    return T, lam


def subcritical_certificate(d: DegreeSequence, m0: float, Q0: float) -> SubcritCertificate:
    """Check (m0, Q0)-subcriticality with S taken greedily from the largest degrees.

    The smallest such S is reported. The two side conditions
    ``m0 >= 3 m*`` and ``m0 |Q0| >= (Delta|Q0| + R) log(lambda)`` are
    evaluated but do not affect ``valid``.
    """
    if Q0 > 0:
        raise ValueError("Q0 must be <= 0")
    residual, removed = _greedy_residuals(d)
    star = star_set(d)
    ok = (removed <= m0) & (residual <= Q0 * d.m)
    valid = bool(ok.any())
    k = int(np.argmax(ok)) if valid else 0
    T, lam = certificate_T_lambda(d, m0, Q0)
    a = abs(Q0)
    spread = d.delta * a + r_value(d)
    log_cond = m0 * a >= spread * math.log(lam) if lam > 0 else True
    return SubcritCertificate(
        star_set_size=star.star_set_size,
        m_star=star.m_star,
        set_size=k,
        set_degree_sum=int(removed[k]),
        residual_q=float(residual[k]) / d.m,
        m0=float(m0),
        Q0=float(Q0),
        valid=valid,
        m0_ge_3mstar=m0 >= 3 * star.m_star,
        log_condition=bool(log_cond),
        T=T,
        lam=lam,
    )


def minimal_m0(d: DegreeSequence, Q0: float) -> float:
    """Smallest m0 giving a valid certificate at Q0 that also meets both side conditions."""
    if Q0 >= 0:
        raise ValueError("Q0 must be negative")
    residual, removed = _greedy_residuals(d)
    feasible = np.nonzero(residual <= Q0 * d.m)[0]
    if feasible.size == 0:
        raise ValueError(f"no greedy set reaches residual {Q0}")
    need_set = float(removed[feasible[0]])
    need_star = 3.0 * star_set(d).m_star
    a = abs(Q0)
    spread = d.delta * a + r_value(d)
    lam = d.n * Q0**2 / spread
    need_log = spread * math.log(lam) / a if lam > 1 else 0.0
    return max(need_set, need_star, need_log)


@dataclass(frozen=True)
class LowerBoundSequence:
    sequence: DegreeSequence
    ell: int
    p_star: float


def lower_bound_sequence(n: int, delta: int, eps: float) -> LowerBoundSequence:
    """ell = floor((1-eps) n / delta^2) vertices of degree delta, the rest degree 1.

    One extra degree-1 vertex is appended when the degree sum is odd.
    """
    if delta < 2:
        raise ValueError("delta must be >= 2")
    if delta * delta >= n:
        raise ValueError("need delta^2 < n")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    ell = math.floor((1 - eps) * n / delta**2)
    if ell < 1:
        raise ValueError(f"ell = {ell} < 1; increase n or decrease delta")
    ones = n - ell
    if (ones + ell * delta) % 2:
        ones += 1
    seq = DegreeSequence.from_counts({1: ones, delta: ell})
    return LowerBoundSequence(seq, ell, delta**2 / n)


def mix13_sequence(n: int, q_target: float) -> DegreeSequence:
    """Degrees in {1, 3} with Q as close to ``q_target`` (in (-1, 3/5)) as integrality allows."""
    frac1 = (3 - 3 * q_target) / (4 - 2 * q_target)
    n1 = int(round(frac1 * n))
    n3 = n - n1
    if n3 < 0 or n1 < 0:
        raise ValueError("q_target out of range for a {1,3} mix")
    if (n1 + 3 * n3) % 2:
        n1 += 1
    return DegreeSequence.from_counts({1: n1, 3: n3})


def heavy_tail_sequence(n: int, hubs: int = 50, exponent: float = 0.45, frac_deg1: float = 0.6) -> DegreeSequence:
    """``hubs`` vertices of degree floor(n^exponent) over a degree-1/degree-2 bulk."""
    big = math.floor(n**exponent)
    bulk = n - hubs
    n1 = int(round(frac_deg1 * bulk))
    if (n1 + hubs * big) % 2:
        n1 += 1
    n2 = bulk - n1
    return DegreeSequence.from_counts({1: n1, 2: n2, big: hubs})


@dataclass(frozen=True)
class AssumptionReport:
    q: float
    frac_not_0_2: float
    has_non_0_2: bool
    lattice: LatticeStep
    fourth_moment: float
    fourth_moment_bound: float
    fourth_moment_ok: bool
    notes: tuple[str, ...] = (
        "(i) convergence D_n -> D is sequence-level, not checkable at one n",
        "(ii) Q_n -> 0 is sequence-level; the finite-n value is reported",
        "(iv) h_n = h for all n is sequence-level; the finite-n step is reported",
    )


def check_assumptions(d: DegreeSequence) -> AssumptionReport:
    not_0_2 = sum(c for k, c in d.counts.items() if k != 2) / d.n
    m4 = d.moment(4)
    bound = math.sqrt(d.delta)
    return AssumptionReport(
        q=q_value(d),
        frac_not_0_2=not_0_2,
        has_non_0_2=not_0_2 > 0,
        lattice=lattice_step(d),
        fourth_moment=m4,
        fourth_moment_bound=bound,
        fourth_moment_ok=m4 <= bound,
    )


def read_degree_file(path) -> DegreeSequence:
    """Read one degree per line, or ``count degree`` pairs per line."""
    counts: dict[int, int] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            k = int(parts[0])
            counts[k] = counts.get(k, 0) + 1
        elif len(parts) == 2:
            c, k = int(parts[0]), int(parts[1])
            counts[k] = counts.get(k, 0) + c
        else:
            raise ValueError(f"cannot parse degree line {raw!r}")
    return DegreeSequence.from_counts(counts)


def write_degree_file(d: DegreeSequence, path) -> None:
    Path(path).write_text("".join(f"{c} {k}\n" for k, c in sorted(d.counts.items())))
