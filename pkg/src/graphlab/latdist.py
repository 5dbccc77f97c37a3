"""Finite distributions supported on an integer lattice b + hZ.

Covers the moment generating function and its derivatives, the tilting root
theta0 and the component-size threshold built from it, the dominating step
law ``beta``, exponential tilting, exact n-fold convolution, and the
lattice-concentration parameters H(X, d), H_D(X), D(X, d) that control an
explicit local limit theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import InvalidMass, NoRoot, SupportTooLarge

MAX_SUPPORT = 10**7


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Probability mass function on finitely many integers.

    ``values`` are sorted and distinct, ``probs`` strictly positive.
    Zero-mass atoms passed to the constructor are dropped.
    """

    values: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64).ravel()
        p = np.asarray(self.probs, dtype=np.float64).ravel()
        if v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be non-empty and of equal length")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidMass("probabilities must be finite and nonnegative")
        keep = p > 0
        v, p = v[keep], p[keep]
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        if v.size == 0:
            raise InvalidMass("distribution has no mass")
        if np.any(np.diff(v) == 0):
            raise ValueError("duplicate atom values")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InvalidMass(f"probabilities sum to {p.sum()!r}, not 1")
        v.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        if not isinstance(other, LatticeDistribution):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.values.tobytes(), self.probs.tobytes()))

    def __repr__(self):
        atoms = ", ".join(f"{v}:{p:.6g}" for v, p in zip(self.values.tolist(), self.probs.tolist()))
        return f"LatticeDistribution({atoms})"

    @classmethod
    def from_pairs(cls, pairs) -> "LatticeDistribution":
        acc: dict[int, float] = {}
        for v, p in pairs:
            acc[int(v)] = acc.get(int(v), 0.0) + float(p)
        items = sorted(acc.items())
        return cls(np.array([v for v, _ in items]), np.array([p for _, p in items]))

    @classmethod
    def parse(cls, literal: str) -> "LatticeDistribution":
        """Parse ``"value:prob"`` pairs separated by commas or whitespace."""
        pairs = []
        for token in literal.replace(",", " ").split():
            v, p = token.split(":")
            pairs.append((int(v), float(Fraction(p))))
        return cls.from_pairs(pairs)

    def to_literal(self) -> str:
        return ",".join(f"{v}:{p!r}" for v, p in zip(self.values.tolist(), self.probs.tolist()))

    @cached_property
    def step(self) -> int:
        """Largest h with all atoms in one coset of hZ; 0 for a point mass."""
        diffs = (self.values - self.values[0]).tolist()
        return reduce(math.gcd, diffs, 0)

    @property
    def offset(self) -> int:
        h = self.step
        return int(self.values[0] % h) if h else int(self.values[0])

    @property
    def atom_count(self) -> int:
        return len(self.values)

    def pmf(self, value: int) -> float:
        i = np.searchsorted(self.values, value)
        if i < len(self.values) and self.values[i] == value:
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot(self.probs, (self.values - mu) ** 2))

    def abs_moment(self, k: int) -> float:
        return float(np.dot(self.probs, np.abs(self.values.astype(float)) ** k))

    def shift(self, k: int) -> "LatticeDistribution":
        return LatticeDistribution(self.values + k, self.probs)

    def reflect(self) -> "LatticeDistribution":
        return LatticeDistribution(-self.values[::-1], self.probs[::-1])

    def cf(self, t):
        """Characteristic function E[exp(itX)], vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        return np.exp(1j * np.multiply.outer(t, self.values)) @ self.probs

    def symmetrized(self) -> "LatticeDistribution":
        """Law of X - X' for an independent copy X'."""
        diffs = np.subtract.outer(self.values, self.values).ravel()
        weights = np.multiply.outer(self.probs, self.probs).ravel()
        uniq, inv = np.unique(diffs, return_inverse=True)
        return LatticeDistribution(uniq, np.bincount(inv, weights=weights))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.values, size=size, p=self.probs)


CRITICAL_TOL = 1e-12


class ThetaSolution(NamedTuple):
    theta0: float
    phi_at: float
    phi2_at: float
    t_value: float | None = None


def mgf_derivative(x: LatticeDistribution, k: int, theta: float) -> float:
    """k-th derivative of the moment generating function, E[X^k e^{theta X}]."""
    v = x.values.astype(float)
    return float(np.dot(x.probs, v**k * np.exp(theta * v)))


def theta0_solve(x: LatticeDistribution) -> ThetaSolution:
    """Root of phi'(theta) = 0 by bracketing bisection.

    phi' is strictly increasing when some atom is >= 1 (phi'' > 0), so the
    root is unique once bracketed.
    """
    # a mean within rounding of zero is critical, not subcritical
    if mgf_derivative(x, 1, 0.0) >= -CRITICAL_TOL:
        raise NoRoot("phi'(0) >= 0: input is critical or supercritical")
    if x.values[-1] < 1:
        raise NoRoot("no positive atom: phi' stays negative")
    hi = 1.0
    while mgf_derivative(x, 1, hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoRoot("failed to bracket the root of phi'")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mgf_derivative(x, 1, mid) < 0:
            lo = mid
        else:
            hi = mid
    theta = min((lo, hi), key=lambda t: abs(mgf_derivative(x, 1, t)))
    return ThetaSolution(theta, mgf_derivative(x, 0, theta), mgf_derivative(x, 2, theta))


def t_bound(x: LatticeDistribution, d) -> float:
    """Component-size threshold T_n for increment law ``x`` and degree sequence ``d``.

    ``T_n = log(L^{3/2} phi''(theta0)^{-1/2} E[D e^{theta0 D}] n) / L``
    with ``L = log(1/phi(theta0))``.
    """
    return theta_with_threshold(x, d).t_value


def theta_with_threshold(x: LatticeDistribution, d) -> ThetaSolution:
    sol = theta0_solve(x)
    rate = -math.log(sol.phi_at)
    degrees = np.asarray(d.degrees, dtype=float)
    tilted_mean = float(np.mean(degrees * np.exp(sol.theta0 * degrees)))
    inner = rate**1.5 / math.sqrt(sol.phi2_at) * tilted_mean * len(degrees)
    return sol._replace(t_value=math.log(inner) / rate)


def beta_from(eta: LatticeDistribution, T: float, m: float) -> LatticeDistribution:
    """Step law that moves 2T/(m - 2T) of mass from -1 up to the remaining atoms."""
    if not 2 * T < m:
        raise InvalidMass("need T < m/2")
    scale = m / (m - 2 * T)
    minus_one = scale * eta.pmf(-1) - 2 * T / (m - 2 * T)
    if minus_one < -1e-15:
        raise InvalidMass(f"mass at -1 would be {minus_one:.3g}; T too large for m*P(eta=-1)")
    rest = eta.values != -1
    values = np.concatenate(([-1], eta.values[rest]))
    probs = np.concatenate(([0.0], scale * eta.probs[rest]))
    # the -1 atom takes the complement so the total is 1 by construction
    probs[0] = max(1.0 - probs[1:].sum(), 0.0)
    return LatticeDistribution(values, probs)


def tilt(x: LatticeDistribution, theta: float) -> LatticeDistribution:
    logw = np.log(x.probs) + theta * x.values
    w = np.exp(logw - logw.max())
    return LatticeDistribution(x.values, w / w.sum())


class DenseLaw(NamedTuple):
    start: int
    step: int
    probs: np.ndarray

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self.probs))


def _dense(x: LatticeDistribution) -> DenseLaw:
    h = x.step or 1
    idx = (x.values - x.values[0]) // h
    dense = np.zeros(int(idx[-1]) + 1)
    dense[idx] = x.probs
    return DenseLaw(int(x.values[0]), h, dense)


def convolve_dense(x: LatticeDistribution, n: int, max_support: int = MAX_SUPPORT) -> DenseLaw:
    """n-fold convolution on the full lattice grid, zeros included."""
    if n < 1:
        raise ValueError("n must be positive")
    base = _dense(x)
    width = len(base.probs) - 1
    if n * width + 1 > max_support:
        raise SupportTooLarge(f"{n}-fold support has {n * width + 1} lattice points")
    out = np.ones(1)
    for _ in range(n):
        out = np.convolve(out, base.probs)
    return DenseLaw(n * base.start, base.step, out)


def convolve_pmf(x: LatticeDistribution, n: int, max_support: int = MAX_SUPPORT) -> LatticeDistribution:
    law = convolve_dense(x, n, max_support)
    return LatticeDistribution(law.values(), law.probs)


def convolve_exact(atoms: dict, n: int) -> dict:
    """Rational n-fold convolution; validates the float path on small inputs."""
    if len(atoms) > 32 or n > 64:
        raise SupportTooLarge("exact mode is limited to 32 atoms and n <= 64")
    atoms = {int(v): Fraction(p) for v, p in atoms.items()}
    out = {0: Fraction(1)}
    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for s, ps in out.items():
            for v, pv in atoms.items():
                nxt[s + v] = nxt.get(s + v, Fraction(0)) + ps * pv
        out = nxt
    return out


def nearest_int_distance(alpha):
    """Distance to the nearest integer, in [0, 1/2]."""
    alpha = np.asarray(alpha, dtype=float)
    out = np.abs(alpha - np.round(alpha))
    return float(out) if out.ndim == 0 else out


def _abs_weights(x: LatticeDistribution) -> tuple[np.ndarray, np.ndarray]:
    sym = x.symmetrized()
    y = np.abs(sym.values)
    uniq, inv = np.unique(y, return_inverse=True)
    w = np.bincount(inv, weights=sym.probs)
    keep = uniq > 0
    return uniq[keep].astype(float), w[keep]


def h_param(x: LatticeDistribution, d):
    """H(X, d) = E<X* d>^2 with X* the symmetrization; vectorized over ``d``."""
    y, w = _abs_weights(x)
    d_arr = np.asarray(d, dtype=float)
    if y.size == 0:
        return 0.0 if d_arr.ndim == 0 else np.zeros_like(d_arr)
    vals = nearest_int_distance(np.multiply.outer(d_arr, y)) ** 2 @ w
    return float(vals) if d_arr.ndim == 0 else vals


class HdResult(NamedTuple):
    value: float
    d: float


def _piecewise_min(y: np.ndarray, w: np.ndarray, lo: float, hi: float) -> HdResult:
    # f(d) = sum w <y d>^2 is a convex quadratic between consecutive points
    # where some y*d hits a half-integer, so the minimum is at a piece vertex
    # or a breakpoint.
    pts = [lo, hi]
    for yi in y:
        j0 = math.ceil(lo * yi - 0.5)
        j1 = math.floor(hi * yi - 0.5)
        if j1 >= j0:
            pts.extend(((np.arange(j0, j1 + 1) + 0.5) / yi).tolist())
    pts = np.unique(np.clip(pts, lo, hi))
    a, b = pts[:-1], pts[1:]
    cands = [pts]
    if len(a):
        mid = 0.5 * (a + b)
        k = np.round(np.multiply.outer(mid, y))
        quad = np.dot(w, y * y)
        lin = k @ (w * y)
        cands.append(np.clip(lin / quad, a, b))
    cand = np.concatenate(cands)
    vals = nearest_int_distance(np.multiply.outer(cand, y)) ** 2 @ w
    i = int(np.argmin(vals))
    return HdResult(float(vals[i]), float(cand[i]))


def h_d_param(x: LatticeDistribution, D: int) -> HdResult:
    """Infimum of H(X, d) over 1/(4D) <= d <= 1/(2D), with its minimizer."""
    if D < 1:
        raise ValueError("D must be a positive integer")
    lo, hi = 1.0 / (4 * D), 1.0 / (2 * D)
    y, w = _abs_weights(x)
    if y.size == 0:
        return HdResult(0.0, lo)
    return _piecewise_min(y, w, lo, hi)


def h_d_param_grid(x: LatticeDistribution, D: int, points: int = 10**4) -> HdResult:
    """Grid approximation of ``h_d_param``; an upper bound on the true infimum."""
    grid = np.linspace(1.0 / (4 * D), 1.0 / (2 * D), points)
    vals = np.atleast_1d(h_param(x, grid))
    i = int(np.argmin(vals))
    return HdResult(float(vals[i]), float(grid[i]))


def d_param(x: LatticeDistribution, d: float) -> float:
    """D(X, d) = inf over real alpha of E<(X - alpha) d>^2."""
    c = x.values.astype(float) * d
    p = x.probs
    # with beta = -alpha d the objective is 1-periodic in beta and a convex
    # quadratic between the points where some c_i + beta is a half-integer
    pts = np.unique(np.concatenate(([0.0, 1.0], np.mod(0.5 - c, 1.0))))
    a, b = pts[:-1], pts[1:]
    mid = 0.5 * (a + b)
    k = np.round(np.add.outer(mid, c))
    best = -(np.add.outer(np.zeros_like(mid), c) - k) @ p
    cand = np.concatenate((pts, np.clip(best, a, b)))
    vals = nearest_int_distance(np.add.outer(cand, c)) ** 2 @ p
    return float(vals.min())


def w_of_atoms(values) -> int:
    """max over distinct i, l, j of |x_i - x_l| / gcd(|x_i - x_l|, |x_j - x_l|)."""
    xs = sorted(set(int(v) for v in values))
    if len(xs) < 3:
        raise ValueError("need at least 3 distinct values")
    best = 0
    for l, xl in enumerate(xs):
        for i, xi in enumerate(xs):
            if i == l:
                continue
            a = abs(xi - xl)
            for j, xj in enumerate(xs):
                if j == i or j == l:
                    continue
                best = max(best, a // math.gcd(a, abs(xj - xl)))
    return best


def h_lower_bound(x: LatticeDistribution) -> float:
    """Explicit lower bound min_i P(X=x_i) / (16 k (w(x) h)^2) for H_h(X)."""
    k = x.atom_count
    return float(x.probs.min()) / (16 * k * (w_of_atoms(x.values) * x.step) ** 2)


class LltCheck(NamedTuple):
    lhs_sup: float
    rhs: float
    holds: bool
    rhs_integral_form: float
    sigma2: float
    gamma: float
    h: int
    h_h: float


def llt_bound_check(x: LatticeDistribution, n: int, max_support: int = MAX_SUPPORT) -> LltCheck:
    """Compare the exact local error of S_n with the explicit LLT bounds.

    ``rhs`` is ``32 h gamma / (sigma^4 n) + 6 gamma / (h sigma^2 n H_h)``;
    ``rhs_integral_form`` replaces the second term with
    ``(h / pi) * int_{sigma^2 / 4 gamma}^{pi / h} |phi(t)|^n dt``.
    """
    if abs(x.mean()) > 1e-10:
        raise ValueError(f"llt_bound_check needs a mean-zero law, got mean {x.mean():.3g}")
    h = x.step
    if h == 0:
        raise ValueError("point masses have no lattice step")
    sigma2 = x.variance()
    gamma = x.abs_moment(3)
    law = convolve_dense(x, n, max_support)
    grid = np.concatenate(([law.start - h], law.values(), [law.values()[-1] + h])).astype(float)
    probs = np.concatenate(([0.0], law.probs, [0.0]))
    gauss = h / math.sqrt(2 * math.pi * n * sigma2) * np.exp(-(grid**2) / (2 * n * sigma2))
    lhs = float(np.max(np.abs(probs - gauss)))
    h_h = h_d_param(x, h).value
    first = 32 * h * gamma / (sigma2**2 * n)
    rhs = first + 6 * gamma / (h * sigma2 * n * h_h) if h_h > 0 else math.inf
    lo, hi = sigma2 / (4 * gamma), math.pi / h
    integral = 0.0
    if hi > lo:
        integral, _ = integrate.quad(lambda t: abs(complex(x.cf(t))) ** n, lo, hi, limit=500)
    return LltCheck(lhs, rhs, lhs <= rhs, first + h / math.pi * integral, sigma2, gamma, h, h_h)
