import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlab.degseq import DegreeSequence, eta_distribution, mix13_sequence, q_value, r_value
from graphlab.errors import InvalidMass, NoRoot, SupportTooLarge
from graphlab.latdist import (
    LatticeDistribution,
    beta_from,
    convolve_exact,
    convolve_pmf,
    d_param,
    h_d_param,
    h_d_param_grid,
    h_lower_bound,
    h_param,
    llt_bound_check,
    mgf_derivative,
    nearest_int_distance,
    t_bound,
    theta0_solve,
    tilt,
    w_of_atoms,
)

from .strategies import lattice_laws, walk_steps

RUN = LatticeDistribution.parse("-1:0.7,1:0.3")


def test_parse_and_literal():
    x = LatticeDistribution.parse("3:1/4, -1:3/4")
    assert x.values.tolist() == [-1, 3] and x.step == 4 and x.offset == 3
    assert LatticeDistribution.parse(x.to_literal()) == x
    with pytest.raises(InvalidMass):
        LatticeDistribution.parse("0:0.5,1:0.4")


def test_mgf_examples():
    assert mgf_derivative(RUN, 1, 0) == pytest.approx(-0.4, abs=1e-15)
    assert mgf_derivative(RUN, 2, 0) == pytest.approx(1.0, abs=1e-15)
    zero = LatticeDistribution([0], [1.0])
    assert mgf_derivative(zero, 3, 0.7) == 0


def test_theta0_examples():
    sol = theta0_solve(RUN)
    assert sol.theta0 == pytest.approx(0.5 * math.log(7 / 3), abs=1e-12)
    assert sol.phi_at == pytest.approx(2 * math.sqrt(0.21), abs=1e-12)
    assert abs(mgf_derivative(RUN, 1, sol.theta0)) <= 1e-10
    sol = theta0_solve(LatticeDistribution.parse("-1:0.8,1:0.2"))
    assert sol.theta0 == pytest.approx(math.log(2), abs=1e-12)
    with pytest.raises(NoRoot):
        theta0_solve(LatticeDistribution.parse("-1:0.5,1:0.5"))
    with pytest.raises(NoRoot):
        theta0_solve(LatticeDistribution.parse("-1:0.5,0:0.5"))


def test_t_bound_example():
    d = DegreeSequence.from_counts({1: 875_000, 3: 125_000})
    x = eta_distribution(d)
    assert x.pmf(-1) == pytest.approx(0.7)
    t = t_bound(x, d)
    assert t == pytest.approx(128.3, abs=0.05)
    d2 = DegreeSequence.from_counts({1: 1_750_000, 3: 250_000})
    rate = -math.log(theta0_solve(x).phi_at)
    assert t_bound(x, d2) - t == pytest.approx(math.log(2) / rate, rel=1e-9)


def test_t_bound_closed_form_small_q():
    # |Q| <= 0.05 at large n: T_n within 10% of (2R/Q^2) log(|Q|^3 n / R^2)
    d = mix13_sequence(10**7, -0.04)
    q, r = q_value(d), r_value(d)
    closed = 2 * r / q**2 * math.log(abs(q) ** 3 * d.n / r**2)
    ratio = t_bound(eta_distribution(d), d) / closed
    assert 0.9 <= ratio <= 1.1


def test_beta_examples():
    b = beta_from(RUN, 0, 1000)
    assert np.allclose(b.probs, RUN.probs)
    b = beta_from(RUN, 10, 1000)
    assert b.pmf(-1) == pytest.approx(680 / 980, abs=1e-12)
    assert b.pmf(1) == pytest.approx(300 / 980, abs=1e-12)
    assert b.probs.sum() == pytest.approx(1, abs=1e-15)
    with pytest.raises(InvalidMass):
        beta_from(RUN, 400, 1000)


@settings(max_examples=100, deadline=None)
@given(walk_steps(4), st.floats(0, 0.05))
def test_beta_cdf_domination(eta, frac):
    m = 1000.0
    try:
        b = beta_from(eta, frac * m, m)
    except InvalidMass:
        return
    for k in range(-1, 5):
        assert b.probs[b.values <= k].sum() <= eta.probs[eta.values <= k].sum() + 1e-12


def test_tilt_examples():
    assert np.allclose(tilt(RUN, 0).probs, RUN.probs)
    y = tilt(RUN, theta0_solve(RUN).theta0)
    assert np.allclose(y.probs, [0.5, 0.5], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(lattice_laws(), st.floats(-1, 1))
def test_tilt_mean_is_log_derivative(x, theta):
    y = tilt(x, theta)
    assert y.mean() == pytest.approx(mgf_derivative(x, 1, theta) / mgf_derivative(x, 0, theta), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(walk_steps(4))
def test_theta0_properties(x):
    q = x.mean()
    if q >= -1e-12 or x.values[-1] < 1:
        return
    sol = theta0_solve(x)
    assert abs(mgf_derivative(x, 1, sol.theta0)) <= 1e-10
    assert 0 < sol.phi_at < 1
    assert abs(tilt(x, sol.theta0).mean()) <= 1e-10
    # mean value theorem: |Q| = theta0 * phi''(xi) for some xi in [0, theta0]
    grid = np.linspace(0, sol.theta0, 2001)
    low = min(mgf_derivative(x, 2, t) for t in grid)
    assert sol.theta0 <= abs(q) / low * (1 + 1e-6)


def test_theta0_rounding_critical():
    with pytest.raises(NoRoot):
        theta0_solve(LatticeDistribution(np.array([-1, 1]), np.array([0.5, 0.5])))


def test_theta0_can_exceed_q_over_r():
    # degrees 1 x12, 2 x6, 3 x2: eta = -1:0.4, 0:0.4, 1:0.2 and e^{2 theta0} = 2
    d = DegreeSequence.from_counts({1: 12, 2: 6, 3: 2})
    x = eta_distribution(d)
    sol = theta0_solve(x)
    assert sol.theta0 == pytest.approx(math.log(2) / 2, abs=1e-12)
    assert abs(q_value(d)) / r_value(d) == pytest.approx(1 / 3)
    assert sol.theta0 > abs(q_value(d)) / r_value(d)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 7), min_size=2, max_size=40).filter(lambda d: sum(d) % 2 == 0))
def test_eta_moments_match_q_r(degrees):
    d = DegreeSequence(degrees)
    x = eta_distribution(d)
    assert mgf_derivative(x, 1, 0) == pytest.approx(q_value(d), abs=1e-12)
    assert mgf_derivative(x, 2, 0) == pytest.approx(r_value(d), abs=1e-12)


def test_convolution_examples():
    assert convolve_pmf(RUN, 1) == RUN
    s = convolve_pmf(LatticeDistribution.parse("-1:0.5,1:0.5"), 2)
    assert s.values.tolist() == [-2, 0, 2] and np.allclose(s.probs, [0.25, 0.5, 0.25])
    with pytest.raises(SupportTooLarge):
        convolve_pmf(RUN, 10, max_support=5)


@settings(max_examples=50, deadline=None)
@given(lattice_laws(max_atoms=4), st.integers(1, 12))
def test_convolution_matches_rationals(x, n):
    atoms = {int(v): Fraction(float(p)) for v, p in zip(x.values, x.probs)}
    exact = convolve_exact(atoms, n)
    s = convolve_pmf(x, n)
    assert abs(s.probs.sum() - 1) <= 1e-9
    for v, p in zip(s.values.tolist(), s.probs.tolist()):
        assert p == pytest.approx(float(exact[v]), abs=1e-13)
        assert (v - n * int(x.values[0])) % x.step == 0


def test_nearest_int_examples():
    assert nearest_int_distance(0.3) == pytest.approx(0.3)
    assert nearest_int_distance(1.5) == pytest.approx(0.5)
    assert nearest_int_distance(-0.7) == pytest.approx(0.3)


def test_h_param_examples():
    assert h_param(LatticeDistribution([4], [1.0]), 0.3) == 0
    pm = LatticeDistribution.parse("-1:0.5,1:0.5")
    assert h_param(pm, 0.5) == pytest.approx(0)
    assert h_param(pm, 0.25) == pytest.approx(0.125)


def test_h_d_examples():
    assert h_d_param(LatticeDistribution([2], [1.0]), 3).value == 0
    r = h_d_param(LatticeDistribution.parse("0:0.5,1:0.5"), 1)
    assert r.value == pytest.approx(0.03125) and r.d == pytest.approx(0.25)


@settings(max_examples=60, deadline=None)
@given(lattice_laws(), st.integers(1, 4))
def test_h_d_exact_below_grid(x, D):
    exact = h_d_param(x, D)
    grid = h_d_param_grid(x, D)
    assert exact.value <= grid.value + 1e-12
    assert grid.value - exact.value <= 1e-3 * max(grid.value, 1e-9) + 1e-8
    assert h_param(x, exact.d) == pytest.approx(exact.value, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(lattice_laws(lo=0, hi=5))
def test_h_d_scaling(x):
    # X on 2Z with D=2 has the same infimum as X with D=1
    y = LatticeDistribution(2 * x.values, x.probs)
    assert h_d_param(y, 2).value == pytest.approx(h_d_param(x, 1).value, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(lattice_laws(), st.floats(0.01, 0.5))
def test_d_param_against_grid(x, d):
    alphas = np.linspace(0, 1 / d, 4001)
    grid = min(float(np.dot(x.probs, nearest_int_distance((x.values - a) * d) ** 2)) for a in alphas)
    exact = d_param(x, d)
    assert exact <= grid + 1e-12
    assert grid - exact <= 1e-3


def test_w_examples():
    assert w_of_atoms([0, 1, 2]) == 2
    assert w_of_atoms([0, 1, 3]) == 3
    assert w_of_atoms([0, 5, 10]) == 2
    with pytest.raises(ValueError):
        w_of_atoms([0, 1])


@settings(max_examples=40, deadline=None)
@given(lattice_laws(min_atoms=3))
def test_h_lower_bound_holds(x):
    assert h_d_param(x, x.step).value >= h_lower_bound(x)


def test_llt_examples():
    pm = LatticeDistribution.parse("-1:0.5,1:0.5")
    r = llt_bound_check(pm, 100)
    assert r.holds and r.lhs_sup > 0
    with pytest.raises(ValueError):
        llt_bound_check(RUN, 10)
    # symmetric law: the 1/n term vanishes and the gap decays like n^{-3/2}
    ratio = llt_bound_check(pm, 1000).lhs_sup / llt_bound_check(pm, 2000).lhs_sup
    assert ratio == pytest.approx(2**1.5, rel=0.01)


@settings(max_examples=50, deadline=None)
@given(lattice_laws(), st.floats(-0.6, 0.6))
def test_d_h_sandwich(x, d):
    dv, hv = d_param(x, d), h_param(x, d)
    assert dv <= hv + 1e-12
    assert hv <= 4 * dv + 1e-12


@pytest.mark.parametrize("n,q", [(10**5, -0.2), (10**5, -0.4), (10**6, -0.2), (10**6, -0.4)])
def test_beta_threshold_close_to_eta_threshold(n, q):
    # shifting 2T/m mass off -1 barely moves the threshold away from criticality
    d = mix13_sequence(n, q)
    eta = eta_distribution(d)
    T = t_bound(eta, d)
    assert t_bound(beta_from(eta, T, d.m), d) / T == pytest.approx(1, abs=0.1)
