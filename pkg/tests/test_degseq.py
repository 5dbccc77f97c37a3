from fractions import Fraction

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlab.degseq import (
    DegreeSequence,
    check_assumptions,
    lattice_step,
    lower_bound_sequence,
    minimal_m0,
    mix13_sequence,
    q_value,
    r_value,
    read_degree_file,
    size_biased_pmf,
    star_set,
    subcritical_certificate,
    write_degree_file,
)

RUNNING = DegreeSequence([1, 1, 1, 1, 1, 1, 1, 3])

degree_lists = st.lists(st.integers(1, 12), min_size=1, max_size=60).filter(lambda d: sum(d) % 2 == 0)


def test_validation():
    with pytest.raises(ValueError):
        DegreeSequence([1, 2])
    with pytest.raises(ValueError):
        DegreeSequence([0, 2])
    d = DegreeSequence([3, 1, 2, 2])
    assert d.degrees.tolist() == [1, 2, 2, 3]
    assert (d.n, d.m, d.delta, d.n1, d.n2) == (4, 8, 3, 1, 2)


def test_q_r_examples():
    assert q_value(DegreeSequence([2] * 7)) == 0
    assert q_value(DegreeSequence([1] * 6)) == -1
    assert q_value(RUNNING) == pytest.approx(-0.4, abs=1e-15)
    assert r_value(DegreeSequence([2] * 7)) == 0
    assert r_value(DegreeSequence([1] * 6)) == 1
    assert r_value(RUNNING) == pytest.approx(1.0, abs=1e-15)


def test_lattice_step_examples():
    assert lattice_step(DegreeSequence([1, 3, 3, 1])) == (1, 2, False)
    assert lattice_step(DegreeSequence([1, 2, 3])) == (0, 1, False)
    assert lattice_step(DegreeSequence([3, 3])).degenerate


def test_size_biased_examples():
    x = size_biased_pmf(RUNNING)
    assert x.values.tolist() == [1, 3] and np.allclose(x.probs, [0.7, 0.3], atol=1e-15)
    x = size_biased_pmf(DegreeSequence([2, 2, 2]))
    assert x.values.tolist() == [2] and x.probs.tolist() == [1.0]
    x = size_biased_pmf(DegreeSequence([1, 3]))
    assert np.allclose(x.probs, [0.25, 0.75])


def test_star_set_examples():
    assert star_set(DegreeSequence([1] * 4)).m_star == 0
    # (1,1,1,3,5) has an odd sum; one more degree-1 vertex keeps the same answer
    c = star_set(DegreeSequence([1, 1, 1, 1, 3, 5]))
    assert (c.star_set_size, c.m_star) == (1, 5)
    assert star_set(DegreeSequence([2] * 5)).star_set_size == 0


def test_certificate_examples():
    assert subcritical_certificate(DegreeSequence([1] * 4), 0, -1).valid
    assert not subcritical_certificate(DegreeSequence([2] * 4), 0, -0.1).valid
    c = subcritical_certificate(DegreeSequence([1, 1, 1, 1, 3, 5]), 5, 0)
    assert c.valid and c.set_size == 1
    with pytest.raises(ValueError):
        subcritical_certificate(RUNNING, 1, 0.1)


def test_certificate_T_lambda():
    d = DegreeSequence([1] * 90 + [3] * 10)
    c = subcritical_certificate(d, 6, -0.5)
    q0 = -0.5
    assert c.T == 6 / 0.5
    assert c.lam == pytest.approx(d.n * q0**2 / (d.delta * 0.5 + r_value(d)))


def test_minimal_m0_is_admissible():
    d = mix13_sequence(20000, -0.2)
    m0 = minimal_m0(d, -0.2)
    c = subcritical_certificate(d, m0, -0.2)
    assert c.valid and c.side_conditions


def test_lower_bound_examples():
    lb = lower_bound_sequence(100, 5, 0.5)
    assert lb.ell == 2 and lb.sequence.n1 in (98, 99)
    assert lower_bound_sequence(10**6, 50, 0.5).ell == 200
    lb = lower_bound_sequence(1001, 6, 0.5)
    assert lb.sequence.m % 2 == 0
    with pytest.raises(ValueError):
        lower_bound_sequence(100, 9, 0.9)


def test_assumption_examples():
    assert not check_assumptions(DegreeSequence([2] * 4)).has_non_0_2
    rep = check_assumptions(RUNNING)
    assert rep.fourth_moment == 11 and not rep.fourth_moment_ok
    rep = check_assumptions(DegreeSequence([1] * 4))
    assert rep.has_non_0_2 and rep.fourth_moment_ok


@settings(max_examples=200, deadline=None)
@given(degree_lists)
def test_q_integer_identity(degrees):
    d = DegreeSequence(degrees)
    s1, s2, _, _ = d.power_sums
    assert s2 - 2 * s1 == sum(k * (k - 2) for k in degrees)
    assert q_value(d) == pytest.approx((s2 - 2 * s1) / s1, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(degree_lists)
def test_subcritical_max_degree(degrees):
    d = DegreeSequence(degrees)
    if q_value(d) <= 0:
        assert d.delta <= math.ceil(math.sqrt(2 * d.m)) + 2


@settings(max_examples=200, deadline=None)
@given(degree_lists)
def test_star_set_minimal(degrees):
    d = DegreeSequence(degrees)
    c = star_set(d)
    desc = sorted(degrees, reverse=True)
    resid = lambda k: sum(x * (x - 2) for x in desc[k:])
    assert resid(c.star_set_size) <= 0
    if c.star_set_size > 0:
        assert resid(c.star_set_size - 1) > 0
    if q_value(d) <= 0:
        assert c.star_set_size == 0 and c.m_star == 0


@settings(max_examples=100, deadline=None)
@given(degree_lists)
def test_size_biased_exact_mean(degrees):
    d = DegreeSequence(degrees)
    x = size_biased_pmf(d)
    assert abs(x.probs.sum() - 1) <= 1e-12
    exact = sum(Fraction(k * k * c, d.m) for k, c in d.counts.items())
    assert exact == Fraction(d.power_sums[1], d.m)
    assert x.mean() == pytest.approx(float(exact), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.45, 0.95), st.integers(20, 60), st.integers(100, 400))
def test_lower_bound_functionals(eps, delta, ell_target):
    n = int(ell_target * delta**2 / (1 - eps)) + delta**2
    lb = lower_bound_sequence(n, delta, eps)
    d = lb.sequence
    assert -eps - 0.05 <= q_value(d) <= -eps + 0.05
    # R is close to 1 + (1-eps)(delta-2)^2/delta, which is ~ (1-eps) delta only for large delta
    assert 0.9 <= r_value(d) / (1 + (1 - eps) * (delta - 2) ** 2 / delta) <= 1.1


def test_degree_file_formats(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1\n1\n3\n1\n# comment\n1\n1\n1\n1\n")
    assert read_degree_file(p).counts == RUNNING.counts
    p2 = tmp_path / "b.txt"
    write_degree_file(RUNNING, p2)
    assert p2.read_text() == "7 1\n1 3\n"
    assert read_degree_file(p2).counts == RUNNING.counts
