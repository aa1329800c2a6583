from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from padicwander.padic import Context, PrecisionLoss, from_rational
from padicwander.series import (
    DivergentOnBall, Series, Tail, derivative, evaluate, gauss_norm, gauss_norm_bound, recenter,
)

from test_padic import vq

coef = st.fractions(min_value=-50, max_value=50, max_denominator=30)
polys = st.lists(coef, min_size=1, max_size=6)


def horner(cs, x):
    acc = Fraction(0)
    for c in reversed(cs):
        acc = acc * x + c
    return acc


@given(cs=polys, x=coef)
@settings(max_examples=80, deadline=None)
def test_evaluate_matches_rational_horner(cs, x):
    ctx = Context(3, N=30)
    fn = Series.from_rationals(ctx, cs)
    assert evaluate(fn, from_rational(ctx, x)).equals(from_rational(ctx, horner(cs, x)))


@given(cs=polys, c=coef)
@settings(max_examples=60, deadline=None)
def test_recenter_matches_binomial_expansion(cs, c):
    ctx = Context(2, N=40)
    fn = Series.from_rationals(ctx, cs)
    b = recenter(fn, from_rational(ctx, c))
    want = [sum(Fraction(comb(i, j)) * cs[i] * c ** (i - j) for i in range(j, len(cs))) for j in range(len(cs))]
    for j, w in enumerate(want):
        got = b.coeffs[j] if j < len(b.coeffs) else ctx.zero()
        assert got.equals(from_rational(ctx, w))


def test_gauss_norm_brute_force():
    ctx = Context(2, e=2, N=60)
    cs = [Fraction(4), Fraction(1, 2), Fraction(3), Fraction(8)]
    fn = Series.from_rationals(ctx, cs)
    for r in [Fraction(-1), Fraction(0), Fraction(1, 2), Fraction(2)]:
        want = min(vq(c, 2) + i * r for i, c in enumerate(cs) if c)
        assert gauss_norm(fn, r) == want
        assert gauss_norm_bound(fn, r) == want


def test_gauss_norm_inexact_dominant_term():
    ctx = Context(2, N=4)
    fn = Series(ctx, [ctx.zero(1), from_rational(ctx, 4)])
    assert gauss_norm(Series(ctx, [ctx.zero(2), from_rational(ctx, 4)]), 0) == 2
    with pytest.raises(PrecisionLoss):
        gauss_norm(fn, 0)


def test_tail_caps_precision_and_divergence():
    ctx = Context(3, N=40)
    fn = Series.from_rationals(ctx, [1, 1], Tail(2, Fraction(1)))
    x = from_rational(ctx, 3)
    y = evaluate(fn, x)
    # tail terms a_i x^i have v >= 2*i >= 4
    assert y.prec == 4 and y.equals(from_rational(ctx, 4))
    with pytest.raises(DivergentOnBall):
        Tail(2, Fraction(-1)).bound_on(Fraction(1, 2))


def test_derivative():
    ctx = Context(5, N=20)
    fn = Series.from_rationals(ctx, [7, 0, 3, 1])
    d = derivative(fn)
    for i, w in enumerate([0, 6, 3]):
        assert d.coeffs[i].equals(from_rational(ctx, w))


def test_from_spec_and_algebra():
    ctx = Context(3, N=20)
    a = Series.from_spec(ctx, [[0, 1, 3], [2, 2, 1]])
    b = Series.from_rationals(ctx, [Fraction(1, 3), 0, 2])
    assert all(x.equals(y) for x, y in zip((a - b).coeffs, [ctx.zero()] * 3))
    c = a * Series.from_rationals(ctx, [0, 1])
    assert c.degree == 3
