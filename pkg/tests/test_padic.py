import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from padicwander.padic import (
    INF, Context, NotAUnit, PrecisionLoss, RadiusNotRepresentable, UltraBall, digit_lift,
    from_rational, parse_digit_string, pi_power, random_elem, residue, to_digit_string,
)


def vp(n, p):
    """Brute-force p-adic valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vq(q, p):
    q = Fraction(q)
    return vp(q.numerator, p) - vp(q.denominator, p)


rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=200).filter(lambda q: q != 0)


@pytest.mark.parametrize("p", [2, 3, 5])
@given(a=rationals, b=rationals)
@settings(max_examples=60, deadline=None)
def test_field_ops_match_rationals(p, a, b):
    ctx = Context(p, N=30)
    x, y = from_rational(ctx, a), from_rational(ctx, b)
    assert (x + y).equals(from_rational(ctx, a + b))
    assert (x * y).equals(from_rational(ctx, a * b))
    assert (x / y).equals(from_rational(ctx, a / b))
    assert x.val == vq(a, p)


def test_integer_residues_mod_p_power():
    ctx = Context(5, N=8)
    rng = random.Random(1)
    for _ in range(200):
        a, b = rng.randrange(1, 5**8), rng.randrange(1, 5**8)
        z = from_rational(ctx, a) * from_rational(ctx, b)
        assert z.equals(from_rational(ctx, (a * b) % 5**8))


@pytest.mark.parametrize("e,f", [(2, 1), (3, 2), (4, 1), (1, 3)])
def test_uniformizer_power_is_p(e, f):
    ctx = Context(2, e=e, f=f, N=12 * e)
    pi = pi_power(ctx, 1)
    assert pi.val == Fraction(1, e)
    assert (pi ** e).equals(ctx(2))


def test_omega_generates_residue_field():
    ctx = Context(3, f=2, N=10)
    w = ctx.omega()
    F = ctx.residue_field
    # omega reduces to a root of the defining polynomial, so it is a unit
    assert w.val == 0
    assert residue(w) != 0
    assert F.order == 9


@pytest.mark.parametrize("p,e,f", [(2, 4, 1), (3, 2, 2), (5, 1, 1)])
def test_digit_string_roundtrip(p, e, f):
    ctx = Context(p, e=e, f=f, N=20 * e)
    rng = random.Random(p * e + f)
    for _ in range(30):
        x = random_elem(ctx, rng, -2, 5)
        s = to_digit_string(x)
        y = parse_digit_string(ctx, s)
        assert y.equals(x) and y.prec == x.prec and y.val == x.val


def test_precision_tracking():
    ctx = Context(3, N=10)
    x = from_rational(ctx, 9)  # known mod 3^10
    y = x / 9
    assert y.prec == 8
    z = from_rational(ctx, 3**12)
    assert z.is_zero() and z.val == INF


def test_inverse_of_nonunit_reading_zero():
    ctx = Context(2, N=5)
    with pytest.raises((PrecisionLoss, ZeroDivisionError, NotAUnit)):
        ctx.zero().inverse()


def test_radius_not_representable():
    ctx = Context(2, e=2, N=10)
    with pytest.raises(RadiusNotRepresentable):
        ctx.to_units(Fraction(1, 3))


def test_balls():
    ctx = Context(2, e=2, N=40)
    one = ctx.one()
    b = UltraBall(one, Fraction(1), True)
    assert b.contains(one + ctx(2))
    assert not b.contains(one + pi_power(ctx, 1))
    open_b = UltraBall(one, Fraction(1), False)
    assert not open_b.contains(one + ctx(2))
    small = UltraBall(one + ctx(4), Fraction(3), True)
    assert b.contains_ball(small) and b.intersects(small)
    far = UltraBall(ctx.zero(), Fraction(1), True)
    assert not b.intersects(far)


def test_digit_lift_residue():
    ctx = Context(2, f=2, N=10)
    for d in range(1, 4):
        assert residue(digit_lift(ctx, d)) == d


def test_inverse_keeps_digits_beyond_cap():
    # negative valuation: the unit part has more digits than the cap
    ctx = Context(2, N=30)
    q = from_rational(ctx, Fraction(1, 4)) / from_rational(ctx, Fraction(-1, 2))
    assert q.equals(from_rational(ctx, Fraction(-1, 2)))
    x = from_rational(ctx, Fraction(5, 2 ** 7))
    assert (x * x.inverse()).equals(ctx.one())
