import random
from fractions import Fraction

import pytest

from padicwander.dynamics import (
    FamilyConstants, FamilyInstance, NotAdmissible, filled_julia_member, itinerary,
    region_classify, verify_local_estimates,
)
from padicwander.padic import Context, from_rational, pi_power, random_elem
from padicwander.series import Series


def test_constants_p2():
    k = FamilyConstants(2)
    assert k.rho_val == 1 and k.S_val == 2
    assert [k.r(n) for n in (1, 4, 6, 8)] == [Fraction(1, 2), Fraction(15, 16), Fraction(63, 64), Fraction(255, 256)]


@pytest.mark.parametrize("p", [2, 3, 5])
def test_sphere_recursion(p):
    k = FamilyConstants(p)
    for n in range(1, 8):
        # p * rho_n^p = rho_(n-1) read in exponents, with rho_0 = 1
        assert k.r(n) == (1 + k.r(n - 1)) / p
    # S: p * S^(p-1) = rho  <=>  -1 + (p-1) S_val = rho_val
    assert -1 + (p - 1) * k.S_val == k.rho_val


def test_h_is_one_without_perturbation():
    ctx = Context(2, e=4, N=80)
    rng = random.Random(0)
    for _ in range(100):
        lam = 1 + random_elem(ctx, rng, Fraction(1, 4), 3)
        h = FamilyInstance(ctx, None, lam).h
        assert (h - 1).is_zero() and (h - 1).prec_units == ctx.N


def test_h_for_constant_perturbation():
    # P_1(z) + 4 = z, scaled by 2: z^3 + z^2 - 2z + 8 = 0, root near 1
    oracle = [x for x in range(1, 64, 2) if (x**3 + x**2 - 2 * x + 8) % 64 == 0]
    assert oracle == [41]
    ctx = Context(2, e=4, N=120)
    Q = Series.from_rationals(ctx, [4])
    h1 = FamilyInstance(ctx, Q, ctx.one()).h
    assert (h1 - 41).val >= 6
    rng = random.Random(1)
    for _ in range(30):
        lam = 1 + random_elem(ctx, rng, Fraction(1, 4), 3)
        assert (FamilyInstance(ctx, Q, lam).h - 1).val >= 3


def test_admission():
    ctx = Context(3, N=30)
    with pytest.raises(NotAdmissible):
        FamilyInstance(ctx, Series.from_rationals(ctx, [1, 0, Fraction(1, 9)]), ctx.one())
    with pytest.raises(NotAdmissible):
        FamilyInstance(ctx, None, ctx(2))
    FamilyInstance(ctx, Series.from_rationals(ctx, [3, 0, 27]), ctx.one())


def test_region_predictions_hold():
    ctx = Context(3, e=6, N=200)
    rng = random.Random(5)
    inst = FamilyInstance(ctx, Series.from_rationals(ctx, [9]), 1 + ctx(3))
    for _ in range(200):
        z = random_elem(ctx, rng, -1, 2)
        if rng.random() < 0.3:
            z = 1 + random_elem(ctx, rng, Fraction(1, 6), 2)
        pred = region_classify(inst, z)
        assert pred.check(inst(z)), (pred, z)


def test_itinerary_of_fixed_points_and_escape():
    ctx = Context(2, e=2, N=60)
    inst = FamilyInstance(ctx, None, ctx.one())
    assert itinerary(inst, ctx.one(), 5).word_str() == "11111"
    rec = itinerary(inst, ctx(4), 5)
    assert rec.word_str() == "00000" and rec.status == "FellToFixedBall"
    rec = itinerary(inst, from_rational(ctx, Fraction(1, 2)), 5)
    assert rec.status == "Escaped" and rec.step == 0
    assert filled_julia_member(inst, from_rational(ctx, Fraction(1, 2)), 5)[0] == "Escaped"
    assert filled_julia_member(inst, ctx.one(), 5) == ("InKUpToHorizon", None)


@pytest.mark.parametrize("p,e", [(2, 8), (3, 12)])
@pytest.mark.parametrize("with_q", [False, True])
def test_local_estimates(p, e, with_q):
    ctx = Context(p, e=e, N=40 * e)
    Q = Series.from_rationals(ctx, [p**2, 0, p**4]) if with_q else None
    reps = verify_local_estimates(ctx, Q, count=15, seed=2)
    for r in reps.values():
        assert r.violations == 0, r.to_dict()
