import random
from fractions import Fraction

import pytest

from padicwander.dynamics import FamilyConstants, FamilyInstance, itinerary
from padicwander.padic import INF, Context, pi_power, random_elem
from padicwander.search import Constraint, OrbitBallTracker, search_ball, word_constraints
from padicwander.series import Series


def test_word_constraints_layout():
    k = FamilyConstants(2)
    cons = word_constraints(k, [(0, 2), (1, 2)], 3)
    assert cons == [Constraint("sphere", k.r(2)), Constraint("sphere", k.r(1)),
                    Constraint("near", Fraction(2)), Constraint("near", Fraction(1)),
                    Constraint("hit", Fraction(3))]
    assert word_constraints(k, [(0, 1)], 1, final="zero")[-1] == Constraint("zero", Fraction(1))


@pytest.mark.parametrize("Qc", [None, [4]])
def test_tracker_balls_contain_sampled_orbits(Qc):
    ctx = Context(2, e=16, N=16 * 14)
    Q = None if Qc is None else Series.from_rationals(ctx, Qc)
    k = FamilyConstants(2)
    rng = random.Random(11)
    cons = word_constraints(k, [(0, 4), (1, 2), (0, 2)], 1)
    x = pi_power(ctx, ctx.to_units(k.r(4)))
    for _ in range(6):
        lam = 1 + random_elem(ctx, rng, Fraction(1, 16), 2)
        inst = FamilyInstance(ctx, Q, lam)
        s = Fraction(rng.randint(20, 60), 16)
        trace = []
        OrbitBallTracker(inst).run(inst, x, INF, s, cons, trace=trace)
        for _ in range(10):
            w = lam + random_elem(ctx, rng, s, s + 3)
            orb = inst.with_lambda(w).orbit(x, len(trace) - 1)
            for (c, d), z in zip(trace, orb):
                diff = z - c
                assert diff.is_zero() or diff.val >= d


def test_search_finds_parameter_with_prescribed_orbit():
    ctx = Context(2, e=16, N=16 * 12)
    k = FamilyConstants(2)
    x = pi_power(ctx, ctx.to_units(k.r(4)))
    cons = word_constraints(k, [(0, 4)], 2)
    make = lambda l: FamilyInstance(ctx, None, l, check=False)
    lam = search_ball(make, ctx.one(), 1, cons, "lambda", x)
    assert lam is not None and (lam - 1).val > 0
    rec = itinerary(make(lam), x, 6)
    assert rec.word_str() == "000011"
    assert (make(lam).orbit(x, 4)[-1] - 1).val >= 2
