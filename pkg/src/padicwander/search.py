"""Digit-by-digit search for points and parameters with a prescribed orbit shape.

Each search node is a closed ball of candidates (points x, or parameters
lambda). The orbit of the ball's centre is computed numerically and a ball
containing every orbit of the node is carried along with it. A node is pruned
as soon as one of those balls misses the region its step must visit, and it
succeeds once the centre's own orbit satisfies every constraint.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .dynamics import FamilyInstance, q_conj_eval
from .padic import INF, Elem, digit_lift


@dataclass(frozen=True)
class Constraint:
    """``kind`` is 'sphere' (v(z) = val), 'near' (v(z-1) = val), 'hit' (v(z-1) >= val)
    or 'zero' (v(z) >= val)."""

    kind: str
    val: Fraction


def word_constraints(constants, blocks, goal, final: str = "hit") -> list[Constraint]:
    """Constraints on z_0 .. z_T for alternating blocks ``[(0, m0), (1, M0), ..., (0, mk)]``.

    Inside a block of n zeros, z sits on the sphere of radius rho_(zeros left);
    inside a block of n ones, |z - 1| = p**-(ones left). The final point must
    satisfy v(z_T - 1) >= goal, or v(z_T) >= goal when ``final`` is 'zero'.
    """
    out: list[Constraint] = []
    for sym, n in blocks:
        for j in range(n):
            if sym == 0:
                out.append(Constraint("sphere", constants.r(n - j)))
            else:
                out.append(Constraint("near", Fraction(n - j)))
    out.append(Constraint(final, Fraction(goal)))
    return out


def _lb(x: Elem):
    """Lower bound for v(x) that is exact for nonzero elements."""
    return x.prec if x.is_zero() else x.val


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        v += 1
        n //= p
    return v


class _BinomVals:
    def __init__(self, p: int):
        self.p = p
        self._cache: dict = {}

    def __call__(self, n: int, k: int) -> int:
        key = (n, k)
        if key not in self._cache:
            self._cache[key] = _vp(comb(n, k), self.p)
        return self._cache[key]


def _ball_meets(c: Elem, delta, con: Constraint) -> bool:
    """Does B[c, p^-delta] meet the region described by ``con``?"""
    if con.kind == "sphere":
        if not c.is_zero() and c.val < delta:
            return c.val == con.val
        return delta <= con.val
    if con.kind == "zero":
        return _lb(c) >= min(delta, con.val)
    d = c - 1
    if con.kind == "near":
        if not d.is_zero() and d.val < delta:
            return d.val == con.val
        return delta <= con.val
    # hit: distance from c to 1 at most max(radius, goal radius)
    return _lb(d) >= min(delta, con.val)


def _point_meets(z: Elem, con: Constraint):
    """True/False for the centre itself, None when undecidable."""
    if con.kind == "sphere":
        if z.is_zero():
            return False if z.prec > con.val else None
        return z.val == con.val
    if con.kind == "zero":
        if z.is_zero():
            return True if z.prec >= con.val else None
        return z.val >= con.val
    d = z - 1
    if con.kind == "near":
        if d.is_zero():
            return False if d.prec > con.val else None
        return d.val == con.val
    if d.is_zero():
        return True if d.prec >= con.val else None
    return d.val >= con.val


class OrbitBallTracker:
    """Bounds on the orbits of a ball of points under a ball of parameters."""

    def __init__(self, inst: FamilyInstance):
        self.inst = inst
        self.p = inst.p
        self.k = inst.constants
        self.binom = _BinomVals(self.p)
        Q = inst.Q
        self.q_terms = [] if inst.q_is_zero else [
            (i, _lb(a)) for i, a in enumerate(Q.coeffs) if i >= 1 and not (a.is_zero() and a.prec_units >= a.ctx.N)]
        self.q_tail = None if inst.q_is_zero else Q.tail

    def image_radius(self, inst: FamilyInstance, y0: Elem, d):
        """Lower bound for the exponent of diam (P + Q)(B[y0, p^-d]) around its centre."""
        if d == INF:
            return INF
        p = self.p
        vy = _lb(y0)
        best = INF
        for i in range(1, p + 2):
            t = Fraction(-1) + self.binom(p + 1, i) + (p + 1 - i) * vy
            if i <= p:
                t = min(t, Fraction(-1) + self.binom(p, i) + (p - i) * vy)
            best = min(best, t + i * d)
        for i, va in self.q_terms:
            for kk in range(1, i + 1):
                best = min(best, va + self.binom(i, kk) + (i - kk) * vy + kk * d)
        if self.q_tail is not None:
            best = min(best, self.q_tail.bound_on(min(vy, d)))
        return best

    def run(self, inst: FamilyInstance, c: Elem, delta, s, constraints, start: int = 0, trace=None):
        """Propagate (centre, radius) through the constraints.

        Returns ``(t, centre_ok)`` where ``t`` is the index of the first
        constraint missed by the ball (``None`` if all are met) and
        ``centre_ok`` tells whether the centre's orbit satisfies all of them.
        A ``trace`` list, if given, receives the (centre, radius exponent) pairs.
        """
        rho = self.k.rho_val
        p = self.p
        centre_ok = True
        # |h(w) - h(wc)| <= rho |w - wc|, and h is constant when Q = 0
        shift = rho + s if (s != INF and not inst.q_is_zero) else INF
        h1 = None if inst.q_is_zero else inst.h - 1
        for t, con in enumerate(constraints):
            delta = min(delta, c.prec)
            if trace is not None:
                trace.append((c, delta))
            if t >= start and not _ball_meets(c, delta, con):
                return t, False
            if centre_ok:
                ok = _point_meets(c, con)
                if not ok:
                    centre_ok = False
            if t == len(constraints) - 1:
                break
            y0 = c if h1 is None else c + h1
            dd = min(delta, shift)
            rad = self.image_radius(inst, y0, dd)
            if s != INF:
                rad = min(rad, shift)
                # (P_w - P_wc)(y) = ((w - wc)/p) y^p (1 - y)
                rad = min(rad, -1 + s + p * min(_lb(y0), dd) + min(_lb(1 - y0), dd))
            c = q_conj_eval(inst, c)
            delta = rad
        return None, centre_ok


@dataclass
class SearchStats:
    nodes: int = 0
    max_depth: int = 0


def search_ball(make_inst, start_center: Elem, start_units: int, constraints, vary: str,
                fixed: Elem, max_nodes: int = 200000, stats: SearchStats | None = None,
                digits_first_level=None):
    """Depth-first search over the closed ball B[start_center, |pi|^start_units].

    ``vary`` is 'x' (the point varies, the parameter is ``fixed``) or
    'lambda' (the parameter varies, the point is ``fixed``). Returns the first
    centre whose orbit satisfies every constraint, or None.
    """
    ctx = start_center.ctx
    stats = stats or SearchStats()
    F = ctx.residue_field
    tracker = None
    e = ctx.e
    stack = [(start_center, start_units)]
    if digits_first_level is not None:
        stack = [(start_center + digit_lift(ctx, d, start_units) if d else start_center, start_units + 1)
                 for d in reversed(digits_first_level)]
    while stack:
        c, k = stack.pop()
        stats.nodes += 1
        stats.max_depth = max(stats.max_depth, k)
        if stats.nodes > max_nodes or k > ctx.N:
            return None
        r = Fraction(k, e)
        if vary == "x":
            inst = make_inst(fixed)
            x, delta, s = c, r, INF
        else:
            inst = make_inst(c)
            x, delta, s = fixed, INF, r
        if tracker is None:
            tracker = OrbitBallTracker(inst)
        miss, centre_ok = tracker.run(inst, x, delta, s, constraints)
        if centre_ok:
            return c
        if miss is not None:
            continue
        for d in reversed(range(F.order)):
            stack.append((c + digit_lift(ctx, d, k) if d else c, k + 1))
    return None
