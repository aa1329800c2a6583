"""Root finding and image balls: Hensel, Newton polygons, sphere solving."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .padic import (
    INF,
    Elem,
    PadicError,
    PrecisionLoss,
    RadiusNotRepresentable,
    UltraBall,
    digit_lift,
)
from .series import Series, derivative, evaluate, recenter


class HenselPreconditionFailed(PadicError):
    """The starting point does not satisfy v(f(z0)) > 2 v(f'(z0))."""


class NoRootAtRadius(PadicError):
    """The Newton polygon predicts no root on the requested sphere."""


class ResidueFieldTooSmall(PadicError):
    """Roots exist on the sphere over C_p, but none lie in the working field."""


# ----------------------------------------------------------------------------
# Hensel

@dataclass
class HenselStep:
    point: Elem
    residual_val: object
    deriv_val: object


def _is_integral(fn: Series) -> bool:
    ok = all(c.is_zero() or c.val >= 0 for c in fn.coeffs)
    return ok and (fn.tail is None or fn.tail.val_slope >= 0)


def hensel_iterates(fn: Series, z0: Elem, max_steps: int = 64) -> Iterator[HenselStep]:
    """Newton iterates from z0, each paired with v(f(z_n)) and v(f'(z_n))."""
    if not _is_integral(fn):
        raise HenselPreconditionFailed("coefficients must be integral")
    if not z0.is_zero() and z0.val < 0:
        raise HenselPreconditionFailed("starting point must be integral")
    df = derivative(fn)
    z = z0.lift()
    fz, dz = evaluate(fn, z), evaluate(df, z)
    if dz.is_zero():
        raise HenselPreconditionFailed("f'(z0) reads as 0")
    if not fz.is_zero() and not fz.val > 2 * dz.val:
        raise HenselPreconditionFailed(f"v(f(z0)) = {fz.val} is not > 2 v(f'(z0)) = {2 * dz.val}")
    for _ in range(max_steps):
        yield HenselStep(z, fz.val, dz.val)
        if fz.is_zero():
            return
        z_next = (z - fz / dz).lift()
        f_next = evaluate(fn, z_next)
        if not f_next.is_zero() and f_next.val <= fz.val:
            return  # precision floor reached
        z, fz, dz = z_next, f_next, evaluate(df, z_next)


def hensel_lift(fn: Series, z0: Elem) -> Elem:
    """The root w of fn with |w - z0| < |f'(z0)|, to working precision."""
    last = None
    for step in hensel_iterates(fn, z0):
        last = step
    df = derivative(fn)
    w = last.point
    d = evaluate(df, w)
    if last.residual_val == INF:
        return w
    # the true root sits within |f(w)/f'(w)| of w
    return w.with_prec(w.ctx.to_units(last.residual_val - d.val) if last.residual_val != INF else w.ctx.N)


# ----------------------------------------------------------------------------
# Newton polygons

@dataclass(frozen=True)
class NewtonPolygon:
    """Lower convex hull of the points (i, v(a_i)).

    ``segments`` lists (slope, length) left to right with strictly increasing
    slopes; a segment of slope s and length l accounts for l roots of
    valuation -s.
    """

    vertices: tuple
    segments: tuple

    def root_valuations(self) -> list[tuple[Fraction, int]]:
        return [(-s, n) for s, n in self.segments]


def _points(fn: Series) -> list[tuple[int, Fraction]]:
    pts = [(i, c.val) for i, c in enumerate(fn.coeffs) if not c.is_zero()]
    if not pts:
        raise PrecisionLoss("all coefficients read as 0")
    return pts


def _lower_hull(pts):
    hull: list = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point if it is on or above the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(fn: Series) -> NewtonPolygon:
    """Newton polygon of the listed coefficients of a polynomial."""
    if fn.tail is not None:
        raise ValueError("Newton polygons are computed for polynomials only")
    pts = _points(fn)
    hull = _lower_hull(pts)
    # coefficients reading as 0 must lie strictly above the hull
    for i, c in enumerate(fn.coeffs):
        if c.is_zero() and hull[0][0] <= i <= hull[-1][0]:
            for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
                if x1 <= i <= x2:
                    line = y1 + Fraction(y2 - y1, x2 - x1) * (i - x1)
                    if c.prec <= line:
                        raise PrecisionLoss(f"coefficient {i} is too imprecise for the polygon")
    segs = tuple((Fraction(y2 - y1) / (x2 - x1), x2 - x1) for (x1, y1), (x2, y2) in zip(hull, hull[1:]))
    return NewtonPolygon(tuple(hull), segs)


def _dominant_indices(fn: Series, r_v):
    """Smallest and largest i attaining min v(a_i) + i r_v, with the minimum."""
    r_v = Fraction(r_v)
    best = INF
    lo = hi = None
    loose = INF
    for i, c in enumerate(fn.coeffs):
        if c.is_zero():
            loose = min(loose, c.prec + i * r_v)
            continue
        t = c.val + i * r_v
        if t < best:
            best, lo, hi = t, i, i
        elif t == best:
            hi = i
    if fn.tail is not None:
        loose = min(loose, fn.tail.bound_on(r_v))
    if lo is None or loose <= best:
        raise PrecisionLoss("dominant term on the sphere is not determined at working precision")
    return lo, hi, best


def count_roots_on_sphere(fn: Series, r_v) -> int:
    """Roots (with multiplicity, over C_p) of fn on |z| = p**(-r_v)."""
    lo, hi, _ = _dominant_indices(fn, r_v)
    return hi - lo


def _roots_in_ball(g: Series, c: Elem, s_v) -> int | None:
    """Roots of g in B[c, p**(-s_v)] over C_p, or None when undecidable."""
    b = recenter(g, c)
    best = INF
    hi = None
    for i, bi in enumerate(b.coeffs):
        if bi.is_zero():
            continue
        t = bi.val + i * s_v
        if t <= best:
            best, hi = t, i
    loose = INF
    for i, bi in enumerate(b.coeffs):
        if bi.is_zero() and (hi is None or i > hi):
            loose = min(loose, bi.prec + i * s_v)
    if b.tail is not None:
        loose = min(loose, b.tail.bound_on(s_v))
    if hi is None or loose <= best:
        return None
    return hi


@dataclass
class SphereSolution:
    """Roots found in K together with the count predicted over C_p."""

    roots: list = field(default_factory=list)
    multiplicities: list = field(default_factory=list)
    polygon_count: int = 0

    @property
    def found_count(self) -> int:
        return sum(self.multiplicities)


def _newton_finish(g: Series, dg: Series, c: Elem, goal) -> Elem | None:
    """Newton iteration inside a ball holding a single root."""
    gc = evaluate(g, c)
    for _ in range(4 * c.ctx.N.bit_length() + 8):
        if gc.is_zero() or gc.val >= goal:
            return c
        d = evaluate(dg, c)
        if d.is_zero():
            return None
        nxt = (c - gc / d).lift()
        gn = evaluate(g, nxt)
        if not gn.is_zero() and gn.val <= gc.val:
            return None
        c, gc = nxt, gn
    return c if (gc.is_zero() or gc.val >= goal) else None


def solve_on_sphere_report(fn: Series, target: Elem, r_v, count_limit: int | None = None,
                           residual_goal=None) -> SphereSolution:
    """Search K for x with |x| = p**(-r_v) and fn(x) close to target.

    The sphere is split into residue balls; a ball is refined while its
    root count (from the recentred series) is positive, and a ball holding a
    single root is finished with Newton's method. ``residual_goal`` is the
    required v(fn(x) - target); by default the residual must read as 0.
    """
    ctx = fn.ctx
    g = fn - target
    total = count_roots_on_sphere(g, r_v)
    out = SphereSolution(polygon_count=total)
    if total == 0:
        return out
    k = ctx.to_units(Fraction(r_v))  # raises RadiusNotRepresentable
    goal = INF if residual_goal is None else Fraction(residual_goal)
    limit = total if count_limit is None else min(count_limit, total)
    dg = derivative(g)
    F = ctx.residue_field

    def residual_ok(x: Elem) -> bool:
        gx = evaluate(g, x)
        return gx.is_zero() or gx.val >= goal

    stack = [(digit_lift(ctx, d, k), k + 1) for d in reversed(range(1, F.order))]
    while stack and out.found_count < limit:
        c, s = stack.pop()
        n = _roots_in_ball(g, c, Fraction(s, ctx.e))
        if n == 0:
            continue
        if n == 1:
            x = _newton_finish(g, dg, c, goal)
            if x is not None:
                out.roots.append(x)
                out.multiplicities.append(1)
                continue
        if residual_ok(c):
            out.roots.append(c)
            out.multiplicities.append(n or 1)
            continue
        if s >= ctx.N:
            continue
        for d in reversed(range(F.order)):
            stack.append((c + digit_lift(ctx, d, s) if d else c, s + 1))
    return out


def solve_on_sphere(fn: Series, target: Elem, r_v, count_limit: int | None = None, residual_goal=None) -> list:
    """Roots in K of fn(x) = target with |x| = p**(-r_v).

    Raises :class:`NoRootAtRadius` when the Newton polygon rules roots out and
    :class:`ResidueFieldTooSmall` when roots exist only outside K.
    """
    try:
        rep = solve_on_sphere_report(fn, target, r_v, count_limit, residual_goal)
    except RadiusNotRepresentable as exc:
        raise ResidueFieldTooSmall(f"sphere radius p^-{r_v} has no points in K: {exc}") from exc
    if rep.polygon_count == 0:
        raise NoRootAtRadius(f"no roots of valuation {r_v}")
    if not rep.roots:
        raise ResidueFieldTooSmall(
            f"{rep.polygon_count} root(s) of valuation {r_v} exist, none in the working field")
    return rep.roots


# ----------------------------------------------------------------------------
# images of balls

def image_radius_val(fn: Series, center: Elem, r_v) -> object:
    """Exponent of max_{i>=1} |b_i| r**i for fn recentred at ``center``."""
    if r_v == INF:
        return INF
    b = recenter(fn, center)
    best = INF
    for i, bi in enumerate(b.coeffs[1:], start=1):
        t = (bi.prec if bi.is_zero() else bi.val) + i * r_v
        best = min(best, t)
    if b.tail is not None:
        best = min(best, b.tail.bound_on(r_v))
    return best


def image_ball(fn: Series, ball: UltraBall) -> UltraBall:
    """fn(ball), which is again a ball of the same kind."""
    c = ball.center
    r_v = min(ball.radius_val, c.prec)
    rad = image_radius_val(fn, c, r_v)
    img = evaluate(fn, c)
    rad = min(rad, img.prec)
    return UltraBall(img, rad, ball.closed)


def image_diameter_bound(fn: Series, ball: UltraBall):
    """Exponent d with diam fn(ball) <= p**(-d)."""
    return image_ball(fn, ball).radius_val


def map_degree(fn: Series, ball: UltraBall) -> int:
    """Number of preimages in ``ball`` of any point of fn(ball)."""
    c = ball.center
    g = fn - evaluate(fn, c)
    b = recenter(g, c)
    r_v = ball.radius_val
    terms = [(bi.val + i * r_v, i) for i, bi in enumerate(b.coeffs[1:], start=1) if not bi.is_zero()]
    if not terms:
        raise PrecisionLoss("map degree undecidable")
    best = min(t for t, _ in terms)
    hits = [i for t, i in terms if t == best]
    # closed balls count roots up to radius r inclusive, open balls strictly inside
    return max(hits) if ball.closed else min(hits)
