"""Polynomials and tail-bounded power series over K."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .padic import INF, Context, Elem, PrecisionLoss, from_rational


class DivergentOnBall(ValueError):
    """The series is not known to converge on the requested radius."""


@dataclass(frozen=True)
class Tail:
    """Certified bound v(a_i) >= val_slope * i for every unlisted i >= from_index."""

    from_index: int
    val_slope: Fraction

    def bound_on(self, r_v) -> Fraction:
        """Lower bound for v(a_i) + i*r_v over the tail (requires convergence)."""
        slope = self.val_slope + r_v
        if slope <= 0:
            raise DivergentOnBall(f"tail does not tend to 0 at radius p^{-r_v}")
        return self.from_index * slope

    def recentred_bound(self, c_val) -> Fraction:
        # v(C(i,j) a_i c^(i-j)) >= slope*j + (i-j)*(slope + v(c)) >= slope*j
        if self.val_slope + c_val < 0:
            raise DivergentOnBall("recentring point outside the tail's disc of convergence")
        return self.val_slope


class Series:
    """f(z) = sum_i a_i z**i with finitely many listed coefficients and an optional tail.

    ``domain_val`` is the radius exponent of the closed ball the series is
    declared on (radius p**(-domain_val)); ``None`` means all of K
    (polynomials).
    """

    __slots__ = ("ctx", "coeffs", "tail", "domain_val")

    def __init__(self, ctx: Context, coeffs: Sequence[Elem], tail: Tail | None = None, domain_val=None):
        self.ctx = ctx
        coeffs = list(coeffs)
        while len(coeffs) > 1 and coeffs[-1].is_zero() and coeffs[-1].prec_units >= ctx.N:
            coeffs.pop()
        self.coeffs = coeffs or [ctx.zero()]
        self.tail = tail
        self.domain_val = domain_val
        if tail is not None and tail.from_index < len(self.coeffs):
            raise ValueError("tail must start after the listed coefficients")

    # construction ----------------------------------------------------------
    @classmethod
    def from_rationals(cls, ctx: Context, coeffs: Iterable, tail: Tail | None = None, domain_val=None) -> "Series":
        return cls(ctx, [from_rational(ctx, Fraction(c)) for c in coeffs], tail, domain_val)

    @classmethod
    def from_spec(cls, ctx: Context, terms: Sequence[Sequence[int]], tail: dict | None = None,
                  domain_val=None) -> "Series":
        """Build from ``[[index, num, den], ...]`` plus ``{from_index, val_slope}``."""
        deg = max((int(t[0]) for t in terms), default=0)
        coeffs = [Fraction(0)] * (deg + 1)
        for idx, num, den in terms:
            coeffs[int(idx)] += Fraction(int(num), int(den))
        t = None
        if tail:
            t = Tail(int(tail["from_index"]), Fraction(tail["val_slope"]))
        return cls.from_rationals(ctx, coeffs, t, domain_val)

    @classmethod
    def monomial(cls, ctx: Context, coeff, degree: int) -> "Series":
        c = coeff if isinstance(coeff, Elem) else from_rational(ctx, coeff)
        return cls(ctx, [ctx.zero()] * degree + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_polynomial(self) -> bool:
        return self.tail is None

    def __repr__(self):
        terms = ", ".join(f"{i}: {c}" for i, c in enumerate(self.coeffs) if not c.is_zero())
        extra = f", tail={self.tail}" if self.tail else ""
        return f"Series({{{terms}}}{extra})"

    # algebra -----------------------------------------------------------------
    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            return other
        if isinstance(other, Elem):
            return Series(self.ctx, [other])
        return Series(self.ctx, [from_rational(self.ctx, Fraction(other))])

    @staticmethod
    def _merge_tail(a: Tail | None, b: Tail | None) -> Tail | None:
        if a is None:
            return b
        if b is None:
            return a
        return Tail(max(a.from_index, b.from_index), min(a.val_slope, b.val_slope))

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        z = self.ctx.zero()
        a = self.coeffs + [z] * (n - len(self.coeffs))
        b = other.coeffs + [z] * (n - len(other.coeffs))
        tail = self._merge_tail(self.tail, other.tail)
        if tail is not None and tail.from_index < n:
            tail = Tail(n, tail.val_slope)
        return Series(self.ctx, [x + y for x, y in zip(a, b)], tail, self.domain_val)

    __radd__ = __add__

    def __neg__(self):
        return Series(self.ctx, [-c for c in self.coeffs], self.tail, self.domain_val)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (Elem, int, Fraction)):
            c = other if isinstance(other, Elem) else from_rational(self.ctx, Fraction(other))
            tail = None
            if self.tail is not None:
                cv = c.val
                tail = Tail(self.tail.from_index, self.tail.val_slope) if cv >= 0 else None
                if cv < 0:
                    raise ValueError("scaling a tail by a non-integral constant is not supported")
            return Series(self.ctx, [a * c for a in self.coeffs], tail, self.domain_val)
        if self.tail is not None or other.tail is not None:
            raise ValueError("products are only defined for polynomials")
        out = [self.ctx.zero()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return Series(self.ctx, out, None, self.domain_val)

    __rmul__ = __mul__


# ----------------------------------------------------------------------------
# operations

def _term_bound(c: Elem, i: int, r_v):
    """(value, exact) for v(c) + i*r_v; zero coefficients give their precision bound."""
    if c.is_zero():
        return c.prec + i * r_v, False
    return c.val + i * r_v, True


def gauss_norm(fn: Series, r_v) -> Fraction:
    """Exponent g with ||fn||_B = p**(-g) on the closed ball of radius p**(-r_v)."""
    r_v = Fraction(r_v)
    if fn.domain_val is not None and r_v < fn.domain_val:
        raise DivergentOnBall(f"radius p^{-r_v} exceeds the declared domain")
    exact_best = INF
    loose_best = INF
    for i, c in enumerate(fn.coeffs):
        v, exact = _term_bound(c, i, r_v)
        if exact:
            exact_best = min(exact_best, v)
        else:
            loose_best = min(loose_best, v)
    if fn.tail is not None:
        loose_best = min(loose_best, fn.tail.bound_on(r_v))
    if loose_best < exact_best:
        if exact_best == INF and loose_best >= fn.ctx.N / fn.ctx.e:
            return loose_best
        raise PrecisionLoss("maximal term of the Gauss norm is not known exactly")
    return exact_best


def gauss_norm_bound(fn: Series, r_v) -> Fraction:
    """Lower bound on the norm exponent (an upper bound on ||fn||), always defined."""
    r_v = Fraction(r_v)
    best = INF
    for i, c in enumerate(fn.coeffs):
        best = min(best, _term_bound(c, i, r_v)[0])
    if fn.tail is not None:
        best = min(best, fn.tail.bound_on(r_v))
    return best


def _tail_error_units(fn: Series, x: Elem):
    if fn.tail is None:
        return None
    xv = x.val if not x.is_zero() else x.prec
    b = fn.tail.bound_on(xv)
    return math.floor(b * fn.ctx.e)


def evaluate(fn: Series, x: Elem) -> Elem:
    """Horner evaluation; a tail caps the precision of the result."""
    if fn.domain_val is not None and not x.is_zero() and x.val < fn.domain_val:
        raise DivergentOnBall("point outside the domain of the series")
    acc = fn.coeffs[-1]
    for c in reversed(fn.coeffs[:-1]):
        acc = acc * x + c
    cap = _tail_error_units(fn, x)
    if cap is not None:
        acc = acc.with_prec(cap)
    return acc


eval_series = evaluate


def derivative(fn: Series) -> Series:
    ctx = fn.ctx
    coeffs = [c * i for i, c in enumerate(fn.coeffs)][1:] or [ctx.zero()]
    tail = None
    if fn.tail is not None:
        # v(i a_i) >= slope*i >= slope*(i-1) when slope >= 0; otherwise shift the index
        s = fn.tail.val_slope
        tail = Tail(fn.tail.from_index - 1, s) if s >= 0 else None
        if s < 0:
            raise ValueError("derivative of a tail with negative slope is not supported")
    return Series(ctx, coeffs, tail, fn.domain_val)


def recenter(fn: Series, c: Elem) -> Series:
    """Coefficients of t -> fn(c + t)."""
    ctx = fn.ctx
    n = len(fn.coeffs)
    b = list(fn.coeffs)
    if not (c.is_zero() and c.prec_units >= ctx.N):
        # repeated synthetic division (Taylor shift)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                b[j] = b[j] + c * b[j + 1]
    tail = None
    if fn.tail is not None:
        cv = c.val if not c.is_zero() else c.prec
        slope = fn.tail.recentred_bound(cv)
        tail = Tail(fn.tail.from_index, slope)
        if cv != INF:
            # tail terms also feed the listed coefficients:
            # v(sum_{i>=F} C(i,j) a_i c^(i-j)) >= F*(slope + v(c)) - j*v(c)
            big_f = fn.tail.from_index
            b = [bj.with_prec(math.floor((big_f * (slope + cv) - j * cv) * ctx.e)) for j, bj in enumerate(b)]
    return Series(ctx, b, tail, None if fn.domain_val is None else fn.domain_val)


def compose_affine(fn: Series, shift: Elem) -> Series:
    return recenter(fn, shift)


def binomial_valuation(n: int, k: int, p: int) -> int:
    c = comb(n, k)
    v = 0
    while c % p == 0:
        v += 1
        c //= p
    return v
