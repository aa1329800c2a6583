"""Exact arithmetic in a finite extension K of Q_p.

K is built as an unramified extension of degree ``f`` (generated by a lift of
an irreducible polynomial over F_p) followed by the Eisenstein extension
``pi**e = p``.  An element is stored as ``pi**val * u`` where ``u`` is a unit
given by ``e*f`` integer "columns"::

    u = sum_{r < e, j < f} cols[r*f + j] * omega**j * pi**r

Because ``pi**(e*q + r) = p**q * pi**r``, writing every column in base p gives
the canonical pi-adic digit expansion directly, and the valuation of a column
sum is the minimum over columns (different columns have different
valuations mod 1/e).

Precision is absolute and measured in pi-units: an element is known modulo
``pi**abs_prec``.  All valuations are exported as :class:`fractions.Fraction`
in units of v(p) = 1.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Iterator, Sequence, Union

INF = math.inf

Rational = Union[int, Fraction]


class PadicError(ArithmeticError):
    """Base class for errors raised by the arithmetic layer."""


class PrecisionLoss(PadicError):
    """A quantity cannot be decided at the available precision."""


class NotAUnit(PadicError):
    pass


class RadiusNotRepresentable(PadicError):
    """A radius p**(-r) with r outside (1/e)Z was requested."""


class ContextMismatch(PadicError):
    pass


# Conway polynomials, coefficients listed from the constant term upwards
# (the leading 1 is implicit).
_CONWAY = {
    (2, 2): (1, 1),
    (2, 3): (1, 1, 0),
    (2, 4): (1, 1, 0, 0),
    (3, 2): (2, 2),
    (3, 3): (1, 2, 0),
    (3, 4): (2, 0, 0, 2),
    (5, 2): (2, 4),
    (5, 3): (3, 3, 0),
    (5, 4): (2, 4, 4, 0),
    (7, 2): (3, 6),
    (7, 3): (4, 0, 6),
    (7, 4): (3, 4, 5, 0),
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def _poly_is_irreducible_mod_p(low: Sequence[int], p: int) -> bool:
    # brute force: no factor of degree <= f/2 among monic polynomials
    f = len(low)
    target = list(low) + [1]
    for d in range(1, f // 2 + 1):
        for coeffs in product(range(p), repeat=d):
            g = list(coeffs) + [1]
            r = target[:]
            for i in range(len(r) - 1, d - 1, -1):
                c = r[i] % p
                if c:
                    for k in range(d + 1):
                        r[i - d + k] = (r[i - d + k] - c * g[k]) % p
            if all(x % p == 0 for x in r[:d]):
                return False
    return True


def defining_polynomial(p: int, f: int) -> tuple[int, ...]:
    """Low coefficients of the monic modulus used for the residue field F_{p^f}."""
    if f == 1:
        return (0,)
    if (p, f) in _CONWAY:
        return _CONWAY[(p, f)]
    for coeffs in product(range(p), repeat=f):
        low = tuple(reversed(coeffs))
        if low[0] and _poly_is_irreducible_mod_p(low, p):
            return low
    raise ValueError(f"no irreducible polynomial of degree {f} over F_{p}")


class ResidueField:
    """F_{p^f} with elements encoded as integers sum a_j p**j, 0 <= a_j < p."""

    def __init__(self, p: int, f: int, modulus: Sequence[int]):
        self.p = p
        self.f = f
        self.modulus = tuple(modulus)
        self.order = p**f

    def vec(self, a: int) -> list[int]:
        out = []
        for _ in range(self.f):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def enc(self, v: Sequence[int]) -> int:
        a = 0
        for c in reversed(v):
            a = a * self.p + (c % self.p)
        return a

    def elements(self) -> range:
        """All elements in the fixed total order used for digit selection."""
        return range(self.order)

    def add(self, a: int, b: int) -> int:
        return self.enc([x + y for x, y in zip(self.vec(a), self.vec(b))])

    def neg(self, a: int) -> int:
        return self.enc([-x for x in self.vec(a)])

    def mul(self, a: int, b: int) -> int:
        return self.enc(_reduce_omega(_conv(self.vec(a), self.vec(b)), self.f, self.modulus, self.p))

    def pow(self, a: int, n: int) -> int:
        r = 1
        for _ in range(n):
            r = self.mul(r, a)
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in the residue field")
        return self.pow(a, self.order - 2)

    def generator(self) -> int:
        """Image of omega (the class of x); equals p for f > 1 in the encoding."""
        return self.p if self.f > 1 else 1


def _conv(a: Sequence[int], b: Sequence[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _reduce_omega(v: list[int], f: int, modulus: Sequence[int], mod: int | None = None) -> list[int]:
    # omega**f = -sum modulus[j] omega**j
    v = list(v)
    for i in range(len(v) - 1, f - 1, -1):
        c = v[i]
        if c:
            for j in range(f):
                v[i - f + j] -= c * modulus[j]
    v = v[:f] + [0] * (f - len(v))
    if mod is not None:
        v = [x % mod for x in v]
    return v


@dataclass(frozen=True)
class Context:
    """The working field K: prime p, residue degree f, ramification e, precision N.

    ``N`` is the absolute precision cap in pi-digits: every element is known
    modulo ``pi**N`` at best.
    """

    p: int
    e: int = 1
    f: int = 1
    N: int = 40
    modulus: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.e < 1 or self.f < 1 or self.N < 1:
            raise ValueError("e, f and N must be >= 1")
        if self.f > 4 and (self.p, self.f) not in _CONWAY:
            raise ValueError("residue degree f > 4 is not supported")
        if not self.modulus:
            object.__setattr__(self, "modulus", defining_polynomial(self.p, self.f))

    @cached_property
    def residue_field(self) -> ResidueField:
        return ResidueField(self.p, self.f, self.modulus)

    @property
    def width(self) -> int:
        return self.e * self.f

    def pow_table(self, n: int) -> list[int]:
        """[p**0, ..., p**(n-1)] at least; grown on demand and shared."""
        table = self.__dict__.get("_pow")
        if table is None:
            table = [1]
            object.__setattr__(self, "_pow", table)
        while len(table) < n:
            table.append(table[-1] * self.p)
        return table

    def with_precision(self, N: int) -> "Context":
        return Context(self.p, self.e, self.f, N, self.modulus)

    def to_units(self, v: Rational) -> int:
        """Convert a valuation (in units of v(p)) into pi-units, exactly."""
        if isinstance(v, int):
            return v * self.e
        q = v if isinstance(v, Fraction) else Fraction(v)
        if self.e % q.denominator:
            raise RadiusNotRepresentable(f"valuation {v} is not in (1/{self.e})Z")
        return q.numerator * (self.e // q.denominator)

    def from_units(self, k: int) -> Fraction:
        return Fraction(k, self.e)

    # constructors --------------------------------------------------------
    def zero(self, abs_prec: int | None = None) -> "Elem":
        return Elem._zero(self, self.N if abs_prec is None else min(abs_prec, self.N))

    def one(self) -> "Elem":
        return from_rational(self, 1)

    def __call__(self, q) -> "Elem":
        if isinstance(q, Elem):
            return q
        return from_rational(self, q)

    def uniformizer(self) -> "Elem":
        return pi_power(self, 1)

    def omega(self) -> "Elem":
        """The lift of the residue field generator."""
        if self.f == 1:
            return self.one()
        cols = [0] * self.width
        cols[1] = 1
        return Elem._make(self, 0, cols, self.N)

    def teichmuller_free_digit(self, d: int) -> "Elem":
        """The canonical lift of residue class ``d`` (integer encoding)."""
        if d == 0:
            return self.zero()
        vec = self.residue_field.vec(d)
        cols = [0] * self.width
        cols[: self.f] = vec
        return Elem._make(self, 0, cols, self.N)


def pi_power(ctx: Context, k: int) -> Elem:
    """pi**k, exact up to the precision cap."""
    cols = [0] * ctx.width
    cols[0] = 1
    return Elem._make(ctx, k, cols, ctx.N)


def _vp(n: int, p: int) -> int:
    if n == 0:
        return INF  # type: ignore[return-value]
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _pack(cols: Sequence[int], nbytes: int) -> int:
    return int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in cols), "little")


def _unpack(z: int, n: int, nbytes: int) -> list[int]:
    raw = z.to_bytes(n * nbytes, "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") for i in range(n)]


def _kron_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Product of two integer polynomials with nonnegative coefficients."""
    la, lb = len(a), len(b)
    if la * lb <= 64:
        return _conv(a, b)
    bits = max(max(a).bit_length(), 1) + max(max(b).bit_length(), 1) + min(la, lb).bit_length() + 1
    nbytes = (bits + 7) // 8
    z = _pack(a, nbytes) * _pack(b, nbytes)
    return _unpack(z, la + lb - 1, nbytes)


@lru_cache(maxsize=1 << 16)
def _units_frac(k: int, e: int) -> Fraction:
    return Fraction(k, e)


class Elem:
    """An element of K: ``pi**val * unit`` known modulo ``pi**abs_prec``."""

    __slots__ = ("ctx", "_val", "_cols", "_abs", "__weakref__")

    def __init__(self, ctx: Context, val, cols, abs_prec):
        self.ctx = ctx
        self._val = val
        self._cols = cols
        self._abs = abs_prec

    # construction --------------------------------------------------------
    @classmethod
    def _zero(cls, ctx: Context, abs_prec: int) -> "Elem":
        return cls(ctx, None, (), abs_prec)

    @classmethod
    def _make(cls, ctx: Context, shift: int, cols: Sequence[int], abs_prec: int) -> "Elem":
        """Normalize ``pi**shift * sum cols`` (arbitrary integer columns)."""
        e, f, p = ctx.e, ctx.f, ctx.p
        if abs_prec > ctx.N:
            abs_prec = ctx.N
        rel = abs_prec - shift
        if rel <= 0:
            return cls._zero(ctx, abs_prec)
        pw = ctx.pow_table(rel // e + 2)
        if f == 1:
            reduced = [c % pw[(rel - r + e - 1) // e] if r < rel else 0 for r, c in enumerate(cols)]
        else:
            reduced = [c % pw[(rel - i // f + e - 1) // e] if i // f < rel else 0 for i, c in enumerate(cols)]
        best = None
        for i, c in enumerate(reduced):
            if c % p:
                best = i // f
                break
        if best == 0:
            return cls(ctx, shift, tuple(reduced), abs_prec)
        if best is None:
            # every column divisible by p: locate the true valuation
            for i, c in enumerate(reduced):
                if c:
                    vr = e * _vp(c, p) + i // f
                    if best is None or vr < best:
                        best = vr
            if best is None:
                return cls._zero(ctx, abs_prec)
        # divide by pi**best: the term at column r moves to column (r - best) mod e
        out = [0] * (e * f)
        for r in range(e):
            q, b = divmod(r - best, e)
            for j in range(f):
                c = reduced[r * f + j]
                if c:
                    out[b * f + j] = c * pw[q] if q >= 0 else c // pw[-q]
        return cls._make(ctx, shift + best, out, abs_prec)

    # basic accessors -----------------------------------------------------
    @property
    def p(self) -> int:
        return self.ctx.p

    def is_zero(self) -> bool:
        """True when the element is indistinguishable from 0 at its precision."""
        return self._val is None

    @property
    def val(self):
        """Valuation as a Fraction (``math.inf`` for zero at precision)."""
        return INF if self._val is None else _units_frac(self._val, self.ctx.e)

    @property
    def prec(self) -> Fraction:
        """Absolute precision exponent: the element is known modulo pi**(e*prec)."""
        return _units_frac(self._abs, self.ctx.e)

    @property
    def val_units(self):
        return self._val

    @property
    def prec_units(self) -> int:
        return self._abs

    @property
    def rel_units(self) -> int:
        return 0 if self._val is None else self._abs - self._val

    def exact_val(self) -> Fraction:
        """Valuation, raising :class:`PrecisionLoss` for an element that reads as 0."""
        if self._val is None:
            raise PrecisionLoss(f"element is 0 modulo p^{self.prec}; valuation undecidable")
        return Fraction(self._val, self.ctx.e)

    def digits(self) -> list[int]:
        """pi-adic digits from pi**val up to (but excluding) pi**abs_prec."""
        if self._val is None:
            return []
        e, f, p = self.ctx.e, self.ctx.f, self.p
        rel = self.rel_units
        out = []
        for i in range(rel):
            q, r = divmod(i, e)
            d = 0
            for j in reversed(range(f)):
                d = d * p + (self._cols[r * f + j] // p**q) % p
            out.append(d)
        return out

    # arithmetic ------------------------------------------------------------
    def _check(self, other: "Elem"):
        if other.ctx != self.ctx:
            raise ContextMismatch("operands live in different contexts")

    def _coerce(self, other) -> "Elem":
        if isinstance(other, Elem):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return from_rational(self.ctx, other)
        return NotImplemented

    def _shifted_cols(self, target: int) -> list[int]:
        """Columns of self written as pi**target * a (target <= val)."""
        e, f, p = self.ctx.e, self.ctx.f, self.p
        d = self._val - target
        if d == 0:
            return list(self._cols)
        pw = self.ctx.pow_table(d // e + 2)
        out = [0] * (e * f)
        for r in range(e):
            q, b = divmod(r + d, e)
            for j in range(f):
                c = self._cols[r * f + j]
                if c:
                    out[b * f + j] = c * pw[q]
        return out

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        abs_prec = min(self._abs, other._abs)
        if self._val is None:
            return other._truncate(abs_prec)
        if other._val is None:
            return self._truncate(abs_prec)
        k = min(self._val, other._val)
        if k >= abs_prec:
            return Elem._zero(self.ctx, abs_prec)
        a = self._shifted_cols(k)
        b = other._shifted_cols(k)
        return Elem._make(self.ctx, k, [x + y for x, y in zip(a, b)], abs_prec)

    __radd__ = __add__

    def __neg__(self):
        if self._val is None:
            return self
        return Elem._make(self.ctx, self._val, [-c for c in self._cols], self._abs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def _truncate(self, abs_prec: int) -> "Elem":
        if abs_prec >= self._abs:
            return self
        if self._val is None:
            return Elem._zero(self.ctx, abs_prec)
        return Elem._make(self.ctx, self._val, self._cols, abs_prec)

    def with_prec(self, abs_units: int) -> "Elem":
        """Copy with absolute precision lowered to ``abs_units`` (pi-units)."""
        return self._truncate(abs_units)

    def lift(self, abs_units: int | None = None) -> "Elem":
        """Treat the known digits as exact and extend the precision (zero digits)."""
        abs_units = self.ctx.N if abs_units is None else abs_units
        if self._val is None:
            return Elem._zero(self.ctx, abs_units)
        return Elem(self.ctx, self._val, self._cols, min(abs_units, self.ctx.N))

    def _unit_mul(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        e, f, p = self.ctx.e, self.ctx.f, self.p
        if f == 1:
            prod = _kron_mul(a, b)
            out = prod[:e]
            for i in range(e, len(prod)):
                out[i - e] += p * prod[i]
            return out
        # pack (r, j) -> r*(2f-1) + j so that indices add without collision
        w = 2 * f - 1
        pa = [0] * (e * w)
        pb = [0] * (e * w)
        for r in range(e):
            for j in range(f):
                pa[r * w + j] = a[r * f + j]
                pb[r * w + j] = b[r * f + j]
        prod = _kron_mul(pa, pb)
        prod += [0] * ((2 * e - 1) * w - len(prod))
        out = [0] * (e * f)
        for R in range(2 * e - 1):
            vec = _reduce_omega(prod[R * w:(R + 1) * w], f, self.ctx.modulus)
            q, r = divmod(R, e)
            scale = p**q
            for j in range(f):
                out[r * f + j] += vec[j] * scale
        return out

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._val is None and other._val is None:
            return Elem._zero(self.ctx, self._abs + other._abs)
        if self._val is None:
            return Elem._zero(self.ctx, self._abs + other._val)
        if other._val is None:
            return Elem._zero(self.ctx, other._abs + self._val)
        k = self._val + other._val
        rel = min(self.rel_units, other.rel_units)
        cols = self._unit_mul(self._cols, other._cols)
        return Elem._make(self.ctx, k, cols, k + rel)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ctx.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inverse(self) -> "Elem":
        if self._val is None:
            raise ZeroDivisionError("inverse of an element that is 0 at working precision")
        rel = self.rel_units
        # the unit part may carry more digits than the cap allows; widen it
        ctx = self.ctx if rel <= self.ctx.N else self.ctx.with_precision(rel)
        F = ctx.residue_field
        res = F.enc([c % ctx.p for c in self._cols[: ctx.f]])
        y = Elem._make(ctx, 0, _lift_digit_cols(ctx, F.inv(res)), 1)
        u = Elem(ctx, 0, self._cols, rel)
        # Newton on the unit part; y is lifted as exact before each step
        known = 1
        while known < rel:
            known = min(2 * known, rel)
            y = y.lift(known)
            y = y * (from_rational(ctx, 2, known) - u.with_prec(known) * y)
        return Elem(self.ctx, -self._val, y._cols, -self._val + rel)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    # comparison --------------------------------------------------------------
    def equals(self, other) -> bool:
        """Equality at the joint precision of both operands."""
        return (self - other).is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = from_rational(self.ctx, other)
        if not isinstance(other, Elem) or other.ctx != self.ctx:
            return NotImplemented
        return self.equals(other)

    def __hash__(self):
        return hash((self.ctx.p, self._val, self._cols[:1]))

    def __repr__(self):
        return f"Elem({to_digit_string(self)})"

    __str__ = __repr__


def _int_cols(ctx: Context, n: int) -> list[int]:
    cols = [0] * ctx.width
    cols[0] = n
    return cols


def _lift_digit_cols(ctx: Context, d: int) -> list[int]:
    cols = [0] * ctx.width
    cols[: ctx.f] = ctx.residue_field.vec(d)
    return cols


# ----------------------------------------------------------------------------
# module-level operations

def from_rational(ctx: Context, q: Rational, abs_units: int | None = None) -> Elem:
    """Canonical expansion of the rational ``q`` to the precision cap."""
    q = Fraction(q)
    abs_units = ctx.N if abs_units is None else min(abs_units, ctx.N)
    if q == 0:
        return Elem._zero(ctx, abs_units)
    p, e = ctx.p, ctx.e
    num, den = q.numerator, q.denominator
    vn, vd = _vp(num, p), _vp(den, p)
    num //= p**vn
    den //= p**vd
    v = vn - vd
    k = v * e
    rel = abs_units - k
    if rel <= 0:
        return Elem._zero(ctx, abs_units)
    t = (rel + e - 1) // e
    m = p**t
    unit = num * pow(den, -1, m) % m
    return Elem._make(ctx, k, _int_cols(ctx, unit), abs_units)


def add(x: Elem, y: Elem) -> Elem:
    return x + y


def mul(x: Elem, y: Elem) -> Elem:
    return x * y


def inv(x: Elem) -> Elem:
    return x.inverse()


def valuation(x: Elem):
    """v(x) as a Fraction, or ``math.inf`` when x reads as zero."""
    return x.val


def residue(x: Elem) -> int:
    """Image of a unit in F_{p^f}, encoded as sum a_j p**j."""
    if x.is_zero() or x.val_units != 0:
        raise NotAUnit(f"residue requires v(x) = 0, got {x.val}")
    ctx = x.ctx
    return ctx.residue_field.enc([c % ctx.p for c in x._cols[: ctx.f]])


def digit_lift(ctx: Context, d: int, k: int = 0) -> Elem:
    """The canonical representative of residue digit ``d`` times pi**k."""
    if d == 0:
        return ctx.zero()
    return Elem._make(ctx, k, _lift_digit_cols(ctx, d), ctx.N + max(k, 0))


def from_digits(ctx: Context, val: Rational, digits: Sequence[int], prec: Rational | None = None) -> Elem:
    """Rebuild an element from its pi-adic digits starting at pi**(e*val)."""
    k = ctx.to_units(val)
    abs_units = ctx.N if prec is None else min(ctx.to_units(prec), ctx.N)
    e, f, p = ctx.e, ctx.f, ctx.p
    F = ctx.residue_field
    cols = [0] * (e * f)
    for i, d in enumerate(digits):
        q, r = divmod(i, e)
        for j, a in enumerate(F.vec(d)):
            cols[r * f + j] += a * p**q
    return Elem._make(ctx, k, cols, abs_units)


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_digit_string(x: Elem) -> str:
    """Serialize as ``p^a * [d0,d1,...] @prec``; a reads as 0 gives ``0 @prec``."""
    if x.is_zero():
        return f"0 @{_frac_str(x.prec)}"
    ds = ",".join(str(d) for d in x.digits())
    return f"p^{_frac_str(x.val)} * [{ds}] @{_frac_str(x.prec)}"


_DIGIT_RE = re.compile(r"^\s*p\^(-?\d+(?:/\d+)?)\s*\*\s*\[([0-9,\s]*)\]\s*@\s*(-?\d+(?:/\d+)?)\s*$")
_ZERO_RE = re.compile(r"^\s*0\s*@\s*(-?\d+(?:/\d+)?)\s*$")


def parse_digit_string(ctx: Context, s: str, exact: bool = False) -> Elem:
    """Inverse of :func:`to_digit_string`.

    With ``exact=True`` the digits are taken as a finite exact expansion and
    the element gets the full precision of ``ctx``.
    """
    m = _ZERO_RE.match(s)
    if m:
        prec = Fraction(m.group(1))
        return ctx.zero() if exact else ctx.zero(ctx.to_units(prec))
    m = _DIGIT_RE.match(s)
    if not m:
        raise ValueError(f"malformed digit string: {s!r}")
    val = Fraction(m.group(1))
    digits = [int(t) for t in m.group(2).replace(" ", "").split(",") if t]
    prec = None if exact else Fraction(m.group(3))
    return from_digits(ctx, val, digits, prec)


# ----------------------------------------------------------------------------
# balls

@dataclass(frozen=True)
class UltraBall:
    """Ball {x : |x - center| < r} (open) or <= r (closed), r = p**(-radius_val)."""

    center: Elem
    radius_val: object  # Fraction or math.inf for a point
    closed: bool = True

    def contains(self, x: Elem) -> bool:
        d = x - self.center
        r = self.radius_val
        if d.is_zero():
            # |d| <= p**(-prec(d)); decide only when that already settles it
            if (self.closed and d.prec >= r) or (not self.closed and d.prec > r):
                return True
            raise PrecisionLoss("membership undecidable at working precision")
        return d.val >= r if self.closed else d.val > r

    def contains_ball(self, other: "UltraBall") -> bool:
        if not self.contains(other.center):
            return False
        if self.closed:
            return other.radius_val > self.radius_val or (
                other.radius_val == self.radius_val)
        return other.radius_val > self.radius_val or (
            other.radius_val == self.radius_val and not other.closed)

    def intersects(self, other: "UltraBall") -> bool:
        """Two balls meet iff the larger one contains the other's center."""
        big, small = (self, other) if _radius_le(other, self) else (other, self)
        return big.contains(small.center)

    @property
    def radius(self):
        """Radius as an exact exponent pair: p**(-radius_val)."""
        return self.radius_val


def _radius_le(a: UltraBall, b: UltraBall) -> bool:
    if a.radius_val != b.radius_val:
        return a.radius_val > b.radius_val
    return (not a.closed) or b.closed


def iter_residues(ctx: Context) -> Iterator[int]:
    return iter(ctx.residue_field.elements())


def random_elem(ctx: Context, rng, min_val: Rational = 0, max_val: Rational = 3, rel: int | None = None) -> Elem:
    """A random nonzero element with valuation in [min_val, max_val].

    The valuation is uniform on the 1/e grid and the ``rel`` digits after the
    leading one are uniform; the leading digit is a uniform nonzero residue.
    """
    k = rng.randint(ctx.to_units(min_val), ctx.to_units(max_val))
    rel = (ctx.N - k) if rel is None else rel
    rel = max(rel, 1)
    e, f, p = ctx.e, ctx.f, ctx.p
    # column r*f + j carries the digits at positions r, r + e, r + 2e, ...
    cols = [rng.randrange(p ** ((rel - i // f + e - 1) // e)) if i // f < rel else 0 for i in range(e * f)]
    while not any(c % p for c in cols[:f]):
        cols[:f] = [rng.randrange(p ** ((rel + e - 1) // e)) for _ in range(f)]
    return Elem._make(ctx, k, cols, k + rel)


def elements_from(ctx: Context, values: Iterable[Rational]) -> list[Elem]:
    return [from_rational(ctx, v) for v in values]
