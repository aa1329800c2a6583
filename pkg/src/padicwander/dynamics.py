"""The perturbed family Q_lambda: constants, evaluation, regions and itineraries."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .analysis import HenselPreconditionFailed
from .padic import INF, Context, Elem, PadicError, PrecisionLoss, from_rational, random_elem
from .series import Series, derivative, evaluate, gauss_norm_bound, recenter


class NotAdmissible(PadicError):
    """Perturbation or parameter outside the admissible range."""


# ----------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class FamilyConstants:
    """Radii attached to p, all stored as valuation exponents (|.| = p**-v)."""

    p: int

    @property
    def rho_val(self) -> Fraction:
        """rho = p**(-1/(p-1))."""
        return Fraction(1, self.p - 1)

    @property
    def S_val(self) -> Fraction:
        """S with p * S**(p-1) = rho."""
        return Fraction(self.p, (self.p - 1) ** 2)

    def r(self, n: int) -> Fraction:
        """Exponent r_n of rho_n = p**(-r_n); r_0 = 0 and r_n -> 1/(p-1)."""
        if n < 0:
            raise ValueError("n must be non-negative")
        return (1 - Fraction(1, self.p**n)) / (self.p - 1)

    def rho_prod_val(self, m: int) -> Fraction:
        """Exponent of rho_{m-1} ... rho_1."""
        return sum((self.r(k) for k in range(1, m)), Fraction(0))

    def required_e(self, ns) -> int:
        """Smallest ramification making every listed sphere radius and S representable."""
        from math import lcm

        out = self.S_val.denominator
        for n in ns:
            out = lcm(out, self.r(n).denominator)
        return out


def family_constants(p: int) -> FamilyConstants:
    return FamilyConstants(p)


# ----------------------------------------------------------------------------
# evaluation

def p_family_eval(ctx: Context, lam: Elem, z: Elem) -> Elem:
    """P_lambda(z) = (lambda/p) z^p + (1 - lambda/p) z^(p+1)."""
    p = ctx.p
    c = lam / ctx(p)
    # z^p (z + (lambda/p)(1 - z)) keeps the 1/p factor on a small quantity
    return z**p * (z + c * (1 - z))


def p_family_series(ctx: Context, lam: Elem) -> Series:
    c = lam / ctx(ctx.p)
    return Series(ctx, [ctx.zero()] * ctx.p + [c, 1 - c])


def _is_zero_series(Q: Series | None) -> bool:
    if Q is None:
        return True
    return Q.tail is None and all(c.is_zero() and c.prec_units >= Q.ctx.N for c in Q.coeffs)


class FamilyInstance:
    """Q_lambda for a fixed perturbation Q and parameter lambda with |lambda - 1| < 1."""

    def __init__(self, ctx: Context, Q: Series | None, lam: Elem, r_hat_val=-1, check: bool = True):
        self.ctx = ctx
        self.Q = Q if Q is not None else Series(ctx, [ctx.zero()])
        self.lam = lam
        self.r_hat_val = Fraction(r_hat_val)
        self.constants = FamilyConstants(ctx.p)
        if check:
            admit_perturbation(self.Q, self.constants, self.r_hat_val)
            d = lam - 1
            if not d.is_zero() and d.val <= 0:
                raise NotAdmissible(f"lambda must satisfy |lambda - 1| < 1, got v = {d.val}")

    @property
    def p(self) -> int:
        return self.ctx.p

    def with_lambda(self, lam: Elem) -> "FamilyInstance":
        return FamilyInstance(self.ctx, self.Q, lam, self.r_hat_val, check=False)

    @cached_property
    def q_is_zero(self) -> bool:
        return _is_zero_series(self.Q)

    @cached_property
    def h(self) -> Elem:
        return fixed_point_h(self)

    @cached_property
    def lam_over_p(self) -> Elem:
        return self.lam / self.ctx(self.p)

    @cached_property
    def series(self) -> Series:
        """Q_lambda as a series in z."""
        base = p_family_series(self.ctx, self.lam) + self.Q
        shift = self.h - 1
        return recenter(base, shift) + (1 - self.h)

    def qstar_eval(self, z: Elem) -> Elem:
        out = z**self.p * (z + self.lam_over_p * (1 - z))
        if not self.q_is_zero:
            out = out + evaluate(self.Q, z)
        return out

    def __call__(self, z: Elem) -> Elem:
        return q_conj_eval(self, z)

    def orbit(self, z: Elem, n: int) -> list[Elem]:
        out = [z]
        for _ in range(n):
            z = q_conj_eval(self, z)
            out.append(z)
        return out


def admit_perturbation(Q: Series, constants: FamilyConstants, r_hat_val=-1) -> Fraction:
    """Check ||Q||_B < rho on B = {|z| <= r_hat}; returns the norm exponent bound."""
    g = gauss_norm_bound(Q, r_hat_val)
    if not g > constants.rho_val:
        raise NotAdmissible(f"perturbation norm p^-{g} is not below rho = p^-{constants.rho_val}")
    return g


def fixed_point_h(inst: FamilyInstance) -> Elem:
    """The fixed point of P_lambda + Q near 1, by Newton's method from 1."""
    ctx = inst.ctx
    one = ctx.one()
    if inst.q_is_zero:
        return one
    base = p_family_series(ctx, inst.lam) + inst.Q
    F = base - Series(ctx, [ctx.zero(), one])
    dF = derivative(F)
    z = one
    fz = evaluate(F, z)
    for _ in range(4 * ctx.N.bit_length() + 8):
        if fz.is_zero():
            break
        d = evaluate(dF, z)
        if d.is_zero():
            raise HenselPreconditionFailed("derivative of the fixed-point equation vanished")
        nxt = (z - fz / d).lift()
        fn = evaluate(F, nxt)
        if not fn.is_zero() and fn.val <= fz.val:
            break
        z, fz = nxt, fn
    # |F'(h)| = p, so the root lies within |F(z)|/p of z
    d = evaluate(dF, z)
    err = fz.prec if fz.is_zero() else fz.val
    return z.with_prec(ctx.to_units(err - d.val) if err - d.val < ctx.N / ctx.e else ctx.N)


def q_conj_eval(inst: FamilyInstance, z: Elem) -> Elem:
    """Q_lambda(z) = Q*_lambda(z + h - 1) + 1 - h."""
    if inst.q_is_zero:
        return z**inst.p * (z + inst.lam_over_p * (1 - z))
    h = inst.h
    y = z + (h - 1)
    return inst.qstar_eval(y) + (1 - h)


# ----------------------------------------------------------------------------
# regions

REGIONS = ("FixedBall", "Annulus", "NearOne", "Outside", "EscapeSphere")


@dataclass(frozen=True)
class RegionPrediction:
    """Predicted valuation of Q(z) (``about='z'``) or Q(z) - 1 (``about='z-1'``)."""

    region: str
    about: str
    relation: str  # "=" or ">="
    val: Fraction

    def check(self, image: Elem) -> bool:
        q = image - 1 if self.about == "z-1" else image
        if q.is_zero():
            if self.relation == ">=" and q.prec >= self.val:
                return True
            raise PrecisionLoss("image reads as 0; prediction undecidable")
        return q.val == self.val if self.relation == "=" else q.val >= self.val


def _exact(x: Elem, what: str) -> Fraction:
    if x.is_zero():
        raise PrecisionLoss(f"valuation of {what} undecidable at working precision")
    return x.val


def region_classify(inst: FamilyInstance, z: Elem) -> RegionPrediction:
    """Region of z and the valuation the region forces on its image."""
    k = inst.constants
    p = inst.p
    if z.is_zero():
        if z.prec >= k.rho_val:
            return RegionPrediction("FixedBall", "z", ">=", k.rho_val)
        raise PrecisionLoss("z reads as 0 above the fixed-ball radius")
    v = z.val
    if v >= k.rho_val:
        return RegionPrediction("FixedBall", "z", ">=", k.rho_val)
    if v > 0:
        return RegionPrediction("Annulus", "z", "=", -1 + p * v)
    if v < 0:
        if v < inst.r_hat_val:
            raise ValueError("point lies outside the domain ball")
        return RegionPrediction("Outside", "z", "=", -1 + (p + 1) * v)
    w = _exact(z - 1, "z - 1")
    if w > 0:
        return RegionPrediction("NearOne", "z-1", "=", w - 1)
    return RegionPrediction("EscapeSphere", "z", "=", Fraction(-1))


# ----------------------------------------------------------------------------
# itineraries

@dataclass
class ItineraryRecord:
    """Symbols of the orbit in B_1(0) (0) and B_1(1) (1), with how the run ended."""

    word: list = field(default_factory=list)
    status: str = "AtHorizon"
    step: int | None = None

    def word_str(self) -> str:
        return "".join(map(str, self.word))

    def to_dict(self) -> dict:
        return {"word": self.word_str(), "status": self.status, "step": self.step}


def _symbol(inst: FamilyInstance, z: Elem):
    """0, 1, 'fixed', 'out' or None (undecidable)."""
    rho = inst.constants.rho_val
    if z.is_zero():
        if z.prec >= rho:
            return "fixed"
        return 0 if z.prec > 0 else None
    v = z.val
    if v >= rho:
        return "fixed"
    if v > 0:
        return 0
    if v < 0:
        return "out"
    d = z - 1
    if d.is_zero():
        return 1 if d.prec > 0 else None
    return 1 if d.val > 0 else "out"


def _is_exact_one(z: Elem) -> bool:
    d = z - 1
    return d.is_zero() and d.prec_units >= z.ctx.N


def itinerary(inst: FamilyInstance, z: Elem, horizon: int) -> ItineraryRecord:
    """Itinerary of z for ``horizon`` steps.

    An element equal to 1 at full working precision is treated as the fixed
    point 1 itself.
    """
    rec = ItineraryRecord()
    for n in range(horizon):
        if _is_exact_one(z):
            rec.word.extend([1] * (horizon - n))
            return rec
        s = _symbol(inst, z)
        if s is None:
            rec.status, rec.step = "PrecisionLoss", n
            return rec
        if s == "out":
            rec.status, rec.step = "Escaped", n
            return rec
        if s == "fixed":
            rec.word.extend([0] * (horizon - n))
            rec.status, rec.step = "FellToFixedBall", n
            return rec
        rec.word.append(s)
        if n + 1 < horizon:
            z = q_conj_eval(inst, z)
    return rec


def filled_julia_member(inst: FamilyInstance, z: Elem, horizon: int):
    """('InKUpToHorizon', None) or ('Escaped', n) with Q^n(z) outside the domain ball."""
    for n in range(horizon + 1):
        if _is_exact_one(z):
            return "InKUpToHorizon", None
        if z.is_zero():
            if z.prec >= inst.constants.rho_val:
                return "InKUpToHorizon", None
            raise PrecisionLoss(f"iterate {n} reads as 0 above the fixed-ball radius")
        if z.val < inst.r_hat_val:
            return "Escaped", n
        if z.val >= inst.constants.rho_val:
            return "InKUpToHorizon", None
        if n < horizon:
            z = q_conj_eval(inst, z)
    return "InKUpToHorizon", None


# ----------------------------------------------------------------------------
# sampled checks of the local estimates

@dataclass
class LemmaReport:
    name: str
    samples: int = 0
    violations: int = 0
    precision_losses: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples, "violations": self.violations,
                "precision_losses": self.precision_losses, "witnesses": self.witnesses[:3]}


def _val(x: Elem) -> Fraction:
    if x.is_zero():
        raise PrecisionLoss("difference reads as 0")
    return x.val


def _with_val(ctx: Context, rng: random.Random, v: Fraction) -> Elem:
    return random_elem(ctx, rng, v, v)


def _lam_sample(ctx: Context, rng: random.Random) -> Elem:
    return 1 + random_elem(ctx, rng, Fraction(1, ctx.e), 2)


def verify_local_estimates(ctx: Context, Q: Series | None, count: int = 50, seed: int = 0,
                           max_m: int = 3, r_hat_val=-1) -> dict[str, LemmaReport]:
    """Sample constructed points and compare valuations with the local estimates.

    Every sample satisfies the hypotheses by construction; a violation is
    recorded with the digit strings needed to replay it.
    """
    from .padic import to_digit_string as ds

    k = FamilyConstants(ctx.p)
    rng = random.Random(seed)
    ms = [m for m in range(1, max_m + 1) if (k.r(m) * ctx.e).denominator == 1]
    if (k.S_val * ctx.e).denominator != 1 or not ms:
        raise ValueError("ramification index too small for the sampled radii")
    reports = {n: LemmaReport(n) for n in (
        "regions", "sphere_contraction", "near_one_expansion", "param_shift_B0",
        "param_shift_B1", "param_near_one_iterate", "param_sphere_iterate", "fixed_point_shift")}

    def run(name, fn):
        rep = reports[name]
        rep.samples += 1
        try:
            ok, witness = fn()
        except PrecisionLoss:
            rep.precision_losses += 1
            return
        if not ok:
            rep.violations += 1
            rep.witnesses.append(witness)

    one = ctx.one()
    for _ in range(count):
        lam0 = _lam_sample(ctx, rng)
        inst0 = FamilyInstance(ctx, Q, lam0, r_hat_val)

        # region predictions
        def regions():
            choice = rng.randrange(5)
            if choice == 0:
                z = random_elem(ctx, rng, k.rho_val, k.rho_val + 2)
            elif choice == 1:
                z = _with_val(ctx, rng, k.r(rng.choice(ms)))
            elif choice == 2:
                z = 1 + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            elif choice == 3:
                z = _with_val(ctx, rng, Fraction(rng.randint(math.ceil(ctx.e * r_hat_val), -1), ctx.e))
            elif ctx.f > 1:
                z = ctx.omega() + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            elif ctx.p > 2:
                z = ctx(-1) + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            else:
                z = ctx(0)  # F_2 has no residue other than 0 and 1
            if z.is_zero():
                return True, None
            pred = region_classify(inst0, z)
            img = q_conj_eval(inst0, z)
            return pred.check(img), {"z": ds(z), "lambda": ds(lam0), "region": pred.region}

        run("regions", regions)

        def sphere_contraction():
            m = rng.choice(ms)
            z0 = _with_val(ctx, rng, k.r(m))
            z1 = z0 + random_elem(ctx, rng, max(k.S_val, k.r(m) + Fraction(1, ctx.e)), k.S_val + 3)
            lhs = _val(q_conj_eval(inst0, z0) - q_conj_eval(inst0, z1))
            return lhs >= _val(z0 - z1) + k.r(m - 1), {"z0": ds(z0), "z1": ds(z1), "lambda": ds(lam0), "m": m}

        run("sphere_contraction", sphere_contraction)

        def near_one_expansion():
            z0 = one + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            z1 = one + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            lhs = _val(q_conj_eval(inst0, z0) - q_conj_eval(inst0, z1))
            return lhs == _val(z0 - z1) - 1, {"z0": ds(z0), "z1": ds(z1), "lambda": ds(lam0)}

        run("near_one_expansion", near_one_expansion)

        lam1 = lam0 + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
        inst1 = FamilyInstance(ctx, Q, lam1, r_hat_val)
        dl = _val(lam0 - lam1)

        def param_shift_b0():
            z = _with_val(ctx, rng, k.r(rng.choice(ms)))
            lhs = _val(p_family_eval(ctx, lam0, z) - p_family_eval(ctx, lam1, z))
            return lhs == -1 + ctx.p * z.val + dl, {"z": ds(z), "lambda0": ds(lam0), "lambda1": ds(lam1)}

        run("param_shift_B0", param_shift_b0)

        def param_shift_b1():
            z = one + random_elem(ctx, rng, Fraction(1, ctx.e), 3)
            lhs = _val(p_family_eval(ctx, lam0, z) - p_family_eval(ctx, lam1, z))
            return lhs == -1 + dl + _val(z - 1), {"z": ds(z), "lambda0": ds(lam0), "lambda1": ds(lam1)}

        run("param_shift_B1", param_shift_b1)

        def fixed_point_shift():
            lhs = inst0.h - inst1.h
            bound = k.rho_val + dl
            if lhs.is_zero():
                return lhs.prec >= bound, {"lambda0": ds(lam0), "lambda1": ds(lam1)}
            return lhs.val >= bound, {"lambda0": ds(lam0), "lambda1": ds(lam1)}

        run("fixed_point_shift", fixed_point_shift)

        def param_near_one_iterate():
            big_m = rng.randint(1, 3)
            a = Fraction(rng.randint(big_m * ctx.e, (big_m + 2) * ctx.e), ctx.e)
            x0 = one + random_elem(ctx, rng, big_m, big_m + 2)
            x1 = x0 + _with_val(ctx, rng, a)
            la1 = lam0 + _with_val(ctx, rng, a)
            i1 = inst0.with_lambda(la1)
            y0, y1 = x0, x1
            for _ in range(big_m):
                y0, y1 = q_conj_eval(inst0, y0), q_conj_eval(i1, y1)
            lhs = _val(y0 - y1)
            return lhs == a - big_m, {"x0": ds(x0), "x1": ds(x1), "lambda0": ds(lam0), "lambda1": ds(la1), "M": big_m}

        run("param_near_one_iterate", param_near_one_iterate)

        def param_sphere_iterate():
            m = rng.choice(ms)
            x0 = _with_val(ctx, rng, k.r(m))
            gap = k.S_val + rng.randint(0, 2 * ctx.e) * Fraction(1, ctx.e)
            x1 = x0 + _with_val(ctx, rng, gap) if rng.random() < 0.8 else x0
            b_hi = (gap if x1 is not x0 else k.S_val + 3) + k.rho_prod_val(m)
            b = k.S_val + Fraction(rng.randint(0, max(int((b_hi - k.S_val) * ctx.e) - 1, 0)), ctx.e)
            if not b < b_hi:
                return True, None
            la1 = lam0 + _with_val(ctx, rng, b)
            i1 = inst0.with_lambda(la1)
            y0, y1 = x0, x1
            for _ in range(m):
                y0, y1 = q_conj_eval(inst0, y0), q_conj_eval(i1, y1)
            lhs = _val(y0 - y1)
            return lhs == b, {"x0": ds(x0), "x1": ds(x1), "lambda0": ds(lam0), "lambda1": ds(la1), "m": m}

        run("param_sphere_iterate", param_sphere_iterate)
    return reports
