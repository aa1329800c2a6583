"""Schedules, seeds, the parameter-refinement step, and certificates for wandering discs."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import NoRootAtRadius, ResidueFieldTooSmall, image_ball, solve_on_sphere
from .dynamics import FamilyConstants, FamilyInstance, itinerary
from .padic import (
    INF,
    Context,
    Elem,
    PadicError,
    PrecisionLoss,
    UltraBall,
    parse_digit_string,
    pi_power,
    random_elem,
    to_digit_string,
)
from .search import OrbitBallTracker, SearchStats, search_ball, word_constraints
from .series import Series

CERT_VERSION = 1


class ConditionViolated(PadicError):
    """A precondition inequality of the refinement step fails."""


class StageFailed(PadicError):
    """No parameter realising the next stage was found; carries the partial certificate."""

    def __init__(self, message: str, certificate: "WanderCertificate | None" = None):
        super().__init__(message)
        self.certificate = certificate


def frac_str(q) -> str | None:
    if q is None or q == INF:
        return None
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_frac(s) -> Fraction | None:
    return None if s is None else Fraction(s)


# ----------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class Schedule:
    """Block lengths: the target itinerary is 0^m0 1^M0 0^m1 1^M1 ..."""

    p: int
    M: tuple
    m: tuple

    @property
    def depth(self) -> int:
        return len(self.M)

    @property
    def N(self) -> list[int]:
        """N_0 = 0 and N_i = N_(i-1) + m_(i-1) + M_(i-1)."""
        out = [0]
        for a, b in zip(self.m, self.M):
            out.append(out[-1] + a + b)
        return out

    def prefix(self, stages: int | None = None) -> str:
        k = self.depth if stages is None else stages
        return "".join("0" * a + "1" * b for a, b in zip(self.m[:k], self.M[:k]))

    def to_dict(self) -> dict:
        return {"M": list(self.M), "m": list(self.m)}


def _minimal_m(k: FamilyConstants, M: int) -> int:
    m = 1
    while k.rho_prod_val(m) < M:
        m += 1
    return m


def schedule_sequences(p: int, depth: int) -> Schedule:
    """Minimal M_0 with p^-M_0 <= S, minimal increments of the same kind, minimal m_i."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    k = FamilyConstants(p)
    step = math.ceil(k.S_val)
    Ms = [step * (i + 1) for i in range(depth)]
    ms = [_minimal_m(k, M) for M in Ms]
    return Schedule(p, tuple(Ms), tuple(ms))


def check_wandering_condition(p: int, m_list, M_list):
    """Exact test of sum_{k<m_i} r_k >= M_i for each i.

    Returns ``(ok, margins)`` where ``margins[i]`` is the exact rational
    sum_{k<m_i} r_k - M_i; negative margins mark the failing indices.
    """
    if len(m_list) != len(M_list):
        raise ValueError("m and M lists differ in length")
    k = FamilyConstants(p)
    margins = [k.rho_prod_val(m) - M for m, M in zip(m_list, M_list)]
    return all(g >= 0 for g in margins), margins


def check_schedule_scales(p: int, M_list):
    """p^-M_0 <= S and p^-(M_(i+1) - M_i) <= S, as exact exponent margins."""
    S = FamilyConstants(p).S_val
    gaps = [Fraction(M_list[0])] + [Fraction(b - a) for a, b in zip(M_list, M_list[1:])] if M_list else []
    margins = [g - S for g in gaps]
    return all(g >= 0 for g in margins), margins


# ----------------------------------------------------------------------------
# seeds

def seed_point(inst: FamilyInstance, m0: int) -> Elem:
    """x with |x| = rho_m0 and Q^m0(x) = 1, by solving backwards from 1.

    Each step solves Q(y) = y_next on the sphere one level further out;
    branches are tried in the residue-digit order of the sphere solver and the
    first chain that completes is returned.
    """
    ctx = inst.ctx
    if m0 == 0:
        return ctx.one()
    k = inst.constants
    fn = inst.series
    first_error: PadicError | None = None

    def back(y: Elem, level: int):
        nonlocal first_error
        if level > m0:
            return y
        try:
            roots = solve_on_sphere(fn, y, k.r(level))
        except (NoRootAtRadius, ResidueFieldTooSmall, PrecisionLoss) as exc:
            first_error = first_error or exc
            return None
        for r in roots:
            out = back(r, level + 1)
            if out is not None:
                return out
        return None

    x = back(ctx.one(), 1)
    if x is None:
        if first_error is not None:
            raise first_error
        raise ResidueFieldTooSmall(f"no chain of preimages of 1 of length {m0} in the working field")
    return x


# ----------------------------------------------------------------------------
# refinement state

@dataclass
class WanderState:
    """x, a parameter, and the itinerary blocks its orbit is known to follow.

    ``blocks`` ends with a block of zeros, after which the orbit hits
    B[1, p^-goal]. Every parameter within p^-eps_val of ``inst.lam`` keeps the
    block structure (the isometry disc of the construction).
    """

    inst: FamilyInstance
    x: Elem
    blocks: list
    goal: Fraction
    eps_val: Fraction
    w0: Elem | None = None
    dist_val: object = None

    @property
    def n(self) -> int:
        return sum(b for _, b in self.blocks)


def _stage_ok(state: WanderState) -> bool:
    cons = word_constraints(state.inst.constants, state.blocks, state.goal)
    _, ok = OrbitBallTracker(state.inst).run(state.inst, state.x, INF, INF, cons)
    return ok


def extend_parameter(state: WanderState, M: int, m: int, goal=None, max_nodes: int = 20000,
                     find_w0: bool = True, stats: SearchStats | None = None) -> WanderState:
    """Refine the parameter so the itinerary continues with 1^M 0^m and then hits 1.

    The new parameter lies in B[lambda, p^-M]. ``goal`` is the required
    v(Q^(n+M+m)(x) - 1) (default M + v(S), the least that allows a further
    step). With ``find_w0`` the parameter w0 sending Q^(n+M)(x) into the
    fixed ball around 0 is also located and stored on the new state.
    """
    inst = state.inst
    ctx = inst.ctx
    k = inst.constants
    if Fraction(M) < state.eps_val:
        raise ConditionViolated(f"p^-{M} exceeds the isometry radius p^-{state.eps_val}")
    if not k.rho_prod_val(m) > M:
        raise ConditionViolated(f"p^{M} rho_(m-1)...rho_1 >= 1 for m = {m}")
    if state.goal < M:
        raise ConditionViolated(f"current hit depth {state.goal} is below M = {M}")
    goal = Fraction(M) + k.S_val if goal is None else Fraction(goal)
    units = ctx.to_units(Fraction(M))
    make = inst.with_lambda
    blocks = list(state.blocks) + [(1, M)]
    w0 = None
    if find_w0:
        zero = word_constraints(k, blocks, k.rho_val, final="zero")
        w0 = search_ball(make, inst.lam, units, zero, "lambda", state.x, max_nodes=max_nodes)
    blocks = blocks + [(0, m)]
    cons = word_constraints(k, blocks, goal)
    lam = search_ball(make, inst.lam, units, cons, "lambda", state.x, max_nodes=max_nodes, stats=stats)
    if lam is None:
        raise NoRootAtRadius(
            f"no parameter in B[lambda, p^-{M}] gives the next block 0^{m} with hit depth {goal} "
            "in the working field")
    d = lam - inst.lam
    return WanderState(make(lam), state.x, blocks, goal, k.S_val + M, w0,
                       INF if d.is_zero() else d.val)


def best_reachable_hit(state: WanderState, M: int, m: int, upper, max_nodes: int = 5000) -> Fraction:
    """Largest hit depth (in 1/e steps, below ``upper``) that the refinement step reaches."""
    ctx = state.inst.ctx
    e = ctx.e
    lo, hi = 0, int(Fraction(upper) * e) + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        try:
            extend_parameter(state, M, m, Fraction(mid, e), max_nodes=max_nodes, find_w0=False)
            lo = mid
        except NoRootAtRadius:
            hi = mid
    return Fraction(lo, e)


# ----------------------------------------------------------------------------
# certificates

@dataclass
class WanderCertificate:
    p: int
    f: int
    e: int
    precision: int
    r_hat_val: Fraction
    Q: list
    schedule: Schedule
    seed: str
    stages: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    Q_tail: dict | None = None
    failed_stage: dict | None = None
    version: int = CERT_VERSION

    @property
    def valid(self) -> bool:
        return self.failed_stage is None and all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "p": self.p,
            "f": self.f,
            "e": self.e,
            "precision": self.precision,
            "r_hat_val": frac_str(self.r_hat_val),
            "Q": [[int(i), int(a), int(b)] for i, a, b in self.Q],
            "Q_tail": self.Q_tail,
            "schedule": self.schedule.to_dict(),
            "seed": self.seed,
            "stages": self.stages,
            "checks": self.checks,
            "failed_stage": self.failed_stage,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "WanderCertificate":
        sch = d["schedule"]
        return cls(
            p=int(d["p"]), f=int(d["f"]), e=int(d["e"]), precision=int(d["precision"]),
            r_hat_val=Fraction(d["r_hat_val"]), Q=[list(t) for t in d["Q"]],
            schedule=Schedule(int(d["p"]), tuple(sch["M"]), tuple(sch["m"])),
            seed=d["seed"], stages=list(d["stages"]), checks=list(d.get("checks", [])),
            Q_tail=d.get("Q_tail"), failed_stage=d.get("failed_stage"), version=int(d.get("version", 1)),
        )


def _q_series(ctx: Context, terms, tail) -> Series | None:
    if not terms and not tail:
        return None
    return Series.from_spec(ctx, terms or [[0, 0, 1]], tail)


@dataclass
class WanderConfig:
    p: int = 2
    f: int = 1
    e: int | None = None
    precision: int | None = None
    r_hat_val: Fraction = Fraction(-1)
    Q: list = field(default_factory=list)
    Q_tail: dict | None = None
    depth: int = 1
    lambda0: Fraction = Fraction(1)
    max_nodes: int = 20000
    seed_tries: int = 40
    diagnose: bool = False

    def schedule(self) -> Schedule:
        return schedule_sequences(self.p, max(self.depth, 1))

    def ramification(self) -> int:
        sch = self.schedule()
        need = FamilyConstants(self.p).required_e(sch.m)
        if self.e is None:
            return need
        if self.e % need:
            raise ValueError(f"e = {self.e} must be a multiple of {need} for this schedule")
        return self.e

    def context(self) -> Context:
        e = self.ramification()
        sch = self.schedule()
        N = self.precision or e * (sch.N[-1] + max(sch.M) + 8)
        return Context(self.p, e=e, f=self.f, N=N)


def _seed_stage(cfg: WanderConfig, ctx: Context, Q, sch: Schedule) -> WanderState:
    """Stage 0: x with itinerary 0^m0 and a hit of depth M_0.

    The preimage chain of 1 is tried first at the configured parameter; when
    it does not exist in the working field, the parameter is searched
    instead with x fixed on the sphere of radius rho_m0.
    """
    k = FamilyConstants(cfg.p)
    m0 = sch.m[0]
    goal = Fraction(sch.M[0]) if cfg.depth >= 1 else Fraction(1, ctx.e)
    inst = FamilyInstance(ctx, Q, ctx(cfg.lambda0), cfg.r_hat_val)
    blocks = [(0, m0)]
    try:
        x = seed_point(inst, m0)
        st = WanderState(inst, x, blocks, goal, k.S_val)
        if _stage_ok(st):
            return st
    except (ResidueFieldTooSmall, NoRootAtRadius, PrecisionLoss):
        pass
    cons = word_constraints(k, blocks, goal)
    k0 = ctx.to_units(k.r(m0))
    for j in range(cfg.seed_tries):
        x = pi_power(ctx, k0) + (pi_power(ctx, k0 + j) if j else ctx.zero())
        lam = search_ball(inst.with_lambda, ctx.one(), 1, cons, "lambda", x, max_nodes=cfg.max_nodes)
        if lam is not None:
            return WanderState(FamilyInstance(ctx, Q, lam, cfg.r_hat_val), x, blocks, goal, k.S_val)
    raise ResidueFieldTooSmall(f"no seed with itinerary 0^{m0} and hit depth {goal} found")


def _stage_record(i: int, st: WanderState, prefix_len: int) -> dict:
    rec = {"i": i, "lambda": to_digit_string(st.inst.lam),
           "dist_exponent": frac_str(st.dist_val) if i else None, "prefix_len": prefix_len}
    if st.w0 is not None:
        rec["w0"] = to_digit_string(st.w0)
    return rec


def wander_search(cfg: WanderConfig) -> WanderCertificate:
    """Run the inductive construction to the configured depth and certify it.

    Depth d uses the first d schedule entries and certifies the prefix of
    length N_d; depth 0 certifies the seed alone (0^m0 followed by 1).
    Raises :class:`StageFailed` with a partial certificate when a stage
    cannot be realised in the working field.
    """
    sch_full = cfg.schedule()
    ctx = cfg.context()
    Q = _q_series(ctx, cfg.Q, cfg.Q_tail)
    sch = sch_full if cfg.depth >= 1 else Schedule(cfg.p, (), ())
    cert = WanderCertificate(cfg.p, cfg.f, ctx.e, ctx.N, Fraction(cfg.r_hat_val), [list(t) for t in cfg.Q],
                             sch, "", Q_tail=cfg.Q_tail)
    try:
        st = _seed_stage(cfg, ctx, Q, sch_full)
    except PadicError as exc:
        cert.failed_stage = {"i": 0, "reason": str(exc)}
        raise StageFailed(str(exc), cert) from exc
    cert.seed = to_digit_string(st.x)
    if cfg.depth == 0:
        cert.stages.append(_stage_record(0, st, sch_full.m[0] + 1))
        cert.checks = run_checks(cert, ctx, seed_only=True)
        return cert
    N = sch.N
    cert.stages.append(_stage_record(0, st, N[1]))
    for i in range(1, sch.depth):
        try:
            st = extend_parameter(st, sch.M[i - 1], sch.m[i], goal=sch.M[i], max_nodes=cfg.max_nodes)
        except PadicError as exc:
            info = {"i": i, "reason": str(exc)}
            if cfg.diagnose:
                best = best_reachable_hit(st, sch.M[i - 1], sch.m[i], sch.M[i], max_nodes=min(cfg.max_nodes, 5000))
                info["best_hit_exponent"] = frac_str(best)
                info["required_hit_exponent"] = frac_str(sch.M[i])
            cert.failed_stage = info
            cert.checks = run_checks(cert, ctx, stages=i)
            raise StageFailed(f"stage {i}: {exc}", cert) from exc
        cert.stages.append(_stage_record(i, st, N[i + 1]))
    cert.checks = run_checks(cert, ctx)
    return cert


# ----------------------------------------------------------------------------
# verification

def _check(name: str, ok: bool, witness) -> dict:
    return {"name": name, "pass": bool(ok), "witness": witness}


def _disc_images(inst: FamilyInstance, x: Elem, radius_val, steps: int):
    """Balls containing Q^t(D) for t = 0..steps, D = B[x, p^-radius_val]."""
    fn = inst.series
    ball = UltraBall(x, Fraction(radius_val), True)
    out = [ball]
    for _ in range(steps):
        img = image_ball(fn, ball)
        # centre the next ball on the forward orbit itself
        c = inst(ball.center)
        ball = UltraBall(c, min(img.radius_val, c.prec), True)
        out.append(ball)
    return out


def _balls_disjoint(a: UltraBall, b: UltraBall) -> bool:
    d = a.center - b.center
    r = min(a.radius_val, b.radius_val)
    if d.is_zero():
        return False
    return d.val < r


def run_checks(cert: WanderCertificate, ctx: Context, stages: int | None = None,
               seed_only: bool = False, samples: int = 20, rng_seed: int = 0) -> list[dict]:
    """Re-derive every ledger entry of ``cert`` inside ``ctx``."""
    p = cert.p
    k = FamilyConstants(p)
    sch = cert.schedule
    checks: list[dict] = []
    d = sch.depth if stages is None else stages
    ok, margins = check_wandering_condition(p, sch.m, sch.M)
    checks.append(_check("schedule_inequality", ok, [frac_str(g) for g in margins]))
    ok, margins = check_schedule_scales(p, list(sch.M))
    checks.append(_check("schedule_scale", ok, [frac_str(g) for g in margins]))
    if not cert.stages:
        return checks
    try:
        Q = _q_series(ctx, cert.Q, cert.Q_tail)
        x = parse_digit_string(ctx, cert.seed, exact=True)
        lams = [parse_digit_string(ctx, s["lambda"], exact=True) for s in cert.stages]
        insts = [FamilyInstance(ctx, Q, lam, cert.r_hat_val) for lam in lams]
    except (PadicError, ValueError) as exc:
        checks.append(_check("well_formed", False, str(exc)))
        return checks
    if seed_only:
        m0 = int(cert.stages[0]["prefix_len"]) - 1
        rec = itinerary(insts[0], x, m0 + 1)
        want = "0" * m0 + "1"
        checks.append(_check("itinerary_prefix", rec.word_str() == want,
                             {"expected": want, "got": rec.word_str(), "status": rec.status}))
        return checks
    d = min(d, len(insts))
    N = sch.N
    final = insts[d - 1]
    # each stage parameter realises its own prefix
    for i in range(d):
        want = sch.prefix(i + 1)
        rec = itinerary(insts[i], x, N[i + 1])
        got = rec.word_str()
        ok = got == want
        wit = {"expected": want, "got": got, "status": rec.status}
        if not ok:
            wit["first_mismatch"] = next((j for j, (a, b) in enumerate(zip(want, got)) if a != b), len(got))
        checks.append(_check(f"itinerary_prefix_stage_{i}", ok, wit))
    want = sch.prefix(d)
    # distances between consecutive parameters
    dist_ok, dist_wit = True, []
    for i in range(1, d):
        dv = lams[i] - lams[i - 1]
        v = dv.prec if dv.is_zero() else dv.val
        good = v >= sch.M[i - 1]
        claimed = cert.stages[i].get("dist_exponent")
        if claimed is not None and not dv.is_zero():
            good = good and Fraction(claimed) == dv.val
        dist_ok &= good
        dist_wit.append({"i": i, "exponent": frac_str(v), "required": frac_str(sch.M[i - 1])})
    checks.append(_check("parameter_distances", dist_ok, dist_wit))
    # the disc D = B[x, S] follows the same prefix
    rng = random.Random(rng_seed)
    bad = []
    for _ in range(samples):
        y = x + random_elem(ctx, rng, k.S_val, k.S_val + 4)
        got = itinerary(final, y, N[d]).word_str()
        if got != want:
            bad.append({"point": to_digit_string(y), "got": got})
    checks.append(_check("disc_itinerary", not bad, {"samples": samples, "mismatches": bad[:3]}))
    # image diameters of D
    try:
        balls = _disc_images(final, x, k.S_val, N[d])
    except PadicError as exc:
        checks.append(_check("diameter_ledger", False, str(exc)))
        return checks
    ledger, led_ok = [], True
    for i in range(d):
        t1 = N[i] + sch.m[i]
        need1 = k.S_val + sch.M[i]
        r1 = balls[t1].radius_val
        ledger.append({"step": t1, "exponent": frac_str(r1), "required": frac_str(need1)})
        led_ok &= r1 >= need1
        t2 = N[i + 1]
        r2 = balls[t2].radius_val
        ledger.append({"step": t2, "exponent": frac_str(r2), "required": frac_str(k.S_val)})
        led_ok &= r2 >= k.S_val
    checks.append(_check("diameter_ledger", led_ok, ledger))
    horizon = N[d - 1] + sch.m[d - 1]
    clash = None
    for a in range(horizon + 1):
        for b in range(a + 1, horizon + 1):
            if not _balls_disjoint(balls[a], balls[b]):
                clash = [a, b]
                break
        if clash:
            break
    checks.append(_check("disjoint_images", clash is None, {"horizon": horizon, "clash": clash}))
    return checks


@dataclass
class VerificationReport:
    status: str
    checks: list

    @property
    def failed(self) -> list:
        return [c for c in self.checks if not c["pass"]]

    def to_dict(self) -> dict:
        return {"status": self.status, "checks": self.checks}


def verify_certificate(cert: WanderCertificate | dict, precision_factor=2) -> VerificationReport:
    """Recheck a certificate from scratch at ``precision_factor`` times its precision."""
    if isinstance(cert, dict):
        cert = WanderCertificate.from_dict(cert)
    factor = Fraction(precision_factor)
    if factor < 1:
        raise ValueError("precision_factor must be at least 1")
    ctx = Context(cert.p, e=cert.e, f=cert.f, N=math.ceil(cert.precision * factor))
    seed_only = cert.schedule.depth == 0
    checks = run_checks(cert, ctx, seed_only=seed_only)
    if cert.failed_stage is not None:
        checks.append(_check("complete", False, cert.failed_stage))
    ok = all(c["pass"] for c in checks)
    return VerificationReport("VALID" if ok else "INVALID", checks)
