"""Command-line front end: JSON configs in, JSON documents out.

Exit codes: 0 success, 1 invalid config, 2 computation error (an error
document is written), 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .analysis import count_roots_on_sphere, hensel_iterates, hensel_lift, newton_polygon
from .dynamics import FamilyInstance, NotAdmissible, admit_perturbation, FamilyConstants, itinerary, \
    verify_local_estimates
from .padic import Context, PadicError, from_rational, parse_digit_string, to_digit_string
from .series import Series
from .wander import StageFailed, WanderCertificate, WanderConfig, frac_str, verify_certificate, wander_search

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _frac(v, name: str) -> Fraction:
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{name}: not a rational: {v!r}") from exc


def _terms(raw, name: str) -> list:
    if raw is None:
        return []
    try:
        out = [[int(i), int(a), int(b)] for i, a, b in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected [[index, num, den], ...]") from exc
    if any(t[0] < 0 or t[2] == 0 for t in out):
        raise ConfigError(f"{name}: negative index or zero denominator")
    return out


def _context(cfg: dict, default_e: int = 1) -> Context:
    try:
        p = int(cfg["p"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("config needs an integer prime p") from exc
    e = cfg.get("e", default_e)
    e = default_e if e in (None, "auto") else int(e)
    try:
        return Context(p, e=e, f=int(cfg.get("f", 1)), N=int(cfg.get("precision", 40 * e)))
    except (ValueError, PadicError) as exc:
        raise ConfigError(str(exc)) from exc


def _value(ctx: Context, v, name: str):
    if isinstance(v, str) and ("@" in v):
        try:
            return parse_digit_string(ctx, v)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    return from_rational(ctx, _frac(v, name))


def _q_series(ctx: Context, cfg: dict):
    terms = _terms(cfg.get("Q"), "Q")
    tail = cfg.get("Q_tail")
    if not terms and not tail:
        return None
    return Series.from_spec(ctx, terms or [[0, 0, 1]], tail)


def _admit(ctx: Context, cfg: dict):
    r_hat = _frac(cfg.get("r_hat_val", -1), "r_hat_val")
    if not r_hat < 0:
        raise ConfigError("r_hat_val must be negative (domain radius above 1)")
    Q = _q_series(ctx, cfg)
    if Q is not None:
        try:
            admit_perturbation(Q, FamilyConstants(ctx.p), r_hat)
        except NotAdmissible as exc:
            raise ConfigError(f"admission: {exc}") from exc
    return Q, r_hat


# ----------------------------------------------------------------------------
# subcommands: each returns (exit code, document)

def cmd_verify_lemmas(cfg: dict):
    p = int(cfg.get("p", 2))
    k = FamilyConstants(p)
    ctx = _context(cfg, default_e=k.required_e(range(1, int(cfg.get("max_m", 3)) + 1)))
    Q, r_hat = _admit(ctx, cfg)
    reps = verify_local_estimates(ctx, Q, count=int(cfg.get("count", 50)), seed=int(cfg.get("seed", 0)),
                                  max_m=int(cfg.get("max_m", 3)), r_hat_val=r_hat)
    doc = {"reports": [r.to_dict() for r in reps.values()]}
    ok = all(r.ok for r in reps.values())
    doc["status"] = "PASS" if ok else "FAIL"
    return (EXIT_OK if ok else EXIT_VERIFY), doc


def cmd_hensel(cfg: dict):
    ctx = _context(cfg)
    fn = Series.from_spec(ctx, _terms(cfg.get("poly"), "poly"))
    z0 = _value(ctx, cfg.get("z0", 0), "z0")
    steps = [{"point": to_digit_string(s.point), "residual_val": frac_str(s.residual_val),
              "deriv_val": frac_str(s.deriv_val)} for s in hensel_iterates(fn, z0)]
    root = hensel_lift(fn, z0)
    return EXIT_OK, {"root": to_digit_string(root), "iterates": steps}


def cmd_newton(cfg: dict):
    ctx = _context(cfg)
    fn = Series.from_spec(ctx, _terms(cfg.get("poly"), "poly"))
    poly = newton_polygon(fn)
    doc = {"vertices": [[i, frac_str(v)] for i, v in poly.vertices],
           "segments": [{"slope": frac_str(s), "length": n} for s, n in poly.segments],
           "root_valuations": [{"valuation": frac_str(v), "count": n} for v, n in poly.root_valuations()]}
    if "radius_val" in cfg:
        doc["count_on_sphere"] = count_roots_on_sphere(fn, _frac(cfg["radius_val"], "radius_val"))
    return EXIT_OK, doc


def cmd_itinerary(cfg: dict):
    ctx = _context(cfg)
    Q, r_hat = _admit(ctx, cfg)
    lam = _value(ctx, cfg.get("lambda", 1), "lambda")
    try:
        inst = FamilyInstance(ctx, Q, lam, r_hat)
    except NotAdmissible as exc:
        raise ConfigError(str(exc)) from exc
    z = _value(ctx, cfg.get("point", 0), "point")
    rec = itinerary(inst, z, int(cfg.get("horizon", 20)))
    return EXIT_OK, rec.to_dict()


def _wander_config(cfg: dict) -> WanderConfig:
    ctx = _context(cfg)  # validates p, f
    _admit(ctx, cfg)
    e = cfg.get("e", "auto")
    try:
        out = WanderConfig(
            p=ctx.p, f=ctx.f, e=None if e in (None, "auto") else int(e),
            precision=None if cfg.get("precision") in (None, "auto") else int(cfg["precision"]),
            r_hat_val=_frac(cfg.get("r_hat_val", -1), "r_hat_val"), Q=_terms(cfg.get("Q"), "Q"),
            Q_tail=cfg.get("Q_tail"), depth=int(cfg.get("depth", 1)),
            lambda0=_frac(cfg.get("lambda0", 1), "lambda0"), max_nodes=int(cfg.get("max_nodes", 20000)),
            diagnose=bool(cfg.get("diagnose", False)))
        out.ramification()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if out.depth < 0:
        raise ConfigError("depth must be non-negative")
    return out


def cmd_wander(cfg: dict):
    wc = _wander_config(cfg)
    try:
        cert = wander_search(wc)
    except StageFailed as exc:
        doc = {"error": "StageFailed", "message": str(exc),
               "partial_certificate": exc.certificate.to_dict() if exc.certificate else None}
        return EXIT_COMPUTE, doc
    return (EXIT_OK if cert.valid else EXIT_VERIFY), cert.to_dict()


def cmd_check(cfg: dict, factor):
    try:
        cert = WanderCertificate.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed certificate: {exc}") from exc
    rep = verify_certificate(cert, factor)
    doc = rep.to_dict()
    doc["failed"] = [c["name"] for c in rep.failed]
    return (EXIT_OK if rep.status == "VALID" else EXIT_VERIFY), doc


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padicwander", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "verify-lemmas": "sample the local valuation estimates of the family",
        "hensel": "Newton/Hensel lift of a root of a polynomial (keys: poly, z0)",
        "newton": "Newton polygon and root count on a sphere (keys: poly, radius_val)",
        "itinerary": "itinerary of a point (keys: Q, lambda, point, horizon)",
        "wander": "run the parameter construction and emit a certificate (keys: p, f, e, Q, depth, ...)",
        "check": "re-verify a certificate at higher precision",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("config", help="JSON config file ('-' for stdin); for 'check', the certificate")
        sp.add_argument("-o", "--output", help="write the result document here instead of stdout")
        if name == "check":
            sp.add_argument("--factor", default="2", help="precision multiplier, a rational >= 1 (default 2)")
    return ap


def _load(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def run(command: str, cfg: dict, factor="2"):
    """Dispatch one subcommand; returns (exit code, document)."""
    try:
        if command == "verify-lemmas":
            return cmd_verify_lemmas(cfg)
        if command == "hensel":
            return cmd_hensel(cfg)
        if command == "newton":
            return cmd_newton(cfg)
        if command == "itinerary":
            return cmd_itinerary(cfg)
        if command == "wander":
            return cmd_wander(cfg)
        if command == "check":
            return cmd_check(cfg, _frac(factor, "factor"))
        raise ConfigError(f"unknown command {command!r}")
    except ConfigError as exc:
        return EXIT_CONFIG, {"error": "InvalidConfig", "message": str(exc)}
    except (PadicError, ValueError, ZeroDivisionError) as exc:
        return EXIT_COMPUTE, {"error": type(exc).__name__, "message": str(exc)}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        code, doc = EXIT_CONFIG, {"error": "InvalidConfig", "message": str(exc)}
    else:
        code, doc = run(args.command, cfg, getattr(args, "factor", "2"))
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
