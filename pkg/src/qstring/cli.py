"""Command-line interface.

Every numeric input is a decimal string and every numeric output is a
decimal string carrying enough digits to round-trip at the working
precision. stdout carries only the JSON (or CSV) payload; diagnostics go
to stderr. Exit codes: 0 success, 1 a check exceeded its tolerance,
2 configuration error, 3 precision exhausted, 4 invalid shooting bracket.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction

from mpmath import mp

from .dynamics import (
    default_bracket,
    equivalence_check,
    perturbation_probe,
    residual,
    shoot_a1,
)
from .exceptions import DomainError, InvalidBracket, PrecisionExhausted, QStringError
from .moments import build_table, format_real, moment_by_quadrature, verify_recursion
from .opoly import (
    ladder_coeffs,
    recurrence_from_moments,
    verify_added_relations,
    verify_orthogonality,
    verify_structure_relation,
)
from .qcore import PrecisionCfg, QParams, as_fraction, decimal_string, to_mpf
from .weight import normalize

log = logging.getLogger("qstring")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_PRECISION, EXIT_BRACKET = 0, 1, 2, 3, 4


class ConfigError(QStringError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_common(sp):
    sp.add_argument("--q", default="0.5", help="deformation parameter in (0,1), decimal string")
    sp.add_argument("--kappa", default="0", help="exponent kappa >= 0, decimal string")
    sp.add_argument("--bits", type=int, default=512, help="working precision in bits")
    sp.add_argument("--tail-tol", default=None, help="series truncation tolerance (default 2^-(bits-16))")
    sp.add_argument("--max-terms", type=int, default=100_000)
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qstring", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="moment-route coefficients a_1..a_N and their residuals")
    _add_common(sp)
    sp.add_argument("--n-max", type=int, default=20)
    sp.add_argument("--tol", default=None, help="residual tolerance (default 2^-(bits/5))")

    sp = sub.add_parser("shoot", help="bisection shooting for a_1 on the positivity predicate")
    _add_common(sp)
    sp.add_argument("--horizon", type=int, default=20)
    sp.add_argument("--bracket-lo", default=None)
    sp.add_argument("--bracket-hi", default=None)
    sp.add_argument("--max-iter", type=int, default=None)

    sp = sub.add_parser("verify", help="check every ladder, moment and equivalence identity")
    _add_common(sp)
    sp.add_argument("--n-max", type=int, default=12)
    sp.add_argument("--tol", default=None, help="check tolerance (default 2^-(bits/5))")
    sp.add_argument("--seed-a1", default=None, help="initial value for the equivalence check (default mu_2)")

    sp = sub.add_parser("probe", help="divergence of a perturbed forward orbit")
    _add_common(sp)
    sp.add_argument("--horizon", type=int, default=40)
    sp.add_argument("--delta", default="1e-8")
    sp.add_argument("--seed-a1", default=None, help="unperturbed initial value (default mu_2)")

    sp = sub.add_parser("moments", help="even-moment table of the normalized weight")
    _add_common(sp)
    sp.add_argument("--n-max", type=int, default=20, help="table reaches order 2*n_max+2")
    return parser


def _config(args):
    try:
        p = QParams(args.q, args.kappa)
        cfg = PrecisionCfg(args.bits, args.tail_tol, args.max_terms)
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    for name in ("n_max", "horizon"):
        if getattr(args, name, 1) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be >= 1")
    return p, cfg


def _tolerance(args, cfg):
    if args.tol is None:
        return Fraction(1, 2 ** (cfg.working_bits // 5))
    tol = _decimal("--tol", args.tol)
    if tol <= 0:
        raise ConfigError("--tol must be positive")
    return tol


def _decimal(flag, text):
    try:
        return as_fraction(text)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


class _Out:
    def __init__(self, cfg):
        self.digits = cfg.digits

    def __call__(self, x):
        if isinstance(x, Fraction):
            return decimal_string(x, self.digits)
        return format_real(x, self.digits)


def _params_block(p, cfg, out):
    return {
        "q": out(p.q),
        "kappa": out(p.kappa),
        "bits": cfg.working_bits,
        "tail_tol": out(cfg.tail_tol),
    }


def _violation(v):
    return None if v is None else {"index": v.index, "sign": v.sign, "parity": v.parity}


def _moment_route(p, cfg, N):
    w = normalize(p, cfg)
    table = build_table(2 * N + 2, w, cfg)
    polys, seq = recurrence_from_moments(N, table, cfg)
    return w, table, polys, seq


def cmd_solve(args, stdout):
    p, cfg = _config(args)
    tol = _tolerance(args, cfg)
    out = _Out(cfg)
    N = args.n_max
    _, table, _, seq = _moment_route(p, cfg, N + 1)
    log.info("moment route: a_1 = mu_2 = %s", mp.nstr(table.mu[2], 20))
    rep = residual(seq, p, cfg)
    with cfg.workprec():
        ok = rep.max_rel_residual < to_mpf(tol)
        a = seq.values[:N]
        if args.format == "csv":
            rows = [(n, out(a[n - 1]), out(rep.per_n[n - 1])) for n in range(1, N + 1)]
            _write_csv(stdout, ("n", "a_n", "residual"), rows)
        else:
            _write_json(stdout, {
                "params": _params_block(p, cfg, out),
                "a": [out(x) for x in a],
                "residual_report": {
                    "n_range": list(rep.n_range),
                    "max_rel_residual": out(rep.max_rel_residual),
                    "per_n": [out(r) for r in rep.per_n],
                },
                "a1_from_integral": out(table.mu[2]),
                "tolerance": out(tol),
                "ok": bool(ok),
            })
    if not ok:
        log.warning("max residual %s exceeds tolerance %s", out(rep.max_rel_residual), out(tol))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_shoot(args, stdout):
    p, cfg = _config(args)
    out = _Out(cfg)
    with cfg.workprec():
        lo, hi = default_bracket(p, cfg)
        # nudge the default upper end just past the a_2 = 0 boundary
        hi = hi * (1 + cfg.tol())
        if args.bracket_lo is not None:
            lo = to_mpf(_decimal("--bracket-lo", args.bracket_lo))
        if args.bracket_hi is not None:
            hi = to_mpf(_decimal("--bracket-hi", args.bracket_hi))
        if not 0 < lo < hi:
            raise ConfigError("bracket must satisfy 0 < lo < hi")
    res = shoot_a1(args.horizon, p, cfg, bracket=(lo, hi), max_iter=args.max_iter)
    log.info("shooting: %d orbit evaluations, converged=%s", res.iterations, res.converged)
    w = normalize(p, cfg)
    mu2 = moment_by_quadrature(2, w, cfg)
    with cfg.workprec():
        lo, hi = res.a1_interval
        agree = bool(lo <= mu2 <= hi)
        payload = {
            "params": _params_block(p, cfg, out),
            "horizon": res.horizon,
            "bracket": [out(x) for x in res.bracket],
            "a1_interval": [out(lo), out(hi)],
            "width": out(hi - lo),
            "a1_mid": out(res.a1_mid),
            "iterations": res.iterations,
            "converged": res.converged,
            "certificate": {k: _violation(v) for k, v in res.certificate.items()},
            "mu2": out(mu2),
            "agreement": agree,
        }
    _emit_flat(stdout, payload, args.format)
    if not agree:
        log.warning("moment-route a_1 lies outside the shooting interval")
    return EXIT_OK if agree else EXIT_CHECK


def cmd_verify(args, stdout):
    p, cfg = _config(args)
    tol = _tolerance(args, cfg)
    out = _Out(cfg)
    n_max = args.n_max
    w, table, polys, seq = _moment_route(p, cfg, n_max + 1)
    lad = ladder_coeffs(seq, p, cfg)
    checks = {}
    with cfg.workprec():
        checks["structure_relation"] = [verify_structure_relation(n, polys, lad, p, cfg) for n in range(n_max + 1)]
        checks["added_relations"] = [verify_added_relations(n, seq, p, cfg) for n in range(1, n_max + 1)]
        checks["ladder_A_dual_formula"] = [
            abs(lad.A[n] - lad.A_alt[n]) / max(abs(lad.A[n]), abs(lad.A_alt[n]))
            for n in range(2, n_max + 1)
        ]
    rec = verify_recursion(range(0, n_max + 1, 2), w, cfg)
    checks["moment_recursion"] = [c.rel_diff for c in rec.checks]
    orth = []
    for n in range(n_max + 1):
        for m in (n, n + 2):
            if m > n_max:
                continue
            val = verify_orthogonality(n, m, polys, w, cfg)
            with cfg.workprec():
                if m == n:
                    orth.append(abs(val / polys.norms[n] - 1))
                else:
                    orth.append(abs(val) / mp.sqrt(polys.norms[n] * polys.norms[m]))
    checks["orthogonality"] = orth
    with cfg.workprec():
        seed = table.mu[2] if args.seed_a1 is None else to_mpf(_decimal("--seed-a1", args.seed_a1))
    eq = equivalence_check(seed, n_max, p, cfg)
    checks["equivalence"] = eq.per_n
    with cfg.workprec():
        summary = {}
        ok = True
        for name, vals in checks.items():
            worst = max(vals, default=mp.zero)
            passed = bool(worst < to_mpf(tol))
            ok &= passed
            summary[name] = {"max": out(worst), "count": len(vals), "pass": passed}
        summary["equivalence"]["compared_through"] = eq.compared_through
        _emit_flat(stdout, {"params": _params_block(p, cfg, out), "tolerance": out(tol),
                            "checks": summary, "ok": ok}, args.format)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_probe(args, stdout):
    p, cfg = _config(args)
    out = _Out(cfg)
    delta = _decimal("--delta", args.delta)
    if args.seed_a1 is None:
        a1 = moment_by_quadrature(2, normalize(p, cfg), cfg)
    else:
        with cfg.workprec():
            a1 = to_mpf(_decimal("--seed-a1", args.seed_a1))
        if not a1 > 0:
            raise ConfigError("--seed-a1 must be positive")
    with cfg.workprec():
        delta = to_mpf(delta)
    rep = perturbation_probe(a1, delta, args.horizon, p, cfg)
    with cfg.workprec():
        if args.format == "csv":
            _write_csv(stdout, ("n", "separation"), [(n, out(s)) for n, s in enumerate(rep.separation, 1)])
        else:
            _write_json(stdout, {
                "params": _params_block(p, cfg, out),
                "a1": out(rep.a1),
                "delta": out(rep.delta),
                "horizon": args.horizon,
                "separation": [out(s) for s in rep.separation],
                "perturbed_violation": _violation(rep.perturbed_violation),
                "baseline_violation": _violation(rep.baseline_violation),
            })
    return EXIT_OK


def cmd_moments(args, stdout):
    p, cfg = _config(args)
    table = build_table(2 * args.n_max + 2, normalize(p, cfg), cfg)
    if args.format == "csv":
        with cfg.workprec():
            _write_csv(stdout, ("n", "mu", "source"),
                       [(n, format_real(m, cfg.digits), s) for n, (m, s) in enumerate(zip(table.mu, table.source))])
    else:
        stdout.write(table.to_json(cfg.digits) + "\n")
    return EXIT_OK


def _write_json(stdout, payload):
    json.dump(payload, stdout, indent=2)
    stdout.write("\n")


def _write_csv(stdout, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    stdout.write(buf.getvalue())


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, "" if value is None else value))


def _emit_flat(stdout, payload, fmt):
    if fmt == "csv":
        rows = []
        _flatten("", payload, rows)
        _write_csv(stdout, ("key", "value"), rows)
    else:
        _write_json(stdout, payload)


COMMANDS = {
    "solve": cmd_solve,
    "shoot": cmd_shoot,
    "verify": cmd_verify,
    "probe": cmd_probe,
    "moments": cmd_moments,
}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        return COMMANDS[args.command](args, stdout)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionExhausted as exc:
        print(f"error: {exc}; increase --bits", file=sys.stderr)
        return EXIT_PRECISION
    except InvalidBracket as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRACKET


if __name__ == "__main__":
    sys.exit(main())
