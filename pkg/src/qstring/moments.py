"""Even moments of the normalized lattice measure.

Only the second moment is integrated. Higher even moments follow from
the exact stride-4 relation ``mu[n+4] = (1 - q**(n+kappa+1)) * mu[n]``,
which keeps the relative error flat in ``n``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from .exceptions import DomainError
from .qcore import PrecisionCfg, QParams, decimal_string, q_integral
from .weight import NormalizedWeight

__all__ = [
    "MomentTable",
    "RecursionCheck",
    "RecursionReport",
    "moment_by_quadrature",
    "recursion_factor",
    "build_table",
    "verify_recursion",
    "format_real",
]

QUADRATURE = "quadrature"
RECURSION = "recursion"
SYMMETRY = "symmetry"


def format_real(x, digits: int) -> str:
    return mp.nstr(x, digits, strip_zeros=False, min_fixed=1, max_fixed=0)


def recursion_factor(n: int, p: QParams):
    """``1 - q**(n + kappa + 1)`` at the ambient precision."""
    return 1 - p.power(n + p.kappa + 1)


def moment_by_quadrature(n: int, w: NormalizedWeight, cfg: PrecisionCfg) -> mpmath.mpf:
    if n < 0:
        raise DomainError("moment order must be >= 0")
    return q_integral(lambda x: x**n * w.eval(x), w.params, cfg)


@dataclass
class MomentTable:
    """Moments ``mu[0..max_order]`` with a provenance tag per entry."""

    params: QParams
    max_order: int
    mu: list
    source: list
    working_bits: int = 512

    def to_dict(self, digits: int | None = None) -> dict:
        digits = digits or PrecisionCfg(self.working_bits).digits
        return {
            "q": decimal_string(self.params.q, digits),
            "kappa": decimal_string(self.params.kappa, digits),
            "mu": [format_real(m, digits) for m in self.mu],
            "source": list(self.source),
        }

    def to_json(self, digits: int | None = None) -> str:
        with mp.workprec(self.working_bits):
            return json.dumps(self.to_dict(digits))

    @classmethod
    def from_json(cls, text: str, working_bits: int = 512) -> "MomentTable":
        data = json.loads(text)
        with mp.workprec(working_bits):
            mu = [mp.mpf(s) for s in data["mu"]]
        params = QParams(data["q"], data["kappa"])
        return cls(params, len(mu) - 1, mu, list(data["source"]), working_bits)


def build_table(max_order: int, w: NormalizedWeight, cfg: PrecisionCfg) -> MomentTable:
    if max_order < 4 or max_order % 2:
        raise DomainError("max_order must be an even integer >= 4")
    p = w.params
    mu2 = moment_by_quadrature(2, w, cfg)
    with cfg.workprec():
        mu = [mp.zero] * (max_order + 1)
        source = [SYMMETRY] * (max_order + 1)
        mu[0], source[0] = mp.one, QUADRATURE
        mu[2], source[2] = mu2, QUADRATURE
        for n in range(0, max_order - 3, 2):
            mu[n + 4] = recursion_factor(n, p) * mu[n]
            source[n + 4] = RECURSION
    return MomentTable(p, max_order, mu, source, cfg.working_bits)


@dataclass
class RecursionCheck:
    n: int
    lhs: mpmath.mpf  # (1 - q^(n+kappa+1)) * int x^n
    rhs: mpmath.mpf  # int x^(n+4)
    abs_diff: mpmath.mpf
    rel_diff: mpmath.mpf


@dataclass
class RecursionReport:
    checks: list = field(default_factory=list)

    @property
    def max_rel(self):
        return max((c.rel_diff for c in self.checks), default=mp.zero)

    @property
    def max_abs(self):
        return max((c.abs_diff for c in self.checks), default=mp.zero)


def verify_recursion(orders, w: NormalizedWeight, cfg: PrecisionCfg) -> RecursionReport:
    """Check ``(1 - q**(n+kappa+1)) * mu_n == mu_{n+4}`` with both sides integrated."""
    report = RecursionReport()
    for n in orders:
        lower = moment_by_quadrature(n, w, cfg)
        upper = moment_by_quadrature(n + 4, w, cfg)
        with cfg.workprec():
            lhs = recursion_factor(n, w.params) * lower
            diff = abs(lhs - upper)
            scale = max(abs(lhs), abs(upper))
            rel = diff / scale if scale else mp.zero
        report.checks.append(RecursionCheck(n, lhs, upper, diff, rel))
    return report
