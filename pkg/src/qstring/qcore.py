"""Arbitrary-precision q-calculus primitives.

Every real is an ``mpmath.mpf`` at the working precision of a
:class:`PrecisionCfg`.  Problem parameters are stored as exact
``Fraction`` values so that the same :class:`QParams` can feed both the
big-float path and the exact-rational test path.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, NamedTuple

import gmpy2
import mpmath
from mpmath import mp

from .exceptions import DomainError, NonFiniteValue, ToleranceUnreachable

__all__ = [
    "QParams",
    "PrecisionCfg",
    "ProductEstimate",
    "as_fraction",
    "to_mpf",
    "is_exact",
    "decimal_string",
    "q_bracket",
    "q_derivative_monomial",
    "q_pochhammer_inf",
    "q_integral",
]


def as_fraction(value) -> Fraction:
    """Convert a decimal string, rational, float or mpf to an exact Fraction."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise DomainError(f"not a decimal number: {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"not a finite number: {value!r}")
        return Fraction(value)
    if isinstance(value, mpmath.mpf):
        if not mp.isfinite(value):
            raise DomainError(f"not a finite number: {value!r}")
        man, exp = value.man_exp
        return Fraction(man) * Fraction(2) ** exp
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def to_mpf(value) -> mpmath.mpf:
    """Round ``value`` to an mpf at the ambient mpmath precision."""
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    return mp.mpf(value)


def is_exact(*values) -> bool:
    """True when every value is an int or Fraction (exact-rational mode)."""
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def _exact_power(base: Fraction, e: Fraction) -> Fraction:
    if e.denominator == 1:
        return base ** int(e)
    raised = base ** e.numerator
    roots = []
    for part in (raised.numerator, raised.denominator):
        root, ok = gmpy2.iroot(gmpy2.mpz(part), e.denominator)
        if not ok:
            raise DomainError(f"{base}**({e}) is irrational; exact mode needs a rational power")
        roots.append(int(root))
    return Fraction(roots[0], roots[1])


@dataclass(frozen=True)
class QParams:
    """Problem instance ``(q, kappa)`` with ``0 < q < 1`` and ``kappa >= 0``.

    Both fields are converted to exact fractions on construction, so
    ``QParams("0.3", "2.5")`` means exactly 3/10 and 5/2.
    """

    q: Fraction
    kappa: Fraction

    def __post_init__(self):
        q = as_fraction(self.q)
        kappa = as_fraction(self.kappa)
        if not 0 < q < 1:
            raise DomainError("q must lie in (0,1)")
        if kappa < 0:
            raise DomainError("kappa must be >= 0")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "kappa", kappa)

    def q_value(self, exact=False):
        return self.q if exact else to_mpf(self.q)

    def kappa_value(self, exact=False):
        return self.kappa if exact else to_mpf(self.kappa)

    def power(self, e, exact=False):
        """``q**e`` for a rational exponent ``e``.

        In exact mode the result must itself be rational; otherwise the
        power is evaluated at the ambient mpmath precision.
        """
        e = as_fraction(e)
        if exact:
            return _exact_power(self.q, e)
        if e.denominator == 1:
            return mp.power(to_mpf(self.q), int(e))
        return mp.power(to_mpf(self.q), to_mpf(e))


@dataclass(frozen=True)
class PrecisionCfg:
    """Working precision and truncation controls.

    ``tail_tol`` defaults to ``2**-(working_bits - 16)``.
    """

    working_bits: int = 512
    tail_tol: Fraction | None = None
    max_terms: int = 100_000

    def __post_init__(self):
        if int(self.working_bits) != self.working_bits or self.working_bits < 64:
            raise DomainError("working_bits must be an integer >= 64")
        if self.max_terms < 16:
            raise DomainError("max_terms must be >= 16")
        tol = self.tail_tol
        tol = Fraction(1, 2 ** (self.working_bits - 16)) if tol is None else as_fraction(tol)
        if not tol > Fraction(1, 2 ** (self.working_bits - 8)):
            raise DomainError(
                f"tail_tol must exceed 2^-{self.working_bits - 8} to be resolvable at {self.working_bits} bits"
            )
        object.__setattr__(self, "working_bits", int(self.working_bits))
        object.__setattr__(self, "tail_tol", tol)

    def workprec(self):
        return mp.workprec(self.working_bits)

    def tol(self) -> mpmath.mpf:
        """``tail_tol`` as an mpf; call inside :meth:`workprec`."""
        return to_mpf(self.tail_tol)

    @property
    def digits(self) -> int:
        # ceil(bits*log10 2) + 1 digits are needed for a guaranteed round trip
        return max(math.ceil(self.working_bits * 0.302), math.ceil(self.working_bits * math.log10(2)) + 1)

    def with_bits(self, bits: int) -> "PrecisionCfg":
        """Same relative tolerance scaled to ``bits``."""
        return PrecisionCfg(bits, None, self.max_terms)


def precision(cfg: PrecisionCfg | None):
    """Enter ``cfg``'s precision, or keep the ambient one when ``cfg`` is None."""
    return cfg.workprec() if cfg is not None else contextlib.nullcontext()


def q_bracket(n: int, p: QParams, exact=False, cfg: PrecisionCfg | None = None):
    """The q-number ``(1 - q**n) / (1 - q)``."""
    if n < 0:
        raise DomainError("q_bracket needs n >= 0")
    with precision(cfg):
        q = p.q_value(exact)
        return (1 - q**n) / (1 - q)


def q_derivative_monomial(n: int, p: QParams, exact=False, cfg: PrecisionCfg | None = None):
    """Coefficient ``c`` with ``D_q x**n = c * x**(n-1)``; zero for constants."""
    if n < 0:
        raise DomainError("monomial degree must be >= 0")
    if n == 0:
        return Fraction(0) if exact else mp.zero
    return q_bracket(n, p, exact, cfg)


class ProductEstimate(NamedTuple):
    value: mpmath.mpf
    error: mpmath.mpf
    terms: int
    exact: bool


def q_pochhammer_inf(a, qq, cfg: PrecisionCfg) -> ProductEstimate:
    """Infinite product ``prod_{j>=0} (1 - a*qq**j)``.

    The product stops at the first factor with ``|a*qq**j| < tail_tol``.
    The omitted factors are bounded by
    ``|prod (1 + y_j) - 1| <= exp(sum |y_j|) - 1`` with a geometric sum,
    which gives the returned ``error``. A factor that is exactly zero
    yields an exact zero (``exact=True``).
    """
    with cfg.workprec():
        a = to_mpf(as_fraction(a)) if not isinstance(a, mpmath.mpf) else +a
        qq = to_mpf(as_fraction(qq)) if not isinstance(qq, mpmath.mpf) else +qq
        if not 0 < qq < 1:
            raise DomainError("Pochhammer base must lie in (0,1)")
        tol = cfg.tol()
        value = mp.one
        t = a
        j = 0
        while abs(t) >= tol:
            if j >= cfg.max_terms:
                raise ToleranceUnreachable(
                    f"q-Pochhammer did not reach tail_tol within {cfg.max_terms} factors"
                )
            factor = 1 - t
            if factor == 0:
                return ProductEstimate(mp.zero, mp.zero, j + 1, True)
            value *= factor
            t *= qq
            j += 1
        tail = abs(t) / (1 - qq)
        return ProductEstimate(value, abs(value) * mp.expm1(tail), j, False)


def q_integral(f: Callable, p: QParams, cfg: PrecisionCfg):
    """Jackson integral of ``f`` over [-1, 1]:
    ``(1-q) * sum_k (f(q**k) + f(-q**k)) * q**k``.

    Summation stops once the current term is below ``tail_tol`` and the
    geometric remainder ``2*M*q**(k+1)/(1-q)`` is as well, where ``M`` is
    the largest ``|f|`` over the last two lattice levels.
    """
    with cfg.workprec():
        q = p.q_value()
        tol = cfg.tol()
        total = mp.zero
        x = mp.one
        prev = mp.zero
        for k in range(cfg.max_terms):
            fp = mp.mpf(f(x))
            fm = mp.mpf(f(-x))
            for xv, v in ((x, fp), (-x, fm)):
                if not mp.isfinite(v):
                    raise NonFiniteValue(k, xv, v)
            term = (fp + fm) * x
            total += term
            level = max(abs(fp), abs(fm))
            bound = 2 * max(level, prev) * x * q / (1 - q)
            if abs(term) < tol and bound < tol:
                return (1 - q) * total
            prev = level
            x *= q
        raise ToleranceUnreachable(f"q-integral did not reach tail_tol within {cfg.max_terms} lattice levels")


def decimal_string(value: Fraction, digits: int) -> str:
    """Exact decimal for short terminating fractions, else ``digits`` significant digits."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    places = max(twos, fives)
    if den == 1 and places <= digits:
        scaled = value.numerator * 10**places // value.denominator
        sign = "-" if scaled < 0 else ""
        body = str(abs(scaled)).rjust(places + 1, "0")
        if places == 0:
            return sign + body
        return f"{sign}{body[:-places]}.{body[-places:]}"
    with mp.workprec(int(digits / 0.30103) + 8):
        return mp.nstr(to_mpf(value), digits, strip_zeros=False)
