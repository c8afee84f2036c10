"""Forward iteration of the string equation, residuals and positivity shooting.

The a-form map at index ``n`` is

    a_n (a_{n+1} + d_n a_n + q^2 a_{n-1} + c_n a_{n+1} a_n a_{n-1}) = R_n

with ``c_n = q^(3-2n-kappa)`` for both parities and

    n even:  d_n = q^(1-n-kappa),  R_n = (1 - q^n) q^(kappa+n-1)
    n odd:   d_n = q^(1-n),        R_n = (q^-kappa - q^n) q^(kappa+n-1)

It is linear in ``a_{n+1}``. The b-form map replaces the cubic and
``d_n`` terms by ``b_n + (1-q^2) sum_{j<=n-2} b_j`` with the same
``R_n``.

Shooting horizons count forward steps: horizon ``N`` checks the
positivity of ``a_2 .. a_{N+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp

from .exceptions import DegenerateStep, DomainError, InvalidBracket
from .opoly import CoeffSequence
from .qcore import PrecisionCfg, QParams, is_exact, precision, to_mpf

__all__ = [
    "ForwardMap",
    "Violation",
    "Orbit",
    "ShootResult",
    "ResidualReport",
    "EquivalenceReport",
    "ProbeReport",
    "step_a",
    "step_b",
    "forward_orbit",
    "residual",
    "equivalence_check",
    "default_bracket",
    "shoot_a1",
    "perturbation_probe",
]


class ForwardMap:
    """Per-index coefficients ``(c_n, d_n, R_n)`` cached for one precision/mode.

    Create inside the precision context the map will be used in.
    """

    def __init__(self, p: QParams, exact=False):
        self.p = p
        self.exact = exact
        self.q2 = p.q_value(exact) ** 2
        self._cache = {}

    def coefficients(self, n: int):
        try:
            return self._cache[n]
        except KeyError:
            pass
        p, ex = self.p, self.exact
        c = p.power(3 - 2 * n - p.kappa, ex)
        if n % 2 == 0:
            d = p.power(1 - n - p.kappa, ex)
            R = (1 - p.power(n, ex)) * p.power(p.kappa + n - 1, ex)
        else:
            d = p.power(1 - n, ex)
            R = (p.power(-p.kappa, ex) - p.power(n, ex)) * p.power(p.kappa + n - 1, ex)
        self._cache[n] = (c, d, R)
        return c, d, R

    def step_a(self, n, a_nm1, a_n):
        c, d, R = self.coefficients(n)
        lin = a_n * (1 + c * a_n * a_nm1)
        if lin == 0:
            raise DegenerateStep(f"a-form step at n={n} has zero linear coefficient")
        return (R - a_n * (d * a_n + self.q2 * a_nm1)) / lin

    def step_b(self, n, b_nm1, b_n, S):
        if b_n == 0:
            raise DegenerateStep(f"b-form step at n={n} divides by b_n = 0")
        R = self.coefficients(n)[2]
        return R / b_n - b_n - b_nm1 - (1 - self.q2) * S

    def a_terms(self, n, a_nm1, a_n, a_np1):
        """The four left-hand terms of the a-form equation and its right side."""
        c, d, R = self.coefficients(n)
        return [a_n * a_np1, d * a_n * a_n, self.q2 * a_nm1 * a_n, c * a_np1 * a_n * a_n * a_nm1], R

    def b_terms(self, n, b_nm1, b_n, b_np1, S):
        R = self.coefficients(n)[2]
        return [b_n * b_np1, b_n * b_n, b_n * b_nm1, (1 - self.q2) * S * b_n], R


def step_a(n: int, a_nm1, a_n, p: QParams, cfg: PrecisionCfg | None = None):
    """``a_{n+1}`` from ``(a_{n-1}, a_n)``; exact when the inputs are rational."""
    if n < 1:
        raise DomainError("step index n must be >= 1")
    exact = is_exact(a_nm1, a_n)
    with precision(cfg):
        return ForwardMap(p, exact).step_a(n, a_nm1, a_n)


def step_b(n: int, b_nm1, b_n, S, p: QParams, cfg: PrecisionCfg | None = None):
    """``b_{n+1}`` where ``S = b_1 + ... + b_{n-2}`` is supplied by the caller."""
    if n < 1:
        raise DomainError("step index n must be >= 1")
    exact = is_exact(b_nm1, b_n, S)
    with precision(cfg):
        return ForwardMap(p, exact).step_b(n, b_nm1, b_n, S)


@dataclass(frozen=True)
class Violation:
    """First non-positive entry of an orbit."""

    index: int
    sign: str  # "negative" or "zero"

    @property
    def parity(self) -> str:
        return "even" if self.index % 2 == 0 else "odd"


@dataclass
class Orbit:
    values: list  # a_1, a_2, ...; stops at the first violating entry
    violation: Violation | None


def forward_orbit(a1, steps: int, p: QParams, cfg: PrecisionCfg | None = None, form="a", fmap=None) -> Orbit:
    """Iterate the a- or b-form map ``steps`` times from ``a1``, stopping at the first ``a_n <= 0``."""
    if form not in ("a", "b"):
        raise DomainError("form must be 'a' or 'b'")
    with precision(cfg):
        exact = is_exact(a1)
        a1 = a1 if exact else mp.mpf(a1)
        fm = fmap or ForwardMap(p, exact)
        values = [a1]
        if not a1 > 0:
            return Orbit(values, Violation(1, "zero" if a1 == 0 else "negative"))
        prev, cur = 0 * a1, a1
        S = 0 * a1  # b_1 + ... + b_{n-2}
        for n in range(1, steps + 1):
            if form == "a":
                nxt = fm.step_a(n, prev, cur)
            else:
                nxt = fm.step_b(n, prev, cur, S)
                S = S + prev
            values.append(nxt)
            if not nxt > 0:
                return Orbit(values, Violation(n + 1, "zero" if nxt == 0 else "negative"))
            prev, cur = cur, nxt
        return Orbit(values, None)


@dataclass
class ResidualReport:
    n_range: tuple
    max_rel_residual: object
    per_n: list = field(default_factory=list)


def residual(seq: CoeffSequence, p: QParams, cfg: PrecisionCfg | None = None) -> ResidualReport:
    """Per-index residual ``|LHS - RHS| / max |term|`` of the sequence's defining equation.

    Interior indices ``n = 1 .. len(seq)-1`` are checked; the b-form
    sequence is checked against the b-form equation.
    """
    exact = seq.exact
    a = seq.at
    per_n = []
    with precision(cfg):
        zero = Fraction(0) if exact else mp.zero
        fm = ForwardMap(p, exact)
        for n in range(1, len(seq)):
            if seq.form == "a":
                terms, R = fm.a_terms(n, a(n - 1), a(n), a(n + 1))
            else:
                terms, R = fm.b_terms(n, a(n - 1), a(n), a(n + 1), seq.partial_sum(n - 2))
            lhs = sum(terms, zero)
            scale = max([abs(t) for t in terms] + [abs(R)])
            per_n.append(abs(lhs - R) / scale if scale else zero)
        worst = max(per_n, default=zero)
    seq.residuals = per_n
    return ResidualReport((1, len(seq) - 1) if per_n else (), worst, per_n)


@dataclass
class EquivalenceReport:
    N: int
    compared_through: int
    max_rel_gap: object
    per_n: list
    a_violation: Violation | None
    b_violation: Violation | None


def equivalence_check(a1, N: int, p: QParams, cfg: PrecisionCfg) -> EquivalenceReport:
    """Iterate both maps from the same ``a1`` and compare ``a_1..a_N``.

    Comparison stops at the last index where both orbits are positive;
    losing positivity is reported, not raised.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    with cfg.workprec():
        a1 = mp.mpf(a1)
        if not a1 > 0:
            raise DomainError("a1 must be positive")
        fm = ForwardMap(p)
        oa = forward_orbit(a1, N - 1, p, fmap=fm, form="a")
        ob = forward_orbit(a1, N - 1, p, fmap=fm, form="b")
        limit = N
        for orb in (oa, ob):
            if orb.violation is not None:
                limit = min(limit, orb.violation.index - 1)
        gaps = [abs(x - y) / abs(x) for x, y in zip(oa.values[:limit], ob.values[:limit])]
        return EquivalenceReport(N, limit, max(gaps, default=mp.zero), gaps, oa.violation, ob.violation)


@dataclass
class ShootResult:
    a1_interval: tuple
    horizon: int
    iterations: int
    a1_mid: mpmath.mpf
    certificate: dict
    converged: bool
    bracket: tuple


def default_bracket(p: QParams, cfg: PrecisionCfg):
    """``(tail_tol, sqrt(1 - q^(kappa+1)))``; above the upper end ``a_2 < 0``."""
    with cfg.workprec():
        return cfg.tol(), mp.sqrt(1 - p.power(p.kappa + 1))


def _key(v: Violation | None):
    return None if v is None else v.parity


def shoot_a1(N: int, p: QParams, cfg: PrecisionCfg, bracket=None, max_iter: int | None = None) -> ShootResult:
    """Bracket the initial value whose orbit stays positive for ``N`` steps.

    Orbits starting below the positive solution first fail at one index
    parity and orbits above it at the other. Each ``a1`` is classified by
    that parity (or as positive through the horizon). Bisection runs on
    a fixed dyadic grid of the initial bracket whose spacing is below
    ``tail_tol``, so the boundaries found for different horizons are
    comparable. The returned interval runs from the last grid point that
    fails low to the first grid point that fails high; a bracket end
    that never fails is kept as is.
    """
    if N < 1:
        raise DomainError("horizon N must be >= 1")
    max_iter = 4 * cfg.working_bits if max_iter is None else max_iter
    with cfg.workprec():
        lo0, hi0 = default_bracket(p, cfg) if bracket is None else (mp.mpf(bracket[0]), mp.mpf(bracket[1]))
        if not 0 < lo0 < hi0:
            raise DomainError("bracket must satisfy 0 < lo < hi")
        tol = cfg.tol()
        width0 = hi0 - lo0
        depth = max(1, math.ceil(float(mp.log(width0 / tol, 2))))
        converged = depth <= max_iter
        depth = min(depth, max_iter)
        fm = ForwardMap(p)
        iterations = 0
        cache = {}

        def point(i):
            return lo0 + width0 * mp.ldexp(i, -depth)

        def classify(i):
            nonlocal iterations
            if i not in cache:
                iterations += 1
                cache[i] = forward_orbit(point(i), N, p, fmap=fm).violation
            return cache[i]

        def boundary(i_a, i_b):
            # largest index keyed like i_a, assuming one transition between them
            ka = _key(classify(i_a))
            while i_b - i_a > 1:
                m = (i_a + i_b) // 2
                if _key(classify(m)) == ka:
                    i_a = m
                else:
                    i_b = m
            return i_a, i_b

        i_lo, i_hi = 0, 1 << depth
        k_lo, k_hi = _key(classify(i_lo)), _key(classify(i_hi))
        if k_lo == k_hi:
            raise InvalidBracket(
                f"both bracket ends have violation signature {k_lo!r} at horizon {N}"
            )
        inside = None
        if k_lo is None:
            inside = i_lo
        elif k_hi is None:
            inside = i_hi
        else:
            a, b = i_lo, i_hi
            while b - a > 1:
                m = (a + b) // 2
                k = _key(classify(m))
                if k is None:
                    inside = m
                    break
                if k == k_lo:
                    a = m
                else:
                    b = m
            if inside is None:
                i_lo, i_hi, converged = a, b, False
        if inside is not None:
            if k_lo is not None:
                i_lo = boundary(i_lo, inside)[0]
            if k_hi is not None:
                i_hi = boundary(inside, i_hi)[1]
        lo, hi = point(i_lo), point(i_hi)
        mid = (lo + hi) / 2
        if forward_orbit(mid, N, p, fmap=fm).violation is not None and inside is not None:
            mid = point(inside)
        certificate = {"lo": classify(i_lo), "hi": classify(i_hi)}
        return ShootResult((lo, hi), N, iterations, mid, certificate, converged, (lo0, hi0))


@dataclass
class ProbeReport:
    a1: mpmath.mpf
    delta: mpmath.mpf
    separation: list  # |a_n - a~_n| up to the shorter of the two orbits
    perturbed_violation: Violation | None
    baseline_violation: Violation | None


def perturbation_probe(a1, delta, N: int, p: QParams, cfg: PrecisionCfg) -> ProbeReport:
    """Follow the orbits of ``a1`` and ``a1 + delta`` for ``N`` steps."""
    with cfg.workprec():
        a1 = mp.mpf(a1)
        delta = mp.mpf(delta)
        if not a1 > 0:
            raise DomainError("a1 must be positive")
        fm = ForwardMap(p)
        base = forward_orbit(a1, N, p, fmap=fm)
        pert = forward_orbit(a1 + delta, N, p, fmap=fm)
        sep = [abs(x - y) for x, y in zip(base.values, pert.values)]
        return ProbeReport(a1, delta, sep, pert.violation, base.violation)
