"""Monic orthogonal polynomials from the moment table, and the ladder identities they satisfy.

Polynomials are coefficient lists in the monomial basis,
``coeffs[n][j]`` being the coefficient of ``x**j`` in ``P_n``.
Everything except :func:`recurrence_from_moments` and
:func:`verify_orthogonality` also runs on ``Fraction`` inputs, in which
case the arithmetic is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp

from .exceptions import DomainError, PrecisionExhausted
from .moments import MomentTable
from .qcore import PrecisionCfg, QParams, is_exact, precision, q_bracket, q_integral
from .weight import NormalizedWeight

__all__ = [
    "MonicPolySeq",
    "CoeffSequence",
    "LadderCoeffs",
    "inner_product",
    "recurrence_from_moments",
    "monic_from_coefficients",
    "polyval",
    "ladder_coeffs",
    "verify_structure_relation",
    "verify_added_relations",
    "verify_orthogonality",
]


@dataclass
class MonicPolySeq:
    coeffs: list
    norms: list = field(default_factory=list)

    def __len__(self):
        return len(self.coeffs)

    def poly(self, n: int) -> list:
        """Coefficients of ``P_n``; the empty list when ``P_n`` was not built."""
        return self.coeffs[n] if 0 <= n < len(self.coeffs) else []


@dataclass
class CoeffSequence:
    """Recurrence coefficients ``a_1..a_N``; ``values[0]`` holds ``a_1``."""

    values: list
    form: str = "a"
    residuals: list = field(default_factory=list)

    def __post_init__(self):
        if self.form not in ("a", "b"):
            raise DomainError("form must be 'a' or 'b'")

    def __len__(self):
        return len(self.values)

    def at(self, n: int):
        """``a_n`` with the convention ``a_n = 0`` for ``n < 1``."""
        if n < 1:
            return 0
        return self.values[n - 1]

    def partial_sum(self, m: int):
        """``sum_{j=1}^{m} a_j`` (zero for ``m < 1``)."""
        total = 0
        for j in range(1, m + 1):
            total = total + self.values[j - 1]
        return total

    @property
    def exact(self) -> bool:
        return is_exact(*self.values)


@dataclass
class LadderCoeffs:
    """``A[n]`` from the closed form with ``b_{n+1}``, ``A_alt[n]`` from the partial sum, and ``B[n]``."""

    A: list
    B: list
    A_alt: list


def _inner(f, g, table: MomentTable):
    need = len(f) + len(g) - 2
    if need > table.max_order:
        raise DomainError(f"inner product needs moments up to order {need}, table has max_order {table.max_order}")
    total = 0
    scale = 0
    mu = table.mu
    for i, fi in enumerate(f):
        if not fi:
            continue
        for j, gj in enumerate(g):
            if not gj or (i + j) % 2:
                continue
            t = fi * gj * mu[i + j]
            total += t
            scale = max(scale, abs(t))
    return total, scale


def inner_product(f_coeffs, g_coeffs, table: MomentTable):
    """``sum_{i,j} f_i g_j mu[i+j]``, i.e. the integral of ``f*g`` against the measure."""
    with mp.workprec(table.working_bits):
        return _inner(f_coeffs, g_coeffs, table)[0]


def _shift_sub(p_n, p_nm1, a_n):
    """``x*P_n - a_n*P_{n-1}``."""
    out = [0 * a_n] + list(p_n)
    for j, c in enumerate(p_nm1):
        out[j] = out[j] - a_n * c
    return out


def recurrence_from_moments(N: int, table: MomentTable, cfg: PrecisionCfg):
    """Gram recursion ``a_n = h_n / h_{n-1}`` with ``h_n = <P_n, P_n>``.

    Returns ``(MonicPolySeq, CoeffSequence)`` with ``P_0..P_{N+1}``,
    ``h_0..h_N`` and ``a_1..a_N``. Raises :class:`PrecisionExhausted`
    when some ``h_n`` is not positive or carries fewer than 8
    significant bits after cancellation.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if table.max_order < 2 * N + 2:
        raise DomainError(f"moment table must reach order {2 * N + 2}, has {table.max_order}")
    with cfg.workprec():
        floor = mp.ldexp(1, -(cfg.working_bits - 8))
        coeffs = [[mp.one], [mp.zero, mp.one]]
        norms = [table.mu[0]]
        a = []
        for n in range(1, N + 1):
            h, scale = _inner(coeffs[n], coeffs[n], table)
            if not h > 0 or h < scale * floor:
                raise PrecisionExhausted(n, f"h_n={mp.nstr(h, 5)} against term scale {mp.nstr(scale, 5)}")
            norms.append(h)
            a.append(h / norms[n - 1])
            coeffs.append(_shift_sub(coeffs[n], coeffs[n - 1], a[-1]))
    return MonicPolySeq(coeffs, norms), CoeffSequence(a, "a")


def monic_from_coefficients(seq: CoeffSequence, upto: int | None = None) -> MonicPolySeq:
    """Build ``P_0..P_upto`` from ``x P_n = P_{n+1} + a_n P_{n-1}`` (no norms)."""
    upto = len(seq) + 1 if upto is None else upto
    if upto > len(seq) + 1:
        raise DomainError(f"P_{upto} needs coefficients through a_{upto - 1}")
    one = Fraction(1) if seq.exact else mp.one
    coeffs = [[one], [0 * one, one]]
    for n in range(1, upto):
        coeffs.append(_shift_sub(coeffs[n], coeffs[n - 1], seq.at(n)))
    return MonicPolySeq(coeffs[: upto + 1])


def polyval(coeffs, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def ladder_coeffs(seq: CoeffSequence, p: QParams, cfg: PrecisionCfg | None = None) -> LadderCoeffs:
    """Ladder coefficients of ``x D_q P_n = [n]_q P_n + A_n P_{n-2} + B_n P_{n-4}``.

    ``A[n]`` is defined for ``n <= N-1`` (it uses ``b_{n+1}``), ``B[n]``
    and ``A_alt[n]`` for ``n <= N``.
    """
    exact = seq.exact
    N = len(seq)
    b = seq.at
    S = seq.partial_sum
    with precision(cfg):
        one_minus_q = 1 - p.q_value(exact)
        q2 = p.q_value(exact) ** 2
        A = []
        for n in range(N):
            A.append(p.power(1 - n - p.kappa, exact) / one_minus_q * b(n) * b(n - 1) * (S(n + 1) - q2 * S(n - 3)))
        B = []
        A_alt = []
        for n in range(N + 1):
            B.append(p.power(3 - n - p.kappa, exact) / one_minus_q * b(n) * b(n - 1) * b(n - 2) * b(n - 3))
            A_alt.append(p.power(n - 2, exact) * (1 - q2) / one_minus_q * S(n - 1))
    return LadderCoeffs(A, B, A_alt)


def verify_structure_relation(n: int, polys: MonicPolySeq, lad: LadderCoeffs, p: QParams,
                              cfg: PrecisionCfg | None = None):
    """Relative coefficient mismatch of ``x D_q P_n = [n]_q P_n + A_n P_{n-2} + B_n P_{n-4}``.

    ``x D_q`` acts on ``x**j`` as multiplication by ``[j]_q``. The result
    is the largest coefficient mismatch divided by the largest
    contributing term; exactly zero in exact mode when the identity holds.
    """
    if n >= len(lad.A):
        raise DomainError(f"A_{n} is not available (needs b_{n + 1})")
    P = polys.poly(n)
    exact = is_exact(*P)
    with precision(cfg):
        zero = Fraction(0) if exact else mp.zero
        bracket_n = q_bracket(n, p, exact)
        lhs = [q_bracket(j, p, exact) * c for j, c in enumerate(P)]
        parts = [[bracket_n * c for c in P]]
        if n >= 2:
            parts.append([lad.A[n] * c for c in polys.poly(n - 2)])
        if n >= 4:
            parts.append([lad.B[n] * c for c in polys.poly(n - 4)])
        scale = max((abs(v) for v in lhs), default=zero)
        diff = []
        for j in range(len(P)):
            rhs = zero
            for part in parts:
                if j < len(part):
                    rhs = rhs + part[j]
                    scale = max(scale, abs(part[j]))
            diff.append(abs(lhs[j] - rhs))
        if not scale:
            return zero
        return max(diff) / scale


def verify_added_relations(n: int, seq: CoeffSequence, p: QParams, cfg: PrecisionCfg | None = None):
    """Normalized residual of the cubic side relations (even/odd forms) at index ``n``.

    Even ``n``: ``(q^(2-n) - 1) b_{n-1} + (q^2 - 1) S_{n-2} + q^(5-2n-kappa) b_n b_{n-1} b_{n-2}``;
    odd ``n`` replaces the first factor by ``q^(2-n-kappa) - 1``.
    """
    if n < 1 or n > len(seq):
        raise DomainError(f"n must lie in 1..{len(seq)}")
    exact = seq.exact
    b = seq.at
    with precision(cfg):
        lead = p.power(2 - n, exact) if n % 2 == 0 else p.power(2 - n - p.kappa, exact)
        terms = [
            (lead - 1) * b(n - 1),
            (p.q_value(exact) ** 2 - 1) * seq.partial_sum(n - 2),
            p.power(5 - 2 * n - p.kappa, exact) * b(n) * b(n - 1) * b(n - 2),
        ]
        scale = max(abs(t) for t in terms)
        if not scale:
            return Fraction(0) if exact else mp.zero
        return abs(sum(terms)) / scale


def verify_orthogonality(n: int, m: int, polys: MonicPolySeq, w: NormalizedWeight, cfg: PrecisionCfg):
    """Jackson-integral value of ``P_n P_m`` against the normalized weight."""
    Pn, Pm = polys.poly(n), polys.poly(m)
    if not Pn or not Pm:
        raise DomainError(f"polynomials built through {len(polys) - 1}, need {max(n, m)}")
    return q_integral(lambda x: polyval(Pn, x) * polyval(Pm, x) * w.eval(x), w.params, cfg)
