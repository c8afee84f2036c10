from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from oracles import product_oracle
from qstring.exceptions import DomainError, NonFiniteValue, ToleranceUnreachable
from qstring.qcore import (
    PrecisionCfg,
    QParams,
    as_fraction,
    decimal_string,
    q_bracket,
    q_derivative_monomial,
    q_integral,
    q_pochhammer_inf,
)

rational_q = st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)).filter(lambda f: 0 < f < 1)


class TestParams:
    def test_decimal_strings_are_exact(self):
        p = QParams("0.3", "2.5")
        assert p.q == Fraction(3, 10)
        assert p.kappa == Fraction(5, 2)

    @pytest.mark.parametrize("q", ["0", "1", "1.5", "-0.2"])
    def test_q_outside_unit_interval(self, q):
        with pytest.raises(DomainError, match=r"q must lie in \(0,1\)"):
            QParams(q, "0")

    def test_negative_kappa(self):
        with pytest.raises(DomainError):
            QParams("0.5", "-1")

    def test_mpf_converts_exactly(self):
        with mp.workprec(200):
            x = mp.mpf(1) / 3
            assert mp.mpf(as_fraction(x).numerator) / as_fraction(x).denominator == x

    def test_exact_power_rational_root(self):
        p = QParams(Fraction(1, 4), Fraction(1, 2))
        assert p.power(Fraction(1, 2), exact=True) == Fraction(1, 2)
        assert p.power(Fraction(-3, 2), exact=True) == 8

    def test_exact_power_irrational(self):
        with pytest.raises(DomainError):
            QParams("0.5", "0").power(Fraction(1, 2), exact=True)


class TestPrecisionCfg:
    def test_default_tolerance(self):
        assert PrecisionCfg(256).tail_tol == Fraction(1, 2**240)

    def test_tolerance_must_be_resolvable(self):
        with pytest.raises(DomainError):
            PrecisionCfg(128, Fraction(1, 2**125))

    @pytest.mark.parametrize("kw", [dict(working_bits=32), dict(max_terms=8)])
    def test_bounds(self, kw):
        with pytest.raises(DomainError):
            PrecisionCfg(**kw)

    def test_digits_cover_round_trip(self):
        assert PrecisionCfg(512).digits == 156


class TestBracket:
    def test_zero(self, half):
        assert q_bracket(0, half, exact=True) == 0

    def test_one(self):
        assert q_bracket(1, QParams("0.37", "1"), exact=True) == 1

    def test_three_at_half(self, half):
        assert q_bracket(3, half, exact=True) == Fraction(7, 4)

    def test_float_mode(self, half, cfg256):
        with cfg256.workprec():
            assert q_bracket(3, half, cfg=cfg256) == mp.mpf(7) / 4

    @given(q=rational_q, n=st.integers(0, 60))
    def test_bracket_recursion_exact(self, q, n):
        p = QParams(q, 0)
        assert q_bracket(n + 1, p, exact=True) == q * q_bracket(n, p, exact=True) + 1

    def test_negative_n(self, half):
        with pytest.raises(DomainError):
            q_bracket(-1, half)


class TestDerivative:
    def test_linear(self, half):
        assert q_derivative_monomial(1, half, exact=True) == 1

    def test_cubic(self, half):
        assert q_derivative_monomial(3, half, exact=True) == Fraction(7, 4)

    def test_constant(self, half):
        assert q_derivative_monomial(0, half, exact=True) == 0

    def test_matches_difference_quotient(self, half):
        # (f(x) - f(qx)) / (x (1-q)) for f = x^5 at x = 3/7
        x, q = Fraction(3, 7), Fraction(1, 2)
        quotient = (x**5 - (q * x) ** 5) / (x * (1 - q))
        assert quotient == q_derivative_monomial(5, half, exact=True) * x**4


class TestPochhammer:
    def test_a_zero(self, cfg256):
        assert q_pochhammer_inf(0, "0.5", cfg256).value == 1

    def test_a_one_is_exact_zero(self, cfg256):
        r = q_pochhammer_inf(1, "0.3", cfg256)
        assert r.value == 0 and r.exact

    def test_half_half_against_brute_force(self, cfg256):
        r = q_pochhammer_inf(Fraction(1, 2), Fraction(1, 2), cfg256)
        with cfg256.workprec():
            # 400 factors leave a tail near 2**-400, far below tail_tol
            ref = product_oracle(mp.mpf(1) / 2, mp.mpf(1) / 2, 400)
            assert abs(r.value - ref) <= r.error + cfg256.tol()
            # frozen from the 200-factor product
            assert abs(r.value - mp.mpf("0.28878809508660242127889972192923078008891190484069")) < mp.mpf("1e-49")

    def test_against_mpmath_qp(self, cfg512):
        with cfg512.workprec():
            a, qq = mp.mpf("0.3") ** 4, mp.mpf("0.3") ** 4
            r = q_pochhammer_inf(a, qq, cfg512)
            assert abs(r.value - mp.qp(a, qq)) <= r.error + 8 * mp.eps

    @settings(deadline=None, max_examples=40)
    @given(a=st.fractions(-3, Fraction(9, 10)), qq=rational_q)
    def test_refinement_within_error(self, a, qq):
        coarse = q_pochhammer_inf(a, qq, PrecisionCfg(256, Fraction(1, 10**20)))
        fine = q_pochhammer_inf(a, qq, PrecisionCfg(256))
        with mp.workprec(256):
            assert abs(fine.value - coarse.value) <= coarse.error * (1 + mp.mpf(2) ** -200) + mp.mpf(2) ** -240

    def test_tolerance_unreachable(self):
        with pytest.raises(ToleranceUnreachable):
            q_pochhammer_inf(Fraction(1, 2), Fraction(99, 100), PrecisionCfg(256, max_terms=16))


class TestQIntegral:
    def test_constant(self, half, cfg256):
        with cfg256.workprec():
            assert abs(q_integral(lambda x: 1, half, cfg256) - 2) < 4 * cfg256.tol()

    def test_odd_cancels_exactly(self, cfg256):
        assert q_integral(lambda x: x, QParams("0.3", "0"), cfg256) == 0
        assert q_integral(lambda x: x**3 * mp.exp(x * x), QParams("0.7", "0"), cfg256) == 0

    def test_square_closed_form(self, half, cfg256):
        with cfg256.workprec():
            assert abs(q_integral(lambda x: x * x, half, cfg256) - mp.mpf(8) / 7) < 4 * cfg256.tol()

    @settings(deadline=None, max_examples=30)
    @given(
        q=st.sampled_from(["0.3", "0.5", "0.8"]),
        f=st.lists(st.integers(-9, 9), min_size=1, max_size=6),
        g=st.lists(st.integers(-9, 9), min_size=1, max_size=6),
        alpha=st.integers(-5, 5),
        beta=st.integers(-5, 5),
    )
    def test_linearity(self, q, f, g, alpha, beta):
        cfg = PrecisionCfg(128)
        p = QParams(q, 0)
        pf = lambda x: mp.polyval(f[::-1], x)
        pg = lambda x: mp.polyval(g[::-1], x)
        combined = q_integral(lambda x: alpha * pf(x) + beta * pg(x), p, cfg)
        with cfg.workprec():
            split = alpha * q_integral(pf, p, cfg) + beta * q_integral(pg, p, cfg)
            assert abs(combined - split) <= 4 * cfg.tol() * (1 + abs(alpha) + abs(beta)) * 60

    def test_non_finite_reports_index(self, half, cfg256):
        with pytest.raises(NonFiniteValue) as err:
            q_integral(lambda x: mp.inf if abs(x) < mp.mpf("0.1") else 1, half, cfg256)
        assert err.value.index == 4

    def test_tolerance_unreachable(self):
        with pytest.raises(ToleranceUnreachable):
            q_integral(lambda x: 1, QParams("0.99", "0"), PrecisionCfg(256, max_terms=16))


def test_decimal_string():
    assert decimal_string(Fraction(3, 10), 20) == "0.3"
    assert decimal_string(Fraction(5, 2), 20) == "2.5"
    assert decimal_string(Fraction(7), 20) == "7"
    assert decimal_string(Fraction(-1, 8), 20) == "-0.125"
    assert decimal_string(Fraction(1, 3), 10).startswith("0.333333333")
