import json
import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadmoment.density import (
    RATIONALS,
    BaseFieldConstants,
    HypothesisError,
    E_v,
    F_v,
    correlation_factor,
    correlation_from_parts,
    delta_LS,
    e_infty,
    e_v,
    euler_product,
    f_v,
    l_two_chi,
    l_two_chi_series,
    local_e,
    predicted_correlation,
    predicted_inner,
    predicted_mean,
    predicted_mean_dual,
    R_k,
)
from quadmoment.localdata import QuadAlgebraClass as Q
from quadmoment.localdata import dual_stuple, parse_stuple
from quadmoment.primes import primes_up_to

PRIMES_1E4 = [int(p) for p in primes_up_to(10**4)]
COR_S = parse_stuple("inf=C;5=rm-;7=sp")


def test_e_v_examples():
    assert e_v(3, Q.split()).value == F(16, 27)
    assert e_v(3, Q.inert()).value == F(4, 27)
    assert e_v(3, Q.ramified(1)).value == F(64, 729)


def test_E_v_examples():
    assert E_v(2).value == F(49, 64)
    assert E_v(3).value == F(668, 729)
    vals = [E_v(q).value for q in range(2, 200)]
    assert all(a < b < 1 for a, b in zip(vals, vals[1:]))


def test_e_infty_examples():
    assert e_infty(parse_stuple("inf=R")) == mpmath.mpf(1) / 4
    with mpmath.workdps(50):
        assert abs(e_infty(parse_stuple("inf=C")) - 1 / (2 * mpmath.pi)) < mpmath.mpf(10) ** -45
        assert abs(e_infty(parse_stuple("inf=C")) ** 2 - 1 / (4 * mpmath.pi**2)) < mpmath.mpf(10) ** -45


def test_R_k_examples():
    assert R_k(RATIONALS) == 1
    hyp = lambda r1, r2: BaseFieldConstants(r1, r2, 2, 1, F(1), mpmath.mpf(1), mpmath.mpf(1))  # noqa: E731
    assert R_k(hyp(0, 1)) == 1
    assert R_k(hyp(2, 0)) == F(1, 2)
    b = RATIONALS
    assert (b.r1, b.r2, b.e_k, b.Delta_k, b.C_k, b.res_zeta) == (1, 0, 2, 1, 1, 1)


def test_f_v_examples():
    assert f_v(3, Q.split(), "in").value == F(10, 27)
    assert f_v(3, Q.ramified(1), "in").value == F(80, 729)
    assert f_v(3, Q.ramified(1, 1), "rm", True).value == F(4, 81)
    with pytest.raises(HypothesisError):
        f_v(2, Q.split(), "rm")


def test_F_v_examples():
    assert F_v(3, "in").value == F(700, 729)
    assert F_v(2, "in").value == F(55, 64)
    assert F_v(3, "sp").value == F(668, 729)
    with pytest.raises(HypothesisError):
        F_v(3, "rm")


def test_correlation_factor_examples():
    assert correlation_factor(2).value == F(33, 49)
    assert correlation_factor(3).value == F(140, 167)


def test_delta_LS_examples():
    assert delta_LS(5, parse_stuple("inf=C;5=rm")) == F(1, 5)
    assert delta_LS(5, parse_stuple("inf=C;5=sp")) == 5
    assert delta_LS(65, parse_stuple("inf=C;5=rm;13=in")) == F(13, 5)
    with pytest.raises(HypothesisError):
        delta_LS(5, parse_stuple("inf=C;3=rm"))


# --- identities --------------------------------------------------------------


def test_mass_formula_odd():
    for q in PRIMES_1E4[1:]:
        tot = e_v(q, Q.split()).value + e_v(q, Q.inert()).value + 2 * e_v(q, Q.ramified(1)).value
        assert tot == E_v(q).value


def test_mass_formula_dyadic():
    tot = e_v(2, Q.split()).value + e_v(2, Q.inert()).value
    tot += 2 * e_v(2, Q.ramified(2)).value + 4 * e_v(2, Q.ramified(3)).value
    assert tot == F(49, 64)
    # the same through the pattern expansion
    assert local_e(2, Q.split()) + local_e(2, Q.inert()) + local_e(2, Q.ramified(None)) == F(49, 64)


def test_correlation_mass_inert():
    for q in PRIMES_1E4[1:]:
        tot = f_v(q, Q.split(), "in").value + f_v(q, Q.inert(), "in").value
        tot += 2 * f_v(q, Q.ramified(1), "in").value
        assert tot == F_v(q, "in").value


def test_alpha_identity():
    for q in PRIMES_1E4:
        t = F(1, q)
        lhs = (1 - t**2) ** 2 / (1 - t**4) * F_v(q, "in").value / E_v(q).value
        assert lhs == correlation_factor(q).value


def test_alpha_is_one_at_S_places():
    # The correlation product runs only over inert places outside S because
    # every S-place contributes exactly 1; checked here in squared form.
    from quadmoment.density import local_f
    from quadmoment.localdata import dual_class, splitting_in_ktilde

    m = 5
    for p in (3, 7, 11, 19, 5):
        t = F(1, p)
        classes = [Q.split(), Q.inert(), Q.ramified(1, 1), Q.ramified(1, -1)]
        for c in classes:
            f = local_f(p, c, m)
            e, es = local_e(p, c), local_e(p, dual_class(p, c, m))
            kind = splitting_in_ktilde(p, m)
            if kind == "sp":
                assert f * f == e * es
            elif kind == "in":
                assert ((1 - t**2) ** 2 / (1 - t**4)) ** 2 * f * f == e * es
            else:
                dp = t if c.kind.value == "rm" else F(p)
                assert (1 - t**2) ** 2 * p * f * f == dp**2 * e * es


@given(st.sampled_from(PRIMES_1E4))
def test_factor_ranges(q):
    for c in (Q.split(), Q.inert(), Q.ramified(1 if q > 2 else 2)):
        assert e_v(q, c).value > 0
        assert f_v(q, c, "in").value > 0
    for v in (E_v(q), F_v(q, "in"), F_v(q, "sp"), correlation_factor(q)):
        assert 0 < v.value <= 1


@settings(max_examples=50)
@given(st.lists(st.fractions(min_value=F(1, 100), max_value=2, max_denominator=1000), max_size=40), st.randoms())
def test_euler_product_independent_of_order(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    exact = math.prod(xs, start=F(1))
    with mpmath.workdps(50):
        assert euler_product(xs) == euler_product(ys)
        assert abs(euler_product(xs) - mpmath.mpf(exact.numerator) / exact.denominator) < mpmath.mpf(10) ** -40


# --- predictions -------------------------------------------------------------


def test_predicted_mean_stable_and_tail():
    s = parse_stuple("inf=C;3=rm")
    a = predicted_mean(s, 10**4)
    b = predicted_mean(s, 10**5)
    assert b.value > 0
    assert abs(b.value / a.value - 1) < 1e-6
    assert 0 <= b.tail_bound_log < a.tail_bound_log
    for B in (100, 1000, 10**4):
        lo = predicted_mean(s, B)
        hi = predicted_mean(s, 2 * B)
        assert abs(math.log(hi.value / lo.value)) <= lo.tail_bound_log


def test_predicted_mean_reference_value():
    # hand assembly: zeta(2)^2 / (4 pi^2) * 2 e_3(ram) * prod_{p != 3} E_p
    s = parse_stuple("inf=C;3=rm")
    est = predicted_mean(s, 10**4)
    with mpmath.workdps(30):
        prod = mpmath.mpf(1)
        for p in PRIMES_1E4:
            if p != 3:
                prod *= mpmath.mpf(E_v(p).value.numerator) / E_v(p).value.denominator
        ref = (mpmath.pi**2 / 6) ** 2 / (4 * mpmath.pi**2) * mpmath.mpf(128) / 729 * prod
    assert abs(est.value / float(ref) - 1) < 1e-12
    assert est.rational_part == F(128, 729)


def test_predicted_mean_rejects_one_field_place():
    with pytest.raises(HypothesisError, match="two places"):
        predicted_mean(parse_stuple("inf=C"), 1000)
    est = predicted_mean(parse_stuple("inf=C"), 1000, conjectural=True)
    assert est.notes and est.notes[0].startswith("CONJECTURAL")


def test_predicted_correlation():
    a = predicted_correlation(5, COR_S, 10**4)
    b = predicted_correlation(5, COR_S, 10**5)
    assert 0 < b.value < 1
    assert abs(b.value / a.value - 1) < 1e-4
    assert abs(math.log(b.value / a.value)) <= a.tail_bound_log
    with pytest.raises(HypothesisError, match="dyadic"):
        predicted_correlation(8, parse_stuple("inf=C;2=rm;7=sp"), 1000)
    with pytest.raises(HypothesisError, match="missing"):
        predicted_correlation(5, parse_stuple("inf=C;3=rm;7=sp"), 1000)


def test_removing_inert_prime_multiplies_by_alpha():
    full = predicted_correlation(5, COR_S, 10**4)
    less = predicted_correlation(5, COR_S.restrict([5]), 10**4)
    assert abs(less.value / full.value - float(correlation_factor(7).value)) < 1e-12


def test_predicted_mean_dual_structure():
    sd = dual_stuple(COR_S, 5)
    d = predicted_mean_dual(5, COR_S, 10**4)
    m = predicted_mean(sd, 10**4)
    assert d.value == pytest.approx(m.value / 25, rel=1e-14)
    assert d.value > 0
    with pytest.raises(HypothesisError):
        predicted_mean_dual(5, parse_stuple("inf=C;5=rm+"), 1000)


def test_predicted_inner_and_consistency():
    est = predicted_inner(5, COR_S, 10**5)
    assert est.value > 0
    ratio, tail = correlation_from_parts(5, COR_S, 10**5)
    cor = predicted_correlation(5, COR_S, 10**5)
    assert abs(float(ratio) / cor.value - 1) <= tail + cor.tail_bound_log
    with pytest.raises(HypothesisError):
        predicted_inner(8, parse_stuple("inf=C;2=rm;7=sp"), 1000)


def test_l_two_chi_series_oracle():
    for m in (5, -3, -4, 8, 13, -7):
        val = l_two_chi(m)
        approx, bound = l_two_chi_series(m, 20000)
        assert abs(val - approx) <= bound
    # remainder after N terms for m = 5 is below 2/N
    approx, bound = l_two_chi_series(5, 1000)
    assert bound < 2 / 1000
    # L(2, chi_-4) is Catalan's constant
    with mpmath.workdps(50):
        assert abs(l_two_chi(-4) - mpmath.catalan) < mpmath.mpf(10) ** -40


def test_serialisation():
    est = predicted_mean(parse_stuple("inf=C;3=rm"), 1000)
    d = est.to_dict()
    assert set(d) >= {"constant_name", "rational_part", "float_value", "prime_bound", "tail_bound_log"}
    assert d["rational_part"] == "128/729"
    json.dumps(d)
    lines = dict(line.split("=", 1) for line in est.to_text().splitlines())
    assert lines["prime_bound"] == "1000"
