"""Acceptance suite: one PASS/FAIL line per criterion in the terminal summary.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest

from quadmoment.density import (
    E_v,
    F_v,
    correlation_factor,
    correlation_from_parts,
    e_v,
    f_v,
    predicted_correlation,
)
from quadmoment.experiments import correlation_run, mean_square_run, verify_disc_twist
from quadmoment.localdata import QuadAlgebraClass as Q
from quadmoment.localdata import parse_stuple
from quadmoment.orbitcount import (
    epsilon_closed_form,
    epsilon_from_orbit,
    majorant_series,
    stabilizer_congruence_count,
    stabilizer_params,
)
from quadmoment.primes import primes_up_to
from quadmoment.quadfields import (
    class_numbers_imag_analytic,
    fundamental_masks,
    fundamental_unit,
    hR,
    regulator_real,
    sieve_class_numbers_imag,
)

MEAN_S = parse_stuple("inf=C;3=rm")
REAL_S = parse_stuple("inf=R;3=rm;5=rm")
COR_M = 5
COR_S = parse_stuple("inf=C;5=rm-;7=sp")


# --- 1. exact local densities ------------------------------------------------


@pytest.mark.criterion(1)
@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("cls", ["ur-sp", "ur-ur", "rm-ur"])
def test_c1_orbits_n1(verdict, p, cls):
    q = F(1, p)
    closed = {
        "ur-sp": F(1, 2) * (1 + q) * (1 - q**2) ** 2,
        "ur-ur": F(1, 2) * (1 - q) ** 3 * (1 - q**2),
        "rm-ur": F(1, 2) * (1 - q**2) * (1 - q),
    }[cls]
    rep = epsilon_from_orbit(p, cls, n=1)
    ok = rep.epsilon_expected == closed and rep.volume / closed in (1, 2)
    if cls == "rm-ur":
        ok = ok and rep.volume == 2 * closed
    if (p, cls) == (3, "rm-ur"):
        ok = ok and closed == F(8, 27)
    verdict(1, ok, f"p={p} {cls} vol={rep.volume} factor={rep.relation_factor}")


@pytest.mark.criterion(1)
def test_c1_ur_rm_n2(verdict):
    rep = epsilon_from_orbit(3, "ur-rm", n=2)
    ok = rep.orbit_size == 3359232 == F(512, 6561) * 3**16 and rep.volume == epsilon_closed_form(3, "ur-rm")
    verdict(1, ok, f"p=3 n=2 ur-rm size={rep.orbit_size}")


@pytest.mark.criterion(1)
def test_c1_rm_rm_n2(verdict):
    rep = epsilon_from_orbit(3, "rm-rm", n=2)
    want = F(1, 2) * F(1, 3) * (1 + F(1, 3)) * (1 - F(1, 9)) ** 2
    verdict(1, rep.volume == want, f"p=3 n=2 rm-rm vol={rep.volume}")


# --- 2. stabilizer congruences -----------------------------------------------


@pytest.mark.criterion(2)
def test_c2_stabilizers(verdict):
    t0 = time.perf_counter()
    got = {}
    for p, delta in ((3, 1), (5, 1), (7, 1), (2, 2), (2, 3)):
        a1, a2, n = stabilizer_params(p, delta)
        got[(p, delta)] = stabilizer_congruence_count(p, n, a1, a2)
    dt = time.perf_counter() - t0
    ok = all(v == 2 * p**d for (p, d), v in got.items()) and dt < 1
    verdict(2, ok, f"counts={list(got.values())} in {dt:.3f}s")


# --- 3. mass formulas --------------------------------------------------------


@pytest.mark.criterion(3)
def test_c3_mass_formulas(verdict):
    t0 = time.perf_counter()
    primes = [int(p) for p in primes_up_to(10**4)]
    bad = []
    for q in primes:
        if q == 2:
            tot = e_v(2, Q.split()).value + e_v(2, Q.inert()).value
            tot += 2 * e_v(2, Q.ramified(2)).value + 4 * e_v(2, Q.ramified(3)).value
            if not tot == E_v(2).value == F(49, 64):
                bad.append(("e", q))
        else:
            tot = e_v(q, Q.split()).value + e_v(q, Q.inert()).value + 2 * e_v(q, Q.ramified(1)).value
            if tot != E_v(q).value:
                bad.append(("e", q))
            tf = f_v(q, Q.split(), "in").value + f_v(q, Q.inert(), "in").value
            tf += 2 * f_v(q, Q.ramified(1), "in").value
            if tf != F_v(q, "in").value:
                bad.append(("f", q))
        t = F(1, q)
        lhs = (1 - t**2) ** 2 / (1 - t**4) * F_v(q, "in").value / E_v(q).value
        rhs = 1 - 2 * t**2 / (1 + t + t**2 - 2 * t**3 + t**5)
        if not lhs == rhs == correlation_factor(q).value:
            bad.append(("alpha", q))
    dt = time.perf_counter() - t0
    verdict(3, not bad and dt < 10, f"{len(primes)} primes, {len(bad)} failures, {dt:.2f}s")


# --- 4. majorant -------------------------------------------------------------


@pytest.mark.criterion(4)
def test_c4_majorant(verdict):
    ok = True
    for q in (2, 3, 5):
        ls = majorant_series(q, 64)
        ok = ok and len(ls) == 65 and ls[:3] == [1, 0, q + 33 * q * q] and min(ls) >= 0
    verdict(4, ok, "q in {2,3,5} to N=64")


# --- 5. class-number engines -------------------------------------------------


@pytest.mark.criterion(5)
def test_c5_forms_vs_analytic(verdict):
    X = 10**5
    ns = np.flatnonzero(fundamental_masks(X)[1])
    sieve = sieve_class_numbers_imag(X)
    analytic = class_numbers_imag_analytic(-ns)
    mism = int(np.count_nonzero(analytic != sieve[ns]))
    verdict(5, mism == 0, f"{ns.size} imaginary fields, {mism} mismatches")


@pytest.mark.criterion(5)
def test_c5_pell(verdict):
    ds = np.flatnonzero(fundamental_masks(10**4)[0]).tolist()
    bad = []
    for d in ds:
        u = fundamental_unit(d)
        with mpmath.workdps(40):
            R = mpmath.log((u.x + u.y * mpmath.sqrt(d)) / 2)
        if not u.pell_ok() or abs(R - regulator_real(d)) > 1e-10 * max(1.0, float(R)):
            bad.append(d)
    verdict(5, not bad, f"{len(ds)} real fields, Pell failures {bad[:5]}")


@pytest.mark.criterion(5)
def test_c5_examples(verdict):
    r5 = hR(5)
    ok = hR(-23).h == 3 and hR(-20).h == 2 and r5.h == 1 and abs(r5.R - 0.4812118251) <= 1e-9
    verdict(5, ok, f"h(-23)={hR(-23).h} h(-20)={hR(-20).h} (h,R)(5)=({r5.h},{r5.R:.10f})")


# --- 6. empirical mean -------------------------------------------------------


@pytest.mark.criterion(6)
def test_c6_imaginary_mean(verdict):
    rep = mean_square_run(MEAN_S, [10**4, 10**5, 10**6, 10**7])
    errs = [abs(e) for e in rep.rel_err]
    ok = errs[-1] <= 0.10 and errs[1] >= errs[2] >= errs[3]
    txt = " ".join(f"{X:.0e}:{e:+.2e}" for X, e in zip(rep.cutoffs, rep.rel_err))
    verdict(6, ok, f"{MEAN_S.format()} rel_err {txt}")


@pytest.mark.criterion(6)
def test_c6_real_mean(verdict):
    rep = mean_square_run(REAL_S, [10**4, 10**5])
    verdict(6, abs(rep.rel_err[-1]) <= 0.15, f"{REAL_S.format()} rel_err at 1e5 {rep.rel_err[-1]:+.2e}")


# --- 7. empirical correlation ------------------------------------------------


@pytest.mark.criterion(7)
def test_c7_correlation(verdict):
    rep = correlation_run(COR_M, COR_S, [10**6])
    err = rep.rel_err[-1]
    verdict(7, abs(err) <= 0.10, f"Cor at 1e6 {rep.empirical[-1]:.6f} vs {rep.prediction.value:.6f} ({err:+.2e})")


@pytest.mark.criterion(7)
def test_c7_twist_law(verdict):
    rep = verify_disc_twist(COR_M, COR_S, 10**5)
    verdict(7, rep.ok, f"twist law on {rep.checked} fields, {len(rep.counterexamples)} exceptions")


# --- 8. internal consistency -------------------------------------------------


@pytest.mark.criterion(8)
def test_c8_consistency(verdict):
    B = 10**5
    ratio, tail = correlation_from_parts(COR_M, COR_S, B)
    cor = predicted_correlation(COR_M, COR_S, B)
    rel = abs(float(ratio) / cor.value - 1)
    ok = rel <= 1e-6 and math.log1p(rel) <= tail + cor.tail_bound_log
    verdict(8, ok, f"relative discrepancy {rel:.2e} at prime bound {B}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", *sys.argv[1:]]))
