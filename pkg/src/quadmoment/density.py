"""Closed-form local factors and the assembled predictions over Q.

Every local factor is an exact :class:`fractions.Fraction`.  Truncated Euler
products are formed as exact integer numerator/denominator products over the
primes up to the bound (product tree, so the result does not depend on
evaluation order) and converted to a float exactly once.  The pi-dependent
pieces (zeta(2), the archimedean factor, L(2, chi)) are evaluated with mpmath
at ``WORK_DPS`` digits.

Ramified factors use the q^(-delta) normalisation, i.e. the inverse absolute
norm of the local discriminant; this is the only reading under which the local
factors of all classes at p add up to the unramified density at p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .localdata import (
    ArchClass,
    Kind,
    LocalDataError,
    QuadAlgebraClass,
    STuple,
    dual_stuple,
    is_fundamental,
    is_ktilde_local,
    kronecker,
    local_class,
    ramified_primes,
    splitting_in_ktilde,
)
from .primes import primes_up_to

WORK_DPS = 50


class HypothesisError(ValueError):
    """A theorem hypothesis required for the requested prediction fails."""


@dataclass(frozen=True)
class EulerFactor:
    value: Fraction
    place: int
    label: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class BaseFieldConstants:
    r1: int
    r2: int
    e_k: int
    Delta_k: int
    C_k: Fraction
    zeta2: mpf
    res_zeta: mpf

    @classmethod
    def rationals(cls) -> "BaseFieldConstants":
        with mp.workdps(WORK_DPS):
            return cls(1, 0, 2, 1, Fraction(1), mp.pi**2 / 6, mpf(1))


@dataclass(frozen=True)
class ProductEstimate:
    name: str
    truncated_value: mpf
    prime_bound: int
    tail_bound_log: float
    rational_part: Fraction
    notes: tuple[str, ...] = field(default=())

    @property
    def value(self) -> float:
        return float(self.truncated_value)

    def interval(self) -> tuple[float, float]:
        v = self.value
        t = math.exp(self.tail_bound_log)
        return (v / t, v * t)

    def to_dict(self) -> dict:
        return {
            "constant_name": self.name,
            "rational_part": f"{self.rational_part.numerator}/{self.rational_part.denominator}",
            "float_value": mpmath.nstr(self.truncated_value, 20),
            "prime_bound": self.prime_bound,
            "tail_bound_log": f"{self.tail_bound_log:.6e}",
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        d = self.to_dict()
        d["notes"] = " | ".join(d["notes"])
        return "\n".join(f"{k}={v}" for k, v in d.items())


RATIONALS = BaseFieldConstants.rationals()


# --- local factors -----------------------------------------------------------


def _exact_delta(c: QuadAlgebraClass) -> int:
    if c.delta is None:
        raise LocalDataError("local factor needs a definite discriminant exponent")
    return c.delta


def e_v(q: int, c: QuadAlgebraClass) -> EulerFactor:
    t = Fraction(1, q)
    if c.kind is Kind.SPLIT:
        v = (1 + t) * (1 - t**2) / 2
    elif c.kind is Kind.INERT:
        v = (1 - t) ** 3 / 2
    else:
        v = t ** _exact_delta(c) * (1 - t) * (1 - t**2) ** 2 / 2
    return EulerFactor(v, q, "e")


def E_v(q: int) -> EulerFactor:
    t = Fraction(1, q)
    return EulerFactor(1 - 3 * t**3 + 2 * t**4 + t**5 - t**6, q, "E")


def f_v(q: int, c: QuadAlgebraClass, split_type: str, is_ktilde_local: bool = False) -> EulerFactor:
    t = Fraction(1, q)
    if split_type == "sp":
        return EulerFactor(e_v(q, c).value, q, "f")
    if split_type == "in":
        if c.kind is Kind.RAMIFIED:
            v = t ** _exact_delta(c) * (1 - t) * (1 - t**4) / 2
        else:
            v = (1 - t) * (1 + t**2) / 2
        return EulerFactor(v, q, "f")
    if split_type != "rm":
        raise ValueError(f"unknown splitting type {split_type!r}")
    if q % 2 == 0:
        raise HypothesisError("the auxiliary field may not ramify at a dyadic place")
    if c.kind is Kind.SPLIT:
        v = (1 - t**2) / 2
    elif c.kind is Kind.INERT:
        v = (1 - t) ** 2 / 2
    elif is_ktilde_local:
        v = t**2 * (1 - t**2) / 2
    else:
        v = t**2 * (1 - t) ** 2 / 2
    return EulerFactor(v, q, "f")


def F_v(q: int, split_type: str) -> EulerFactor:
    if split_type == "sp":
        return EulerFactor(E_v(q).value, q, "F")
    if split_type != "in":
        raise HypothesisError("F_v is only defined where the auxiliary field is unramified")
    t = Fraction(1, q)
    return EulerFactor((1 + t**2) * (1 - t**2 - t**3 + t**4), q, "F")


def correlation_factor(q: int) -> EulerFactor:
    t = Fraction(1, q)
    return EulerFactor(1 - 2 * t**2 / (1 + t + t**2 - 2 * t**3 + t**5), q, "alpha")


def local_e(p: int, c: QuadAlgebraClass) -> Fraction:
    """Sum of e_v over the concrete classes covered by ``c``."""
    return sum((e_v(p, x).value for x in c.expand(p)), Fraction(0))


def local_f(p: int, c: QuadAlgebraClass, m: int) -> Fraction:
    st = splitting_in_ktilde(p, m)
    return sum(
        (f_v(p, x, st, is_ktilde_local(p, x, m)).value for x in c.expand(p)), Fraction(0)
    )


def e_infty(s: STuple) -> mpf:
    r1, r2 = (2, 0) if s.arch is ArchClass.RR else (0, 1)
    with mp.workdps(WORK_DPS):
        return mpf(2) ** (-r1) * (2 * mp.pi) ** (-r2)


def R_k(b: BaseFieldConstants) -> Fraction:
    return Fraction(b.e_k**2) * b.C_k**3 / 2 ** (b.r1 + b.r2 + 1)


# --- products ----------------------------------------------------------------


def _tree_product(xs: list[int]) -> int:
    if not xs:
        return 1
    while len(xs) > 1:
        nxt = [xs[i] * xs[i + 1] for i in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    return xs[0]


def euler_product(factors: list[Fraction]) -> mpf:
    """Exact product of rationals, converted to mpf once at the end."""
    num = _tree_product([f.numerator for f in factors])
    den = _tree_product([f.denominator for f in factors])
    with mp.workdps(WORK_DPS):
        return mpf(num) / mpf(den)


def _primes_outside(s: STuple, bound: int) -> list[int]:
    excl = set(s.primes)
    return [int(p) for p in primes_up_to(bound) if int(p) not in excl]


def _check_bound(bound: int) -> None:
    if bound < 3:
        raise ValueError("prime bound must be at least 3")


def _cubic_tail(bound: int, c: float) -> float:
    # sum_{p>B} c p^-3 <= c / (2 B^2)
    return c / (2.0 * bound**2)


def predicted_mean(
    s: STuple,
    prime_bound: int,
    base: BaseFieldConstants = RATIONALS,
    conjectural: bool = False,
) -> ProductEstimate:
    """Limit of X^-2 * sum of (h R)^2 over the family cut out by ``s``."""
    _check_bound(prime_bound)
    notes = []
    if s.field_place_count() < 2:
        if not conjectural:
            raise HypothesisError(
                f"{s}: the mean-value theorem needs at least two places where L_v is a field"
            )
        notes.append("CONJECTURAL: fewer than two field places")
    local = R_k(base) * math.prod((local_e(p, c) for p, c in s.finite.items()), start=Fraction(1))
    outside = [E_v(p).value for p in _primes_outside(s, prime_bound)]
    with mp.workdps(WORK_DPS):
        val = mpf(local.numerator) / local.denominator
        val *= base.zeta2**2 * e_infty(s) ** 2 * euler_product(outside)
        if s.finite:
            intro = val * euler_product([E_v(p).value for p in s.finite])
            notes.append(
                "product over all finite places (introduction form) gives "
                + mpmath.nstr(intro, 15)
            )
    # |log E_p| <= 3p^-3 / (1 - 3p^-3) <= 4 p^-3 for p >= 3
    return ProductEstimate("mean", val, prime_bound, _cubic_tail(prime_bound, 4.0), local, tuple(notes))


def _check_auxiliary(m: int, s: STuple) -> list[int]:
    if not is_fundamental(m):
        raise HypothesisError(f"auxiliary discriminant {m} is not fundamental")
    rm = ramified_primes(m)
    if 2 in rm:
        raise HypothesisError(f"2 ramifies in Q(sqrt {m}); ramified and dyadic places must be disjoint")
    missing = [p for p in rm if p not in s.finite]
    if missing:
        raise HypothesisError(f"S must contain the primes ramified in Q(sqrt {m}); missing {missing}")
    return rm


def _dual(m: int, s: STuple) -> STuple:
    try:
        return dual_stuple(s, m)
    except LocalDataError as exc:
        raise HypothesisError(str(exc)) from exc


def check_correlation_hypotheses(m: int, s: STuple) -> STuple:
    """Validate (m, s) for the correlation theorem and return the dual tuple."""
    _check_auxiliary(m, s)
    if s.field_place_count() < 2:
        raise HypothesisError(f"{s}: at least two L_v must be fields")
    sd = _dual(m, s)
    if sd.field_place_count() < 2:
        raise HypothesisError(f"dual tuple {sd}: at least two L_v* must be fields")
    return sd


def delta_LS(m: int, s: STuple) -> Fraction:
    out = Fraction(1)
    for p in ramified_primes(m):
        if p not in s.finite:
            raise HypothesisError(f"prime {p} ramified in Q(sqrt {m}) is not covered by S")
        out *= Fraction(1, p) if s.finite[p].kind is Kind.RAMIFIED else Fraction(p)
    return out


def predicted_correlation(m: int, s: STuple, prime_bound: int) -> ProductEstimate:
    _check_bound(prime_bound)
    check_correlation_hypotheses(m, s)
    inert = [p for p in _primes_outside(s, prime_bound) if kronecker(m, p) == -1]
    val = euler_product([correlation_factor(p).value for p in inert])
    # y_p <= 2 p^-2, |log(1 - y)| <= y / (1 - y)
    tail = 2.0 / (prime_bound * (1.0 - 2.0 / prime_bound**2))
    return ProductEstimate("correlation", val, prime_bound, tail, Fraction(1))


def predicted_mean_dual(m: int, s: STuple, prime_bound: int) -> ProductEstimate:
    _check_auxiliary(m, s)
    sd = _dual(m, s)
    if sd.field_place_count() < 2:
        raise HypothesisError(f"dual tuple {sd}: at least two L_v* must be fields")
    dl = delta_LS(m, s)
    base = predicted_mean(sd, prime_bound)
    with mp.workdps(WORK_DPS):
        val = base.truncated_value * mpf(dl.numerator) ** 2 / mpf(dl.denominator) ** 2
    return ProductEstimate(
        "dual_mean", val, prime_bound, base.tail_bound_log, base.rational_part * dl**2
    )


def kronecker_symbol(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 1, by multiplicativity in n."""
    from sympy import factorint

    out = 1
    for p, k in factorint(n).items():
        out *= kronecker(d, p) ** k
        if out == 0:
            return 0
    return out


def l_two_chi(m: int) -> mpf:
    """L(2, chi_m) as a finite Hurwitz-zeta combination."""
    n = abs(m)
    with mp.workdps(WORK_DPS + 10):
        tot = mpf(0)
        for a in range(1, n + 1):
            c = kronecker_symbol(m, a)
            if c:
                tot += c * mpmath.zeta(2, mpf(a) / n)
        return +(tot / n**2)


def l_two_chi_series(m: int, terms: int) -> tuple[mpf, float]:
    """Direct partial sum of chi_m(n)/n^2 and a bound on the remainder.

    The remainder is bounded by Abel summation: character sums over any
    interval are at most |m| in absolute value.
    """
    from sympy import factorint  # noqa: F401  (kronecker_symbol uses it)

    with mp.workdps(30):
        tot = mpmath.fsum(kronecker_symbol(m, k) * mpf(1) / k**2 for k in range(1, terms + 1))
    return tot, abs(m) / (terms + 1) ** 2


def predicted_inner(m: int, s: STuple, prime_bound: int, base: BaseFieldConstants = RATIONALS) -> ProductEstimate:
    """Limit of X^-2 * sum of h R h* R* over the family."""
    _check_bound(prime_bound)
    _check_auxiliary(m, s)
    sd = _dual(m, s)
    local = R_k(base) * math.prod(
        (local_f(p, c, m) for p, c in s.finite.items()), start=Fraction(1)
    )
    outside = [F_v(p, splitting_in_ktilde(p, m)).value for p in _primes_outside(s, prime_bound)]
    with mp.workdps(WORK_DPS):
        zeta_kt = base.zeta2 * l_two_chi(m)
        val = mpf(local.numerator) / local.denominator
        val *= zeta_kt * mp.sqrt(abs(m)) * e_infty(s) * e_infty(sd) * euler_product(outside)
    return ProductEstimate("inner", val, prime_bound, _cubic_tail(prime_bound, 4.0), local)


def correlation_from_parts(m: int, s: STuple, prime_bound: int) -> tuple[mpf, float]:
    """inner / sqrt(mean * dual mean) and the combined log tail bound."""
    check_correlation_hypotheses(m, s)
    inner = predicted_inner(m, s, prime_bound)
    mean = predicted_mean(s, prime_bound)
    dual = predicted_mean_dual(m, s, prime_bound)
    with mp.workdps(WORK_DPS):
        ratio = inner.truncated_value / mp.sqrt(mean.truncated_value * dual.truncated_value)
    tail = inner.tail_bound_log + 0.5 * (mean.tail_bound_log + dual.tail_bound_log)
    return ratio, tail
