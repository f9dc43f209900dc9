"""Empirical moment sums over quadratic families, set against the predictions."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .density import (
    HypothesisError,
    ProductEstimate,
    check_correlation_hypotheses,
    delta_LS,
    predicted_correlation,
    predicted_inner,
    predicted_mean,
    predicted_mean_dual,
)
from .localdata import ArchClass, Kind, STuple, dual_disc, ramified_primes
from .quadfields import HRCache, enumerate_discs, hR_many, sieve_class_numbers_imag

IMAG_MAX = 10**7
REAL_MAX = 10**5
DEFAULT_PRIME_BOUND = 10**5


class CostGuardError(ValueError):
    """A cutoff exceeds the default cost guard."""


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    config: str
    cutoffs: tuple[int, ...]
    empirical: tuple[float, ...]
    prediction: ProductEstimate
    rel_err: tuple[float, ...]
    field_count: tuple[int, ...]
    m: int | None = None
    heuristic_count: tuple[float, ...] = ()
    notes: tuple[str, ...] = field(default=())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["X", "count", "empirical", "prediction", "rel_err"])
        pred = self.prediction.value
        for X, c, e, r in zip(self.cutoffs, self.field_count, self.empirical, self.rel_err):
            w.writerow([X, c, repr(e), repr(pred), repr(r)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "ktilde": self.m,
            "cutoffs": list(self.cutoffs),
            "empirical": list(self.empirical),
            "prediction": self.prediction.to_dict(),
            "rel_err": list(self.rel_err),
            "field_count": list(self.field_count),
            "heuristic_count": list(self.heuristic_count),
            "notes": list(self.notes),
        }

    def count_flags(self, min_X: int = 10**5, tol: float = 0.2) -> list[int]:
        """Cutoffs at which the field count strays from the heuristic."""
        return [
            X
            for X, c, hc in zip(self.cutoffs, self.field_count, self.heuristic_count)
            if X >= min_X and hc > 0 and abs(c / hc - 1) > tol
        ]

    def converging(self, start_X: int) -> bool:
        """|rel_err| nonincreasing over the cutoffs >= start_X."""
        errs = [abs(r) for X, r in zip(self.cutoffs, self.rel_err) if X >= start_X]
        return all(b <= a for a, b in zip(errs, errs[1:]))


# --- helpers -----------------------------------------------------------------


def _check_cutoffs(cutoffs, arch: ArchClass, override: bool, factor: int = 1) -> tuple[int, ...]:
    cs = tuple(sorted(int(x) for x in cutoffs))
    if not cs or cs[0] < 3:
        raise ValueError("cutoffs must be integers >= 3")
    limit = REAL_MAX if arch is ArchClass.RR else IMAG_MAX
    if cs[-1] * factor > limit and not override:
        raise CostGuardError(
            f"largest discriminant {cs[-1] * factor} exceeds the default limit {limit}; pass override"
        )
    return cs


def heuristic_count(s: STuple, X: int) -> float:
    """Naive local-density estimate of the number of fields in the family."""
    w = 3.0 / math.pi**2 * X
    for p, c in s.finite.items():
        tot = sum(
            0.5 * p ** (-(x.delta or 0)) if x.kind is Kind.RAMIFIED else 0.5
            for x in c.expand(p)
        )
        w *= tot / (1.5 if p == 2 else 1 + 1 / p)
    return w


def _prefix_counts(abs_d: np.ndarray, cutoffs) -> list[int]:
    return [int(np.searchsorted(abs_d, X, side="right")) for X in cutoffs]


def _prefix_sums(vals: np.ndarray, counts: list[int], exact: bool) -> list:
    if exact:
        # python ints, no overflow and order independent
        out, acc, prev = [], 0, 0
        for k in counts:
            acc += sum(int(v) for v in vals[prev:k])
            out.append(acc)
            prev = k
        return out
    return [math.fsum(vals[:k].tolist()) for k in counts]


def _ratio(num, X: int) -> float:
    if isinstance(num, int):
        return float(Fraction(num, X * X))
    return num / (X * X)


def _family_hr(ds: np.ndarray, cache: HRCache | None, sieve=None):
    return hR_many(ds, cache, sieve)


def _vectorised_dual(ds: np.ndarray, m: int) -> np.ndarray:
    a = np.where(ds % 4 == 1, ds, ds // 4)
    b = m if m % 4 == 1 else m // 4
    g = np.gcd(a, b)
    k = (a // g) * (b // g)
    return np.where(k % 4 == 1, k, 4 * k)


# --- runs --------------------------------------------------------------------


def mean_square_run(
    s: STuple,
    cutoffs,
    cache: HRCache | None = None,
    prime_bound: int = DEFAULT_PRIME_BOUND,
    override: bool = False,
    conjectural: bool = False,
) -> ExperimentReport:
    """S(X)/X^2 with S(X) the sum of (h R)^2 over the family up to X."""
    pred = predicted_mean(s, prime_bound, conjectural=conjectural)
    cs = _check_cutoffs(cutoffs, s.arch, override)
    ds = enumerate_discs(cs[-1], s)
    h, R = _family_hr(ds, cache)
    counts = _prefix_counts(np.abs(ds), cs)
    imag = s.arch is ArchClass.CC
    vals = h * h if imag else (h * R) ** 2
    sums = _prefix_sums(vals, counts, exact=imag)
    emp = tuple(_ratio(S, X) for S, X in zip(sums, cs))
    pv = pred.value
    notes = list(pred.notes)
    if conjectural and s.field_place_count() < 2:
        notes.insert(0, "CONJECTURAL")
    return ExperimentReport(
        "mean",
        s.format(),
        cs,
        emp,
        pred,
        tuple(e / pv - 1 for e in emp),
        tuple(counts),
        heuristic_count=tuple(heuristic_count(s, X) for X in cs),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class _PairSums:
    cutoffs: tuple[int, ...]
    counts: list[int]
    mean: list
    dual: list
    inner: list


def _pair_sums(m: int, s: STuple, cs, cache: HRCache | None) -> _PairSums:
    ds = enumerate_discs(cs[-1], s)
    ds = ds[ds != m]
    duals = _vectorised_dual(ds, m)
    h, R = _family_hr(ds, cache)
    dual_sieve = None
    if duals.size and duals[0] < 0:
        dual_sieve = sieve_class_numbers_imag(int(-duals.min()))
    hs, Rs = _family_hr(duals, cache, dual_sieve)
    counts = _prefix_counts(np.abs(ds), cs)
    exact = s.arch is ArchClass.CC and duals.size > 0 and duals[0] < 0
    if exact:
        a, b = h, hs
    else:
        a, b = h * R, hs * Rs
    return _PairSums(
        cs,
        counts,
        _prefix_sums(a * a, counts, exact),
        _prefix_sums(b * b, counts, exact),
        _prefix_sums(a * b, counts, exact),
    )


def _pair_guard(m: int, s: STuple, cutoffs, override: bool):
    sd = check_correlation_hypotheses(m, s)
    cs = _check_cutoffs(cutoffs, s.arch, override)
    # |d*| = Delta_{L_S} |d| bounds the dual family
    _check_cutoffs(cutoffs, sd.arch, override, factor=math.ceil(max(Fraction(1), delta_LS(m, s))))
    return cs


def correlation_run(
    m: int,
    s: STuple,
    cutoffs,
    cache: HRCache | None = None,
    prime_bound: int = DEFAULT_PRIME_BOUND,
    override: bool = False,
) -> ExperimentReport:
    pred = predicted_correlation(m, s, prime_bound)
    cs = _pair_guard(m, s, cutoffs, override)
    ps = _pair_sums(m, s, cs, cache)
    emp = [inn / math.sqrt(mn * du) for mn, du, inn in zip(ps.mean, ps.dual, ps.inner)]
    pv = pred.value
    return ExperimentReport(
        "correlation",
        s.format(),
        cs,
        tuple(emp),
        pred,
        tuple(e / pv - 1 for e in emp),
        tuple(ps.counts),
        m=m,
        heuristic_count=tuple(heuristic_count(s, X) for X in cs),
    )


def inner_product_run(
    m: int,
    s: STuple,
    cutoffs,
    cache: HRCache | None = None,
    prime_bound: int = DEFAULT_PRIME_BOUND,
    override: bool = False,
) -> ExperimentReport:
    pred = predicted_inner(m, s, prime_bound)
    cs = _pair_guard(m, s, cutoffs, override)
    ps = _pair_sums(m, s, cs, cache)
    emp = tuple(_ratio(v, X) for v, X in zip(ps.inner, cs))
    pv = pred.value
    return ExperimentReport(
        "inner",
        s.format(),
        cs,
        emp,
        pred,
        tuple(e / pv - 1 for e in emp),
        tuple(ps.counts),
        m=m,
        heuristic_count=tuple(heuristic_count(s, X) for X in cs),
    )


def dual_mean_run(
    m: int,
    s: STuple,
    cutoffs,
    cache: HRCache | None = None,
    prime_bound: int = DEFAULT_PRIME_BOUND,
    override: bool = False,
) -> ExperimentReport:
    pred = predicted_mean_dual(m, s, prime_bound)
    cs = _pair_guard(m, s, cutoffs, override)
    ps = _pair_sums(m, s, cs, cache)
    emp = tuple(_ratio(v, X) for v, X in zip(ps.dual, cs))
    pv = pred.value
    return ExperimentReport(
        "dual_mean",
        s.format(),
        cs,
        emp,
        pred,
        tuple(e / pv - 1 for e in emp),
        tuple(ps.counts),
        m=m,
        heuristic_count=tuple(heuristic_count(s, X) for X in cs),
    )


@dataclass(frozen=True)
class TwistReport:
    m: int
    config: str
    X: int
    checked: int
    counterexamples: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.counterexamples and self.checked > 0


def verify_disc_twist(m: int, s: STuple, X: int) -> TwistReport:
    """Check |d*| = Delta_{L_S} |d| for every field of the family up to X."""
    rm = ramified_primes(m)
    if 2 in rm:
        raise HypothesisError(f"2 ramifies in Q(sqrt {m})")
    missing = [p for p in rm if p not in s.finite]
    if missing:
        raise HypothesisError(f"S must contain the primes ramified in Q(sqrt {m}); missing {missing}")
    f = delta_LS(m, s)
    ds = enumerate_discs(X, s)
    ds = ds[ds != m]
    bad = []
    for d in ds.tolist():
        ds_ = dual_disc(d, m)
        if abs(ds_) != f * abs(d):
            bad.append((d, ds_))
    return TwistReport(m, s.format(), X, len(ds), tuple(bad))
