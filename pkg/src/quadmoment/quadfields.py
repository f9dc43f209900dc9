"""Fundamental discriminants, class numbers and regulators of quadratic fields.

Imaginary fields get h by counting reduced forms (exact).  Real fields get R
from the continued fraction of the standard generator and h from the analytic
class number formula, rounded under a residual guard.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import mpmath
import numba
import numpy as np

from .localdata import ArchClass, STuple, match_mask
from .primes import smallest_prime_factor, squarefree_mask

CACHE_HEADER = "#quadmoment-hr-v1"
RESIDUAL_LIMIT = 0.01


class ClassNumberError(ArithmeticError):
    """Analytic class number could not be rounded safely."""


@dataclass(frozen=True)
class FieldRecord:
    d: int
    h: int
    R: float

    @property
    def abs_norm_disc(self) -> int:
        return abs(self.d)

    @property
    def hR(self) -> float:
        return self.h * self.R


# --- discriminant enumeration ------------------------------------------------


def fundamental_masks(X: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean arrays over n = 0..X: n fundamental, -n fundamental."""
    sf = squarefree_mask(X)
    n = np.arange(X + 1)
    pos = np.zeros(X + 1, dtype=bool)
    neg = np.zeros(X + 1, dtype=bool)
    pos[(n % 4 == 1) & sf] = True
    neg[(n % 4 == 3) & sf] = True
    quarter = n // 4
    div4 = (n % 4 == 0) & (n > 0)
    sfq = np.zeros(X + 1, dtype=bool)
    sfq[div4] = sf[quarter[div4]]
    pos[div4 & sfq & np.isin(quarter % 4, (2, 3))] = True
    # -n = 4(-n/4) with -n/4 = 2, 3 mod 4  <=>  n/4 = 2, 1 mod 4
    neg[div4 & sfq & np.isin(quarter % 4, (1, 2))] = True
    pos[1] = False
    return pos, neg


def enumerate_discs(X: int, s: STuple) -> np.ndarray:
    """Fundamental d with |d| <= X in the family of ``s``, ordered by |d|."""
    if X < 3:
        raise ValueError("X must be at least 3")
    pos, neg = fundamental_masks(X)
    if s.arch is ArchClass.RR:
        ds = np.flatnonzero(pos).astype(np.int64)
    else:
        ds = -np.flatnonzero(neg).astype(np.int64)
    return ds[match_mask(ds, s)]


# --- imaginary class numbers -------------------------------------------------


def class_number_imag_forms(d: int) -> int:
    """Number of reduced primitive forms of discriminant d < 0."""
    if d >= 0:
        raise ValueError("form counting needs d < 0")
    n = -d
    h = 0
    a = 1
    while 3 * a * a <= n:
        for b in range(-a + 1, a + 1):
            if (b * b + n) % (4 * a):
                continue
            c = (b * b + n) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, abs(b)), c) == 1:
                h += 1
        a += 1
    return h


@numba.njit(cache=True)
def _form_sieve(X):
    h = np.zeros(X + 1, np.int32)
    a = 1
    while 3 * a * a <= X:
        for b in range(0, a + 1):
            c = a
            while True:
                D = 4 * a * c - b * b
                if D > X:
                    break
                if D > 0:
                    if b == 0 or b == a or a == c:
                        h[D] += 1
                    else:
                        h[D] += 2
                c += 1
        a += 1
    return h


def sieve_class_numbers_imag(X: int) -> np.ndarray:
    """h[|d|] for fundamental d < 0 with |d| <= X; -1 elsewhere.

    At a fundamental discriminant every form is primitive, so a raw count of
    reduced forms is the class number.
    """
    if X < 3:
        raise ValueError("X must be at least 3")
    raw = _form_sieve(X)
    _, neg = fundamental_masks(X)
    out = np.full(X + 1, -1, dtype=np.int64)
    out[neg] = raw[neg]
    return out


def units_count(d: int) -> int:
    return {-3: 6, -4: 4}.get(d, 2)


# --- characters --------------------------------------------------------------


@numba.njit(cache=True)
def _powmod(b, e, m):
    r = 1
    b %= m
    while e:
        if e & 1:
            r = r * b % m
        b = b * b % m
        e >>= 1
    return r


@numba.njit(cache=True)
def _kron_row(d, n, spf, out):
    """out[a] = (d/a) for 0 <= a <= n."""
    out[0] = 0
    if n >= 1:
        out[1] = 1
    for a in range(2, n + 1):
        p = spf[a]
        if p == a:
            if p == 2:
                if d % 2 == 0:
                    out[a] = 0
                else:
                    r8 = d % 8
                    out[a] = 1 if (r8 == 1 or r8 == 7) else -1
            else:
                r = _powmod(d % p, (p - 1) // 2, p)
                out[a] = -1 if r == p - 1 else r
        else:
            out[a] = out[p] * out[a // p]


def kronecker_row(d: int, spf: np.ndarray | None = None) -> np.ndarray:
    """chi_d(a) for a = 0..|d|."""
    n = abs(d)
    if spf is None or len(spf) <= n:
        spf = smallest_prime_factor(max(n, 2))
    out = np.zeros(n + 1, dtype=np.int64)
    _kron_row(d, n, spf, out)
    return out


@numba.njit(cache=True)
def _imag_h_many(ds, spf, out):
    buf = np.zeros(spf.shape[0], np.int64)
    for i in range(ds.shape[0]):
        d = ds[i]
        n = -d
        half = n // 2
        _kron_row(d, max(half, 2), spf, buf)
        s = 0
        for a in range(1, (n + 1) // 2):
            s += buf[a]
        w = 2
        if d == -3:
            w = 6
        elif d == -4:
            w = 4
        # h (2 - chi(2)) * 2 = w * sum_{a < n/2} chi(a), exact
        out[i] = (w * s) // (2 * (2 - buf[2]))


def class_numbers_imag_analytic(ds: np.ndarray) -> np.ndarray:
    """Class numbers of fundamental d < 0 from the exact character sum."""
    ds = np.asarray(ds, dtype=np.int64)
    if ds.size == 0:
        return np.zeros(0, dtype=np.int64)
    if np.any(ds >= 0):
        raise ValueError("all discriminants must be negative")
    spf = smallest_prime_factor(max(int(-ds.min()) // 2, 2) + 1)
    out = np.zeros(ds.size, dtype=np.int64)
    _imag_h_many(ds, spf, out)
    return out


@numba.njit(cache=True)
def _real_logsin_many(ds, spf, out):
    buf = np.zeros(spf.shape[0], np.int64)
    for i in range(ds.shape[0]):
        d = ds[i]
        _kron_row(d, max((d - 1) // 2, 2), spf, buf)
        s = 0.0
        c = 0.0
        for a in range(1, (d + 1) // 2):
            if buf[a] != 0:
                # Kahan summation
                y = buf[a] * math.log(math.sin(math.pi * a / d)) - c
                t = s + y
                c = (t - s) - y
                s = t
        out[i] = -2.0 * s / math.sqrt(d)


def l_one_chi(d: int, target_abs_err: float = 1e-12) -> mpmath.mpf:
    """L(1, chi_d) from the finite character-sum formulas."""
    n = abs(d)
    row = kronecker_row(d)
    digits = max(20, int(-math.log10(target_abs_err)) + int(math.log10(n + 1)) + 8)
    with mpmath.mp.workdps(digits):
        if d < 0:
            s = sum(int(row[a]) * a for a in range(1, n))
            return +(-mpmath.pi * s / mpmath.mpf(n) ** 1.5)
        terms = (
            int(row[a]) * mpmath.log(mpmath.sin(mpmath.pi * a / n)) for a in range(1, n) if row[a]
        )
        return +(-mpmath.fsum(terms) / mpmath.sqrt(n))


# --- regulators --------------------------------------------------------------


@dataclass(frozen=True)
class FundamentalUnit:
    """epsilon = (x + y sqrt d) / 2 with x^2 - d y^2 = 4 * norm."""

    d: int
    x: int
    y: int
    norm: int
    period: int

    def pell_ok(self) -> bool:
        return self.x * self.x - self.d * self.y * self.y == 4 * self.norm


def _cf_start(d: int) -> tuple[int, int]:
    # omega = (P0 + sqrt d) / 2
    return (1, 2) if d % 4 == 1 else (0, 2)


def _cf_period(d: int):
    """Complete quotients (P, Q) of one period of omega's expansion."""
    r = math.isqrt(d)
    P, Q = _cf_start(d)
    a = (P + r) // Q
    P = a * Q - P
    Q = (d - P * P) // Q
    start = (P, Q)
    out = []
    while True:
        out.append((P, Q))
        a = (P + r) // Q
        P = a * Q - P
        Q = (d - P * P) // Q
        if (P, Q) == start:
            return out


def regulator_real(d: int) -> float:
    """log of the fundamental unit, summing logs of the complete quotients."""
    if d <= 0:
        raise ValueError("regulator_real needs d > 0")
    sd = math.sqrt(d)
    return math.fsum(math.log((P + sd) / Q) for P, Q in _cf_period(d))


def regulator_real_mp(d: int, dps: int = 40) -> mpmath.mpf:
    with mpmath.mp.workdps(dps):
        sd = mpmath.sqrt(d)
        return mpmath.fsum(mpmath.log((P + sd) / Q) for P, Q in _cf_period(d))


def fundamental_unit(d: int) -> FundamentalUnit:
    """Exact fundamental unit as the product of the period's complete quotients."""
    if d <= 0:
        raise ValueError("fundamental_unit needs d > 0")
    per = _cf_period(d)
    A, B, C = 1, 0, 1  # (A + B sqrt d) / C
    for P, Q in per:
        A, B, C = A * P + B * d, A + B * P, C * Q
        g = math.gcd(math.gcd(A, B), C)
        A, B, C = A // g, B // g, C // g
    x, rx = divmod(2 * A, C)
    y, ry = divmod(2 * B, C)
    if rx or ry:
        raise ArithmeticError(f"unit for d={d} is not in the maximal order")
    return FundamentalUnit(d, x, y, (-1) ** len(per), len(per))


def smallest_unit_bruteforce(d: int, limit: int = 10**6) -> tuple[int, int]:
    """Smallest (x, y), y >= 1, with x^2 - d y^2 = +-4; slow oracle."""
    for y in range(1, limit):
        for t in (-4, 4):
            v = d * y * y + t
            if v >= 0:
                x = math.isqrt(v)
                if x * x == v:
                    return x, y
    raise ArithmeticError("no unit found below the search limit")


# --- h and R -----------------------------------------------------------------


def _round_h(d: int, L: float, R: float) -> tuple[int, float]:
    val = math.sqrt(d) * L / (2.0 * R)
    h = round(val)
    return h, abs(val - h)


def hR_real(d: int, L: float | None = None) -> FieldRecord:
    R = regulator_real(d)
    if L is None:
        L = float(l_one_chi(d, 1e-14))
    h, res = _round_h(d, L, R)
    if res >= RESIDUAL_LIMIT or h < 1:
        with mpmath.mp.workdps(40):
            Rm = regulator_real_mp(d)
            val = mpmath.sqrt(d) * l_one_chi(d, 1e-30) / (2 * Rm)
        h = int(mpmath.nint(val))
        res = float(abs(val - h))
        if res >= RESIDUAL_LIMIT or h < 1:
            raise ClassNumberError(f"d={d}: analytic class number {val} is not near an integer")
    return FieldRecord(d, h, R)


class HRCache:
    """On-disk ``d,h,R`` table; keyed by the signed discriminant."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path else None
        self.records: dict[int, FieldRecord] = {}
        if self.path and self.path.exists():
            self.load()

    def load(self) -> None:
        with open(self.path) as fh:
            first = fh.readline().strip()
            if first != CACHE_HEADER:
                raise ValueError(f"{self.path}: not an hR cache (header {first!r})")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d, h, R = line.split(",")
                self.records[int(d)] = FieldRecord(int(d), int(h), float(R))

    def save(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w") as fh:
            fh.write(CACHE_HEADER + "\n")
            for d in sorted(self.records, key=lambda k: (abs(k), k)):
                r = self.records[d]
                fh.write(f"{r.d},{r.h},{r.R:.12g}\n")
        os.replace(tmp, self.path)

    def get(self, d: int) -> FieldRecord | None:
        return self.records.get(d)

    def put(self, rec: FieldRecord) -> None:
        self.records[rec.d] = rec

    def __len__(self):
        return len(self.records)


def hR(d: int, cache: HRCache | None = None) -> FieldRecord:
    if cache is not None and (rec := cache.get(d)) is not None:
        return rec
    if d < 0:
        rec = FieldRecord(d, class_number_imag_forms(d), 1.0)
    else:
        rec = hR_real(d)
    if cache is not None:
        cache.put(rec)
    return rec


def hR_many(ds: np.ndarray, cache: HRCache | None = None, sieve: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(h, R) arrays for fundamental discriminants of one sign.

    Imaginary: from a form sieve (computed here if not given).  Real: regulator
    per field and L(1, chi) in a compiled batch.
    """
    ds = np.asarray(ds, dtype=np.int64)
    h = np.zeros(ds.size, dtype=np.int64)
    R = np.ones(ds.size, dtype=np.float64)
    if ds.size == 0:
        return h, R
    todo = []
    for i, d in enumerate(ds):
        rec = cache.get(int(d)) if cache is not None else None
        if rec is None:
            todo.append(i)
        else:
            h[i], R[i] = rec.h, rec.R
    if not todo:
        return h, R
    idx = np.array(todo, dtype=np.int64)
    sub = ds[idx]
    if sub[0] < 0:
        if sieve is None or len(sieve) <= int(-sub.min()):
            sieve = sieve_class_numbers_imag(int(-sub.min()))
        h[idx] = sieve[-sub]
        if np.any(h[idx] < 1):
            raise ValueError("non-fundamental discriminant passed to hR_many")
    else:
        spf = smallest_prime_factor(int(sub.max()))
        Ls = np.zeros(sub.size)
        _real_logsin_many(sub, spf, Ls)
        for k, (j, d) in enumerate(zip(idx, sub)):
            rec = hR_real(int(d), float(Ls[k]))
            h[j], R[j] = rec.h, rec.R
    if cache is not None:
        for j in idx:
            cache.put(FieldRecord(int(ds[j]), int(h[j]), float(R[j])))
    return h, R
