"""Local classification of quadratic algebras over Q and Q_p.

A quadratic field Q(sqrt d) is described at a prime p by its
:class:`QuadAlgebraClass` (split, inert, or one of the ramified classes) and at
infinity by :class:`ArchClass`.  An :class:`STuple` is a finite set of such
local conditions; it cuts out the family of fields enumerated by
:mod:`quadmoment.quadfields`.

Ramified classes carry a tag so that every class is distinguished:

* odd p: ``unit_tag`` is the Legendre symbol of d/p mod p (+1 or -1);
* p = 2: ``delta`` is 2 or 3 and ``unit_tag`` is the odd part of d/4
  reduced mod 8 (3 or 7 when delta = 2; 1, 3, 5 or 7 when delta = 3).

A class with ``unit_tag=None`` (or, at p = 2, ``delta=None``) is a *pattern*
standing for the union of the concrete classes it covers.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from sympy import isprime

from .primes import ord_p


class Kind(enum.Enum):
    SPLIT = "sp"
    INERT = "in"
    RAMIFIED = "rm"


class ArchClass(enum.Enum):
    RR = "R"
    CC = "C"

    @classmethod
    def of(cls, d: int) -> "ArchClass":
        return cls.RR if d > 0 else cls.CC

    def flipped(self) -> "ArchClass":
        return ArchClass.CC if self is ArchClass.RR else ArchClass.RR


class LocalDataError(ValueError):
    pass


_DYADIC_TAGS = {2: (3, 7), 3: (1, 3, 5, 7)}


@dataclass(frozen=True)
class QuadAlgebraClass:
    kind: Kind
    delta: int | None = 0
    unit_tag: int | None = None

    def __post_init__(self):
        if self.kind is not Kind.RAMIFIED:
            if self.delta != 0 or self.unit_tag is not None:
                raise LocalDataError("split/inert classes have delta=0 and no tag")
        elif self.delta is not None and self.delta < 1:
            raise LocalDataError("ramified classes have delta >= 1")

    @classmethod
    def split(cls) -> "QuadAlgebraClass":
        return cls(Kind.SPLIT)

    @classmethod
    def inert(cls) -> "QuadAlgebraClass":
        return cls(Kind.INERT)

    @classmethod
    def ramified(cls, delta: int | None = 1, unit_tag: int | None = None) -> "QuadAlgebraClass":
        return cls(Kind.RAMIFIED, delta, unit_tag)

    @property
    def is_field(self) -> bool:
        return self.kind is not Kind.SPLIT

    @property
    def is_exact(self) -> bool:
        return self.kind is not Kind.RAMIFIED or (
            self.delta is not None and self.unit_tag is not None
        )

    def validate_at(self, p: int) -> None:
        if self.kind is not Kind.RAMIFIED:
            return
        if p == 2:
            if self.delta not in (None, 2, 3):
                raise LocalDataError(f"ramified delta at 2 must be 2 or 3, got {self.delta}")
            if self.unit_tag is not None and (
                self.delta is None or self.unit_tag not in _DYADIC_TAGS[self.delta]
            ):
                raise LocalDataError(f"bad dyadic tag {self.unit_tag} for delta={self.delta}")
        else:
            if self.delta != 1:
                raise LocalDataError(f"ramified delta at odd p must be 1, got {self.delta}")
            if self.unit_tag not in (None, 1, -1):
                raise LocalDataError(f"odd ramified tag must be +1/-1, got {self.unit_tag}")

    def expand(self, p: int) -> list["QuadAlgebraClass"]:
        """The concrete classes at ``p`` covered by this (possibly pattern) class."""
        self.validate_at(p)
        if self.is_exact:
            return [self]
        if p != 2:
            return [QuadAlgebraClass.ramified(1, t) for t in (1, -1)]
        deltas = (2, 3) if self.delta is None else (self.delta,)
        return [QuadAlgebraClass.ramified(dl, t) for dl in deltas for t in _DYADIC_TAGS[dl]]

    def covers(self, other: "QuadAlgebraClass") -> bool:
        if self.kind is not other.kind:
            return False
        if self.delta is not None and self.delta != other.delta:
            return False
        return self.unit_tag is None or self.unit_tag == other.unit_tag

    def token(self, p: int) -> str:
        if self.kind is not Kind.RAMIFIED:
            return self.kind.value
        if p == 2:
            if self.unit_tag is not None:
                raise LocalDataError("exact dyadic classes have no text form")
            return "rm" if self.delta is None else f"rm:d{self.delta}"
        return {None: "rm", 1: "rm+", -1: "rm-"}[self.unit_tag]


@dataclass(frozen=True)
class STuple:
    arch: ArchClass
    finite: Mapping[int, QuadAlgebraClass] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, c in self.finite.items():
            p = int(p)
            if not isprime(p):
                raise LocalDataError(f"{p} is not prime")
            c.validate_at(p)
            clean[p] = c
        object.__setattr__(self, "finite", dict(sorted(clean.items())))

    def __hash__(self):
        return hash((self.arch, tuple(self.finite.items())))

    @property
    def primes(self) -> list[int]:
        return list(self.finite)

    def field_place_count(self) -> int:
        return (self.arch is ArchClass.CC) + sum(c.is_field for c in self.finite.values())

    def restrict(self, primes: Iterable[int]) -> "STuple":
        keep = set(primes)
        return STuple(self.arch, {p: c for p, c in self.finite.items() if p in keep})

    def format(self) -> str:
        parts = [f"inf={self.arch.value}"]
        parts += [f"{p}={c.token(p)}" for p, c in self.finite.items()]
        return ";".join(parts)

    def __str__(self):
        try:
            return self.format()
        except LocalDataError:
            return repr(self)


# --- scalar arithmetic -----------------------------------------------------


def kronecker(d: int, p: int) -> int:
    """Kronecker symbol (d/p) for a prime p."""
    if p == 2:
        if d % 2 == 0:
            return 0
        return 1 if d % 8 in (1, 7) else -1
    r = pow(d % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def _squarefree(n: int) -> bool:
    n = abs(n)
    f = 2
    while f * f <= n:
        if n % (f * f) == 0:
            return False
        if n % f == 0:
            n //= f
        f += 1 if f == 2 else 2
    return True


def is_fundamental(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _require_fundamental(d: int) -> None:
    if not is_fundamental(d):
        raise LocalDataError(f"{d} is not a fundamental discriminant")


def squarefree_kernel(d: int) -> int:
    """Signed squarefree m with Q(sqrt d) = Q(sqrt m), for fundamental d."""
    return d if d % 4 == 1 else d // 4


def disc_of_kernel(m: int) -> int:
    return m if m % 4 == 1 else 4 * m


def local_class(d: int, p: int) -> QuadAlgebraClass:
    k = kronecker(d, p)
    if k == 1:
        return QuadAlgebraClass.split()
    if k == -1:
        return QuadAlgebraClass.inert()
    delta = ord_p(d, p)
    if p == 2:
        m = d // 4
        odd = m if delta == 2 else m // 2
        return QuadAlgebraClass.ramified(delta, odd % 8)
    return QuadAlgebraClass.ramified(delta, kronecker(d // p, p))


def matches(d: int, s: STuple) -> bool:
    if ArchClass.of(d) is not s.arch:
        return False
    return all(c.covers(local_class(d, p)) for p, c in s.finite.items())


def dual_disc(d: int, m: int) -> int:
    """Discriminant of the third quadratic subfield of Q(sqrt d, sqrt m)."""
    if d == m:
        raise LocalDataError("F equals the auxiliary field; its dual is degenerate")
    a, b = squarefree_kernel(d), squarefree_kernel(m)
    g = math.gcd(a, b)
    return disc_of_kernel((a // g) * (b // g))


def splitting_in_ktilde(p: int, m: int) -> str:
    return {Kind.RAMIFIED: "rm", Kind.INERT: "in", Kind.SPLIT: "sp"}[local_class(m, p).kind]


def count_ramified_classes(q: int, delta: int, m_v: int = 0) -> int:
    """Number of ramified quadratic extensions of a local field with residue
    field of size q, 2O = p^m_v, and discriminant exponent ``delta``."""
    if delta == 2 * m_v + 1:
        return 2 * q**m_v
    if delta % 2 == 0 and 2 <= delta <= 2 * m_v:
        ell = delta // 2
        return 2 * q ** (ell - 1) * (q - 1)
    raise LocalDataError(f"no ramified extensions with delta={delta} when m_v={m_v}")


def ramified_primes(m: int) -> list[int]:
    from sympy import primefactors

    return [p for p in primefactors(abs(m)) if kronecker(m, p) == 0]


# --- twisting by a fixed auxiliary field Q(sqrt m) ---------------------------


def dual_class(p: int, c: QuadAlgebraClass, m: int) -> QuadAlgebraClass:
    """The class of F* at p given the class of F, with F* = dual of F by m."""
    mc = local_class(m, p)
    if mc.kind is Kind.SPLIT:
        return c
    if mc.kind is Kind.INERT:
        if c.kind is Kind.SPLIT:
            return QuadAlgebraClass.inert()
        if c.kind is Kind.INERT:
            return QuadAlgebraClass.split()
        if c.unit_tag is None:
            return c
        if p == 2:
            return QuadAlgebraClass.ramified(c.delta, (c.unit_tag * (m % 8)) % 8)
        return QuadAlgebraClass.ramified(c.delta, -c.unit_tag)
    if p == 2:
        raise LocalDataError("twisting is undefined when 2 ramifies in the auxiliary field")
    if c.kind is Kind.SPLIT:
        return QuadAlgebraClass.ramified(1, mc.unit_tag)
    if c.kind is Kind.INERT:
        return QuadAlgebraClass.ramified(1, -mc.unit_tag)
    if c.unit_tag is None:
        raise LocalDataError(
            f"ramified class at {p} needs a tag (rm+/rm-) to determine the dual class"
        )
    return QuadAlgebraClass.split() if c.unit_tag == mc.unit_tag else QuadAlgebraClass.inert()


def is_ktilde_local(p: int, c: QuadAlgebraClass, m: int) -> bool:
    mc = local_class(m, p)
    return mc.kind is Kind.RAMIFIED and c.kind is Kind.RAMIFIED and c.unit_tag == mc.unit_tag


def dual_stuple(s: STuple, m: int) -> STuple:
    arch = s.arch if m > 0 else s.arch.flipped()
    return STuple(arch, {p: dual_class(p, c, m) for p, c in s.finite.items()})


# --- text grammar ------------------------------------------------------------

_ENTRY = re.compile(r"^(\d+)=(sp|in|rm[+-]?|rm:d[23])$")


def parse_stuple(text: str) -> STuple:
    """Parse ``inf=C|R`` followed by ``;<p>=sp|in|rm[+|-]|rm:d2|rm:d3`` entries."""
    tokens = text.strip().split(";")
    head = tokens[0].strip()
    if head not in ("inf=C", "inf=R"):
        raise LocalDataError(f"token 1 {head!r}: expected 'inf=C' or 'inf=R'")
    arch = ArchClass(head[-1])
    finite: dict[int, QuadAlgebraClass] = {}
    for pos, tok in enumerate(tokens[1:], start=2):
        tok = tok.strip()
        mo = _ENTRY.match(tok)
        if not mo:
            raise LocalDataError(f"token {pos} {tok!r}: malformed entry")
        p, code = int(mo.group(1)), mo.group(2)
        if not isprime(p):
            raise LocalDataError(f"token {pos} {tok!r}: {p} is not prime")
        if p in finite:
            raise LocalDataError(f"token {pos} {tok!r}: prime {p} repeated")
        if code == "sp":
            c = QuadAlgebraClass.split()
        elif code == "in":
            c = QuadAlgebraClass.inert()
        elif code.startswith("rm:d"):
            if p != 2:
                raise LocalDataError(f"token {pos} {tok!r}: rm:dN is only valid at p=2")
            c = QuadAlgebraClass.ramified(int(code[-1]))
        else:
            tag = {"rm": None, "rm+": 1, "rm-": -1}[code]
            if p == 2:
                if tag is not None:
                    raise LocalDataError(f"token {pos} {tok!r}: use rm:d2/rm:d3 at p=2")
                c = QuadAlgebraClass.ramified(None)
            else:
                c = QuadAlgebraClass.ramified(1, tag)
        finite[p] = c
    return STuple(arch, finite)


# --- vectorised matching -----------------------------------------------------


def _legendre_table(p: int) -> np.ndarray:
    r = np.arange(p, dtype=np.int64)
    t = np.array([pow(int(x), (p - 1) // 2, p) for x in r], dtype=np.int64)
    t[t == p - 1] = -1
    return t


def local_codes(ds: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(kind, delta, tag) arrays for fundamental discriminants ``ds`` at ``p``.

    kind: 0 split, 1 inert, 2 ramified.
    """
    ds = np.asarray(ds, dtype=np.int64)
    kind = np.zeros(ds.shape, dtype=np.int8)
    delta = np.zeros(ds.shape, dtype=np.int8)
    tag = np.zeros(ds.shape, dtype=np.int8)
    if p == 2:
        odd = ds % 2 == 1
        kind[odd & (ds % 8 == 5)] = 1
        even = ~odd
        m = ds // 4
        d2 = even & (m % 2 == 1)
        d3 = even & (m % 2 == 0)
        kind[even] = 2
        delta[d2], delta[d3] = 2, 3
        tag[d2] = m[d2] % 8
        tag[d3] = (m[d3] // 2) % 8
        return kind, delta, tag
    leg = _legendre_table(p)
    k = leg[ds % p]
    kind[k == -1] = 1
    ram = k == 0
    kind[ram] = 2
    delta[ram] = 1
    tag[ram] = leg[(ds[ram] // p) % p]
    return kind, delta, tag


_KIND_CODE = {Kind.SPLIT: 0, Kind.INERT: 1, Kind.RAMIFIED: 2}


def match_mask(ds: np.ndarray, s: STuple) -> np.ndarray:
    """Vectorised :func:`matches` over an array of fundamental discriminants."""
    ds = np.asarray(ds, dtype=np.int64)
    mask = ds > 0 if s.arch is ArchClass.RR else ds < 0
    for p, c in s.finite.items():
        kind, delta, tag = local_codes(ds, p)
        mask &= kind == _KIND_CODE[c.kind]
        if c.kind is Kind.RAMIFIED:
            if c.delta is not None:
                mask &= delta == c.delta
            if c.unit_tag is not None:
                mask &= tag == c.unit_tag
    return mask
