"""M(2,2) and the maximal order of the ramified quaternion algebra, mod p^n.

Quaternion elements are stored as (a0, a1, b0, b1) for alpha + beta*sqrt(pi)
with alpha = a0 + a1*theta, beta = b0 + b1*theta in the unramified quadratic
ring O_F.  theta^2 = u (a fixed nonresidue) for odd p and theta^2 = theta + 1
for p = 2.  The uniformiser is pi = p and sqrt(pi) * alpha = alpha^sigma * sqrt(pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sympy.ntheory import primitive_root

Coords = tuple[int, int, int, int]


@dataclass(frozen=True)
class FiniteRing:
    p: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("exponent n must be >= 1")

    @property
    def modulus(self) -> int:
        return self.p**self.n

    def unit_generators(self) -> list[int]:
        """Generators of (Z/p^n)^x."""
        N = self.modulus
        if self.p != 2:
            return [int(primitive_root(N))]
        return sorted({g % N for g in (N - 1, 5)} - {1}) or [1]


def nonresidue(p: int) -> int:
    for u in range(2, p):
        if pow(u, (p - 1) // 2, p) == p - 1:
            return u
    raise ValueError(f"no quadratic nonresidue mod {p}")


class MatrixAlgebra:
    """2x2 matrices [[a, b], [c, d]] stored row-major."""

    variant = "matrix"

    def __init__(self, p: int, ring: FiniteRing | None = None):
        self.p = p
        self.N = ring.modulus if ring else None

    def reduce(self, x) -> Coords:
        return tuple(int(v) % self.N for v in x) if self.N else tuple(int(v) for v in x)

    def mul(self, x, y) -> Coords:
        a, b, c, d = x
        e, f, g, h = y
        return self.reduce((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))

    def norm(self, x) -> int:
        a, b, c, d = x
        v = a * d - b * c
        return v % self.N if self.N else v

    def one(self) -> Coords:
        return (1, 0, 0, 1)


class QuaternionOrder:
    """Maximal order O_F + O_F sqrt(pi) of the ramified quaternion algebra over Q_p."""

    variant = "quaternion"

    def __init__(self, p: int, ring: FiniteRing | None = None):
        self.p = p
        self.N = ring.modulus if ring else None
        self.u = None if p == 2 else nonresidue(p)

    def _r(self, v: int) -> int:
        return v % self.N if self.N else v

    def reduce(self, x) -> Coords:
        return tuple(self._r(int(v)) for v in x)

    # O_F = Z[theta]
    def fmul(self, x, y) -> tuple[int, int]:
        a0, a1 = x
        b0, b1 = y
        if self.p == 2:
            # theta^2 = theta + 1
            return (a0 * b0 + a1 * b1, a0 * b1 + a1 * b0 + a1 * b1)
        return (a0 * b0 + self.u * a1 * b1, a0 * b1 + a1 * b0)

    def fsigma(self, x) -> tuple[int, int]:
        a0, a1 = x
        if self.p == 2:
            return (a0 + a1, -a1)
        return (a0, -a1)

    def fnorm(self, x) -> int:
        a0, a1 = x
        if self.p == 2:
            return a0 * a0 + a0 * a1 - a1 * a1
        return a0 * a0 - self.u * a1 * a1

    def mul(self, x, y) -> Coords:
        al, be = x[:2], x[2:]
        ga, de = y[:2], y[2:]
        ag = self.fmul(al, ga)
        bd = self.fmul(be, self.fsigma(de))
        ad = self.fmul(al, de)
        bg = self.fmul(be, self.fsigma(ga))
        p = self.p
        return self.reduce((ag[0] + p * bd[0], ag[1] + p * bd[1], ad[0] + bg[0], ad[1] + bg[1]))

    def norm(self, x) -> int:
        return self._r(self.fnorm(x[:2]) - self.p * self.fnorm(x[2:]))

    def one(self) -> Coords:
        return (1, 0, 0, 0)


Algebra = MatrixAlgebra | QuaternionOrder


@dataclass(frozen=True)
class AlgebraElt:
    alg: Algebra
    c: Coords

    @property
    def variant(self) -> str:
        return self.alg.variant

    def __mul__(self, other: "AlgebraElt") -> "AlgebraElt":
        return AlgebraElt(self.alg, self.alg.mul(self.c, other.c))

    def __add__(self, other: "AlgebraElt") -> "AlgebraElt":
        return AlgebraElt(self.alg, self.alg.reduce(tuple(a + b for a, b in zip(self.c, other.c))))

    def scale(self, k: int) -> "AlgebraElt":
        return AlgebraElt(self.alg, self.alg.reduce(tuple(k * a for a in self.c)))

    def norm(self) -> int:
        return self.alg.norm(self.c)


@dataclass(frozen=True)
class VPoint:
    x1: AlgebraElt
    x2: AlgebraElt

    def vector(self) -> np.ndarray:
        return np.array(self.x1.c + self.x2.c, dtype=np.int64)


def binary_form(x: VPoint) -> tuple[int, int, int]:
    """Coefficients (a0, a1, a2) of N(v1 x1 + v2 x2)."""
    n1 = x.x1.norm()
    n2 = x.x2.norm()
    alg = x.x1.alg
    mid = alg.norm((x.x1 + x.x2).c) - n1 - n2
    return n1, (mid % alg.N if alg.N else mid), n2


def rel_invariant(x: VPoint) -> int:
    a0, a1, a2 = binary_form(x)
    P = a1 * a1 - 4 * a0 * a2
    N = x.x1.alg.N
    return P % N if N else P


def left_matrix(alg: Algebra, g) -> np.ndarray:
    """4x4 integer matrix of x -> g x on coordinates."""
    cols = [alg.mul(g, e) for e in np.eye(4, dtype=np.int64).tolist()]
    return np.array(cols, dtype=np.int64).T


def right_matrix(alg: Algebra, g) -> np.ndarray:
    cols = [alg.mul(e, g) for e in np.eye(4, dtype=np.int64).tolist()]
    return np.array(cols, dtype=np.int64).T
