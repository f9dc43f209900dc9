"""Orbits of (B^x x B^x x GL2) on V = B + B mod p^n, and the resulting volumes.

The element (g11, g12, g2), g2 = [[a, b], [c, d]], sends (x1, x2) to
(g11 (a x1 + b x2) g12, g11 (c x1 + d x2) g12).  This is linear on the eight
coordinates, so every group element becomes an 8x8 integer matrix mod p^n and
the orbit is found by breadth-first search over packed state codes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .algebra import (
    AlgebraElt,
    FiniteRing,
    MatrixAlgebra,
    QuaternionOrder,
    VPoint,
    left_matrix,
    nonresidue,
    rel_invariant,
    right_matrix,
)

CLASSES = ("ur-sp", "ur-ur", "ur-rm", "rm-ur", "rm-rm")
BITMAP_LIMIT = 2**35
ESCAPE_SAMPLES = 10**4


class OrbitError(RuntimeError):
    """Orbit computation is infeasible or inconsistent."""


@dataclass(frozen=True)
class OrbitReport:
    p: int
    n: int
    cls: str
    orbit_size: int
    volume: Fraction
    epsilon_expected: Fraction
    relation_factor: Fraction
    escape_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.relation_factor in (1, 2)

    def csv_row(self) -> list:
        return [
            self.p,
            self.n,
            self.cls,
            self.orbit_size,
            self.volume.numerator,
            self.volume.denominator,
            self.epsilon_expected.numerator,
            self.epsilon_expected.denominator,
            f"{self.relation_factor.numerator}/{self.relation_factor.denominator}",
            "ok" if self.ok else "FAIL",
        ]


CSV_HEADER = [
    "p",
    "n",
    "class",
    "orbit_size",
    "volume_num",
    "volume_den",
    "epsilon_num",
    "epsilon_den",
    "relation_factor",
    "status",
]


def _algebra(p: int, n: int, cls: str):
    if cls not in CLASSES:
        raise ValueError(f"unknown class {cls!r}; expected one of {CLASSES}")
    ring = FiniteRing(p, n)
    return (QuaternionOrder if cls.startswith("rm") else MatrixAlgebra)(p, ring)


def std_rep(p: int, n: int, cls: str, unit_tag: int = 1) -> VPoint:
    """Integral representative of the class; ord_p of its P(x) is the class's delta.

    For ``ur-rm`` the unit in a2 = -p * t is 1 or a fixed nonresidue
    (``unit_tag`` = 1 or -1), choosing one of the two ramified extensions.
    """
    alg = _algebra(p, n, cls)
    E = lambda c: AlgebraElt(alg, alg.reduce(c))  # noqa: E731
    if cls == "ur-sp":
        # companion of t^2 - t
        return VPoint(E((1, 0, 0, 1)), E((0, 0, 1, 1)))
    if cls == "ur-ur":
        if p == 2:
            # companion of t^2 + t + 1
            return VPoint(E((1, 0, 0, 1)), E((0, -1, 1, -1)))
        return VPoint(E((1, 0, 0, 1)), E((0, nonresidue(p), 1, 0)))
    if cls == "ur-rm":
        if p == 2:
            raise OrbitError("dyadic full orbits are out of scope; use the stabilizer route")
        t = 1 if unit_tag == 1 else nonresidue(p)
        a1, a2 = 0, -p * t
        return VPoint(E((0, 1, 1, a1)), E((1, a1, a1, a1 * a1 - a2)))
    if cls == "rm-ur":
        return VPoint(E((1, 0, 0, 0)), E((0, 1, 0, 0)))
    return VPoint(E((1, 0, 0, 0)), E((0, 0, 1, 0)))


def epsilon_closed_form(p: int, cls: str) -> Fraction:
    q = Fraction(1, p)
    return {
        "ur-sp": (1 + q) * (1 - q**2) ** 2 / 2,
        "ur-ur": (1 - q) ** 3 * (1 - q**2) / 2,
        "ur-rm": q * (1 - q) * (1 - q**2) ** 3 / 2,
        "rm-ur": (1 - q**2) * (1 - q) / 2,
        "rm-rm": q * (1 + q) * (1 - q**2) ** 2 / 2,
    }[cls]


def default_n(cls: str, delta: int = 1, m_v: int = 0) -> int:
    return delta + 2 * m_v + 1 if cls.endswith("rm") else 1


def _gl2_order(p: int, n: int) -> int:
    return p ** (4 * (n - 1)) * (p * p - 1) * (p * p - p)


def group_order(p: int, n: int, ramified: bool) -> int:
    gl2 = _gl2_order(p, n)
    if not ramified:
        return gl2**3
    ob = p ** (4 * n - 2) * (p * p - 1)
    return ob * ob * gl2


# --- generators --------------------------------------------------------------


def _gl2_gens(ring: FiniteRing) -> list[tuple[int, int, int, int]]:
    gens = [(1, 1, 0, 1), (1, 0, 1, 1), (0, 1, 1, 0)]
    gens += [(r, 0, 0, 1) for r in ring.unit_generators()]
    return gens


def _field_unit_generator(alg: QuaternionOrder) -> tuple[int, int]:
    """An element of O_F whose image generates F_{p^2}^x."""
    p = alg.p
    order = p * p - 1
    factors = [f for f in range(2, order + 1) if order % f == 0 and all(f % g for g in range(2, f))]
    for a0 in range(p):
        for a1 in range(1, p):
            x = (a0, a1)
            ok = True
            for f in factors:
                y, e, b = (1, 0), order // f, x
                while e:
                    if e & 1:
                        y = tuple(v % p for v in alg.fmul(y, b))
                    b = tuple(v % p for v in alg.fmul(b, b))
                    e >>= 1
                if y == (1, 0):
                    ok = False
                    break
            if ok:
                return x
    raise OrbitError("no generator of F_{p^2}^x found")


def unit_generators(alg) -> list[tuple[int, int, int, int]]:
    ring = FiniteRing(alg.p, round(np.log(alg.N) / np.log(alg.p)))
    if isinstance(alg, MatrixAlgebra):
        return _gl2_gens(ring)
    p = alg.p
    z0, z1 = _field_unit_generator(alg)
    gens = [(z0, z1, 0, 0), (1, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1)]
    gens += [(r, 0, 0, 0) for r in ring.unit_generators()]
    if ring.n > 1:
        gens += [(1 + p, 0, 0, 0), (1, p, 0, 0)]
    return [alg.reduce(g) for g in gens]


def action_matrix(alg, g11, g12, g2) -> np.ndarray:
    """8x8 matrix of the group element on (x1, x2) coordinates, mod p^n."""
    lr = left_matrix(alg, g11) @ right_matrix(alg, g12)
    g = np.array(g2, dtype=np.int64).reshape(2, 2)
    return np.kron(g, lr) % alg.N


def generator_matrices(alg) -> np.ndarray:
    one = alg.one()
    side = unit_generators(alg)
    gl = _gl2_gens(FiniteRing(alg.p, round(np.log(alg.N) / np.log(alg.p))))
    mats = [action_matrix(alg, g, one, (1, 0, 0, 1)) for g in side]
    mats += [action_matrix(alg, one, g, (1, 0, 0, 1)) for g in side]
    mats += [action_matrix(alg, one, one, g) for g in gl]
    return np.array(mats, dtype=np.int64)


def _random_unit(alg, rng: random.Random):
    N, p = alg.N, alg.p
    while True:
        x = tuple(rng.randrange(N) for _ in range(4))
        if alg.norm(x) % p:
            return x


def _random_gl2(N: int, p: int, rng: random.Random):
    while True:
        a, b, c, d = (rng.randrange(N) for _ in range(4))
        if (a * d - b * c) % p:
            return (a, b, c, d)


def random_group_matrices(alg, k: int, seed: int = 0) -> np.ndarray:
    """k uniformly random group elements, drawn without reference to the generators."""
    rng = random.Random(seed)
    out = np.empty((k, 8, 8), dtype=np.int64)
    for i in range(k):
        out[i] = action_matrix(
            alg, _random_unit(alg, rng), _random_unit(alg, rng), _random_gl2(alg.N, alg.p, rng)
        )
    return out


# --- BFS ---------------------------------------------------------------------


@numba.njit(cache=True)
def _decode(code, N, out):
    for i in range(8):
        out[i] = code % N
        code //= N


@numba.njit(cache=True)
def _apply(M, x, N, pw):
    code = 0
    for i in range(8):
        s = 0
        for j in range(8):
            s += M[i, j] * x[j]
        code += (s % N) * pw[i]
    return code


@numba.njit(cache=True)
def _bfs(start, mats, N):
    pw = np.empty(8, np.int64)
    pw[0] = 1
    for i in range(1, 8):
        pw[i] = pw[i - 1] * N
    total = pw[7] * N
    bits = np.zeros((total + 7) // 8, np.uint8)
    cap = 1 << 16
    queue = np.empty(cap, np.int64)
    queue[0] = start
    bits[start >> 3] |= np.uint8(1 << (start & 7))
    head, tail = 0, 1
    x = np.empty(8, np.int64)
    G = mats.shape[0]
    while head < tail:
        _decode(queue[head], N, x)
        head += 1
        for g in range(G):
            c = _apply(mats[g], x, N, pw)
            b = np.uint8(1 << (c & 7))
            if bits[c >> 3] & b == 0:
                bits[c >> 3] |= b
                if tail == cap:
                    cap *= 2
                    nq = np.empty(cap, np.int64)
                    nq[:tail] = queue[:tail]
                    queue = nq
                queue[tail] = c
                tail += 1
    return queue[:tail], bits


@numba.njit(cache=True)
def _escapes(orbit, bits, mats, picks, N):
    pw = np.empty(8, np.int64)
    pw[0] = 1
    for i in range(1, 8):
        pw[i] = pw[i - 1] * N
    x = np.empty(8, np.int64)
    bad = 0
    for k in range(mats.shape[0]):
        _decode(orbit[picks[k]], N, x)
        c = _apply(mats[k], x, N, pw)
        if bits[c >> 3] & np.uint8(1 << (c & 7)) == 0:
            bad += 1
    return bad


def encode(vec, N: int) -> int:
    return int(sum(int(v) % N * N**i for i, v in enumerate(vec)))


def orbit_bfs(
    p: int, n: int, x: VPoint, generators: np.ndarray | None = None, escape_samples: int = ESCAPE_SAMPLES, seed: int = 0
) -> tuple[int, int]:
    """(orbit size, number of random escape checks performed)."""
    alg = x.x1.alg
    N = alg.N
    if N**8 > BITMAP_LIMIT:
        raise OrbitError(f"state space {p}^{8 * n} exceeds the bitmap guard 2^35")
    if rel_invariant(x) % p**n == 0:
        raise OrbitError("x is not semistable mod p^n")
    mats = generator_matrices(alg) if generators is None else generators
    orbit, bits = _bfs(encode(x.vector(), N), mats, N)
    if escape_samples:
        rnd = random_group_matrices(alg, escape_samples, seed)
        picks = np.random.default_rng(seed).integers(0, orbit.size, escape_samples)
        bad = _escapes(orbit, bits, rnd, picks, N)
        if bad:
            raise OrbitError(f"{bad} random group elements left the orbit; generators are insufficient")
    return int(orbit.size), escape_samples


def epsilon_from_orbit(p: int, cls: str, n: int | None = None, escape_samples: int = ESCAPE_SAMPLES) -> OrbitReport:
    n = default_n(cls) if n is None else n
    x = std_rep(p, n, cls)
    size, checked = orbit_bfs(p, n, x, escape_samples=escape_samples)
    vol = Fraction(size, p ** (8 * n))
    eps = epsilon_closed_form(p, cls)
    rep = OrbitReport(p, n, cls, size, vol, eps, vol / eps, checked)
    if not rep.ok:
        raise OrbitError(f"{cls} at p={p}, n={n}: volume/epsilon = {rep.relation_factor} is not 1 or 2")
    return rep


# --- stabilizer congruences --------------------------------------------------


def dyadic_stabilizer_params(delta: int) -> tuple[int, int, int]:
    """(a1, a2, n) for a ramified representative at p = 2 with m_v = 1."""
    if delta == 2:
        return 2, 2, 5
    if delta == 3:
        return 0, -2, 6
    raise ValueError("dyadic delta must be 2 or 3")


def stabilizer_params(p: int, delta: int) -> tuple[int, int, int]:
    if p == 2:
        return dyadic_stabilizer_params(delta)
    if delta != 1:
        raise ValueError("odd p has delta = 1")
    return 0, -p * nonresidue(p), 2


def stabilizer_congruence_count(p: int, n: int, a1: int, a2: int) -> int:
    """Pairs (u, s) mod p^n with 2u + a1 s = a1 and u^2 + a1 s u + a2 s^2 = a2."""
    N = p**n
    u = np.arange(N, dtype=np.int64)[:, None]
    s = np.arange(N, dtype=np.int64)[None, :]
    e1 = (2 * u + a1 * s - a1) % N == 0
    e2 = (u * u + a1 * s * u + a2 * s * s - a2) % N == 0
    return int(np.count_nonzero(e1 & e2))
