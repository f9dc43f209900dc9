"""Small sieving helpers shared by the other modules."""

from __future__ import annotations

import numpy as np


def prime_sieve(n: int) -> np.ndarray:
    """Boolean array ``is_prime[0..n]``."""
    is_prime = np.ones(max(n + 1, 2), dtype=bool)
    is_prime[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return is_prime[: n + 1]


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(prime_sieve(n)).astype(np.int64)


def smallest_prime_factor(n: int) -> np.ndarray:
    """``spf[k]`` for 0 <= k <= n (spf[0] = spf[1] = 0)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, int(n**0.5) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    rest = rest[rest >= 2]
    spf[rest] = rest
    return spf


def squarefree_mask(n: int) -> np.ndarray:
    """Boolean array ``sf[0..n]``; sf[0] is False."""
    sf = np.ones(n + 1, dtype=bool)
    sf[0] = False
    for p in primes_up_to(int(n**0.5)):
        sf[p * p :: p * p] = False
    return sf


def ord_p(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("ord_p(0) is infinite")
    k = 0
    n = abs(n)
    while n % p == 0:
        n //= p
        k += 1
    return k
