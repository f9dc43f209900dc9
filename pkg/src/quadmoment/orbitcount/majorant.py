"""Formal expansion of the local majorant series in t = q^-s."""

from __future__ import annotations

from math import comb

MAX_TERMS = 64


class MajorantError(ArithmeticError):
    pass


def majorant_series(q: int, N: int) -> list[int]:
    """Coefficients l_0..l_N of
    (1 + 29 q^2 y - 21 q^4 y^2 + 7 q^6 y^3) / ((1 - q y)(1 - q^2 y)^4), y = t^2.
    """
    if N > MAX_TERMS:
        raise ValueError(f"N must be at most {MAX_TERMS}")
    K = N // 2
    num = [1, 29 * q**2, -21 * q**4, 7 * q**6]
    geo = [q**k for k in range(K + 1)]
    quart = [comb(k + 3, 3) * q ** (2 * k) for k in range(K + 1)]
    den = [sum(geo[i] * quart[k - i] for i in range(k + 1)) for k in range(K + 1)]
    y = [sum(num[i] * den[k - i] for i in range(min(k, 3) + 1)) for k in range(K + 1)]
    out = [0] * (N + 1)
    for k, c in enumerate(y):
        out[2 * k] = c
    neg = [i for i, c in enumerate(out) if c < 0]
    if neg:
        raise MajorantError(f"negative coefficient at t^{neg[0]} for q={q}")
    return out
