"""Truncated multivariate Taylor jets, batched over points.

A jet of order r at N points is an array of shape (N, M) holding Taylor
coefficients c_a (so f(p + h) = sum_a c_a h^a + O(|h|^{r+1})) over the
multi-indices |a| <= r.  Multi-indices are listed by total degree first, so
truncating to a lower order is a column prefix.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.sparse as sp


@lru_cache(maxsize=None)
def monomials(n: int, order: int) -> np.ndarray:
    rows: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        rows.extend(_compositions(n, deg))
    out = np.array(rows, dtype=np.int64).reshape(-1, n)
    out.setflags(write=False)
    return out


def _compositions(n: int, deg: int) -> list[tuple[int, ...]]:
    if n == 0:
        return [()] if deg == 0 else []
    if n == 1:
        return [(deg,)]
    out = []
    for first in range(deg, -1, -1):
        for rest in _compositions(n - 1, deg - first):
            out.append((first,) + rest)
    return out


def count(n: int, order: int) -> int:
    return comb(n + order, order)


@lru_cache(maxsize=None)
def index(n: int, order: int) -> dict[tuple[int, ...], int]:
    return {tuple(int(x) for x in a): i for i, a in enumerate(monomials(n, order))}


@lru_cache(maxsize=None)
def factorials(n: int, order: int) -> np.ndarray:
    """a! for each multi-index, as floats."""
    return np.array([np.prod([factorial(int(x)) for x in a]) for a in monomials(n, order)], float)


def lookup(n: int, exps: np.ndarray) -> np.ndarray:
    """Column index of each exponent row (vectorized)."""
    exps = np.asarray(exps, dtype=np.int64).reshape(-1, n)
    if exps.size == 0:
        return np.zeros(0, dtype=np.int64)
    order = int(exps.sum(axis=1).max())
    table = monomials(n, order)
    base = order + 1
    w = base ** np.arange(n, dtype=np.int64)
    codes = table @ w
    srt = np.argsort(codes)
    pos = np.searchsorted(codes[srt], exps @ w)
    return srt[pos]


@lru_cache(maxsize=None)
def _deriv_table(n: int, order: int, axis: int):
    """Source columns and factors for the axis-derivative, order -> order-1."""
    idx = index(n, order)
    src, fac = [], []
    for a in monomials(n, order - 1):
        b = list(int(x) for x in a)
        b[axis] += 1
        src.append(idx[tuple(b)])
        fac.append(float(b[axis]))
    return np.array(src, dtype=np.int64), np.array(fac)


def deriv(jet: np.ndarray, n: int, order: int, axis: int) -> np.ndarray:
    """Jet of the partial derivative; the result has order ``order - 1``."""
    if order == 0:
        raise ValueError("cannot differentiate an order-0 jet")
    src, fac = _deriv_table(n, order, axis)
    return jet[:, src] * fac


@lru_cache(maxsize=None)
def _mul_table(n: int, order: int):
    idx = index(n, order)
    mons = monomials(n, order)
    I, J, K = [], [], []
    for i, a in enumerate(mons):
        da = int(a.sum())
        for j, b in enumerate(mons):
            if da + int(b.sum()) > order:
                continue
            I.append(i)
            J.append(j)
            K.append(idx[tuple(int(x) for x in a + b)])
    M = len(mons)
    S = sp.csr_matrix((np.ones(len(K)), (np.arange(len(K)), K)), shape=(len(K), M))
    return np.array(I), np.array(J), np.array(K), S


def mul(a: np.ndarray, b: np.ndarray, n: int, order: int) -> np.ndarray:
    if order == 0:
        return a * b
    I, J, K, S = _mul_table(n, order)
    prod = a[:, I] * b[:, J]
    if prod.dtype == np.longdouble:  # scipy.sparse has no extended precision
        out = np.zeros((a.shape[0], S.shape[1]), dtype=prod.dtype)
        np.add.at(out.T, K, prod.T)
        return out
    return np.asarray(prod @ S)


def constant(values: np.ndarray, n: int, order: int) -> np.ndarray:
    out = np.zeros((len(values), count(n, order)), dtype=np.result_type(values, float))
    out[:, 0] = values
    return out


def compose(outer: np.ndarray, inner: list[np.ndarray], n: int, m: int, order: int) -> np.ndarray:
    """Jet of f o F at p from the jet of f (m vars) at F(p) and the jets of F."""
    N = outer.shape[0]
    deltas = []
    for comp in inner:
        d = comp.copy()
        d[:, 0] = 0.0
        deltas.append(d)
    mons_m = monomials(m, order)
    powers: dict[tuple[int, ...], np.ndarray] = {(0,) * m: constant(np.ones(N), n, order)}
    out = outer[:, 0:1] * powers[(0,) * m]
    for col in range(1, len(mons_m)):
        b = tuple(int(x) for x in mons_m[col])
        k = next(i for i, x in enumerate(b) if x)
        prev = list(b)
        prev[k] -= 1
        powers[b] = mul(powers[tuple(prev)], deltas[k], n, order)
        out = out + outer[:, col:col + 1] * powers[b]
    return out
