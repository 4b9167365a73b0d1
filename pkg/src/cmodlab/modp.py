"""Linear algebra over Z/p^N with numpy integer arrays.

Used only by the truncated cross-check solvers, where systems are large
enough that exact rational elimination would be slow.  Entries are residues
in ``[0, p^N)``: int64 when products cannot overflow, Python ints otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

SMALL_MODULUS = 2 ** 31


def to_mod(x, q: int) -> int:
    x = Fraction(x)
    return x.numerator * pow(x.denominator, -1, q) % q


def as_mod_array(rows, q: int, shape=None) -> np.ndarray:
    arr = np.empty(shape if shape is not None else (len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            arr[i, j] = to_mod(x, q)
    return arr


def zeros(m: int, n: int) -> np.ndarray:
    arr = np.empty((m, n), dtype=object)
    arr.fill(0)
    return arr


def identity(n: int) -> np.ndarray:
    arr = zeros(n, n)
    for i in range(n):
        arr[i, i] = 1
    return arr


def _valuation(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass
class ModSmith:
    exponents: list[int]  # pivot exponents, each < N
    V: np.ndarray  # column transform, tracked for kernels
    ncols: int


def _find_pivot(A: np.ndarray, R: np.ndarray, P: int, k: int, p: int, N: int):
    """Entry of minimal valuation in ``A[k:, k:]``, preferring a unit in column ``k``.

    ``R`` holds ``A mod P`` in machine integers; valuations below that of
    ``P`` are read from it and only deeper ones from ``A``.
    """
    m, n = A.shape
    units = np.nonzero(R[k:, k] % p != 0)[0]
    if len(units):
        return 0, k + int(units[0]), k
    sub = R[k:, k:]
    v = 0
    while p ** (v + 1) <= P:
        mask = sub % p ** (v + 1) != 0
        if mask.any():
            flat = int(np.argmax(mask))
            return v, k + flat // (n - k), k + flat % (n - k)
        v += 1
    sub = A[k:, k:]
    for v in range(v, N):
        mask = sub % p ** (v + 1) != 0
        if mask.any():
            flat = int(np.argmax(mask))
            return v, k + flat // (n - k), k + flat % (n - k)
    return None


def smith_mod(a: np.ndarray, p: int, N: int, track_v: bool = True) -> ModSmith:
    """Diagonalize ``a`` over Z/p^N; row operations are not recorded.

    Updates touch only rows and columns with non-zero entries, which pays off
    on the sparse block matrices of the truncated solvers.
    """
    q = p ** N
    # machine integers are exact while products of residues fit in 63 bits
    small = q < SMALL_MODULUS
    A = (np.array(a, dtype=object) % q).astype(np.int64 if small else object)
    P = q
    while P >= SMALL_MODULUS:
        P //= p
    R = A if small else (A % P).astype(np.int64)
    m, n = A.shape
    V = identity(n).astype(A.dtype) if track_v else None
    exps: list[int] = []
    for k in range(min(m, n)):
        pivot = _find_pivot(A, R, P, k, p, N)
        if pivot is None:
            break
        v, pi, pj = pivot
        arrays = (A,) if small else (A, R)
        if pi != k:
            for X in arrays:
                X[[k, pi]] = X[[pi, k]]
        if pj != k:
            for X in arrays:
                X[:, [k, pj]] = X[:, [pj, k]]
            if V is not None:
                V[:, [k, pj]] = V[:, [pj, k]]
        pk = p ** v
        unit_inv = pow(int(A[k, k]) // pk, -1, q)
        cols = k + np.nonzero(A[k, k:])[0]
        A[k, cols] = A[k, cols] * unit_inv % q
        rows = k + 1 + np.nonzero(A[k + 1 :, k])[0]
        if len(rows):
            f = A[rows, k] // pk
            block = np.ix_(rows, cols)
            A[block] = (A[block] - np.outer(f, A[k, cols])) % q
            if not small:
                R[block] = (A[block] % P).astype(np.int64)
        if not small:
            R[k, cols] = (A[k, cols] % P).astype(np.int64)
        rest = cols[cols > k]
        if len(rest):
            g = A[k, rest] // pk
            A[k, rest] = 0
            R[k, rest] = 0
            if V is not None:
                vr = np.nonzero(V[:, k])[0]
                block = np.ix_(vr, rest)
                V[block] = (V[block] - np.outer(V[vr, k], g)) % q
        exps.append(v)
    return ModSmith(exps, V, n)


def kernel_generators(a: np.ndarray, p: int, N: int) -> np.ndarray:
    """Columns generate ``{x : a x = 0 mod p^N}``."""
    q = p ** N
    n = a.shape[1]
    if a.shape[0] == 0:
        return identity(n)
    snf = smith_mod(a, p, N)
    cols = []
    for i, e in enumerate(snf.exponents):
        cols.append(snf.V[:, i].astype(object) * p ** (N - e) % q)
    for j in range(len(snf.exponents), n):
        cols.append(snf.V[:, j])
    if not cols:
        return zeros(n, 0)
    return np.stack(cols, axis=1).astype(object)


def cokernel_exponents(a: np.ndarray, p: int, N: int) -> list[int]:
    """Exponents of ``(Z/p^N)^m / column span of a``; a value of N means uncapped."""
    m = a.shape[0]
    if a.shape[1] == 0:
        return [N] * m
    snf = smith_mod(a, p, N, track_v=False)
    exps = [e for e in snf.exponents if e > 0]
    return sorted(exps + [N] * (m - len(snf.exponents)))
