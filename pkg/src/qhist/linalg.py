"""Small dense-matrix helpers for both backends.

Exact matrices are lists of lists of :class:`ExactScalar`; float matrices are
``numpy`` complex arrays.  Dimensions here are tiny (Hilbert dimension of a
toy model, or at most a few dozen histories), so plain loops are fine.
"""
from __future__ import annotations

import numpy as np

from .numerics import ONE, ZERO, ExactScalar, Sign, real_sign

ExactMatrix = list[list[ExactScalar]]


def identity(d: int) -> ExactMatrix:
    return [[ONE if i == j else ZERO for j in range(d)] for i in range(d)]


def zeros(r: int, c: int) -> ExactMatrix:
    return [[ZERO] * c for _ in range(r)]


def matmul(x: ExactMatrix, y: ExactMatrix) -> ExactMatrix:
    inner = len(y)
    cols = len(y[0]) if y else 0
    out = []
    for row in x:
        new = []
        for j in range(cols):
            acc = ZERO
            for k in range(inner):
                if row[k] and y[k][j]:
                    acc = acc + row[k] * y[k][j]
            new.append(acc)
        out.append(new)
    return out


def dagger(x: ExactMatrix) -> ExactMatrix:
    return [[x[j][i].conjugate() for j in range(len(x))] for i in range(len(x[0]))]


def add(x: ExactMatrix, y: ExactMatrix) -> ExactMatrix:
    return [[a + b for a, b in zip(rx, ry)] for rx, ry in zip(x, y)]


def trace(x: ExactMatrix) -> ExactScalar:
    acc = ZERO
    for i in range(len(x)):
        acc = acc + x[i][i]
    return acc


def equal(x: ExactMatrix, y: ExactMatrix) -> bool:
    return all(a == b for rx, ry in zip(x, y) for a, b in zip(rx, ry))


def is_zero_matrix(x: ExactMatrix) -> bool:
    return all(v.is_zero() for row in x for v in row)


def is_hermitian(x: ExactMatrix) -> bool:
    n = len(x)
    return all(x[i][j] == x[j][i].conjugate() for i in range(n) for j in range(i, n))


def psd_exact(x: ExactMatrix) -> bool:
    """Decide positive semidefiniteness of a Hermitian matrix over Q(i, sqrt2).

    Symmetric Gaussian elimination with diagonal pivoting.  Pivots are real
    elements of Q(sqrt2), whose sign is decided exactly.
    """
    a = [list(row) for row in x]
    active = list(range(len(a)))
    while active:
        pivot = None
        for k in active:
            s = real_sign(a[k][k])
            if s is Sign.NEGATIVE:
                return False
            if s is Sign.POSITIVE and pivot is None:
                pivot = k
        if pivot is None:
            # all remaining diagonal entries vanish, so every remaining entry must
            return all(a[i][j].is_zero() for i in active for j in active)
        active.remove(pivot)
        inv = a[pivot][pivot].inverse()
        for i in active:
            if a[i][pivot].is_zero():
                continue
            f = a[i][pivot] * inv
            for j in active:
                if a[pivot][j]:
                    a[i][j] = a[i][j] - f * a[pivot][j]
    return True


def psd_float(x: np.ndarray, tol: float) -> tuple[bool, float]:
    """Smallest-eigenvalue test; returns (passes, smallest eigenvalue)."""
    h = (x + x.conj().T) / 2
    lam = float(np.linalg.eigvalsh(h)[0]) if len(h) else 0.0
    return lam >= -tol, lam


def to_numpy(x: ExactMatrix) -> np.ndarray:
    return np.array([[complex(v) for v in row] for row in x], dtype=complex)
