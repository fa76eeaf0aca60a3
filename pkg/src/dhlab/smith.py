"""Exact integer linear algebra: Smith normal form and unimodular transforms.

Everything here runs on Python ints (no overflow) and returns int64 arrays.
The Smith form drives the effectiveness test for weight matrices and the
unimodular change of angle coordinates used by the exact reduced-volume
engine.
"""
from __future__ import annotations

import numpy as np


def integer_det(mat) -> int:
    """Determinant of a square integer matrix, exact (Bareiss algorithm)."""
    a = [[int(v) for v in row] for row in np.asarray(mat)]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def is_unimodular(mat) -> bool:
    m = np.asarray(mat)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if not np.all(np.equal(np.mod(m, 1), 0)):
        return False
    return abs(integer_det(m)) == 1


def smith_normal_form(mat):
    """Smith normal form ``D = U @ mat @ V`` of an integer matrix.

    Returns ``(D, U, V)`` with U, V unimodular and D diagonal with
    nonnegative entries satisfying d_i | d_{i+1}.
    """
    M = np.asarray(mat)
    if M.ndim != 2:
        raise ValueError("matrix must be 2-dimensional")
    r, c = M.shape
    a = [[int(v) for v in row] for row in M]
    u = [[int(i == j) for j in range(r)] for i in range(r)]
    v = [[int(i == j) for j in range(c)] for i in range(c)]

    def row_op(i, j, q):  # row_i -= q * row_j
        a[i] = [x - q * y for x, y in zip(a[i], a[j])]
        u[i] = [x - q * y for x, y in zip(u[i], u[j])]

    def col_op(i, j, q):  # col_i -= q * col_j
        for row in a:
            row[i] -= q * row[j]
        for row in v:
            row[i] -= q * row[j]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def negate_row(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]

    for s in range(min(r, c)):
        while True:
            # move the smallest nonzero entry of the trailing block to (s, s)
            pivot = None
            best = None
            for i in range(s, r):
                for j in range(s, c):
                    if a[i][j] != 0 and (best is None or abs(a[i][j]) < best):
                        best = abs(a[i][j])
                        pivot = (i, j)
            if pivot is None:
                break
            if pivot[0] != s:
                swap_rows(s, pivot[0])
            if pivot[1] != s:
                swap_cols(s, pivot[1])
            if a[s][s] < 0:
                negate_row(s)
            # clear the edging below / right of the pivot
            dirty = False
            for i in range(s + 1, r):
                if a[i][s] != 0:
                    q, rem = divmod(a[i][s], a[s][s])
                    row_op(i, s, q)
                    if rem:
                        dirty = True
            for j in range(s + 1, c):
                if a[s][j] != 0:
                    q, rem = divmod(a[s][j], a[s][s])
                    col_op(j, s, q)
                    if rem:
                        dirty = True
            if dirty:
                continue
            # enforce divisibility of the trailing block by the pivot
            offender = None
            for i in range(s + 1, r):
                for j in range(s + 1, c):
                    if a[i][j] % a[s][s] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_op(s, offender, -1)  # fold the offending row in and restart

    D = np.array(a, dtype=np.int64)
    U = np.array(u, dtype=np.int64)
    V = np.array(v, dtype=np.int64)
    return D, U, V


def invariant_factors(mat) -> list[int]:
    """Nonzero diagonal entries of the Smith normal form, in order."""
    D, _, _ = smith_normal_form(mat)
    k = min(D.shape)
    return [int(D[i, i]) for i in range(k) if D[i, i] != 0]


def integer_inverse(mat) -> np.ndarray:
    """Exact inverse of a unimodular integer matrix (again integer)."""
    m = np.asarray(mat)
    det = integer_det(m)
    if abs(det) != 1:
        raise ValueError("matrix is not unimodular")
    n = m.shape[0]
    adj = np.empty((n, n), dtype=np.int64)
    rows = list(range(n))
    cols = list(range(n))
    for i in range(n):
        for j in range(n):
            minor = [[int(m[r, c]) for c in cols if c != j] for r in rows if r != i]
            adj[j, i] = (-1) ** (i + j) * integer_det(minor)
    return (adj * det).astype(np.int64)
