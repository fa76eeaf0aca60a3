"""Exact volumes and vertices of small H-polytopes {x : A x <= b}.

All arithmetic is done with fractions.Fraction so that fiber-polytope
volumes (and hence exact reduced volumes) carry no floating-point error.
Intended for dimensions up to ~5 with a handful of constraints, which is
all the exact engine needs.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np


class UnboundedRegionError(RuntimeError):
    """Raised when a region that must be a polytope has directions to infinity."""


def _as_rows(A):
    return [[Fraction(x) for x in row] for row in A]


def _as_col(b):
    return [Fraction(x) for x in b]


def _solve_square(rows, rhs):
    """Solve a square rational system; returns None if singular."""
    n = len(rhs)
    m = [row[:] + [r] for row, r in zip(rows, rhs)]
    for col in range(n):
        piv = None
        for i in range(col, n):
            if m[i][col] != 0:
                piv = i
                break
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = Fraction(1, 1) / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return [m[i][n] for i in range(n)]


def enumerate_vertices(A, b) -> list[list[Fraction]]:
    """All vertices of {x : A x <= b}, exactly (basic feasible solutions)."""
    rows = _as_rows(A)
    rhs = _as_col(b)
    if not rows:
        return []
    d = len(rows[0])
    if d == 0:
        return [[]] if all(x >= 0 for x in rhs) else []
    verts = []
    for idx in combinations(range(len(rows)), d):
        sub = [rows[i] for i in idx]
        sol = _solve_square(sub, [rhs[i] for i in idx])
        if sol is None:
            continue
        if all(sum(r * x for r, x in zip(row, sol)) <= c for row, c in zip(rows, rhs)):
            if sol not in verts:
                verts.append(sol)
    return verts


def recession_is_trivial(A) -> bool:
    """True iff {x : A x <= 0} = {0}, i.e. the polytope family is bounded."""
    rows = _as_rows(A)
    if not rows:
        return False
    d = len(rows[0])
    if d == 0:
        return True
    # intersect the recession cone with the unit box; trivial iff the only
    # vertex is the origin
    box_rows = []
    box_rhs = []
    for k in range(d):
        e_pos = [Fraction(0)] * d
        e_pos[k] = Fraction(1)
        e_neg = [Fraction(0)] * d
        e_neg[k] = Fraction(-1)
        box_rows += [e_pos, e_neg]
        box_rhs += [Fraction(1), Fraction(1)]
    verts = enumerate_vertices(rows + box_rows, [Fraction(0)] * len(rows) + box_rhs)
    zero = [Fraction(0)] * d
    return all(v == zero for v in verts)


def polytope_volume(A, b) -> Fraction:
    """Exact volume of the bounded polytope {x : A x <= b}.

    Recursive facet-sum evaluation (Lasserre): vol = (1/d) * sum over
    facets of b_i/|a_ik| times the volume of the facet projected out along
    coordinate k.  Empty or lower-dimensional regions give 0.
    """
    rows = _as_rows(A)
    rhs = _as_col(b)
    if not rows:
        raise UnboundedRegionError("no constraints: region is unbounded")
    d = len(rows[0])
    if d == 0:
        return Fraction(1) if all(x >= 0 for x in rhs) else Fraction(0)
    return _volume_rec(rows, rhs, d)


def _dedupe(rows, rhs):
    """Keep one representative per halfspace direction (the tightest one).

    Duplicate parallel constraints would make the facet sum count the same
    facet twice.
    """
    canon = {}
    for row, c in zip(rows, rhs):
        scale = next((abs(x) for x in row if x != 0), None)
        if scale is None:
            key = ("zero",)
            norm_row, norm_c = row, c
        else:
            norm_row = tuple(x / scale for x in row)
            norm_c = c / scale
            key = norm_row
        if key not in canon or norm_c < canon[key][1]:
            canon[key] = (list(norm_row) if scale else row, norm_c)
    out_rows = [r for r, _ in canon.values()]
    out_rhs = [c for _, c in canon.values()]
    return out_rows, out_rhs


def _interval(rows, rhs):
    lo, hi = None, None
    for (a,), c in zip(rows, rhs):
        if a == 0:
            if c < 0:
                return Fraction(0)
            continue
        bound = c / a
        if a > 0:
            hi = bound if hi is None else min(hi, bound)
        else:
            lo = bound if lo is None else max(lo, bound)
    if lo is None or hi is None:
        raise UnboundedRegionError("1-d section unbounded")
    return max(Fraction(0), hi - lo)


def _volume_rec(rows, rhs, d) -> Fraction:
    if d == 1:
        return _interval(rows, rhs)
    rows, rhs = _dedupe(rows, rhs)
    total = Fraction(0)
    for i, (row, c) in enumerate(zip(rows, rhs)):
        k, piv = None, Fraction(0)
        for j, aij in enumerate(row):
            if abs(aij) > abs(piv):
                k, piv = j, aij
        if k is None:
            if c < 0:
                return Fraction(0)  # infeasible constraint: empty polytope
            continue
        # substitute x_k = (c - sum_{j != k} a_ij x_j) / a_ik into the others
        sub_rows = []
        sub_rhs = []
        for i2, (row2, c2) in enumerate(zip(rows, rhs)):
            if i2 == i:
                continue
            f = row2[k] / piv
            new_row = [a2 - f * a1 for j, (a1, a2) in enumerate(zip(row, row2)) if j != k]
            sub_rows.append(new_row)
            sub_rhs.append(c2 - f * c)
        face = _volume_rec(sub_rows, sub_rhs, d - 1) if sub_rows else None
        if face is None:
            raise UnboundedRegionError("facet section unbounded")
        total += (c / abs(piv)) * face
    return total / d


def vertices_as_array(verts) -> np.ndarray:
    return np.array([[float(x) for x in v] for v in verts], dtype=float)
