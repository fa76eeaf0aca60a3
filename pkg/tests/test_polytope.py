from fractions import Fraction

import pytest

from dhlab.polytope import (UnboundedRegionError, enumerate_vertices,
                            polytope_volume, recession_is_trivial)


def box_constraints(bounds):
    rows, rhs = [], []
    d = len(bounds)
    for i, (lo, hi) in enumerate(bounds):
        row = [Fraction(0)] * d
        row[i] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(-lo))
        row = [Fraction(0)] * d
        row[i] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(hi))
    return rows, rhs


def test_box_volume():
    rows, rhs = box_constraints([(0, 2), (1, 4)])
    assert polytope_volume(rows, rhs) == Fraction(6)


def test_simplex_volumes():
    for d in range(1, 5):
        rows = [[Fraction(-(i == j)) for j in range(d)] for i in range(d)]
        rows.append([Fraction(1)] * d)
        rhs = [Fraction(0)] * d + [Fraction(1)]
        expect = Fraction(1)
        for k in range(1, d + 1):
            expect /= k
        assert polytope_volume(rows, rhs) == expect


def test_scaled_slice():
    # {u >= 0 : u1 + 2 u2 = t} parametrized by u2 has length t/2
    t = Fraction(7, 10)
    rows = [[Fraction(2)], [Fraction(-2)], [Fraction(-1)]]
    # u1 = t - 2 u2 >= 0 and u2 >= 0 -> 2u2 <= t, -u2 <= 0
    rhs = [t, Fraction(0), Fraction(0)]
    assert polytope_volume(rows, rhs) == t / 2


def test_duplicate_constraints_not_double_counted():
    rows, rhs = box_constraints([(0, 1), (0, 1)])
    rows.append([Fraction(1), Fraction(0)])
    rhs.append(Fraction(1))
    assert polytope_volume(rows, rhs) == Fraction(1)


def test_empty_and_degenerate():
    rows = [[Fraction(1)], [Fraction(-1)]]
    assert polytope_volume(rows, [Fraction(-1), Fraction(0)]) == 0
    rows, rhs = box_constraints([(0, 0), (0, 1)])
    assert polytope_volume(rows, rhs) == 0


def test_vertex_enumeration_square():
    rows, rhs = box_constraints([(0, 1), (0, 1)])
    verts = {tuple(v) for v in enumerate_vertices(rows, rhs)}
    assert verts == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_recession_detection():
    assert recession_is_trivial([[Fraction(-1), Fraction(0)],
                                 [Fraction(0), Fraction(-1)],
                                 [Fraction(1), Fraction(1)]])
    assert not recession_is_trivial([[Fraction(-1), Fraction(0)],
                                     [Fraction(0), Fraction(-1)]])


def test_unbounded_raises():
    with pytest.raises(UnboundedRegionError):
        polytope_volume([[Fraction(-1)]], [Fraction(0)])
