import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhlab.lattice import apply_transition, is_integral_affine
from dhlab.polynomials import AffineTransition, PiecewisePoly1D, PolynomialOnChart
from dhlab.smith import integer_inverse


def rand_unimodular(rng, q):
    """Random element of GL(q, Z) as a product of elementary shears/swaps."""
    M = np.eye(q, dtype=np.int64)
    for _ in range(6):
        kind = rng.integers(0, 3)
        i, j = rng.integers(0, q, size=2)
        E = np.eye(q, dtype=np.int64)
        if kind == 0 and i != j:
            E[i, j] = rng.integers(-3, 4)
        elif kind == 1:
            E[i, i] = -1
        elif kind == 2 and i != j:
            E[[i, j]] = E[[j, i]]
        M = M @ E
    return M


def inverse_transition(t: AffineTransition) -> AffineTransition:
    A = np.array([[int(x) for x in row] for row in t.A])
    Ainv = integer_inverse(A)
    binv = [-sum(Fraction(int(Ainv[i, j])) * t.b[j] for j in range(len(t.b)))
            for i in range(len(t.b))]
    return AffineTransition.build(Ainv.tolist(), binv)


class TestPolynomialOnChart:
    def test_eval_and_degree(self):
        p = PolynomialOnChart(2, {(2, 0): 3.0, (0, 1): -1.0})
        assert p.degree == 2
        assert p(np.array([[2.0, 5.0]])) == pytest.approx(12.0 - 5.0)

    def test_tiny_coefficients_canonically_zeroed(self):
        p = PolynomialOnChart(1, {(1,): 1e-15, (0,): 1.0})
        assert p.coeffs == {(0,): 1.0}

    def test_integrate_box_exact(self):
        p = PolynomialOnChart(1, {(2,): Fraction(3)})
        assert p.integrate_box([(0, 1)]) == Fraction(1)

    def test_json_roundtrip_rational(self):
        p = PolynomialOnChart(2, {(1, 1): Fraction(2, 3), (0, 0): 1.5})
        blob = json.dumps(p.to_json_dict())
        q = PolynomialOnChart.from_json_dict(json.loads(blob))
        assert q == p


class TestTransitions:
    def test_translation_of_linear(self):
        p = PolynomialOnChart(1, {(1,): Fraction(1)})
        t = AffineTransition.build([[1]], [1])
        assert apply_transition(p, t).coeffs == {(0,): Fraction(-1), (1,): Fraction(1)}

    def test_constant_fixed(self):
        p = PolynomialOnChart(1, {(0,): Fraction(1)})
        t = AffineTransition.build([[3]], [2])
        assert apply_transition(p, t) == p

    def test_coordinate_swap(self):
        p = PolynomialOnChart(2, {(1, 0): Fraction(1)})
        t = AffineTransition.build([[0, 1], [1, 0]], [0, 0])
        assert apply_transition(p, t).coeffs == {(0, 1): Fraction(1)}

    def test_singular_rejected(self):
        p = PolynomialOnChart(2, {(1, 0): Fraction(1)})
        with pytest.raises(ValueError):
            apply_transition(p, AffineTransition.build([[1, 0], [2, 0]], [0, 0]))

    def test_is_integral_affine(self):
        assert is_integral_affine(AffineTransition.build([[1, 1], [0, 1]], [0.7, -2.0]))
        assert not is_integral_affine(AffineTransition.build([[2]], [0]))
        assert not is_integral_affine(AffineTransition.build([[0.5]], [0]))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 2))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_exact(self, seed, q):
        rng = np.random.default_rng(seed)
        A = rand_unimodular(rng, q)
        b = [Fraction(int(rng.integers(-8, 9)), int(rng.integers(1, 9)))
             for _ in range(q)]
        t = AffineTransition.build(A.tolist(), b)
        coeffs = {}
        for _ in range(4):
            deg = tuple(int(rng.integers(0, 3)) for _ in range(q))
            coeffs[deg] = Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 11)))
        p = PolynomialOnChart(q, coeffs)
        rt = apply_transition(apply_transition(p, t), inverse_transition(t))
        assert rt == p

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_degree_invariance(self, seed):
        rng = np.random.default_rng(seed)
        q = 2
        A = rand_unimodular(rng, q)
        t = AffineTransition.build(A.tolist(), [1, -2])
        p = PolynomialOnChart(q, {(2, 1): Fraction(5), (1, 0): Fraction(-1)})
        assert apply_transition(p, t).degree == p.degree


class TestPiecewisePoly1D:
    def test_eval_zero_outside(self):
        pw = PiecewisePoly1D([0.0, 1.0], [PolynomialOnChart(1, {(0,): 2.0})])
        assert pw(np.array([-0.5, 0.5, 1.5])).tolist() == [0.0, 2.0, 0.0]

    def test_integrate_and_bins(self):
        pw = PiecewisePoly1D([0.0, 1.0, 2.0],
                             [PolynomialOnChart(1, {(1,): 1.0}),
                              PolynomialOnChart(1, {(0,): 1.0})])
        assert pw.integrate(0.0, 2.0) == pytest.approx(1.5)
        masses = pw.bin_masses([0.0, 1.0, 2.0])
        assert masses.tolist() == pytest.approx([0.5, 1.0])

    def test_monotone_breakpoints_required(self):
        with pytest.raises(ValueError):
            PiecewisePoly1D([1.0, 0.0], [PolynomialOnChart(1, {})])

    def test_running_integral_convolution(self):
        # indicator of [0,1] convolved against a unit half-line kernel:
        # running integral is t on [0,1], then constant 1
        pw = PiecewisePoly1D([Fraction(0), Fraction(1), Fraction(3)],
                             [PolynomialOnChart(1, {(0,): Fraction(1)}),
                              PolynomialOnChart(1, {})])
        out = pw.convolve_running_integral(Fraction(1))
        assert out(np.array([0.5]))== pytest.approx(0.5)
        assert out(np.array([2.0])) == pytest.approx(1.0)

    def test_json_roundtrip(self):
        pw = PiecewisePoly1D([0.0, math.inf], [PolynomialOnChart(1, {(1,): 39.5})])
        rt = PiecewisePoly1D.from_json_dict(pw.to_json_dict())
        assert rt.breakpoints[0] == 0.0 and math.isinf(rt.breakpoints[1])
        assert rt.pieces[0] == pw.pieces[0]
