"""Integral affine chart data, the affine measure and polynomial transport.

The affine measure on a rank-q chart has constant density
|det L| / iota relative to chart Lebesgue measure, where the rows of L are
the lattice covector basis in chart coordinates and iota is the generic
isotropy component count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polynomials import AffineTransition, PolynomialOnChart
from .smith import integer_det

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IntegralAffineData:
    """Lattice basis rows L (q x q, invertible) and generic iota."""

    L: tuple
    iota_generic: int = 1

    @classmethod
    def build(cls, L, iota_generic: int = 1):
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError("lattice basis must be square")
        if abs(np.linalg.det(L)) <= 0:
            raise ValueError("lattice basis must be invertible")
        if iota_generic < 1:
            raise ValueError("iota must be a positive integer")
        return cls(tuple(map(tuple, L.tolist())), int(iota_generic))

    @classmethod
    def from_model(cls, model):
        return cls.build(model.lattice_basis, model.iota)

    @property
    def rank(self) -> int:
        return len(self.L)

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.L, dtype=float)

    @property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.matrix)))

    @property
    def density(self) -> float:
        """Density of the affine measure relative to chart Lebesgue."""
        return self.covolume / self.iota_generic


def affine_measure_eval(data: IntegralAffineData, region) -> float:
    """Mass of an axis-aligned box under the affine measure (0 if empty)."""
    box = np.asarray(region, dtype=float).reshape(-1, 2)
    if box.shape[0] != data.rank:
        raise ValueError(f"region rank {box.shape[0]} != chart rank {data.rank}")
    lengths = np.maximum(box[:, 1] - box[:, 0], 0.0)
    return data.density * float(np.prod(lengths))


def is_integral_affine(t: AffineTransition) -> bool:
    """True iff the linear part is integer with |det| = 1."""
    A = list(t.A)
    for row in A:
        for x in row:
            if isinstance(x, float) and not float(x).is_integer():
                return False
            if isinstance(x, Fraction) and x.denominator != 1:
                return False
    mat = [[int(x) for x in row] for row in A]
    return abs(integer_det(mat)) == 1


def _invert_linear(A):
    """Exact inverse for rational matrices, float inverse otherwise."""
    rows = list(A)
    n = len(rows)
    exact = all(isinstance(x, (Fraction, int)) for row in rows for x in row)
    if not exact:
        inv = np.linalg.inv(np.asarray(rows, dtype=float))
        return [[float(x) for x in r] for r in inv]
    aug = [[Fraction(x) for x in rows[i]] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ValueError("transition matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        scale = aug[col][col]
        aug[col] = [x / scale for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [[aug[i][n + j] for j in range(n)] for i in range(n)]


def apply_transition(p: PolynomialOnChart, t: AffineTransition) -> PolynomialOnChart:
    """Transport a polynomial along y = A x + b, i.e. return p(A^(-1)(y - b)).

    Exact on rational data; the degree is preserved for invertible
    transitions.
    """
    if p.nvars != t.rank:
        raise ValueError("polynomial and transition rank differ")
    Ainv = _invert_linear(t.A)
    # x = Ainv y - Ainv b
    shift = []
    for i in range(t.rank):
        s = sum(Ainv[i][j] * t.b[j] for j in range(t.rank))
        shift.append(-s)
    return p.substitute_affine(Ainv, shift)


# ---------------------------------------------------------------------------
# fiber integration check
# ---------------------------------------------------------------------------

@dataclass
class MomentTestFunction:
    """Test function f(x) = poly(moment(x)) * 1_{moment(x) in box}."""

    poly: PolynomialOnChart
    box: np.ndarray | None = None

    def __call__(self, t: np.ndarray) -> np.ndarray:
        vals = np.atleast_1d(self.poly(t))
        if self.box is not None:
            box = np.asarray(self.box, dtype=float).reshape(-1, 2)
            inside = np.all((t >= box[:, 0]) & (t <= box[:, 1]), axis=1)
            vals = vals * inside
        return vals


@dataclass
class FiberIntegrationResult:
    lhs: float
    lhs_sigma: float
    rhs: float
    residual: float
    relative: bool

    @property
    def z_score(self) -> float:
        # guard the zero-variance case (full acceptance) against ulp noise
        floor = 1e-12 * (abs(self.lhs) + abs(self.rhs) + 1.0)
        return abs(self.lhs - self.rhs) / max(self.lhs_sigma, floor)


def fiber_integration_check(model, data: IntegralAffineData, f: MomentTestFunction,
                            samples: int = 200_000, seed: int = 0,
                            workers: int = 1) -> FiberIntegrationResult:
    """Compare the two sides of the leaf-space integration formula.

    Left side: Monte Carlo integral of f against the product density built
    from the foliated measure and the lattice density (|det L| times
    Liouville for these models).  Right side: iota times the orbit integral
    of f against the affine measure, computed exactly (polynomial times box
    over each axis interval).

    Supported models are those whose orbits fill the whole moment fiber
    (the complex rank equals the torus rank, optionally times a surface
    factor), so that the leaf space of the action groupoid is the moment
    window itself.
    """
    base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
    if not hasattr(base, "n") or base.n != base.rank:
        raise ValueError(
            "fiber integration check needs full torus orbits "
            "(complex dimension equal to torus rank)")
    if f.poly.nvars != model.rank:
        raise ValueError("test polynomial rank mismatch")
    covol = data.covolume

    batch = model.sample(samples, seed, workers=workers)
    fv = f(batch.moments)
    contrib = batch.weights * fv * covol
    lhs = float(np.sum(contrib))
    var = max(0.0, float(np.sum(contrib**2) - lhs**2 / batch.proposals))
    lhs_sigma = math.sqrt(var)

    # orbit volume in the total space: q-torus times any surface factor
    orbit = TWO_PI**base.rank
    if hasattr(model, "surface"):
        orbit *= float(model.surface.area)
    window = np.asarray(model.window, dtype=float)
    box = window if f.box is None else _intersect_boxes(window, f.box)
    iota = data.iota_generic
    rhs = iota * orbit * data.density * float(f.poly.integrate_box(box))

    if lhs == 0.0 and rhs == 0.0:
        return FiberIntegrationResult(lhs, lhs_sigma, rhs, 0.0, relative=False)
    if lhs == 0.0:
        return FiberIntegrationResult(lhs, lhs_sigma, rhs, abs(rhs), relative=False)
    return FiberIntegrationResult(lhs, lhs_sigma, rhs, abs(lhs - rhs) / abs(lhs),
                                  relative=True)


def _intersect_boxes(a, b):
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    lo = np.maximum(a[:, 0], b[:, 0])
    hi = np.minimum(a[:, 1], b[:, 1])
    return np.stack([lo, np.maximum(hi, lo)], axis=1)
