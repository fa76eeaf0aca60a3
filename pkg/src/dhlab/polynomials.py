"""Multivariate polynomials on affine charts and 1-d piecewise polynomials.

Coefficients may be exact ``fractions.Fraction`` (kept exact through affine
substitutions) or floats.  Tiny float coefficients are canonically zeroed
so that representations stay comparable.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

ZERO_EPS = 1e-14


def _is_zero(c) -> bool:
    if isinstance(c, Fraction):
        return c == 0
    return abs(c) < ZERO_EPS


def _coef_to_json(c):
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return float(c)


def _coef_from_json(c):
    if isinstance(c, str):
        return Fraction(c)
    return float(c)


@dataclass
class PolynomialOnChart:
    """Sparse polynomial in ``nvars`` chart coordinates.

    ``coeffs`` maps degree multi-indices to coefficients.  ``cap`` is an
    optional total-degree bound enforced on construction.
    """

    nvars: int
    coeffs: dict = field(default_factory=dict)
    cap: int | None = None

    def __post_init__(self):
        clean = {}
        for deg, c in self.coeffs.items():
            deg = tuple(int(d) for d in deg)
            if len(deg) != self.nvars:
                raise ValueError(f"multi-degree {deg} has wrong length")
            if self.cap is not None and sum(deg) > self.cap:
                raise ValueError(f"degree {deg} exceeds cap {self.cap}")
            if not _is_zero(c):
                clean[deg] = clean.get(deg, 0) + c
        self.coeffs = {d: c for d, c in clean.items() if not _is_zero(c)}

    # ---- algebra -------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars=1):
        return cls(nvars, {(0,) * nvars: value})

    @property
    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(sum(d) for d in self.coeffs)

    def __add__(self, other):
        if isinstance(other, PolynomialOnChart):
            merged = dict(self.coeffs)
            for d, c in other.coeffs.items():
                merged[d] = merged.get(d, 0) + c
            return PolynomialOnChart(self.nvars, merged)
        return self + PolynomialOnChart.constant(other, self.nvars)

    def __sub__(self, other):
        return self + (other * -1 if isinstance(other, PolynomialOnChart)
                       else PolynomialOnChart.constant(-other, self.nvars))

    def __mul__(self, other):
        if isinstance(other, PolynomialOnChart):
            out = {}
            for d1, c1 in self.coeffs.items():
                for d2, c2 in other.coeffs.items():
                    d = tuple(a + b for a, b in zip(d1, d2))
                    out[d] = out.get(d, 0) + c1 * c2
            return PolynomialOnChart(self.nvars, out)
        return PolynomialOnChart(self.nvars, {d: c * other for d, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = PolynomialOnChart.constant(Fraction(1), self.nvars)
        for _ in range(int(k)):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, PolynomialOnChart):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def almost_equal(self, other, tol=1e-9) -> bool:
        degs = set(self.coeffs) | set(other.coeffs)
        return all(abs(float(self.coeffs.get(d, 0)) - float(other.coeffs.get(d, 0))) <= tol
                   for d in degs)

    # ---- evaluation / integration --------------------------------------
    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            # a flat array is N points when univariate, else one point
            pts = pts[:, None] if self.nvars == 1 else pts[None, :]
        if pts.shape[1] != self.nvars:
            raise ValueError(f"points have {pts.shape[1]} coords, expected {self.nvars}")
        out = np.zeros(pts.shape[0])
        for deg, c in self.coeffs.items():
            term = np.full(pts.shape[0], float(c))
            for j, d in enumerate(deg):
                if d:
                    term = term * pts[:, j] ** d
            out += term
        return out if out.size > 1 else float(out[0])

    def integrate_box(self, box):
        """Exact integral over an axis-aligned box [[lo, hi], ...]."""
        total = 0
        for deg, c in self.coeffs.items():
            term = c
            for (lo, hi), d in zip(box, deg):
                if isinstance(c, Fraction):
                    lo, hi = Fraction(lo), Fraction(hi)
                term = term * (hi ** (d + 1) - lo ** (d + 1)) / (d + 1)
            total = total + term
        return total

    def derivative(self, var=0):
        out = {}
        for deg, c in self.coeffs.items():
            if deg[var] == 0:
                continue
            d = list(deg)
            d[var] -= 1
            out[tuple(d)] = c * deg[var]
        return PolynomialOnChart(self.nvars, out)

    def antiderivative(self, var=0):
        out = {}
        for deg, c in self.coeffs.items():
            d = list(deg)
            d[var] += 1
            if isinstance(c, Fraction):
                out[tuple(d)] = c / (deg[var] + 1)
            else:
                out[tuple(d)] = c / (deg[var] + 1)
        return PolynomialOnChart(self.nvars, out)

    def substitute_affine(self, coeff_matrix, shift):
        """Return p(C y + s) as a polynomial in y (exact when inputs are)."""
        lin = []
        for i in range(self.nvars):
            terms = {(0,) * self.nvars: shift[i]}
            for j in range(self.nvars):
                d = [0] * self.nvars
                d[j] = 1
                terms[tuple(d)] = coeff_matrix[i][j]
            lin.append(PolynomialOnChart(self.nvars, terms))
        result = PolynomialOnChart(self.nvars, {})
        for deg, c in self.coeffs.items():
            term = PolynomialOnChart.constant(c, self.nvars)
            for j, d in enumerate(deg):
                for _ in range(d):
                    term = term * lin[j]
            result = result + term
        return result

    # ---- serialisation --------------------------------------------------
    def to_json_dict(self):
        coeffs = [{"deg": list(d), "c": _coef_to_json(c)}
                  for d, c in sorted(self.coeffs.items())]
        return {"vars": self.nvars, "coeffs": coeffs}

    @classmethod
    def from_json_dict(cls, data):
        coeffs = {tuple(entry["deg"]): _coef_from_json(entry["c"])
                  for entry in data["coeffs"]}
        return cls(int(data["vars"]), coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "Poly(0)"
        parts = []
        for deg, c in sorted(self.coeffs.items()):
            mono = "*".join(f"t{j + 1}^{d}" for j, d in enumerate(deg) if d) or "1"
            parts.append(f"{c}*{mono}")
        return "Poly(" + " + ".join(parts) + ")"


@dataclass
class PiecewisePoly1D:
    """Piecewise polynomial density on the real line.

    ``breakpoints`` has k+1 sorted entries (last may be ``inf``);
    ``pieces[i]`` holds on [breakpoints[i], breakpoints[i+1]).  The density
    is zero outside the breakpoint range.
    """

    breakpoints: list
    pieces: list

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) - 1:
            raise ValueError("need one piece per breakpoint interval")
        bp = [float(b) for b in self.breakpoints]
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bp = np.array([float(b) for b in self.breakpoints])
        idx = np.searchsorted(bp, x, side="right") - 1
        out = np.zeros_like(x)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if mask.any():
                out[mask] = piece(x[mask, None])
        out[(x < bp[0]) | (x >= bp[-1])] = 0.0
        return out if out.size > 1 else float(out[0])

    def integrate(self, lo, hi):
        total = 0.0
        bp = [float(b) for b in self.breakpoints]
        for i, piece in enumerate(self.pieces):
            a = max(lo, bp[i])
            b = min(hi, bp[i + 1])
            if b > a and math.isfinite(a) and math.isfinite(b):
                total += float(piece.integrate_box([(a, b)]))
        return total

    def bin_masses(self, edges):
        edges = np.asarray(edges, dtype=float)
        return np.array([self.integrate(a, b) for a, b in zip(edges[:-1], edges[1:])])

    def convolve_running_integral(self, scale):
        """Convolve with ``scale * 1_{[0, inf)}``.

        The result at x is scale * integral of self over (-inf, x], which is
        again piecewise polynomial with the same breakpoints (plus an
        unbounded tail if the support was unbounded).
        """
        new_pieces = []
        acc = Fraction(0) if _all_rational(self.pieces) else 0.0
        for i, piece in enumerate(self.pieces):
            anti = piece.antiderivative(0)
            lo = self.breakpoints[i]
            if not math.isfinite(float(lo)):
                raise ValueError("cannot integrate from an infinite breakpoint")
            # piece of the running integral: acc + anti(x) - anti(lo)
            shifted = anti + PolynomialOnChart.constant(acc - _eval_exact(anti, lo), 1)
            new_pieces.append(shifted * scale)
            hi = self.breakpoints[i + 1]
            if math.isfinite(float(hi)):
                acc = acc + _eval_exact(anti, hi) - _eval_exact(anti, lo)
        return PiecewisePoly1D(list(self.breakpoints), new_pieces)

    def to_json_dict(self):
        return {
            "breakpoints": [None if not math.isfinite(float(b)) else
                            (_coef_to_json(b) if isinstance(b, Fraction) else float(b))
                            for b in self.breakpoints],
            "pieces": [p.to_json_dict() for p in self.pieces],
        }

    @classmethod
    def from_json_dict(cls, data):
        bps = [math.inf if b is None else _coef_from_json(b) for b in data["breakpoints"]]
        return cls(bps, [PolynomialOnChart.from_json_dict(p) for p in data["pieces"]])

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _all_rational(pieces):
    return all(isinstance(c, Fraction) for p in pieces for c in p.coeffs.values())


def _eval_exact(poly, x):
    if isinstance(x, Fraction) or isinstance(x, int):
        total = Fraction(0) if _all_rational([poly]) else 0.0
        for (d,), c in poly.coeffs.items():
            total = total + c * (Fraction(x) if isinstance(total, Fraction) else float(x)) ** d
        return total
    return poly(np.array([float(x)]))


# ---- affine transitions --------------------------------------------------

@dataclass(frozen=True)
class AffineTransition:
    """y = A x + b on a rank-q chart."""

    A: tuple
    b: tuple

    @classmethod
    def build(cls, A, b):
        A_rows = tuple(tuple(_coerce_num(x) for x in row) for row in A)
        b_vec = tuple(_coerce_num(x) for x in b)
        return cls(A_rows, b_vec)

    @property
    def rank(self):
        return len(self.b)

    def to_json_dict(self):
        return {"A": [[_coef_to_json(x) if isinstance(x, Fraction) else x for x in row]
                      for row in self.A],
                "b": [_coef_to_json(x) if isinstance(x, Fraction) else x for x in self.b]}

    @classmethod
    def from_json_dict(cls, data):
        return cls.build([[_coef_from_json(x) for x in row] for row in data["A"]],
                         [_coef_from_json(x) for x in data["b"]])


def _coerce_num(x):
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return float(x)
