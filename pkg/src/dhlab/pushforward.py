"""Moment-map pushforward of the Liouville measure.

Monte Carlo histogram estimation with per-bin variance, plus an exact
piecewise-polynomial engine for rank-1 weight models built by convolving
the per-coordinate pushforward kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .models import EmptyRegionError, TorusWeightModel, moment_walls, sample_window
from .polynomials import PiecewisePoly1D, PolynomialOnChart

TWO_PI = 2.0 * math.pi


@dataclass
class GridSpec:
    """Axis-aligned histogram grid: per-axis (lo, hi) and bin counts."""

    box: np.ndarray        # (q, 2)
    bins: np.ndarray       # (q,)

    @classmethod
    def build(cls, box, bins):
        box = np.asarray(box, dtype=float).reshape(-1, 2)
        if np.isscalar(bins):
            bins = [int(bins)] * box.shape[0]
        bins = np.asarray(bins, dtype=np.int64)
        if np.any(box[:, 1] <= box[:, 0]) or np.any(bins < 1):
            raise ValueError("grid box must be nonempty with >= 1 bin per axis")
        return cls(box, bins)

    @property
    def rank(self):
        return self.box.shape[0]

    @property
    def widths(self):
        return (self.box[:, 1] - self.box[:, 0]) / self.bins

    @property
    def bin_volume(self):
        return float(np.prod(self.widths))

    def edges(self, axis):
        return np.linspace(self.box[axis, 0], self.box[axis, 1], self.bins[axis] + 1)

    def centers(self, axis):
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    def center_points(self) -> np.ndarray:
        """All bin centers as an (nbins_total, q) array in C order."""
        axes = [self.centers(i) for i in range(self.rank)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class BinnedDensity:
    """Histogram estimate of the pushforward measure with per-bin variance."""

    grid: GridSpec
    mass: np.ndarray           # flat, C order over the grid
    sq_mass: np.ndarray
    counts: np.ndarray
    samples: int
    seed: int
    workers: int
    boundary_flags: np.ndarray = field(default=None)
    model_name: str = ""

    @property
    def rank(self):
        return self.grid.rank

    @property
    def sigma_mass(self) -> np.ndarray:
        var = self.sq_mass - self.mass**2 / self.samples
        return np.sqrt(np.maximum(var, 0.0))

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.grid.bin_volume

    @property
    def sigma_density(self) -> np.ndarray:
        return self.sigma_mass / self.grid.bin_volume

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def centers(self) -> np.ndarray:
        return self.grid.center_points()

    def usable(self) -> np.ndarray:
        """Bins that are unflagged and carry a positive variance estimate."""
        return (~self.boundary_flags) & (self.sigma_mass > 0)

    def csv_rows(self):
        centers = self.centers()
        dens = self.density
        sig = self.sigma_density
        for i in range(centers.shape[0]):
            yield (list(centers[i]) + [float(self.mass[i]), float(dens[i]),
                                       float(sig[i]), int(self.boundary_flags[i])])

    def csv_header(self):
        return [f"t_{i + 1}" for i in range(self.rank)] + [
            "mass", "density", "sigma", "boundary_flag"]


def _flat_indices(points, grid: GridSpec):
    rel = (points - grid.box[:, 0]) / grid.widths
    idx = np.floor(rel).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < grid.bins), axis=1)
    flat = np.zeros(points.shape[0], dtype=np.int64)
    mult = 1
    for ax in range(grid.rank - 1, -1, -1):
        flat += idx[:, ax] * mult
        mult *= int(grid.bins[ax])
    return flat, inside


def _boundary_flags(model, grid: GridSpec) -> np.ndarray:
    """Flag bins within one bin width of a window face or a chamber wall."""
    centers = grid.center_points()
    widths = grid.widths
    half = widths / 2.0
    flags = np.zeros(centers.shape[0], dtype=bool)
    win = np.asarray(model.window, dtype=float)
    for ax in range(grid.rank):
        near_lo = centers[:, ax] - half[ax] < win[ax, 0] + widths[ax]
        near_hi = centers[:, ax] + half[ax] > win[ax, 1] - widths[ax]
        flags |= near_lo | near_hi
    for normal, offset in moment_walls(model):
        dist = np.abs(centers @ normal - offset) / np.linalg.norm(normal)
        scale = float(np.linalg.norm(widths))
        flags |= dist < scale
    return flags


def dh_monte_carlo(model, grid, samples: int, seed: int,
                   workers: int = 1) -> BinnedDensity:
    """Histogram estimate of the pushforward density on the given grid.

    ``samples`` counts proposal draws; per-bin variance comes from the
    within-bin second moments of the importance weights.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec.build(grid, 64)
    if samples < 10_000:
        raise ValueError("need at least 10_000 samples for a histogram estimate")
    win = np.asarray(model.window, dtype=float)
    if np.any(grid.box[:, 0] < win[:, 0] - 1e-12) or np.any(grid.box[:, 1] > win[:, 1] + 1e-12):
        raise ValueError("grid box must lie inside the model's moment window")
    batch = sample_window(model, samples, seed, workers=workers)
    flat, inside = _flat_indices(batch.moments, grid)
    nflat = int(np.prod(grid.bins))
    mass, sq, counts = _kernels.hist_accumulate(flat[inside], batch.weights[inside], nflat)
    return BinnedDensity(
        grid=grid,
        mass=mass,
        sq_mass=sq,
        counts=counts,
        samples=samples,
        seed=int(seed),
        workers=int(workers),
        boundary_flags=_boundary_flags(model, grid),
        model_name=model.name,
    )


def dh_exact_linear(model) -> PiecewisePoly1D:
    """Exact pushforward density for a rank-1 weight model.

    The density is the iterated convolution of the per-coordinate kernels
    (scale/|a| times the indicator of the half line), carried out exactly on
    rational coefficients and scaled by (2*pi)^n.  Mixed-sign weights make
    the moment map non-proper and are rejected.
    """
    base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
    if not isinstance(base, TorusWeightModel) or base.rank != 1:
        raise ValueError("exact pushforward implemented for rank-1 weight models only")
    a = [int(x) for x in base.W[0]]
    if any(x == 0 for x in a):
        raise ValueError("zero weight column")
    flip = all(x < 0 for x in a)
    if not (all(x > 0 for x in a) or flip):
        raise ValueError("mixed-sign weights: moment map is not proper")
    mags = [abs(x) for x in a]
    # start from the first kernel 1/a1 on [0, inf), then convolve the rest
    density = PiecewisePoly1D(
        [Fraction(0), math.inf],
        [PolynomialOnChart.constant(Fraction(1, mags[0]), 1)])
    for m in mags[1:]:
        density = density.convolve_running_integral(Fraction(1, m))
    scale = TWO_PI**base.n * float(model.liouville_batch(np.zeros((1, model.dim)))[0])
    shift = float(base.offset[0])
    sign = -1.0 if flip else 1.0
    # f(t) = scale * g(sign * (t - shift)) piece by piece
    pieces = []
    for piece in density.pieces:
        coeffs = {deg: float(c) * scale for deg, c in piece.coeffs.items()}
        pieces.append(PolynomialOnChart(1, coeffs).substitute_affine(
            [[sign]], [-sign * shift]))
    bps = [shift + sign * float(b) if math.isfinite(float(b)) else sign * math.inf
           for b in density.breakpoints]
    if flip:
        bps = list(reversed(bps))
        pieces = list(reversed(pieces))
    return PiecewisePoly1D(bps, pieces)


def total_mass_check(density: BinnedDensity, model, seed_shift: int = 7919):
    """z-score of the histogram's total mass against an independent estimate.

    The reference is a second Monte Carlo pass with an independent stream,
    restricted to the histogram's grid box.  Returns (z, flag) where flag is
    set when both estimates vanish.
    """
    total = density.total_mass
    sigma1 = math.sqrt(max(0.0, float(np.sum(density.sq_mass)
                                      - np.sum(density.mass) ** 2 / density.samples)))
    try:
        ref = sample_window(model, density.samples, density.seed + seed_shift,
                            workers=density.workers, window=density.grid.box)
        ref_mass, ref_sigma = ref.mass, ref.mass_sigma
    except EmptyRegionError:
        ref_mass, ref_sigma = 0.0, 0.0
    if total == 0.0 and ref_mass == 0.0:
        return 0.0, True
    denom = math.sqrt(sigma1**2 + ref_sigma**2)
    if denom == 0.0:
        return (0.0 if abs(total - ref_mass) < 1e-12 else math.inf), False
    return (total - ref_mass) / denom, False
