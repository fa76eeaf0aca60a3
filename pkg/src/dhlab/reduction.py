"""Orbit volumes, iota profiles and reduced-space volumes.

The reduced volume of a level set is computed two independent ways:

* ``exact`` (weight models): split the acting torus off T^n by the
  unimodular Smith change of angle coordinates.  The Haar factor
  contributes (2*pi)^q / |det L| per free orbit, the leftover angles
  (2*pi)^(n-q), and the remaining factor is the exact volume of the fiber
  polytope {u >= 0 : W u = t - offset} in the adapted coordinates.
* ``slab``: Monte Carlo over the preimage of [t, t+eps]^q, reweighting each
  Liouville sample by the pointwise ratio of the split integrand (Haar
  times reduced symplectic volume, with the transverse block measured in
  plain Lebesgue coordinates as the coarea correction) to the Liouville
  density.

Neither path touches the pushforward module; the identity check against
the pushforward density stays a comparison of two disjoint pipelines.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import polytope
from .frames import density_split_factors, frames_batch
from .models import (ChartModel, EmptyRegionError, ProductModel,
                     SymmetryQuotient, TorusWeightModel, UnsupportedModelError,
                     moment_walls, sample_window)

TWO_PI = 2.0 * math.pi


class WallWarning(UserWarning):
    """Requested point sits on (or next to) an exceptional wall."""


class WallCrossingError(RuntimeError):
    """Slab straddles a chamber wall; shrink eps."""


@dataclass
class IotaProfile:
    """Generic isotropy component count plus the exceptional wall set."""

    generic_value: int
    exceptional_walls: list = field(default_factory=list)  # (normal, offset, iota)

    def value_at(self, t) -> int:
        return self.generic_value

    def wall_distance(self, t) -> float:
        t = np.asarray(t, dtype=float)
        dists = [abs(float(np.dot(n, t)) - c) / float(np.linalg.norm(n))
                 for n, c, _ in self.exceptional_walls]
        return min(dists) if dists else math.inf


@dataclass
class ReducedVolumeEstimate:
    t: np.ndarray
    value: float
    method: str                     # "adapted-coordinates" | "slab-MC"
    sigma: float = 0.0
    empty_fiber: bool = False
    wall_warning: bool = False
    # the measure-zero stabilizer-component modification is recorded but
    # deliberately not applied
    stabilizer_remark_applied: bool = False


def generic_iota(model) -> IotaProfile:
    """Isotropy component count of the acting groupoid over the image.

    Weight models have connected torus isotropy (iota = 1); symmetry
    quotients carry the finite-group order.  Walls are the images of the
    coordinate subspaces, where level-set combinatorics degenerate.
    """
    walls = [(n, c, int(model.iota)) for n, c in moment_walls(model)]
    return IotaProfile(generic_value=int(model.iota), exceptional_walls=walls)


def orbit_volume(model, b) -> float:
    """Leaf symplectic volume of the base orbit over b (no iota factor)."""
    profile = generic_iota(model)
    b = np.asarray(b, dtype=float)
    if profile.wall_distance(b) < 1e-9:
        warnings.warn(f"point {b} lies on an exceptional wall", WallWarning,
                      stacklevel=2)
    if isinstance(model, ProductModel):
        return float(model.surface.area)
    return 1.0


def fiber_polytope_volume(base: TorusWeightModel, t) -> Fraction:
    """Exact volume of {u >= 0 : W u = t - offset} in adapted coordinates."""
    U, V = base.adapted_change()
    q, n = base.rank, base.n
    s = [_as_fraction(ti) - _as_fraction(oi)
         for ti, oi in zip(np.atleast_1d(t), base.offset)]
    lead = [sum(Fraction(int(U[i, j])) * s[j] for j in range(q)) for i in range(q)]
    if n == q:
        u = [sum(Fraction(int(V[i, j])) * lead[j] for j in range(q)) for i in range(n)]
        return Fraction(1) if all(x >= 0 for x in u) else Fraction(0)
    # constraints V @ (lead, y) >= 0 in the free coordinates y
    rows = []
    rhs = []
    for i in range(n):
        rows.append([-Fraction(int(V[i, j])) for j in range(q, n)])
        rhs.append(sum(Fraction(int(V[i, j])) * lead[j] for j in range(q)))
    if not polytope.recession_is_trivial(rows):
        raise UnsupportedModelError(
            f"{base.name}: fiber polytope unbounded (non-proper moment map)")
    return polytope.polytope_volume(rows, rhs)


def _as_fraction(x) -> Fraction:
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(float(x))


def _base_weight(model):
    base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
    if not isinstance(base, TorusWeightModel):
        return None
    return base


def reduced_volume(model, t, mode: str = "exact", eps: float = 1e-3,
                   samples: int = 20_000, seed: int = 0,
                   workers: int = 1) -> ReducedVolumeEstimate:
    """Volume of the reduced space over t, normalized by the identity
    component's Haar measure with the isotropy component count divided out.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape[0] != model.rank:
        raise ValueError(f"level point has rank {t.shape[0]}, expected {model.rank}")
    if mode == "exact":
        return _reduced_volume_exact(model, t)
    if mode == "slab":
        return _reduced_volume_slab(model, t, eps, samples, seed, workers)
    raise ValueError(f"unknown mode {mode!r}")


def _reduced_volume_exact(model, t) -> ReducedVolumeEstimate:
    base = _base_weight(model)
    if base is None:
        raise UnsupportedModelError(
            f"{model.name}: exact reduced volumes need a weight model; use slab mode")
    profile = generic_iota(model)
    wall = profile.wall_distance(t) < 1e-9
    if wall:
        warnings.warn(f"level {t} lies on an exceptional wall", WallWarning,
                      stacklevel=3)
    vol = fiber_polytope_volume(base, t)
    det_l = abs(float(np.linalg.det(model.lattice_basis)))
    iota = profile.generic_value
    value = TWO_PI**base.n * float(vol) / (iota * det_l)
    return ReducedVolumeEstimate(
        t=t, value=value, method="adapted-coordinates", sigma=0.0,
        empty_fiber=(vol == 0), wall_warning=wall)


def _reduced_volume_slab(model, t, eps, samples, seed, workers) -> ReducedVolumeEstimate:
    if eps <= 0:
        raise ValueError("slab thickness eps must be positive")
    profile = generic_iota(model)
    # center the slab on t: a one-sided slab carries an O(eps) bias that
    # would break the agreement contract with the exact mode
    lo = t - eps / 2.0
    hi = t + eps / 2.0
    for normal, c, _ in profile.exceptional_walls:
        ends = np.array([float(np.dot(normal, lo)) - c, float(np.dot(normal, hi)) - c])
        if ends[0] * ends[1] < 0:
            raise WallCrossingError(
                f"slab [{t}, {t}+{eps}] crosses the wall with normal {normal}")
    window = np.stack([lo, hi], axis=1)
    try:
        batch = sample_window(model, samples, seed, workers=workers, window=window)
    except EmptyRegionError:
        return ReducedVolumeEstimate(t=t, value=0.0, method="slab-MC", sigma=0.0,
                                     empty_fiber=True)
    if batch.accepted == 0:
        return ReducedVolumeEstimate(t=t, value=0.0, method="slab-MC", sigma=0.0,
                                     empty_fiber=True)
    fb = frames_batch(model, batch.points)
    fac = density_split_factors(fb, model)
    # coarea correction: measure the transverse block in plain Lebesgue
    # moment coordinates instead of the lattice covector frame
    push_t = np.einsum("nqd,njd->njq", fb.dmu, fb.transverse)
    lebesgue = np.abs(np.linalg.det(push_t))
    ratio = fac["haar"] * fac["reduced"] * fac["leaf"] * lebesgue / fac["left"]
    iota = profile.generic_value
    orb = orbit_volume(model, t)
    contrib = batch.weights * ratio / (iota * eps**model.rank * orb)
    total = float(np.sum(contrib))
    var = max(0.0, float(np.sum(contrib**2) - total**2 / batch.proposals))
    return ReducedVolumeEstimate(t=t, value=total, method="slab-MC",
                                 sigma=math.sqrt(var),
                                 wall_warning=profile.wall_distance(t) < 1e-9)


@dataclass
class VolumeTableRow:
    t: np.ndarray
    vol: float
    vol_red: float
    iota: int
    method: str
    sigma: float
    flags: str = ""


@dataclass
class VolumeTable:
    rows: list

    def csv_header(self):
        q = len(self.rows[0].t) if self.rows else 1
        return [f"t_{i + 1}" for i in range(q)] + [
            "vol", "vol_red", "iota", "method", "sigma", "flags"]

    def csv_rows(self):
        for r in self.rows:
            yield list(r.t) + [r.vol, r.vol_red, r.iota, r.method, r.sigma, r.flags]

    def as_arrays(self):
        t = np.array([r.t for r in self.rows])
        return (t, np.array([r.vol for r in self.rows]),
                np.array([r.vol_red for r in self.rows]))


def vol_functions_on_grid(model, grid_points, mode: str | None = None,
                          eps: float = 1e-3, samples: int = 20_000,
                          seed: int = 0, workers: int = 1) -> VolumeTable:
    """Tables of the iota-weighted orbit volume and reduced volume.

    Both table columns carry the isotropy component count: vol is
    iota * (leaf orbit volume) and vol_red is iota * (reduced volume as
    returned by :func:`reduced_volume`).
    """
    if mode is None:
        mode = "slab" if isinstance(model, ChartModel) else "exact"
    profile = generic_iota(model)
    iota = profile.generic_value
    rows = []
    for k, t in enumerate(np.atleast_2d(np.asarray(grid_points, dtype=float))):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WallWarning)
            est = reduced_volume(model, t, mode=mode, eps=eps, samples=samples,
                                 seed=seed + k, workers=workers)
            orb = orbit_volume(model, t)
        flags = []
        if est.empty_fiber:
            flags.append("empty_fiber")
        if est.wall_warning or profile.wall_distance(t) < 1e-9:
            flags.append("wall")
        rows.append(VolumeTableRow(
            t=t, vol=iota * orb, vol_red=iota * est.value, iota=iota,
            method=est.method, sigma=iota * est.sigma, flags="|".join(flags)))
    return VolumeTable(rows)
