"""Named model catalog with expected-density descriptors and default grids."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import (ChartModel, ModelValidationError, ProductModel,
                     SurfaceFactor, SymmetryQuotient, TorusWeightModel,
                     validate_model)

TWO_PI = 2.0 * math.pi
FOUR_PI_SQ = TWO_PI * TWO_PI


class CatalogError(KeyError):
    pass


def make_sphere(window=None, name="sphere"):
    """Round sphere in cylinder coordinates (angle, height).

    omega = d(angle) ^ d(height), moment = height, rotation action.  The
    cylinder chart is measure-preserving, so poles cost nothing.
    """
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def moment(X):
        return X[:, 1:2]

    def action(X):
        rows = np.zeros((X.shape[0], 1, 2))
        rows[:, 0, 0] = 1.0
        return rows

    return ChartModel(
        dim=2,
        domain=[(0.0, TWO_PI), (-1.0, 1.0)],
        periodic=[True, False],
        moment=moment,
        action=action,
        omega=omega,
        rank=1,
        window=window if window is not None else [(-1.0, 1.0)],
        name=name,
    )


def make_two_sphere_diagonal(window=None, name="tent"):
    """Product of two spheres with the diagonal rotation, moment z1 + z2."""
    omega = np.zeros((4, 4))
    omega[0, 1] = 1.0
    omega[1, 0] = -1.0
    omega[2, 3] = 1.0
    omega[3, 2] = -1.0

    def moment(X):
        return (X[:, 1] + X[:, 3])[:, None]

    def action(X):
        rows = np.zeros((X.shape[0], 1, 4))
        rows[:, 0, 0] = 1.0
        rows[:, 0, 2] = 1.0
        return rows

    return ChartModel(
        dim=4,
        domain=[(0.0, TWO_PI), (-1.0, 1.0), (0.0, TWO_PI), (-1.0, 1.0)],
        periodic=[True, False, True, False],
        moment=moment,
        action=action,
        omega=omega,
        rank=1,
        window=window if window is not None else [(-2.0, 2.0)],
        name=name,
    )


def make_swap_quotient(name="swap_quotient"):
    base = TorusWeightModel([[1, 1]], window=[(0.0, 1.0)], name="hopf_base")
    swap = np.zeros((4, 4), dtype=np.int64)
    swap[0, 2] = swap[1, 3] = swap[2, 0] = swap[3, 1] = 1
    return SymmetryQuotient(base, [swap], group_order=2, name=name)


def make_surface_product(area: float, weights=((1,),), name=None):
    base = TorusWeightModel(weights, window=[(0.0, 1.0)] * len(weights),
                            name="weight_base")
    return ProductModel(SurfaceFactor(float(area)), base,
                        name=name or f"surface_product_a{area:g}")


@dataclass
class CatalogEntry:
    name: str
    builder: object
    description: str
    default_grid: list
    default_bins: int = 64
    expected: dict | None = None
    validates: bool = True
    extras: dict = field(default_factory=dict)

    def build(self):
        return self.builder()


def _entries() -> dict[str, CatalogEntry]:
    e = {}
    e["disc"] = CatalogEntry(
        name="disc",
        builder=lambda: TorusWeightModel([[1]], window=[(0.0, 1.0)], name="disc"),
        description="single weight-1 circle action on C; constant density 2*pi",
        default_grid=[(0.05, 0.95)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[TWO_PI]], "provenance": "derived:one-variable integral"},
    )
    e["hopf"] = CatalogEntry(
        name="hopf",
        builder=lambda: TorusWeightModel([[1, 1]], window=[(0.0, 1.0)], name="hopf"),
        description="diagonal circle action on C^2; density 4*pi^2*t",
        default_grid=[(0.1, 1.0)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[0.0, FOUR_PI_SQ]], "provenance": "derived:convolution"},
    )
    e["weighted"] = CatalogEntry(
        name="weighted",
        builder=lambda: TorusWeightModel([[1, 2]], window=[(0.0, 1.0)], name="weighted"),
        description="weights (1,2) circle action on C^2; density 2*pi^2*t",
        default_grid=[(0.1, 1.0)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[0.0, FOUR_PI_SQ / 2.0]], "provenance": "derived:convolution"},
    )
    e["sphere"] = CatalogEntry(
        name="sphere",
        builder=make_sphere,
        description="round sphere, rotation action; constant density 2*pi",
        default_grid=[(-0.9, 0.9)],
        expected={"form": "piecewise", "breakpoints": [-1.0, 1.0],
                  "coeffs": [[TWO_PI]], "provenance": "derived:cylinder projection"},
    )
    e["tent"] = CatalogEntry(
        name="tent",
        builder=make_two_sphere_diagonal,
        description="two spheres, diagonal rotation; tent density 4*pi^2*(2-|t|)",
        default_grid=[(-1.8, 1.8)],
        expected={"form": "piecewise", "breakpoints": [-2.0, 0.0, 2.0],
                  "coeffs": [[2 * FOUR_PI_SQ, FOUR_PI_SQ],
                             [2 * FOUR_PI_SQ, -FOUR_PI_SQ]],
                  "provenance": "derived:convolution of uniform pushforwards"},
    )
    e["surface_product"] = CatalogEntry(
        name="surface_product",
        builder=lambda: make_surface_product(3.0, name="surface_product"),
        description="area-3 surface times the disc model; density 3*2*pi",
        default_grid=[(0.05, 0.95)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[3.0 * TWO_PI]], "provenance": "derived:product measure"},
    )
    e["surface_product_a1"] = CatalogEntry(
        name="surface_product_a1",
        builder=lambda: make_surface_product(1.0, name="surface_product_a1"),
        description="unit-area surface times the disc model",
        default_grid=[(0.05, 0.95)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[TWO_PI]], "provenance": "derived:product measure"},
    )
    e["surface_product_a2"] = CatalogEntry(
        name="surface_product_a2",
        builder=lambda: make_surface_product(
            2.0, weights=((1, 1),), name="surface_product_a2"),
        description="area-2 surface times the diagonal C^2 model",
        default_grid=[(0.1, 1.0)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[0.0, 2.0 * FOUR_PI_SQ]],
                  "provenance": "derived:product measure"},
    )
    e["swap_quotient"] = CatalogEntry(
        name="swap_quotient",
        builder=make_swap_quotient,
        description="hopf model with coordinate-swap symmetry adjoined (iota = 2)",
        default_grid=[(0.1, 1.0)],
        expected={"form": "piecewise", "breakpoints": [0.0],
                  "coeffs": [[0.0, FOUR_PI_SQ]], "provenance": "derived:iota cancellation"},
    )
    e["rank2"] = CatalogEntry(
        name="rank2",
        builder=lambda: TorusWeightModel([[1, 0], [0, 1]],
                                         window=[(0.0, 1.0), (0.0, 1.0)], name="rank2"),
        description="coordinate 2-torus action on C^2; constant density 4*pi^2",
        default_grid=[(0.1, 1.0), (0.1, 1.0)],
        default_bins=16,
        expected={"form": "constant", "coeffs": [[FOUR_PI_SQ]],
                  "provenance": "derived:point fibers"},
    )
    e["ineffective_reject"] = CatalogEntry(
        name="ineffective_reject",
        builder=lambda: TorusWeightModel([[2]], window=[(0.0, 1.0)],
                                         name="ineffective_reject"),
        description="weight-2 circle action; fails effectiveness (Smith factor 2)",
        default_grid=[(0.05, 0.95)],
        validates=False,
    )
    return e


CATALOG = _entries()


def catalog_names() -> list[str]:
    return sorted(CATALOG)


def catalog_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown model {name!r}; known models: {', '.join(catalog_names())}"
        ) from None


def catalog_get(name: str, validate: bool = True):
    """Build (and by default validate) a catalog model by name.

    Models that fail validation raise :class:`ModelValidationError` carrying
    the diagnosis, e.g. the effectiveness failure of ``ineffective_reject``.
    """
    entry = catalog_entry(name)
    model = entry.build()
    if validate:
        report = validate_model(model)
        if not report.passed:
            raise ModelValidationError(report)
    return model
