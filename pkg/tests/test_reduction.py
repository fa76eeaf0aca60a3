import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from dhlab.catalog import catalog_get
from dhlab.models import TorusWeightModel
from dhlab.reduction import (WallCrossingError, WallWarning,
                             fiber_polytope_volume, generic_iota, orbit_volume,
                             reduced_volume, vol_functions_on_grid)

TWO_PI = 2.0 * math.pi
FOUR_PI_SQ = TWO_PI**2


class TestIota:
    def test_plain_weight_model(self, hopf):
        profile = generic_iota(hopf)
        assert profile.generic_value == 1

    def test_swap_quotient_counts_components(self, swap_quotient):
        assert generic_iota(swap_quotient).generic_value == 2

    def test_rank2_walls_are_axes(self, rank2):
        profile = generic_iota(rank2)
        normals = sorted(tuple(np.abs(w[0]).tolist()) for w in
                         profile.exceptional_walls)
        assert normals == [(0.0, 1.0), (1.0, 0.0)]
        assert all(w[1] == 0.0 for w in profile.exceptional_walls)


class TestOrbitVolume:
    def test_weight_models_are_one(self, disc, hopf):
        assert orbit_volume(disc, [0.4]) == 1.0
        assert orbit_volume(hopf, [0.4]) == 1.0

    def test_surface_factor_gives_area(self, surface_product):
        assert orbit_volume(surface_product, [0.4]) == 3.0

    def test_wall_warning(self, hopf):
        with pytest.warns(WallWarning):
            orbit_volume(hopf, [0.0])


class TestFiberPolytope:
    def test_hopf_segment_length(self, hopf):
        assert fiber_polytope_volume(hopf, [Fraction(1)]) == 1
        assert fiber_polytope_volume(hopf, [Fraction(1, 2)]) == Fraction(1, 2)

    def test_weighted_halves(self, weighted):
        assert fiber_polytope_volume(weighted, [Fraction(3, 5)]) == Fraction(3, 10)

    def test_point_fiber(self, rank2):
        assert fiber_polytope_volume(rank2, [0.25, 0.75]) == 1
        assert fiber_polytope_volume(rank2, [-0.25, 0.75]) == 0


class TestReducedVolumeExact:
    def test_disc_circle_fiber(self, disc):
        est = reduced_volume(disc, [0.7])
        assert est.value == pytest.approx(TWO_PI)
        assert est.method == "adapted-coordinates" and est.sigma == 0.0

    def test_hopf_grows_linearly(self, hopf):
        assert reduced_volume(hopf, [1.0]).value == pytest.approx(FOUR_PI_SQ)
        assert reduced_volume(hopf, [0.25]).value == pytest.approx(FOUR_PI_SQ / 4)

    def test_outside_image_empty_flag(self, hopf):
        est = reduced_volume(hopf, [-0.5])
        assert est.value == 0.0 and est.empty_fiber

    def test_swap_quotient_divides_by_iota(self, swap_quotient):
        est = reduced_volume(swap_quotient, [0.5])
        assert est.value == pytest.approx(FOUR_PI_SQ * 0.5 / 2.0)

    def test_homogeneous_scaling(self, weighted):
        # rank-1 positive weights: value(s*t) = s^(n-1) * value(t)
        base = reduced_volume(weighted, [0.3]).value
        for lam in [2.0, 3.0]:
            scaled = reduced_volume(weighted, [lam * 0.3]).value
            assert scaled == pytest.approx(lam ** (weighted.n - 1) * base)

    def test_continuity_on_chamber(self, hopf):
        ts = np.linspace(0.2, 0.9, 40)
        vals = np.array([reduced_volume(hopf, [t]).value for t in ts])
        jumps = np.abs(np.diff(vals, 2))
        assert np.max(jumps) < 1e-9  # linear on the chamber


class TestSlabMode:
    @pytest.mark.parametrize("name,t,eps", [
        ("disc", [0.4], 0.02),
        ("hopf", [0.5], 0.02),
        ("weighted", [0.6], 0.02),
        ("surface_product", [0.4], 0.02),
        ("swap_quotient", [0.5], 0.02),
    ])
    def test_agrees_with_exact(self, name, t, eps):
        model = catalog_get(name)
        exact = reduced_volume(model, t, mode="exact")
        slab = reduced_volume(model, t, mode="slab", eps=eps, samples=60_000,
                              seed=11)
        assert slab.sigma > 0
        assert abs(slab.value - exact.value) < 3 * slab.sigma + 1e-9

    def test_rank2_agreement(self, rank2):
        exact = reduced_volume(rank2, [0.4, 0.6], mode="exact")
        slab = reduced_volume(rank2, [0.4, 0.6], mode="slab", eps=0.08,
                              samples=120_000, seed=11)
        assert abs(slab.value - exact.value) < 3 * slab.sigma

    def test_sphere_haar_mass(self, sphere):
        slab = reduced_volume(sphere, [0.2], mode="slab", eps=0.02,
                              samples=60_000, seed=11)
        assert abs(slab.value - TWO_PI) < 3 * slab.sigma

    def test_tent_level_circumference(self, tent):
        slab = reduced_volume(tent, [0.5], mode="slab", eps=0.02,
                              samples=120_000, seed=11)
        expect = FOUR_PI_SQ * 1.5
        assert abs(slab.value - expect) < 3 * slab.sigma

    def test_wall_crossing_rejected(self, hopf):
        with pytest.raises(WallCrossingError):
            reduced_volume(hopf, [-0.005], mode="slab", eps=0.02, samples=20_000)

    def test_empty_slab_flagged(self, hopf):
        est = reduced_volume(hopf, [-1.0], mode="slab", eps=0.01, samples=20_000)
        assert est.value == 0.0 and est.empty_fiber

    def test_mode_agreement_ten_interior_points(self):
        # catalog-wide cross-validation at 10 grid points each
        for name in ["disc", "hopf", "weighted", "surface_product"]:
            model = catalog_get(name)
            for k, t in enumerate(np.linspace(0.25, 0.85, 10)):
                exact = reduced_volume(model, [t], mode="exact")
                slab = reduced_volume(model, [t], mode="slab", eps=0.03,
                                      samples=30_000, seed=100 + k)
                assert abs(slab.value - exact.value) < 3 * slab.sigma + 1e-9, (
                    name, t)


class TestVolumeTables:
    def test_hopf_table(self, hopf):
        table = vol_functions_on_grid(hopf, [[0.2], [0.5], [0.8]])
        t, vol, vol_red = table.as_arrays()
        assert np.allclose(vol, 1.0)
        assert np.allclose(vol_red, FOUR_PI_SQ * t[:, 0])

    def test_swap_table_carries_iota(self, swap_quotient):
        table = vol_functions_on_grid(swap_quotient, [[0.5]])
        row = table.rows[0]
        assert row.vol == pytest.approx(2.0)
        assert row.vol_red == pytest.approx(FOUR_PI_SQ * 0.5)
        assert row.iota == 2

    def test_surface_table(self, surface_product):
        table = vol_functions_on_grid(surface_product, [[0.3], [0.6]])
        _, vol, vol_red = table.as_arrays()
        assert np.allclose(vol, 3.0)
        assert np.allclose(vol_red, TWO_PI)

    def test_wall_point_flagged(self, hopf):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            table = vol_functions_on_grid(hopf, [[0.0], [0.5]])
        assert "wall" in table.rows[0].flags
        assert table.rows[1].flags == ""
