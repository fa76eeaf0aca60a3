import math

import numpy as np
import pytest
from scipy import integrate

from dhlab.catalog import catalog_get
from dhlab.models import TorusWeightModel
from dhlab.pushforward import (GridSpec, dh_exact_linear, dh_monte_carlo,
                               total_mass_check)

TWO_PI = 2.0 * math.pi
FOUR_PI_SQ = TWO_PI**2


def density_oracle_rank1(weights, t):
    """Independent oracle for the rank-1 pushforward density at level t:
    (2*pi)^n times the fiber volume, computed by direct quadrature of the
    nested integrals (no convolution machinery)."""
    n = len(weights)
    if n == 1:
        return TWO_PI / weights[0] if t > 0 else 0.0

    def fiber(level, remaining):
        if len(remaining) == 1:
            return 1.0 / remaining[0] if level >= 0 else 0.0
        a = remaining[0]
        hi = level / a
        if hi <= 0:
            return 0.0
        val, _ = integrate.quad(lambda u: fiber(level - a * u, remaining[1:]),
                                0.0, hi)
        return val

    return TWO_PI**n * fiber(t, list(weights))


class TestExactEngine:
    def test_disc_constant(self, disc):
        poly = dh_exact_linear(disc)
        assert poly(np.array([0.5])) == pytest.approx(density_oracle_rank1([1], 0.5))
        assert poly(np.array([-0.1])) == 0.0
        assert poly.breakpoints[0] == 0.0

    def test_hopf_linear(self, hopf):
        poly = dh_exact_linear(hopf)
        for t in [0.2, 0.5, 0.9]:
            assert poly(np.array([t])) == pytest.approx(
                density_oracle_rank1([1, 1], t), rel=1e-9)
            assert poly(np.array([t])) == pytest.approx(FOUR_PI_SQ * t)

    def test_weighted_slope(self, weighted):
        poly = dh_exact_linear(weighted)
        for t in [0.3, 0.8]:
            assert poly(np.array([t])) == pytest.approx(
                density_oracle_rank1([1, 2], t), rel=1e-9)
            assert poly(np.array([t])) == pytest.approx(FOUR_PI_SQ * t / 2.0)

    def test_cubic_from_three_weights(self):
        m = TorusWeightModel([[1, 1, 2]], window=[(0.0, 2.0)])
        poly = dh_exact_linear(m)
        for t in [0.5, 1.5]:
            assert poly(np.array([t])) == pytest.approx(
                density_oracle_rank1([1, 1, 2], t), rel=1e-7)

    def test_offset_shifts_support(self):
        m = TorusWeightModel([[1, 1]], offset=[0.25], window=[(0.25, 1.25)])
        poly = dh_exact_linear(m)
        assert poly(np.array([0.2])) == 0.0
        assert poly(np.array([0.75])) == pytest.approx(FOUR_PI_SQ * 0.5)

    def test_rank2_rejected(self, rank2):
        with pytest.raises(ValueError, match="rank-1"):
            dh_exact_linear(rank2)

    def test_mixed_signs_rejected(self):
        with pytest.raises(ValueError, match="mixed-sign"):
            dh_exact_linear(TorusWeightModel([[1, -1]]))

    def test_continuity_at_interior_breakpoints(self):
        # positive weights: density is C^(n-2); values agree across pieces
        m = TorusWeightModel([[1, 1, 1]], window=[(0.0, 3.0)])
        poly = dh_exact_linear(m)
        for b in poly.breakpoints[1:-1]:
            left = poly(np.array([b - 1e-9]))
            right = poly(np.array([b + 1e-9]))
            assert left == pytest.approx(right, abs=1e-6)

    def test_nonnegative_sampled(self, hopf):
        poly = dh_exact_linear(hopf)
        ts = np.linspace(0.0, 1.0, 100)
        assert np.all(poly(ts) >= -1e-12)


class TestMonteCarlo:
    def test_sphere_constant_density(self, sphere_density):
        dens = sphere_density.density
        sig = sphere_density.sigma_density
        ok = np.abs(dens - TWO_PI) < 3 * sig
        assert ok.mean() >= 0.95

    def test_hopf_linear_density(self, hopf_density, hopf):
        exact = dh_exact_linear(hopf)
        masses = exact.bin_masses(hopf_density.grid.edges(0))
        usable = hopf_density.usable()
        z = np.abs(hopf_density.mass - masses) / np.where(
            hopf_density.sigma_mass > 0, hopf_density.sigma_mass, 1.0)
        assert (z[usable] < 3).mean() >= 0.95

    def test_tent_density_shape(self, tent_density):
        # convolution oracle: density of z1 + z2 with both uniform pushforwards
        centers = tent_density.centers()[:, 0]
        expect = FOUR_PI_SQ * (2.0 - np.abs(centers))
        usable = tent_density.usable()
        z = np.abs(tent_density.density - expect) / np.where(
            tent_density.sigma_density > 0, tent_density.sigma_density, 1.0)
        assert (z[usable] < 3).mean() >= 0.95

    def test_exact_mc_agreement_all_rank1_catalog(self):
        for name in ["disc", "hopf", "weighted"]:
            model = catalog_get(name)
            grid = GridSpec.build([(0.1, 0.9)], 48)
            d = dh_monte_carlo(model, grid, 200_000, seed=3)
            exact = dh_exact_linear(model)
            masses = exact.bin_masses(grid.edges(0))
            usable = d.usable()
            z = np.abs(d.mass - masses) / np.where(d.sigma_mass > 0,
                                                   d.sigma_mass, 1.0)
            assert (z[usable] < 3).mean() >= 0.95, name

    def test_seed_reproducibility_bitwise(self, hopf):
        grid = GridSpec.build([(0.1, 1.0)], 64)
        a = dh_monte_carlo(hopf, grid, 50_000, seed=21)
        b = dh_monte_carlo(hopf, grid, 50_000, seed=21)
        assert np.array_equal(a.mass, b.mass)
        assert np.array_equal(a.sq_mass, b.sq_mass)

    def test_translation_equivariance(self):
        shift = 0.5
        base = TorusWeightModel([[1]], window=[(0.0, 1.0)])
        moved = TorusWeightModel([[1]], offset=[shift],
                                 window=[(shift, 1.0 + shift)])
        g0 = GridSpec.build([(0.0, 1.0)], 64)
        g1 = GridSpec.build([(shift, 1.0 + shift)], 64)
        d0 = dh_monte_carlo(base, g0, 100_000, seed=13)
        d1 = dh_monte_carlo(moved, g1, 100_000, seed=13)
        assert np.array_equal(d0.mass, d1.mass)

    def test_small_sample_count_rejected(self, disc):
        with pytest.raises(ValueError, match="10_000"):
            dh_monte_carlo(disc, GridSpec.build([(0.0, 1.0)], 8), 100, seed=0)

    def test_grid_outside_window_rejected(self, disc):
        with pytest.raises(ValueError, match="inside"):
            dh_monte_carlo(disc, GridSpec.build([(0.0, 2.0)], 8), 20_000, seed=0)

    def test_boundary_flags_near_window_face(self, hopf_density):
        flags = hopf_density.boundary_flags
        assert flags[-1] and flags[-2]
        assert not flags[10]


class TestTotalMass:
    def test_disc_total(self, disc):
        grid = GridSpec.build([(0.0, 1.0)], 64)
        d = dh_monte_carlo(disc, grid, 200_000, seed=5)
        assert d.total_mass == pytest.approx(TWO_PI, rel=2e-3)
        z, empty = total_mass_check(d, disc)
        assert abs(z) < 3 and not empty

    def test_sphere_total(self, sphere):
        grid = GridSpec.build([(-1.0, 1.0)], 64)
        d = dh_monte_carlo(sphere, grid, 200_000, seed=5)
        assert d.total_mass == pytest.approx(4.0 * math.pi, rel=5e-3)
        z, empty = total_mass_check(d, sphere)
        assert abs(z) < 3 and not empty

    def test_empty_grid_flagged(self):
        # the tent moment image is [-2, 2]; a grid beyond it gets no mass
        from dhlab.catalog import make_two_sphere_diagonal

        m = make_two_sphere_diagonal(window=[(-3.0, 3.0)])
        grid = GridSpec.build([(2.5, 3.0)], 8)
        d = dh_monte_carlo(m, grid, 20_000, seed=5)
        z, empty = total_mass_check(d, m)
        assert d.total_mass == 0.0
        assert empty and z == 0.0
