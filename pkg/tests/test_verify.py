import math
from unittest import mock

import numpy as np
import pytest

from dhlab.catalog import catalog_entry, catalog_get
from dhlab.pushforward import GridSpec
from dhlab.verify import (is_generically_free, verify_free_case,
                          verify_product_identity)

TWO_PI = 2.0 * math.pi
FOUR_PI_SQ = TWO_PI**2


def default_grid(name):
    e = catalog_entry(name)
    return GridSpec.build(e.default_grid, e.default_bins)


class TestProductIdentity:
    def test_hopf(self, hopf):
        rep = verify_product_identity(hopf, default_grid("hopf"),
                                      samples=300_000, seed=7)
        assert rep.verdict
        centers = rep.centers[:, 0]
        assert np.allclose(rep.product, FOUR_PI_SQ * centers)
        assert rep.affine_density == 1.0

    def test_swap_quotient_assembly(self, swap_quotient):
        rep = verify_product_identity(swap_quotient, default_grid("swap_quotient"),
                                      samples=300_000, seed=7)
        assert rep.verdict
        assert np.allclose(rep.vol, 2.0)
        assert rep.affine_density == 0.5
        assert np.allclose(rep.vol_red, FOUR_PI_SQ * rep.centers[:, 0])

    def test_surface_product(self, surface_product):
        rep = verify_product_identity(surface_product,
                                      default_grid("surface_product"),
                                      samples=300_000, seed=7)
        assert rep.verdict
        assert np.allclose(rep.product, 3.0 * TWO_PI)

    def test_rank2(self, rank2):
        rep = verify_product_identity(rank2, default_grid("rank2"),
                                      samples=600_000, seed=7)
        assert rep.verdict
        assert np.allclose(rep.product, FOUR_PI_SQ)

    def test_sphere_with_slab_product_side(self, sphere):
        rep = verify_product_identity(sphere, GridSpec.build([(-0.9, 0.9)], 16),
                                      samples=300_000, seed=7,
                                      slab_eps=0.05, slab_samples=60_000)
        assert rep.verdict
        assert np.all(rep.product_sigma[rep.usable] > 0)

    def test_iota_toggle_invariance(self, hopf, swap_quotient):
        grid = default_grid("hopf")
        rep1 = verify_product_identity(hopf, grid, samples=100_000, seed=5)
        rep2 = verify_product_identity(swap_quotient, grid, samples=100_000, seed=5)
        # vol and affine density change; the assembled product does not
        assert np.allclose(rep1.vol * rep1.affine_density, 1.0)
        assert np.allclose(rep2.vol * rep2.affine_density, 1.0)
        rel = np.abs(rep1.product - rep2.product) / np.abs(rep1.product)
        assert np.max(rel) < 1e-12
        assert np.array_equal(rep1.dh_density, rep2.dh_density)


class TestFreeCase:
    def test_bin_identical_to_product_identity(self, surface_product):
        grid = default_grid("surface_product")
        a = verify_product_identity(surface_product, grid, samples=150_000, seed=7)
        b = verify_free_case(surface_product, grid, samples=150_000, seed=7)
        assert np.array_equal(a.dh_density, b.dh_density)
        assert np.array_equal(a.product, b.product)
        assert np.array_equal(a.z_score, b.z_score)
        assert b.label == "free-case"

    def test_quotient_rejected(self, swap_quotient):
        with pytest.raises(ValueError, match="not free"):
            verify_free_case(swap_quotient, default_grid("swap_quotient"),
                             samples=20_000)

    def test_classical_disc_accepted(self, disc):
        rep = verify_free_case(disc, default_grid("disc"), samples=150_000, seed=7)
        assert rep.verdict
        assert np.allclose(rep.product, TWO_PI)

    def test_freeness_predicate(self, disc, hopf, swap_quotient, sphere):
        assert is_generically_free(disc)
        assert is_generically_free(hopf)
        assert not is_generically_free(swap_quotient)
        assert is_generically_free(sphere)


class TestPipelineDisjointness:
    def test_product_side_never_samples_the_pushforward(self, hopf, hopf_density):
        """The right-hand side may not call into the pushforward module."""
        import dhlab.verify as verify_mod

        with mock.patch.object(verify_mod, "dh_monte_carlo",
                               side_effect=AssertionError("pushforward touched")):
            rep = verify_product_identity(hopf, density=hopf_density, seed=7)
        assert rep.verdict

    def test_reduction_does_not_import_pushforward(self):
        import dhlab.reduction as reduction

        assert not any("pushforward" in name for name in dir(reduction))
        with open(reduction.__file__) as fh:
            source = fh.read()
        assert "pushforward" not in source.replace(
            "the pushforward module", "").replace("pushforward density", "")


class TestVerdictStability:
    def test_ten_seeds_weight_models(self):
        for name in ["disc", "hopf", "weighted", "swap_quotient",
                     "surface_product", "surface_product_a1",
                     "surface_product_a2", "rank2"]:
            model = catalog_get(name)
            grid = default_grid(name)
            verdicts = {verify_product_identity(model, grid, samples=1_000_000,
                                                seed=s).verdict
                        for s in range(10)}
            assert verdicts == {True}, name

    def test_ten_seeds_chart_models(self):
        # 32 bins so the 95% cutoff tolerates a single 3-sigma slab outlier
        for name in ["sphere", "tent"]:
            model = catalog_get(name)
            e = catalog_entry(name)
            grid = GridSpec.build(e.default_grid, 32)
            verdicts = {verify_product_identity(
                model, grid, samples=1_000_000, seed=s,
                slab_eps=0.05, slab_samples=50_000).verdict for s in range(10)}
            assert verdicts == {True}, name
