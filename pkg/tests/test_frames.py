import numpy as np
import pytest

from dhlab.catalog import catalog_get
from dhlab.frames import (FrameError, build_frames,
                          density_factorization_residual,
                          density_factorization_residuals, density_split_factors,
                          frames_batch, identity_report, orthogonality_report,
                          orthogonality_residuals)
from dhlab.models import TorusWeightModel
from dhlab.polynomials import PolynomialOnChart  # noqa: F401  (API surface)
from tests.test_polynomials import rand_unimodular


class TestFrameAssembly:
    def test_hopf_dimension_count(self, hopf):
        frame = build_frames(hopf, hopf.probe_points(1, seed=0)[0])
        assert frame.dims == (1, 2, 0, 1)

    def test_surface_product_dimension_count(self, surface_product):
        # dim X = 4, base dim m = 3, rank 1: reduced block is empty
        frame = build_frames(surface_product,
                             surface_product.probe_points(1, seed=0)[0])
        assert frame.dims == (1, 0, 2, 1)

    def test_rank2_wall_point_rejected(self, rank2):
        with pytest.raises(FrameError):
            build_frames(rank2, np.array([1.0, 0.0, 0.0, 0.0]))

    def test_frame_is_basis(self, weighted):
        frame = build_frames(weighted, weighted.probe_points(1, seed=1)[0])
        assert abs(frame.gram_determinant()) > 1e-6

    def test_lattice_pairing_is_identity(self, hopf):
        X = hopf.probe_points(200, seed=2)
        fb = frames_batch(hopf, X)
        pairing = np.einsum("nqd,njd->nqj", fb.dmu, fb.transverse)
        assert np.max(np.abs(pairing - np.eye(1))) < 1e-12


class TestOrthogonality:
    @pytest.mark.parametrize("name", ["disc", "hopf", "weighted", "rank2",
                                      "swap_quotient", "surface_product"])
    def test_analytic_models_below_1e10(self, name):
        model = catalog_get(name)
        res = orthogonality_residuals(model, model.probe_points(1000, seed=3))
        assert np.max(res, axis=0).max() < 1e-10

    def test_surface_leaf_block_sign(self, surface_product):
        X = surface_product.probe_points(50, seed=4)
        fb = frames_batch(surface_product, X)
        om_leaf = np.einsum("nid,nde,nje->nij", fb.leafwise, fb.omega, fb.leafwise)
        push = np.einsum("nld,nid->nil", fb.dleaf, fb.leafwise)
        pulled = np.einsum("nil,nlm,njm->nij", push, fb.leaf_form, push)
        assert np.max(np.abs(om_leaf + pulled)) < 1e-10

    def test_injected_error_detected(self, hopf):
        x = hopf.probe_points(1, seed=5)[0]
        frame = build_frames(hopf, x)
        rng = np.random.default_rng(0)
        frame.transverse = frame.transverse + 1e-3 * rng.normal(
            size=frame.transverse.shape)
        _, res_b, _ = orthogonality_report(hopf, frame)
        assert 1e-4 < res_b < 1e-2

    def test_delta_pairing_catalog(self):
        for name in ["disc", "hopf", "weighted", "rank2", "surface_product"]:
            model = catalog_get(name)
            X = model.probe_points(1000, seed=6)
            res = orthogonality_residuals(model, X)
            assert np.max(res[:, 1]) < 1e-12, name


class TestDensityFactorization:
    @pytest.mark.parametrize("name,tol", [
        ("disc", 1e-9), ("hopf", 1e-9), ("weighted", 1e-9),
        ("surface_product", 1e-9), ("sphere", 1e-7), ("tent", 1e-7),
    ])
    def test_residual_bounds(self, name, tol):
        model = catalog_get(name)
        X = model.probe_points(1000, seed=7)
        res = density_factorization_residuals(model, X)
        assert float(np.max(res)) < tol

    def test_single_point_api(self, hopf):
        x = hopf.probe_points(1, seed=8)[0]
        assert density_factorization_residual(hopf, x) < 1e-12

    def test_invariant_under_reduced_block_rechoice(self, hopf):
        X = hopf.probe_points(100, seed=9)
        fb = frames_batch(hopf, X)
        rng = np.random.default_rng(1)
        U = rand_unimodular(rng, fb.reduced.shape[1]).astype(float)
        fb.reduced = np.einsum("ij,njd->nid", U, fb.reduced)
        fac = density_split_factors(fb, hopf)
        res = np.abs(fac["left"] - fac["right"]) / fac["left"]
        assert np.max(res) < 1e-9

    def test_invariant_under_lattice_rechoice(self, weighted):
        X = weighted.probe_points(100, seed=10)
        base = density_factorization_residuals(model=weighted, X=X)
        G = np.array([[-1.0]])  # GL(1, Z)
        changed = density_factorization_residuals(weighted, X,
                                                  lattice=G @ weighted.lattice_basis)
        assert np.max(np.abs(base - changed)) < 1e-9

    def test_lattice_rechoice_rank2(self, rank2):
        X = rank2.probe_points(100, seed=11)
        rng = np.random.default_rng(2)
        G = rand_unimodular(rng, 2).astype(float)
        res = density_factorization_residuals(rank2, X,
                                              lattice=G @ rank2.lattice_basis)
        assert np.max(res) < 1e-9

    def test_scaled_lattice_consistent(self):
        # doubling the lattice basis halves the Haar factor and doubles the
        # covolume factor; the split must still hold exactly
        model = TorusWeightModel([[1, 1]], window=[(0.0, 1.0)],
                                 lattice_basis=[[2.0]])
        X = model.probe_points(200, seed=12)
        res = density_factorization_residuals(model, X)
        assert np.max(res) < 1e-9


class TestReport:
    def test_identity_report_fields(self, hopf):
        payload = identity_report(hopf, hopf.probe_points(64, seed=13))
        assert payload["frame_dims"] == [1, 2, 0, 1]
        assert payload["max_factorization_residual"] < 1e-9
        assert len(payload["worst_point"]) == hopf.dim
        assert set(payload["factorization_quantiles"]) == {"0.5", "0.9", "0.99", "1.0"}
