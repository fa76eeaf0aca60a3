"""Pointwise frame decompositions and the density split check.

At a locally free point the tangent space splits into four blocks:

* ``isotropy``   -- the torus generator fields dual to the lattice basis,
* ``reduced``    -- a complement of the isotropy inside ker(dmu),
* ``leafwise``   -- action directions covering the leaf of the base,
* ``transverse`` -- vectors pairing to the identity with the pulled-back
  lattice covectors.

The Liouville density evaluated on the assembled frame must equal the
product of a Haar factor on the isotropy block, the reduced symplectic
volume on the reduced block, the leaf symplectic volume of the pushed
leafwise block and the lattice covolume of the pushed transverse block.
All four factors and both sides are computed by plain determinants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FrameError(RuntimeError):
    """Point is not locally free (or the frame assembly degenerated)."""


@dataclass
class FrameDecomposition:
    point: np.ndarray
    isotropy: np.ndarray      # (q, dim)
    reduced: np.ndarray       # (dim - m - q, dim)
    leafwise: np.ndarray      # (leaf_dim, dim)
    transverse: np.ndarray    # (q, dim)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.isotropy.shape[0], self.reduced.shape[0],
                self.leafwise.shape[0], self.transverse.shape[0])

    def full_frame(self) -> np.ndarray:
        return np.concatenate(
            [self.isotropy, self.reduced, self.leafwise, self.transverse], axis=0)

    def gram_determinant(self) -> float:
        f = self.full_frame()
        return float(np.linalg.det(f @ f.T))


@dataclass
class FrameBatch:
    points: np.ndarray
    isotropy: np.ndarray      # (N, q, d)
    reduced: np.ndarray       # (N, k, d)
    leafwise: np.ndarray      # (N, l, d)
    transverse: np.ndarray    # (N, q, d)
    omega: np.ndarray         # (N, d, d)
    dmu: np.ndarray           # (N, q, d) transverse moment jacobian
    dleaf: np.ndarray         # (N, l, d)
    leaf_form: np.ndarray     # (N, l, l)
    lattice: np.ndarray       # (q, q)

    def __len__(self):
        return self.points.shape[0]

    def single(self, i: int) -> FrameDecomposition:
        return FrameDecomposition(
            point=self.points[i],
            isotropy=self.isotropy[i],
            reduced=self.reduced[i],
            leafwise=self.leafwise[i],
            transverse=self.transverse[i],
        )


def frames_batch(model, X: np.ndarray, lattice=None) -> FrameBatch:
    """Build adapted frames at a batch of points (vectorised linear algebra)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, d = X.shape
    q = model.rank
    L = np.asarray(model.lattice_basis if lattice is None else lattice, dtype=float)
    omega = np.ascontiguousarray(model.omega_matrix(X))
    act = model.action_rows(X)
    iso = np.einsum("ij,njd->nid", L, act)
    dmu = model.moment_jacobian(X)
    dleaf = model.leaf_moment_jacobian(X)
    leafw = model.leaf_action_rows(X)
    lform = model.leaf_form(X)
    m = q + dleaf.shape[1]
    k = d - m - q
    if k < 0:
        raise FrameError("tangent dimension too small for the frame split")

    dmu_full = np.concatenate([dmu, dleaf], axis=1)
    # kernel of the full moment differential, batched SVD
    _, svals, vt = np.linalg.svd(dmu_full)
    tol = np.maximum(svals[:, :1], 1.0) * 1e-10
    if np.any(np.sum(svals > tol, axis=1) != m):
        raise FrameError("moment differential drops rank: point not locally free")
    kernel = vt[:, m:, :]                     # (N, d - m, d)

    # reduced block: kernel directions orthogonal to the isotropy span
    if k > 0:
        proj = kernel - _project_onto(kernel, iso)
        _, ps, pvt = np.linalg.svd(proj)
        if np.any(ps[:, k - 1] < 1e-10):
            raise FrameError("isotropy directions degenerate inside ker(dmu)")
        reduced = pvt[:, :k, :]
    else:
        reduced = np.zeros((N, 0, d))

    # transverse block: omega(iso_i, w_j) = delta_ij, omega(reduced/leaf, w) = 0
    constraints = np.concatenate(
        [np.einsum("nid,nde->nie", iso, omega),
         np.einsum("nid,nde->nie", reduced, omega),
         np.einsum("nid,nde->nie", leafw, omega)], axis=1)   # (N, d - q, d)
    rhs = np.zeros((N, d - q, q))
    rhs[:, :q, :] = np.eye(q)
    pinv = np.linalg.pinv(constraints)
    transverse = np.swapaxes(pinv @ rhs, 1, 2)               # (N, q, d)

    return FrameBatch(points=X, isotropy=iso, reduced=reduced, leafwise=leafw,
                      transverse=transverse, omega=omega, dmu=dmu, dleaf=dleaf,
                      leaf_form=lform, lattice=L)


def _project_onto(vecs, basis):
    """Project batched row vectors onto the row span of ``basis``."""
    gram = basis @ np.swapaxes(basis, 1, 2)
    coef = np.linalg.solve(gram, basis @ np.swapaxes(vecs, 1, 2))
    return np.swapaxes(coef, 1, 2) @ basis


def build_frames(model, x, lattice=None) -> FrameDecomposition:
    """Adapted frame at a single point; raises FrameError at rank drops."""
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    batch = frames_batch(model, X, lattice=lattice)
    frame = batch.single(0)
    if abs(frame.gram_determinant()) < 1e-18:
        raise FrameError("assembled frame is not a basis")
    return frame


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def orthogonality_residuals(model, X, lattice=None) -> np.ndarray:
    """Per-point residual triple (a, b, c):

    a. pairing of the isotropy generators against isotropy+reduced+leafwise,
    b. deviation of the isotropy/transverse pairing from the identity,
    c. deviation of omega on the leafwise block from minus the pulled-back
       leaf form.
    """
    fb = frames_batch(model, np.atleast_2d(np.asarray(X, dtype=float)), lattice)
    return _orthogonality_from_batch(fb)


def _orthogonality_from_batch(fb: FrameBatch) -> np.ndarray:
    N = len(fb)
    ker_block = np.concatenate([fb.isotropy, fb.reduced, fb.leafwise], axis=1)
    pair_a = np.einsum("nid,nde,nje->nij", fb.isotropy, fb.omega, ker_block)
    res_a = np.max(np.abs(pair_a).reshape(N, -1), axis=1) if pair_a.size else np.zeros(N)
    pair_b = np.einsum("nid,nde,nje->nij", fb.isotropy, fb.omega, fb.transverse)
    res_b = np.max(np.abs(pair_b - np.eye(fb.isotropy.shape[1])).reshape(N, -1), axis=1)
    if fb.leafwise.shape[1]:
        om_leaf = np.einsum("nid,nde,nje->nij", fb.leafwise, fb.omega, fb.leafwise)
        push = np.einsum("nld,nid->nil", fb.dleaf, fb.leafwise)
        pulled = np.einsum("nil,nlm,njm->nij", push, fb.leaf_form, push)
        res_c = np.max(np.abs(om_leaf + pulled).reshape(N, -1), axis=1)
    else:
        res_c = np.zeros(N)
    return np.stack([res_a, res_b, res_c], axis=1)


def orthogonality_report(model, frame_or_x, lattice=None) -> tuple[float, float, float]:
    """Residual triple at one point (accepts a point or a FrameDecomposition)."""
    if isinstance(frame_or_x, FrameDecomposition):
        fb = _batch_from_frame(model, frame_or_x, lattice)
    else:
        fb = frames_batch(model, np.atleast_2d(np.asarray(frame_or_x, dtype=float)),
                          lattice)
    res = _orthogonality_from_batch(fb)
    return tuple(float(v) for v in res[0])


def _batch_from_frame(model, frame: FrameDecomposition, lattice=None) -> FrameBatch:
    X = frame.point[None, :]
    L = np.asarray(model.lattice_basis if lattice is None else lattice, dtype=float)
    return FrameBatch(
        points=X,
        isotropy=frame.isotropy[None],
        reduced=frame.reduced[None],
        leafwise=frame.leafwise[None],
        transverse=frame.transverse[None],
        omega=np.ascontiguousarray(model.omega_matrix(X)),
        dmu=model.moment_jacobian(X),
        dleaf=model.leaf_moment_jacobian(X),
        leaf_form=model.leaf_form(X),
        lattice=L,
    )


def density_split_factors(fb: FrameBatch, model) -> dict[str, np.ndarray]:
    """Both sides of the density split, evaluated on the batch frames.

    left: Liouville density on the full frame.  right: product of the Haar
    factor (determinant of the isotropy block against the lattice-dual
    generators), the reduced block's symplectic volume, the pushed leafwise
    volume and the lattice covolume on the pushed transverse block.
    """
    N = len(fb)
    full = np.concatenate(
        [fb.isotropy, fb.reduced, fb.leafwise, fb.transverse], axis=1)
    gram = np.einsum("nid,nde,nje->nij", full, fb.omega, full)
    left = np.sqrt(np.abs(np.linalg.det(gram)))

    # Haar factor: coefficients of the isotropy block in the model's
    # lattice-dual generator frame
    gen = np.einsum("ij,njd->nid", fb.lattice, model.action_rows(fb.points))
    gram_gen = gen @ np.swapaxes(gen, 1, 2)
    coef = np.linalg.solve(gram_gen, gen @ np.swapaxes(fb.isotropy, 1, 2))
    haar = np.abs(np.linalg.det(np.swapaxes(coef, 1, 2)))

    if fb.reduced.shape[1]:
        gram_red = np.einsum("nid,nde,nje->nij", fb.reduced, fb.omega, fb.reduced)
        red = np.sqrt(np.abs(np.linalg.det(gram_red)))
    else:
        red = np.ones(N)

    if fb.leafwise.shape[1]:
        push = np.einsum("nld,nid->nil", fb.dleaf, fb.leafwise)
        gram_leaf = np.einsum("nil,nlm,njm->nij", push, fb.leaf_form, push)
        leaf = np.sqrt(np.abs(np.linalg.det(gram_leaf)))
    else:
        leaf = np.ones(N)

    push_t = np.einsum("nqd,njd->njq", fb.dmu, fb.transverse)  # (N, q, q)
    lam = np.einsum("ij,njq->niq", fb.lattice, np.swapaxes(push_t, 1, 2))
    lattice_factor = np.abs(np.linalg.det(np.swapaxes(lam, 1, 2)))

    right = haar * red * leaf * lattice_factor
    return {"left": left, "right": right, "haar": haar, "reduced": red,
            "leaf": leaf, "lattice": lattice_factor}


def density_factorization_residuals(model, X, lattice=None) -> np.ndarray:
    """Relative residual |left - right| / left per point."""
    fb = frames_batch(model, np.atleast_2d(np.asarray(X, dtype=float)), lattice)
    fac = density_split_factors(fb, model)
    left = fac["left"]
    if np.any(left < 1e-300):
        raise FrameError("degenerate frame: Liouville density vanished")
    return np.abs(left - fac["right"]) / left


def density_factorization_residual(model, x, lattice=None) -> float:
    """Single-point relative residual of the density split."""
    res = density_factorization_residuals(model, np.asarray(x, dtype=float)[None, :],
                                          lattice)
    return float(res[0])


def identity_report(model, points: np.ndarray, lattice=None) -> dict:
    """Aggregate report over a batch: residual quantiles, worst point, dims."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    fb = frames_batch(model, X, lattice)
    ortho = _orthogonality_from_batch(fb)
    resid = density_factorization_residuals(model, X, lattice)
    worst = int(np.argmax(resid))
    qs = [0.5, 0.9, 0.99, 1.0]
    return {
        "model": model.name,
        "points": int(X.shape[0]),
        "frame_dims": list(fb.single(0).dims),
        "factorization_quantiles": {str(p): float(np.quantile(resid, p)) for p in qs},
        "max_factorization_residual": float(resid[worst]),
        "worst_point": [float(v) for v in X[worst]],
        "orthogonality_max": [float(v) for v in ortho.max(axis=0)],
    }
