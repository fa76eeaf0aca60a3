"""Concrete Hamiltonian torus-type action models and pointwise geometry.

Four model families are supported:

* :class:`TorusWeightModel` -- linear torus actions on C^n given by an
  integer weight matrix, moment map ``t = W u + offset`` with
  ``u_j = |z_j|^2 / 2``.
* :class:`ChartModel` -- a single coordinate chart with user-supplied
  symplectic form, moment map and action fields (the sphere and the
  two-sphere diagonal model live here).  Moment derivatives are taken by
  central finite differences.
* :class:`ProductModel` -- a surface factor (torus of area A, acted on by
  its pair groupoid) times a weight model; the leaves of the base are the
  surfaces, so orbit volumes become A.
* :class:`SymmetryQuotient` -- a weight model with its acting groupoid
  enlarged by a finite group of signed coordinate permutations; the space
  itself is unchanged but the isotropy component count iota grows.

All pointwise evaluators accept batches of shape (N, dim).  Sampling is
importance sampling from the Liouville measure restricted to the moment
window, deterministic per (seed, worker count).
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import polytope
from .smith import invariant_factors, smith_normal_form

TWO_PI = 2.0 * math.pi
PFAFFIAN_FLOOR = 1e-12


class DomainError(ValueError):
    """Point outside the model's chart domain."""


class DegenerateFormError(RuntimeError):
    """Symplectic form (numerically) degenerate at the requested point."""


class EmptyRegionError(RuntimeError):
    """Sampler found an empty moment-window preimage."""


class UnsupportedModelError(RuntimeError):
    """Operation not defined for this model family."""


class ModelValidationError(RuntimeError):
    """Model failed validation; carries the offending report."""

    def __init__(self, report):
        self.report = report
        super().__init__("model validation failed: " + "; ".join(report.failures))


def _standard_block(npairs: int, scale_first: float | None = None) -> np.ndarray:
    """Block-diagonal form with 2x2 blocks [[0,-1],[1,0]] (times scale)."""
    d = 2 * npairs
    omega = np.zeros((d, d))
    for j in range(npairs):
        s = 1.0
        if j == 0 and scale_first is not None:
            s = scale_first
        omega[2 * j, 2 * j + 1] = -s
        omega[2 * j + 1, 2 * j] = s
    return omega


def _pfaffian_abs(omega: np.ndarray) -> np.ndarray:
    det = np.linalg.det(omega)
    return np.sqrt(np.abs(det))


@dataclass
class SampleBatch:
    """Liouville-weighted samples restricted to the moment window."""

    points: np.ndarray
    weights: np.ndarray
    moments: np.ndarray
    proposals: int
    seed: int
    workers: int

    @property
    def accepted(self) -> int:
        return self.points.shape[0]

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def mass_sigma(self) -> float:
        s1 = np.sum(self.weights)
        s2 = np.sum(self.weights**2)
        var = max(0.0, float(s2 - s1 * s1 / self.proposals))
        return math.sqrt(var)


def _worker_rng(seed: int, worker: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(worker),))
    return np.random.Generator(np.random.Philox(ss))


def _split_counts(total: int, workers: int) -> list[int]:
    base = total // workers
    rem = total % workers
    return [base + (1 if i < rem else 0) for i in range(workers)]


class _ModelBase:
    """Shared surface for all model families (batched evaluators)."""

    name: str = "model"
    dim: int = 0
    rank: int = 0
    leaf_dim: int = 0
    window: np.ndarray
    lattice_basis: np.ndarray
    iota: int = 1

    @property
    def base_dim(self) -> int:
        """Dimension of the base manifold the moment map lands in."""
        return self.rank + self.leaf_dim

    # -- pointwise geometry (override per family) -------------------------
    def omega_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def moment_map(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def moment_jacobian(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def action_rows(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def leaf_moment_jacobian(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        return np.zeros((n, 0, self.dim))

    def leaf_action_rows(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        return np.zeros((n, 0, self.dim))

    def leaf_form(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        return np.zeros((n, 0, 0))

    def liouville_batch(self, X: np.ndarray) -> np.ndarray:
        return _pfaffian_abs(self.omega_matrix(X))

    def in_domain(self, X: np.ndarray) -> np.ndarray:
        return np.ones(X.shape[0], dtype=bool)

    def probe_points(self, count: int, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def sample(self, count: int, seed: int, workers: int = 1,
               window: np.ndarray | None = None) -> SampleBatch:
        raise UnsupportedModelError(f"{self.name}: sampling not supported")

    # -- conveniences ------------------------------------------------------
    def _check_domain(self, X: np.ndarray):
        ok = self.in_domain(X)
        if not np.all(ok):
            bad = X[~ok][0]
            raise DomainError(f"point {bad} outside domain of model '{self.name}'")

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        X = np.asarray(x, dtype=float)
        if X.ndim == 1:
            return X[None, :], True
        return X, False


class TorusWeightModel(_ModelBase):
    """Linear torus action on C^n with integer weight matrix W (q x n)."""

    kind = "torus_weight"

    def __init__(self, weights, offset=None, window=None, lattice_basis=None,
                 iota: int = 1, name: str = "torus_weight"):
        W = np.asarray(weights, dtype=np.int64)
        if W.ndim != 2:
            raise ValueError("weight matrix must be 2-dimensional")
        self.W = W
        self.rank, self.n = W.shape
        if self.rank > self.n:
            raise ValueError("torus rank exceeds complex dimension")
        self.dim = 2 * self.n
        self.leaf_dim = 0
        self.offset = np.zeros(self.rank) if offset is None else np.asarray(offset, dtype=float)
        if window is None:
            window = [(0.0, 1.0)] * self.rank
        self.window = np.asarray(window, dtype=float).reshape(self.rank, 2)
        self.lattice_basis = (np.eye(self.rank) if lattice_basis is None
                              else np.asarray(lattice_basis, dtype=float))
        self.iota = int(iota)
        self.name = name
        self._omega = _standard_block(self.n)
        self._ubox_cache: dict[bytes, np.ndarray] = {}

    # geometry ------------------------------------------------------------
    def omega_matrix(self, X):
        return np.broadcast_to(self._omega, (X.shape[0],) + self._omega.shape)

    def action_coords(self, X):
        """u_j = |z_j|^2 / 2 for each complex coordinate."""
        return 0.5 * (X[:, 0::2] ** 2 + X[:, 1::2] ** 2)

    def moment_map(self, X):
        return self.action_coords(X) @ self.W.T.astype(float) + self.offset

    def moment_jacobian(self, X):
        N = X.shape[0]
        pairs = X.reshape(N, self.n, 2)
        J = np.zeros((N, self.rank, self.n, 2))
        J[:] = self.W[None, :, :, None] * pairs[:, None, :, :]
        return J.reshape(N, self.rank, self.dim)

    def action_rows(self, X):
        N = X.shape[0]
        rot = np.empty((N, self.n, 2))
        rot[:, :, 0] = -X[:, 1::2]
        rot[:, :, 1] = X[:, 0::2]
        A = self.W[None, :, :, None] * rot[:, None, :, :]
        return A.reshape(N, self.rank, self.dim)

    def liouville_batch(self, X):
        return np.ones(X.shape[0])

    def probe_points(self, count, seed=0):
        rng = _worker_rng(seed, 0)
        X = rng.normal(size=(count, self.dim))
        radii = np.sqrt(X[:, 0::2] ** 2 + X[:, 1::2] ** 2)
        # keep probes away from the non-locally-free coordinate planes
        X[:, 0::2] += np.where(radii < 0.2, 0.5, 0.0)
        return X

    # sampling --------------------------------------------------------------
    def action_box(self, window=None) -> np.ndarray:
        """Bounding box [0, u_max] of the window preimage in action coords."""
        window = self.window if window is None else np.asarray(window, dtype=float)
        key = window.tobytes()
        if key not in self._ubox_cache:
            self._ubox_cache[key] = self._compute_action_box(window)
        return self._ubox_cache[key]

    def _compute_action_box(self, window) -> np.ndarray:
        n, q = self.n, self.rank
        W = [[Fraction(int(w)) for w in row] for row in self.W]
        rows: list[list[Fraction]] = []
        rhs: list[Fraction] = []
        for j in range(n):
            e = [Fraction(0)] * n
            e[j] = Fraction(-1)
            rows.append(e)
            rhs.append(Fraction(0))
        for i in range(q):
            lo = Fraction(window[i, 0] - self.offset[i])
            hi = Fraction(window[i, 1] - self.offset[i])
            rows.append(W[i])
            rhs.append(hi)
            rows.append([-w for w in W[i]])
            rhs.append(-lo)
        if not polytope.recession_is_trivial(rows):
            raise UnsupportedModelError(
                f"{self.name}: moment window preimage is unbounded "
                "(moment map not proper over the window)")
        verts = polytope.enumerate_vertices(rows, rhs)
        if not verts:
            raise EmptyRegionError(f"{self.name}: moment window preimage is empty")
        arr = polytope.vertices_as_array(verts)
        return arr.max(axis=0)

    def sample(self, count, seed, workers=1, window=None):
        return _sample_weight_like(self, count, seed, workers, window)

    # torus combinatorics ----------------------------------------------------
    def smith_invariants(self) -> list[int]:
        return invariant_factors(self.W)

    def adapted_change(self):
        """(U, V) unimodular with U @ W @ V = [I_q | 0] (effective models)."""
        D, U, V = smith_normal_form(self.W)
        if any(int(D[i, i]) != 1 for i in range(self.rank)):
            raise UnsupportedModelError(
                f"{self.name}: action is not effective (invariant factors "
                f"{self.smith_invariants()})")
        return U, V


def _sample_weight_like(model, count, seed, workers, window,
                        surface_pairs: int = 0, density_scale: float = 1.0):
    """Shared sampler for weight models and their surface products.

    Draw order per worker is fixed (action coords, then angles, then
    surface coords) so that streams are reproducible bit for bit.
    """
    base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
    count = int(count)
    if count < 1:
        raise ValueError("sample count must be >= 1")
    win = base.window if window is None else np.asarray(window, dtype=float)
    umax = base.action_box(win)
    box_vol = float(np.prod(umax))
    if box_vol == 0.0:
        raise EmptyRegionError(f"{model.name}: moment window preimage has zero volume")
    n = base.n
    scale = density_scale * box_vol * TWO_PI**n / count
    lo = win[:, 0]
    hi = win[:, 1]
    Wf = base.W.T.astype(float)

    def run_worker(args):
        wk, c = args
        if c == 0:
            return (np.zeros((0, model.dim)), np.zeros(0), np.zeros((0, base.rank)))
        rng = _worker_rng(seed, wk)
        u = rng.random((c, n)) * umax
        theta = rng.random((c, n)) * TWO_PI
        surf = rng.random((c, 2 * surface_pairs)) if surface_pairs else None
        t = u @ Wf + base.offset
        ok = np.all((t >= lo) & (t <= hi), axis=1)
        u, theta, t = u[ok], theta[ok], t[ok]
        r = np.sqrt(2.0 * u)
        pts = np.empty((u.shape[0], model.dim))
        col0 = 2 * surface_pairs
        pts[:, col0::2] = r * np.cos(theta)
        pts[:, col0 + 1::2] = r * np.sin(theta)
        if surface_pairs:
            pts[:, :col0] = surf[ok]
        w = np.full(u.shape[0], scale)
        return pts, w, t

    jobs = list(enumerate(_split_counts(count, max(1, int(workers)))))
    if len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(run_worker, jobs))
    else:
        parts = [run_worker(jobs[0])]
    points = np.concatenate([p[0] for p in parts])
    weights = np.concatenate([p[1] for p in parts])
    moments = np.concatenate([p[2] for p in parts])
    if points.shape[0] == 0 and count >= 1000:
        raise EmptyRegionError(
            f"{model.name}: no samples accepted in {count} proposals")
    return SampleBatch(points, weights, moments, count, int(seed), int(workers))


class ChartModel(_ModelBase):
    """Single-chart model given by explicit evaluation callbacks.

    ``omega`` may be a constant matrix or a callback ``X -> (N, d, d)``.
    Moment derivatives use central differences with step
    ``fd_rel * (domain width)`` per axis.
    """

    kind = "chart"

    def __init__(self, dim, domain, moment, action, omega, rank=1,
                 periodic=None, window=None, lattice_basis=None, iota=1,
                 name="chart", fd_rel=1e-5):
        self.dim = int(dim)
        self.domain = np.asarray(domain, dtype=float).reshape(self.dim, 2)
        self.periodic = (np.zeros(self.dim, dtype=bool) if periodic is None
                         else np.asarray(periodic, dtype=bool))
        self.rank = int(rank)
        self.leaf_dim = 0
        self._moment_fn = moment
        self._action_fn = action
        self._omega = omega
        self.window = (self.domain[-self.rank:] if window is None
                       else np.asarray(window, dtype=float).reshape(self.rank, 2))
        self.lattice_basis = (np.eye(self.rank) if lattice_basis is None
                              else np.asarray(lattice_basis, dtype=float))
        self.iota = int(iota)
        self.name = name
        self.fd_rel = float(fd_rel)

    def omega_matrix(self, X):
        if callable(self._omega):
            return np.asarray(self._omega(X), dtype=float)
        om = np.asarray(self._omega, dtype=float)
        return np.broadcast_to(om, (X.shape[0],) + om.shape)

    def moment_map(self, X):
        return np.asarray(self._moment_fn(X), dtype=float).reshape(X.shape[0], self.rank)

    def moment_jacobian(self, X):
        N = X.shape[0]
        J = np.empty((N, self.rank, self.dim))
        widths = self.domain[:, 1] - self.domain[:, 0]
        for j in range(self.dim):
            h = self.fd_rel * widths[j]
            step = np.zeros(self.dim)
            step[j] = h
            J[:, :, j] = (self.moment_map(X + step) - self.moment_map(X - step)) / (2 * h)
        return J

    def action_rows(self, X):
        return np.asarray(self._action_fn(X), dtype=float).reshape(
            X.shape[0], self.rank, self.dim)

    def in_domain(self, X):
        lo = self.domain[:, 0]
        hi = self.domain[:, 1]
        free = self.periodic  # periodic axes wrap, no domain restriction
        ok = (X >= lo - 1e-12) & (X <= hi + 1e-12) | free
        return np.all(ok, axis=1)

    def probe_points(self, count, seed=0):
        rng = _worker_rng(seed, 0)
        lo = self.domain[:, 0]
        hi = self.domain[:, 1]
        margin = 0.05 * (hi - lo)
        return lo + margin + rng.random((count, self.dim)) * (hi - lo - 2 * margin)

    def sample(self, count, seed, workers=1, window=None):
        count = int(count)
        if count < 1:
            raise ValueError("sample count must be >= 1")
        win = self.window if window is None else np.asarray(window, dtype=float)
        lo = self.domain[:, 0]
        hi = self.domain[:, 1]
        box_vol = float(np.prod(hi - lo))
        wlo, whi = win[:, 0], win[:, 1]

        def run_worker(args):
            wk, c = args
            if c == 0:
                return (np.zeros((0, self.dim)), np.zeros(0), np.zeros((0, self.rank)))
            rng = _worker_rng(seed, wk)
            X = lo + rng.random((c, self.dim)) * (hi - lo)
            t = self.moment_map(X)
            ok = np.all((t >= wlo) & (t <= whi), axis=1)
            X, t = X[ok], t[ok]
            w = self.liouville_batch(X) * (box_vol / count)
            return X, w, t

        jobs = list(enumerate(_split_counts(count, max(1, int(workers)))))
        if len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
                parts = list(pool.map(run_worker, jobs))
        else:
            parts = [run_worker(jobs[0])]
        points = np.concatenate([p[0] for p in parts])
        weights = np.concatenate([p[1] for p in parts])
        moments = np.concatenate([p[2] for p in parts])
        if points.shape[0] == 0 and count >= 1000:
            raise EmptyRegionError(f"{self.name}: no samples accepted in {count} proposals")
        return SampleBatch(points, weights, moments, count, int(seed), int(workers))


@dataclass
class SurfaceFactor:
    """Flat torus surface of area A carrying the constant form A dx^dy.

    Standalone it is only a 2-d symplectic chart (the pair-groupoid factor);
    combined with a weight model via :class:`ProductModel` it contributes
    positive-dimensional leaves of volume A.
    """

    area: float
    name: str = "surface"

    def __post_init__(self):
        if self.area <= 0:
            raise ValueError("surface area must be positive")

    kind = "surface"
    dim = 2
    rank = 0
    leaf_dim = 0
    iota = 1

    @property
    def domain(self):
        return np.array([[0.0, 1.0], [0.0, 1.0]])

    def omega_matrix(self, X):
        om = self.area * np.array([[0.0, -1.0], [1.0, 0.0]])
        return np.broadcast_to(om, (X.shape[0], 2, 2))

    def liouville_batch(self, X):
        return np.full(X.shape[0], self.area)

    def moment_map(self, X):
        return np.zeros((X.shape[0], 0))

    def in_domain(self, X):
        return np.ones(X.shape[0], dtype=bool)


class ProductModel(_ModelBase):
    """Surface factor times a torus weight model.

    Coordinates are (sx, sy, x_1, y_1, ..., x_n, y_n) with the surface chart
    the periodic unit square.  The acting groupoid is the product of the
    surface pair groupoid and the torus, so leaves of the base are the
    surfaces themselves and the transverse data is the weight model's.
    """

    kind = "surface_product"

    def __init__(self, surface: SurfaceFactor, base: TorusWeightModel,
                 name: str | None = None):
        self.surface = surface
        self.base = base
        self.dim = 2 + base.dim
        self.rank = base.rank
        self.leaf_dim = 2
        self.window = base.window
        self.lattice_basis = base.lattice_basis
        self.iota = base.iota
        self.name = name or f"surface_product(A={surface.area:g},{base.name})"
        omega = np.zeros((self.dim, self.dim))
        omega[:2, :2] = surface.area * np.array([[0.0, -1.0], [1.0, 0.0]])
        omega[2:, 2:] = base._omega
        self._omega = omega
        # leaf symplectic form on the base manifold, opposite block sign
        self._leaf_form = surface.area * np.array([[0.0, 1.0], [-1.0, 0.0]])

    def base_weight_model(self):
        return self.base

    def omega_matrix(self, X):
        return np.broadcast_to(self._omega, (X.shape[0],) + self._omega.shape)

    def moment_map(self, X):
        return self.base.moment_map(X[:, 2:])

    def moment_jacobian(self, X):
        N = X.shape[0]
        J = np.zeros((N, self.rank, self.dim))
        J[:, :, 2:] = self.base.moment_jacobian(X[:, 2:])
        return J

    def action_rows(self, X):
        N = X.shape[0]
        A = np.zeros((N, self.rank, self.dim))
        A[:, :, 2:] = self.base.action_rows(X[:, 2:])
        return A

    def leaf_moment_jacobian(self, X):
        N = X.shape[0]
        J = np.zeros((N, 2, self.dim))
        J[:, 0, 0] = 1.0
        J[:, 1, 1] = 1.0
        return J

    def leaf_action_rows(self, X):
        return self.leaf_moment_jacobian(X)

    def leaf_form(self, X):
        return np.broadcast_to(self._leaf_form, (X.shape[0], 2, 2))

    def liouville_batch(self, X):
        return np.full(X.shape[0], self.surface.area)

    def probe_points(self, count, seed=0):
        rng = _worker_rng(seed, 0)
        surf = rng.random((count, 2))
        zpart = self.base.probe_points(count, seed + 1)
        return np.concatenate([surf, zpart], axis=1)

    def sample(self, count, seed, workers=1, window=None):
        return _sample_weight_like(self, count, seed, workers, window,
                                   surface_pairs=1, density_scale=self.surface.area)

    def smith_invariants(self):
        return self.base.smith_invariants()

    def adapted_change(self):
        return self.base.adapted_change()


class SymmetryQuotient(_ModelBase):
    """Weight model with acting groupoid enlarged by a finite symmetry group.

    The generators are signed permutation matrices on the real coordinates
    that commute with the torus action and fix the moment map, so X and all
    its measures are untouched; only the isotropy component count changes.
    """

    kind = "symmetry_quotient"

    def __init__(self, base: TorusWeightModel, generators, group_order: int,
                 name: str | None = None):
        self.base = base
        self.generators = [np.asarray(g, dtype=np.int64) for g in generators]
        self.group_order = int(group_order)
        self.dim = base.dim
        self.rank = base.rank
        self.leaf_dim = 0
        self.window = base.window
        self.lattice_basis = base.lattice_basis
        self.iota = self.group_order
        self.name = name or f"quotient({base.name})"

    def base_weight_model(self):
        return self.base

    @property
    def W(self):
        return self.base.W

    @property
    def offset(self):
        return self.base.offset

    @property
    def n(self):
        return self.base.n

    def omega_matrix(self, X):
        return self.base.omega_matrix(X)

    def moment_map(self, X):
        return self.base.moment_map(X)

    def moment_jacobian(self, X):
        return self.base.moment_jacobian(X)

    def action_rows(self, X):
        return self.base.action_rows(X)

    def liouville_batch(self, X):
        return self.base.liouville_batch(X)

    def probe_points(self, count, seed=0):
        return self.base.probe_points(count, seed)

    def action_box(self, window=None):
        return self.base.action_box(window)

    def sample(self, count, seed, workers=1, window=None):
        return _sample_weight_like(self, count, seed, workers, window)

    def smith_invariants(self):
        return self.base.smith_invariants()

    def adapted_change(self):
        return self.base.adapted_change()

    def group_elements(self) -> list[np.ndarray]:
        """Enumerate the generated group by closure (small orders only)."""
        elems = {np.eye(self.dim, dtype=np.int64).tobytes():
                 np.eye(self.dim, dtype=np.int64)}
        frontier = list(self.generators)
        while frontier:
            g = frontier.pop()
            key = g.tobytes()
            if key in elems:
                continue
            if len(elems) > 4 * self.group_order:
                raise ModelValidationError(_quick_report(
                    self, [f"group closure exceeded 4x declared order {self.group_order}"]))
            elems[key] = g
            for h in self.generators:
                frontier.append(g @ h)
        return list(elems.values())


HamiltonianModel = (TorusWeightModel, ChartModel, ProductModel,
                    SymmetryQuotient, SurfaceFactor)


# ---------------------------------------------------------------------------
# pointwise operations (thin wrappers over the batched methods)
# ---------------------------------------------------------------------------

def evaluate_omega(model, x) -> np.ndarray:
    """Symplectic form matrix at x; exactly skew by construction."""
    X, single = _as_batch_any(model, x)
    if hasattr(model, "_check_domain"):
        model._check_domain(X)
    om = model.omega_matrix(X)
    return om[0] if single else om


def moment(model, x) -> np.ndarray:
    X, single = _as_batch_any(model, x)
    if hasattr(model, "_check_domain"):
        model._check_domain(X)
    t = model.moment_map(X)
    return t[0] if single else t


def infinitesimal_action(model, x, i: int) -> np.ndarray:
    """Generator field alpha_i^X at x (i is 1-based, 1 <= i <= rank)."""
    if not 1 <= i <= model.rank:
        raise IndexError(f"action index {i} out of range 1..{model.rank}")
    X, single = _as_batch_any(model, x)
    rows = model.action_rows(X)[:, i - 1, :]
    return rows[0] if single else rows


def liouville_density(model, x) -> float | np.ndarray:
    X, single = _as_batch_any(model, x)
    if hasattr(model, "_check_domain"):
        model._check_domain(X)
    dens = model.liouville_batch(X)
    if np.any(dens < PFAFFIAN_FLOOR):
        raise DegenerateFormError(
            f"|pfaffian| below {PFAFFIAN_FLOOR} at a requested point of '{model.name}'")
    return float(dens[0]) if single else dens


def sample_window(model, count: int, seed: int, workers: int = 1,
                  window=None) -> SampleBatch:
    return model.sample(count, seed, workers=workers, window=window)


def _as_batch_any(model, x):
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        return X[None, :], True
    return X, False


# ---------------------------------------------------------------------------
# chamber walls of weight models (combinatorial)
# ---------------------------------------------------------------------------

def moment_walls(model) -> list[tuple[np.ndarray, float]]:
    """Affine walls (normal, offset) of the moment image of a weight model.

    Walls are images of coordinate subspaces: for every (q-1)-subset of
    columns spanning a (q-1)-dim space, the hyperplane through the offset
    containing that span.  Chart models have no combinatorial walls here.
    """
    base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
    if not isinstance(base, TorusWeightModel):
        return []
    W = base.W.astype(float)
    q = base.rank
    from itertools import combinations

    walls = {}
    for subset in combinations(range(base.n), q - 1):
        cols = W[:, list(subset)] if subset else np.zeros((q, 0))
        if subset and np.linalg.matrix_rank(cols) != q - 1:
            continue
        # primitive integer normal orthogonal to the span
        basis = cols.T
        nullmat = np.eye(q) - (np.linalg.pinv(basis) @ basis if subset else 0.0)
        # pick any nonzero row of the projector as the normal direction
        normal = None
        for row in np.atleast_2d(nullmat):
            if np.linalg.norm(row) > 1e-9:
                normal = row / np.max(np.abs(row))
                break
        if normal is None:
            continue
        normal = _primitive(normal)
        c = float(normal @ base.offset)
        key = (tuple(normal.tolist()), round(c, 12))
        walls.setdefault(key, (normal, c))
    return list(walls.values())


def _primitive(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    v = v / np.max(np.abs(v))
    scaled = np.round(v * 840.0)  # lcm trick covers small rational entries
    g = np.gcd.reduce(scaled.astype(np.int64)[scaled != 0]) if np.any(scaled) else 1
    out = scaled / max(1, abs(g))
    for x in out:
        if abs(x) > 1e-12:
            if x < 0:
                out = -out
            break
    return out


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    model_name: str
    skew_residual: float = 0.0
    min_pfaffian: float = math.inf
    moment_condition_residual: float = 0.0
    kernel_orthogonality_residual: float = 0.0
    effective: bool | None = None
    invariant_factors: list = field(default_factory=list)
    locally_free: bool | None = None
    proper_over_window: bool | None = None
    symmetry_ok: bool | None = None
    tolerance: float = 0.0
    probes: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json_dict(self):
        return {
            "model": self.model_name,
            "skew_residual": self.skew_residual,
            "min_pfaffian": self.min_pfaffian,
            "moment_condition_residual": self.moment_condition_residual,
            "kernel_orthogonality_residual": self.kernel_orthogonality_residual,
            "effective": self.effective,
            "invariant_factors": [int(f) for f in self.invariant_factors],
            "locally_free": self.locally_free,
            "proper_over_window": self.proper_over_window,
            "symmetry_ok": self.symmetry_ok,
            "tolerance": self.tolerance,
            "probes": self.probes,
            "failures": list(self.failures),
            "passed": self.passed,
        }


def _quick_report(model, failures):
    rep = ValidationReport(model_name=model.name)
    rep.failures = failures
    return rep


def validate_model(model, tol: float | None = None, probes: int = 200,
                   seed: int = 0) -> ValidationReport:
    """Check skewness, nondegeneracy, the moment condition, effectiveness
    and local freeness on random probe points.  Failures are recorded in the
    report rather than raised."""
    if tol is None:
        tol = 1e-6 if isinstance(model, ChartModel) else 1e-10
    rep = ValidationReport(model_name=model.name, tolerance=float(tol), probes=int(probes))
    if isinstance(model, SurfaceFactor):
        rep.failures.append("standalone surface factor has no torus data to validate")
        return rep

    X = model.probe_points(probes, seed)
    om = model.omega_matrix(X)
    rep.skew_residual = float(np.max(np.abs(om + np.swapaxes(om, 1, 2))))
    if rep.skew_residual > 0.0:
        rep.failures.append(f"omega not exactly skew (residual {rep.skew_residual:g})")
    pf = _pfaffian_abs(om)
    rep.min_pfaffian = float(np.min(pf))
    if rep.min_pfaffian < PFAFFIAN_FLOOR:
        rep.failures.append(f"omega degenerate at a probe (|pf| {rep.min_pfaffian:g})")

    # infinitesimal moment condition: omega(alpha_i, .) == d(moment_i)
    act = model.action_rows(X)
    jac = model.moment_jacobian(X)
    pairing = np.einsum("nqd,nde->nqe", act, om)
    rep.moment_condition_residual = float(np.max(np.abs(pairing - jac)))
    if rep.moment_condition_residual > tol:
        rep.failures.append(
            f"moment condition residual {rep.moment_condition_residual:g} > {tol:g}")

    # omega-orthogonal complement of ker(dmu) must be the action span
    rep.kernel_orthogonality_residual = _kernel_orthogonality(model, X, om)
    ko_tol = 1e-4 if isinstance(model, ChartModel) else 1e-6
    if rep.kernel_orthogonality_residual > ko_tol:
        rep.failures.append(
            "omega-orthogonal of ker(dmu) deviates from the action span "
            f"(residual {rep.kernel_orthogonality_residual:g})")

    # effectiveness / local freeness
    if hasattr(model, "smith_invariants"):
        factors = model.smith_invariants()
        rep.invariant_factors = factors
        base = model.base_weight_model() if hasattr(model, "base_weight_model") else model
        full_rank = len(factors) == base.rank
        rep.effective = full_rank and all(f == 1 for f in factors)
        if not rep.effective:
            kernel_order = int(np.prod(factors)) if full_rank else 0
            rep.failures.append(
                "action not effective: Smith invariant factors "
                f"{factors} (kernel of order {kernel_order or 'infinite'})")
        cols_ok = bool(np.all(np.any(base.W != 0, axis=0)))
        rank_ok = bool(np.all(np.linalg.matrix_rank(model.action_rows(X)) == model.rank))
        rep.locally_free = cols_ok and rank_ok
        if not cols_ok:
            rep.failures.append("zero column in weight matrix: action nowhere locally free "
                                "on that coordinate line")
        try:
            base.action_box()
            rep.proper_over_window = True
        except UnsupportedModelError:
            rep.proper_over_window = False
            rep.failures.append("moment map not proper over the window")
        except EmptyRegionError:
            rep.proper_over_window = True
    else:
        rank_ok = bool(np.all(np.linalg.matrix_rank(model.action_rows(X)) == model.rank))
        rep.locally_free = rank_ok
        if not rank_ok:
            rep.failures.append("action rank drops at a probe point")

    if isinstance(model, SymmetryQuotient):
        rep.symmetry_ok = _check_symmetries(model, X, rep)

    return rep


def _kernel_orthogonality(model, X, om) -> float:
    dmu_t = model.moment_jacobian(X)
    dmu_leaf = model.leaf_moment_jacobian(X)
    dmu = np.concatenate([dmu_t, dmu_leaf], axis=1)
    act = np.concatenate([model.action_rows(X), model.leaf_action_rows(X)], axis=1)
    worst = 0.0
    for k in range(X.shape[0]):
        kernel = _nullspace(dmu[k])
        # omega-orthogonal complement of the kernel
        ortho = _nullspace((om[k] @ kernel.T).T) if kernel.size else np.eye(model.dim)
        span = act[k]
        worst = max(worst, _subspace_gap(ortho, span))
    return worst


def _nullspace(mat, rtol=1e-10):
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1])
    _, s, vt = np.linalg.svd(mat)
    rank = int(np.sum(s > rtol * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:]


def _subspace_gap(basis_a, basis_b) -> float:
    """Max principal-angle sine between two row-spans (0 if equal)."""
    qa = np.linalg.qr(basis_a.T)[0] if basis_a.size else np.zeros((basis_a.shape[1], 0))
    qb = np.linalg.qr(basis_b.T)[0] if basis_b.size else np.zeros((basis_b.shape[1], 0))
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    sv = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - np.min(sv) ** 2)))


def _check_symmetries(model: SymmetryQuotient, X, rep: ValidationReport) -> bool:
    ok = True
    om = model.base._omega
    for g in model.generators:
        gf = g.astype(float)
        if np.max(np.abs(gf.T @ om @ gf - om)) > 1e-12:
            rep.failures.append("symmetry generator does not preserve omega")
            ok = False
        t0 = model.moment_map(X)
        t1 = model.moment_map(X @ gf.T)
        if np.max(np.abs(t0 - t1)) > 1e-10:
            rep.failures.append("symmetry generator does not preserve the moment map")
            ok = False
        rot = model.action_rows(X)
        rot_g = model.action_rows(X @ gf.T)
        if np.max(np.abs(np.einsum("de,nqe->nqd", gf, rot) - rot_g)) > 1e-10:
            rep.failures.append("symmetry generator does not commute with the torus action")
            ok = False
    try:
        elems = model.group_elements()
        if len(elems) != model.group_order:
            rep.failures.append(
                f"generated group has order {len(elems)}, declared {model.group_order}")
            ok = False
    except ModelValidationError as exc:
        rep.failures.extend(exc.report.failures)
        ok = False
    return ok


# ---------------------------------------------------------------------------
# JSON model configuration
# ---------------------------------------------------------------------------

_ALLOWED_FIELDS = {
    "torus_weight": {"type", "n", "q", "weights", "offset", "window", "name"},
    "sphere": {"type", "window", "name"},
    "surface_product": {"type", "n", "q", "weights", "offset", "window", "area", "name"},
    "symmetry_quotient": {"type", "n", "q", "weights", "offset", "window", "group", "name"},
}


def load_model_config(source) -> _ModelBase:
    """Build a model from the JSON configuration schema.

    ``source`` may be a dict, a JSON string or a path to a JSON file.
    Unknown fields are rejected.
    """
    if isinstance(source, dict):
        cfg = source
    else:
        text = None
        try:
            import os

            if os.path.exists(str(source)):
                with open(source) as fh:
                    text = fh.read()
        except OSError:
            pass
        cfg = json.loads(text if text is not None else source)
    if "type" not in cfg:
        raise ValueError("model config missing 'type'")
    mtype = cfg["type"]
    if mtype not in _ALLOWED_FIELDS:
        raise ValueError(f"unknown model type {mtype!r}; expected one of "
                         f"{sorted(_ALLOWED_FIELDS)}")
    unknown = set(cfg) - _ALLOWED_FIELDS[mtype]
    if unknown:
        raise ValueError(f"unknown fields for type {mtype!r}: {sorted(unknown)}")

    if mtype == "sphere":
        from .catalog import make_sphere

        return make_sphere(window=cfg.get("window"), name=cfg.get("name", "sphere"))

    W = np.asarray(cfg["weights"], dtype=np.int64)
    if "q" in cfg and int(cfg["q"]) != W.shape[0]:
        raise ValueError("field q inconsistent with weight matrix shape")
    if "n" in cfg and int(cfg["n"]) != W.shape[1]:
        raise ValueError("field n inconsistent with weight matrix shape")
    base = TorusWeightModel(
        W,
        offset=cfg.get("offset"),
        window=cfg.get("window"),
        name=cfg.get("name", mtype),
    )
    if mtype == "torus_weight":
        return base
    if mtype == "surface_product":
        return ProductModel(SurfaceFactor(float(cfg["area"])), base,
                            name=cfg.get("name"))
    # symmetry quotient: group generators as signed permutations of the
    # complex coordinates, {"perm": [...], "signs": [...]}
    gens = []
    for gspec in cfg["group"]:
        perm = list(gspec["perm"])
        signs = list(gspec.get("signs", [1] * len(perm)))
        gens.append(signed_permutation_matrix(perm, signs))
    order = _closure_order(gens, base.dim)
    return SymmetryQuotient(base, gens, order, name=cfg.get("name"))


def signed_permutation_matrix(perm, signs) -> np.ndarray:
    """Real 2n x 2n matrix sending z_i -> signs[i] * z_{perm[i]}."""
    n = len(perm)
    g = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for i, (p, s) in enumerate(zip(perm, signs)):
        g[2 * i, 2 * p] = int(s)
        g[2 * i + 1, 2 * p + 1] = int(s)
    return g


def _closure_order(gens, dim) -> int:
    elems = {np.eye(dim, dtype=np.int64).tobytes()}
    frontier = [np.eye(dim, dtype=np.int64)]
    while frontier:
        g = frontier.pop()
        for h in gens:
            nxt = g @ h
            key = nxt.tobytes()
            if key not in elems:
                if len(elems) > 1024:
                    raise ValueError("symmetry group closure too large")
                elems.add(key)
                frontier.append(nxt)
    return len(elems)
