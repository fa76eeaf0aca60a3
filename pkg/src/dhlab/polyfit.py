"""Chamber walls, empirical breakpoint detection and chamber-wise fits.

The fitted densities are piecewise polynomial between walls; fits are
weighted least squares with per-bin Monte Carlo sigmas, and the degree is
the smallest one whose chi-square per degree of freedom clears the
threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .models import moment_walls
from .polynomials import PolynomialOnChart
from .pushforward import BinnedDensity

CHI2_THRESHOLD = 1.5
BREAK_SIGMA = 5.0


@dataclass
class Wall:
    normal: np.ndarray
    offset: float
    validity: np.ndarray | None = None   # bounding box of the wall piece

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return (pts @ self.normal - self.offset) / np.linalg.norm(self.normal)


@dataclass
class WallSet:
    walls: list

    def __len__(self):
        return len(self.walls)

    def __iter__(self):
        return iter(self.walls)

    def positions_1d(self) -> list[float]:
        return sorted(w.offset / w.normal[0] for w in self.walls)

    def to_json_dict(self):
        return [{"normal": [float(x) for x in w.normal], "offset": float(w.offset)}
                for w in self.walls]


@dataclass
class ChamberFit:
    chamber_id: str
    polynomial: PolynomialOnChart
    chi_square: float
    dof: int
    passed: bool
    coeff_sigma: dict = field(default_factory=dict)
    degree_cap: int = 0
    skipped: bool = False

    def to_json_dict(self):
        return {
            "chamber": self.chamber_id,
            "polynomial": self.polynomial.to_json_dict(),
            "chi_square": self.chi_square,
            "dof": self.dof,
            "pass": self.passed,
            "coeff_sigma": {str(list(k)): v for k, v in self.coeff_sigma.items()},
            "degree_cap": self.degree_cap,
            "skipped": self.skipped,
        }


def detect_walls(model) -> WallSet:
    """Combinatorial wall set of a weight model (images of coordinate cones)."""
    win = np.asarray(model.window, dtype=float)
    return WallSet([Wall(normal=np.asarray(n, dtype=float), offset=float(c),
                         validity=win)
                    for n, c in moment_walls(model)])


def detect_breakpoints_empirical(density: BinnedDensity) -> WallSet:
    """Changepoints of a 1-d binned density.

    At every interior bin edge, fit local quadratics to the usable bins on
    each side and compare value and slope at the edge; edges where the
    mismatch exceeds 5 combined sigmas are walls.  Contiguous detections
    merge to the strongest edge.
    """
    if density.rank != 1:
        raise ValueError("empirical breakpoint detection is 1-d only")
    usable = density.usable()
    if int(usable.sum()) < 16:
        raise ValueError("need at least 16 usable bins to detect breakpoints")
    centers = density.centers()[:, 0]
    values = density.density
    sigmas = density.sigma_density
    edges = density.grid.edges(0)
    width = float(density.grid.widths[0])

    idx = np.where(usable)[0]
    w = max(4, min(8, len(idx) // 8))
    candidates = []
    for pos in range(w, len(idx) - w + 1):
        left = idx[pos - w:pos]
        right = idx[pos:pos + w]
        edge = 0.5 * (centers[left[-1]] + centers[right[0]])
        zl = _local_fit_eval(centers[left], values[left], sigmas[left], edge)
        zr = _local_fit_eval(centers[right], values[right], sigmas[right], edge)
        if zl is None or zr is None:
            continue
        (vl, vl_var, sl, sl_var) = zl
        (vr, vr_var, sr, sr_var) = zr
        z_val = abs(vl - vr) / math.sqrt(max(vl_var + vr_var, 1e-300))
        z_slope = abs(sl - sr) / math.sqrt(max(sl_var + sr_var, 1e-300))
        z = max(z_val, z_slope)
        if z > BREAK_SIGMA:
            candidates.append((edge, z))

    # a single kink lights up every edge whose window straddles it: keep the
    # strongest edge and suppress its neighborhood, then repeat
    walls = []
    remaining = sorted(candidates, key=lambda t: -t[1])
    while remaining:
        edge, _ = remaining[0]
        walls.append(edge)
        remaining = [c for c in remaining if abs(c[0] - edge) > (w + 1) * width]
    walls.sort()
    return WallSet([Wall(normal=np.array([1.0]), offset=float(p),
                         validity=density.grid.box) for p in walls])


def _local_fit_eval(x, y, s, at):
    """Weighted quadratic fit; value/slope and variances at ``at``."""
    deg = min(2, len(x) - 2)
    if deg < 0:
        return None
    X = np.vander(x - at, deg + 1, increasing=True)
    wts = 1.0 / s
    Xw = X * wts[:, None]
    yw = y * wts
    cov = np.linalg.pinv(Xw.T @ Xw)
    beta = cov @ (Xw.T @ yw)
    val, val_var = beta[0], cov[0, 0]
    if deg >= 1:
        slope, slope_var = beta[1], cov[1, 1]
    else:
        slope, slope_var = 0.0, 0.0
    return val, val_var, slope, slope_var


def _monomials(q: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(q), total):
            deg = [0] * q
            for j in combo:
                deg[j] += 1
            out.append(tuple(deg))
    return sorted(set(out))


def _chamber_labels(centers: np.ndarray, walls: WallSet, width: np.ndarray):
    """Chamber id per bin; bins straddling a wall get None."""
    labels = []
    half = float(np.linalg.norm(width)) / 2.0
    for i in range(centers.shape[0]):
        sig = []
        straddle = False
        for wall in walls:
            dist = float(wall.signed_distance(centers[i:i + 1])[0])
            if abs(dist) <= half:
                straddle = True
                break
            sig.append("+" if dist > 0 else "-")
        labels.append(None if straddle else "".join(sig) or "all")
    return labels


def fit_chamber_polynomials(density: BinnedDensity, walls: WallSet,
                            cap: int) -> list[ChamberFit]:
    """Per-chamber weighted least squares with automatic degree selection.

    The selected degree is the smallest one with chi-square/dof at most
    1.5; chambers with fewer usable bins than cap+2 are skipped with a
    flag.
    """
    if cap < 0:
        raise ValueError("degree cap must be nonnegative")
    centers = density.centers()
    usable = density.usable()
    labels = _chamber_labels(centers, walls, density.grid.widths)
    values = density.density
    sigmas = density.sigma_density

    chambers: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        if lab is not None and usable[i]:
            chambers.setdefault(lab, []).append(i)

    fits = []
    for lab in sorted(chambers):
        idx = np.array(chambers[lab])
        if len(idx) < cap + 2:
            fits.append(ChamberFit(lab, PolynomialOnChart(density.rank, {}),
                                   math.inf, 0, False, degree_cap=cap, skipped=True))
            continue
        fits.append(_fit_one_chamber(lab, centers[idx], values[idx], sigmas[idx],
                                     density.rank, cap))
    return fits


def _fit_one_chamber(label, x, y, s, q, cap) -> ChamberFit:
    best = None
    for degree in range(cap + 1):
        monos = _monomials(q, degree)
        if len(x) <= len(monos):
            break
        X = np.stack([np.prod(x**np.array(m), axis=1) for m in monos], axis=1)
        wts = 1.0 / s
        Xw = X * wts[:, None]
        yw = y * wts
        cov = np.linalg.pinv(Xw.T @ Xw)
        beta = cov @ (Xw.T @ yw)
        resid = (X @ beta - y) * wts
        chi2 = float(np.sum(resid**2))
        dof = len(x) - len(monos)
        fit = ChamberFit(
            chamber_id=label,
            polynomial=PolynomialOnChart(q, dict(zip(monos, beta))),
            chi_square=chi2,
            dof=dof,
            passed=chi2 / dof <= CHI2_THRESHOLD,
            coeff_sigma={m: float(math.sqrt(max(cov[i, i], 0.0)))
                         for i, m in enumerate(monos)},
            degree_cap=cap,
        )
        if fit.passed:
            return fit
        if best is None or fit.chi_square / max(fit.dof, 1) < best.chi_square / max(best.dof, 1):
            best = fit
    return best if best is not None else ChamberFit(
        label, PolynomialOnChart(q, {}), math.inf, 0, False, degree_cap=cap,
        skipped=True)


def polynomiality_verdict(fits: list[ChamberFit]) -> tuple[bool, dict]:
    """All-chambers verdict plus a per-chamber report."""
    if not fits:
        raise ValueError("no chamber fits supplied")
    active = [f for f in fits if not f.skipped]
    verdict = bool(active) and all(f.passed for f in active)
    report = {
        "verdict": verdict,
        "chambers": [f.to_json_dict() for f in fits],
        "degree_cap": max((f.degree_cap for f in fits), default=0),
    }
    return verdict, report
