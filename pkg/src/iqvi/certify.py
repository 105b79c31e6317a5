"""Independent checks: sampled solution certificates, brute-force grid
search for small instances, a projection oracle, and an empirical probe of
the moving-set contraction constant."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import count_components
from .model import MovingSet, ProblemInstance, _vec, moving_project, residual
from .sets import ConvexSet

__all__ = [
    "SolutionCertificate",
    "certify_solution",
    "GridResult",
    "grid_oracle",
    "projection_oracle",
    "kappa_probe",
]


@dataclass(frozen=True)
class SolutionCertificate:
    membership_gap: float
    min_inner: float
    samples_used: int
    verdict: str

    def to_dict(self):
        return {
            "membership_gap": self.membership_gap,
            "min_inner": self.min_inner,
            "samples_used": self.samples_used,
            "verdict": self.verdict,
        }


def certify_solution(problem: ProblemInstance, x, seed=0, samples=64, tol=1e-9) -> SolutionCertificate:
    """Sampled check of f(x) in Phi(x) and <x, y - f(x)> >= 0 on Phi(x).

    Besides ``samples`` draws from Phi(x) the check includes the points
    P_Phi(x)(f(x) - s x) for a few scales s; these approach the minimiser of
    <x, y> over Phi(x).  Verdicts: certified within ``tol``, refuted beyond
    ``10 tol``, inconclusive in between.
    """
    if int(samples) < 16:
        raise InputError("samples must be >= 16")
    x = _vec(x, problem.dim)
    if x.ndim != 1:
        raise InputError("x must be a single point")
    fx = problem.f(x)
    gap = float(np.linalg.norm(fx - moving_project(problem.phi, x, fx)))
    Y = problem.phi.sample_image(x, seed, int(samples))
    scales = np.array([1e-2, 1e-1, 1.0, 1e1, 1e3, 1e6])
    probes = moving_project(problem.phi, np.broadcast_to(x, (len(scales), problem.dim)), fx - scales[:, None] * x)
    Y = np.vstack([Y, probes])
    min_inner = float(np.min((Y - fx) @ x))
    if gap <= tol and min_inner >= -tol:
        verdict = "certified"
    elif gap > 10 * tol or min_inner < -10 * tol:
        verdict = "refuted"
    else:
        verdict = "inconclusive"
    return SolutionCertificate(gap, min_inner, len(Y), verdict)


@dataclass
class GridResult:
    x_best: np.ndarray
    residual_best: float
    grid: list
    values: np.ndarray

    def sublevel_components(self, level=1e-3):
        """Number of connected components of {residual <= level} on the grid."""
        return count_components(self.values <= level)


def grid_oracle(problem: ProblemInstance, box, resolution=1e-3, refine_tol=1e-6) -> GridResult:
    """Exhaustive grid minimisation of the residual over ``box`` followed by
    coordinate-wise ternary refinement around the best cell.

    Only for n <= 2; ``box`` is a ``(lower, upper)`` pair.
    """
    if problem.dim > 2:
        raise InputError("grid_oracle supports dimension <= 2 only")
    if resolution > 1e-2 or resolution <= 0:
        raise InputError("resolution must lie in (0, 1e-2]")
    lower, upper = (np.broadcast_to(np.asarray(b, dtype=float), (problem.dim,)) for b in box)
    if np.any(lower >= upper):
        raise InputError("box needs lower < upper")
    axes = [np.linspace(lo, hi, int(round((hi - lo) / resolution)) + 1) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.empty(len(pts))
    chunk = 1 << 16
    for s in range(0, len(pts), chunk):
        vals[s : s + chunk] = residual(problem, pts[s : s + chunk])
    values = vals.reshape(mesh[0].shape)
    best = pts[int(np.argmin(vals))].copy()

    def res_at(p):
        return residual(problem, p)

    span = np.array([ax[1] - ax[0] if len(ax) > 1 else resolution for ax in axes])
    for _ in range(8):
        moved = False
        for i in range(problem.dim):
            lo = max(lower[i], best[i] - span[i])
            hi = min(upper[i], best[i] + span[i])
            while hi - lo > refine_tol:
                m1 = lo + (hi - lo) / 3
                m2 = hi - (hi - lo) / 3
                p1, p2 = best.copy(), best.copy()
                p1[i], p2[i] = m1, m2
                if res_at(p1) <= res_at(p2):
                    hi = m2
                else:
                    lo = m1
            cand = best.copy()
            cand[i] = 0.5 * (lo + hi)
            if res_at(cand) < res_at(best):
                moved = moved or abs(cand[i] - best[i]) > refine_tol
                best = cand
        if not moved:
            break
    return GridResult(best, res_at(best), axes, values)


def projection_oracle(cset: ConvexSet, point, seed=0, samples=1000, z=None, tol=1e-9) -> bool:
    """Check a claimed projection ``z`` (default: ``cset.project(point)``)
    against sampled points of the set: z must lie in the set, satisfy
    <point - z, y - z> <= tol, and no sample may be strictly closer."""
    if int(samples) < 100:
        raise InputError("samples must be >= 100")
    point = np.asarray(point, dtype=float).reshape(-1)
    z = cset.project(point) if z is None else np.asarray(z, dtype=float).reshape(-1)
    if not cset.contains(z, tol):
        return False
    Y = cset.sample(seed, int(samples))
    if np.max((Y - z) @ (point - z)) > tol:
        return False
    dz = np.linalg.norm(point - z)
    return bool(np.min(np.linalg.norm(Y - point, axis=1)) >= dz - tol)


def kappa_probe(phi: MovingSet, seed, triples, scale=5.0) -> float:
    """Largest observed |P_Phi(x)(z) - P_Phi(y)(z)| / |x - y| over random
    triples; a sampled lower bound on the contraction constant."""
    if int(triples) < 1:
        raise InputError("triples must be >= 1")
    rng = np.random.default_rng(seed)
    m = int(triples)
    X = rng.standard_normal((m, phi.dim)) * scale
    Y = rng.standard_normal((m, phi.dim)) * scale
    Z = rng.standard_normal((m, phi.dim)) * scale
    dxy = np.linalg.norm(X - Y, axis=1)
    keep = dxy > 0
    if not np.any(keep):
        return 0.0
    num = np.linalg.norm(phi.project(X[keep], Z[keep]) - phi.project(Y[keep], Z[keep]), axis=1)
    return float(np.max(num / dxy[keep])) if math.isfinite(float(np.max(num))) else math.inf
