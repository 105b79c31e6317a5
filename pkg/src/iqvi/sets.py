"""Closed catalog of convex sets with exact Euclidean projections."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import InputError

__all__ = [
    "ConvexSet",
    "Ball",
    "Box",
    "Halfspace",
    "Simplex",
    "Interval",
    "project",
    "contains",
    "sample",
    "set_from_dict",
    "MEMBERSHIP_TOL",
]

MEMBERSHIP_TOL = 1e-9


def _frozen(values, name):
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


class ConvexSet:
    """Nonempty closed convex subset of R^n with a closed-form projection.

    Points may be passed as a single vector of shape ``(n,)`` or as a stack of
    shape ``(m, n)``; for one-dimensional sets a bare scalar is also accepted
    and a scalar is returned.
    """

    kind = ""
    dim = 0

    def _project_rows(self, X):
        raise NotImplementedError

    def _as_rows(self, point):
        x = np.asarray(point, dtype=float)
        scalar = x.ndim == 0
        if scalar:
            x = x.reshape(1)
        if x.shape[-1] != self.dim:
            raise InputError(f"point has dimension {x.shape[-1]}, set {self.kind} has dimension {self.dim}")
        return np.ascontiguousarray(x.reshape(-1, self.dim)), x.shape, scalar

    def project(self, point):
        X, shape, scalar = self._as_rows(point)
        Z = self._project_rows(X).reshape(shape)
        return float(Z[0]) if scalar else Z

    def distance(self, point):
        X, shape, scalar = self._as_rows(point)
        d = np.linalg.norm(X - self._project_rows(X), axis=1)
        return float(d[0]) if len(shape) <= 1 else d.reshape(shape[:-1])

    def contains(self, point, tol=MEMBERSHIP_TOL):
        d = self.distance(point)
        return bool(d <= tol) if np.ndim(d) == 0 else d <= tol

    def sample(self, seed, count):
        """Deterministic mix of interior and boundary points of the set.

        At least a quarter of the points (rounded up) are boundary points,
        obtained by projecting draws from outside the set; they come last.
        """
        if int(count) < 1:
            raise InputError("count must be >= 1")
        count = int(count)
        rng = np.random.default_rng(seed)
        n_boundary = math.ceil(count / 4)
        interior = self._interior(rng, count - n_boundary)
        boundary = self._project_rows(np.ascontiguousarray(self._exterior(rng, n_boundary)))
        return np.vstack([interior.reshape(-1, self.dim), boundary])

    def to_dict(self):
        raise NotImplementedError


class Ball(ConvexSet):
    kind = "ball"

    def __init__(self, center, radius):
        self.center = _frozen(center, "center")
        self.radius = float(radius)
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InputError("ball radius must be positive and finite")
        self.dim = self.center.size

    def _project_rows(self, X):
        return kernels.project_ball(X, self.center, self.radius)

    def _direction(self, rng, m):
        d = rng.standard_normal((m, self.dim))
        nrm = np.linalg.norm(d, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        return d / nrm

    def _interior(self, rng, m):
        u = rng.random(m) ** (1.0 / self.dim)
        return self.center + self._direction(rng, m) * (self.radius * u)[:, None]

    def _exterior(self, rng, m):
        rho = self.radius * (1.1 + rng.exponential(size=m))
        return self.center + self._direction(rng, m) * rho[:, None]

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Box(ConvexSet):
    kind = "box"

    def __init__(self, lower, upper):
        self.lower = _frozen(lower, "lower")
        self.upper = _frozen(upper, "upper")
        if self.lower.shape != self.upper.shape:
            raise InputError("box bounds must have equal length")
        if np.any(self.lower > self.upper):
            raise InputError("box requires lower <= upper in every coordinate")
        self.dim = self.lower.size

    def _project_rows(self, X):
        return kernels.project_box(X, self.lower, self.upper)

    def _interior(self, rng, m):
        return self.lower + rng.random((m, self.dim)) * (self.upper - self.lower)

    def _exterior(self, rng, m):
        X = self._interior(rng, m)
        width = np.maximum(self.upper - self.lower, 1.0)
        coord = rng.integers(0, self.dim, size=m)
        above = rng.random(m) < 0.5
        push = (0.1 + rng.exponential(size=m)) * width[coord]
        rows = np.arange(m)
        X[rows, coord] = np.where(above, self.upper[coord] + push, self.lower[coord] - push)
        return X

    def to_dict(self):
        return {"kind": self.kind, "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Interval(Box):
    """One-dimensional box ``[lower, upper]``."""

    kind = "interval"

    def __init__(self, lower, upper):
        super().__init__([float(lower)], [float(upper)])

    def to_dict(self):
        return {"kind": self.kind, "lower": float(self.lower[0]), "upper": float(self.upper[0])}

    def __repr__(self):
        return f"Interval({self.lower[0]}, {self.upper[0]})"


class Halfspace(ConvexSet):
    """``{x : <normal, x> <= offset}``."""

    kind = "halfspace"

    def __init__(self, normal, offset):
        self.normal = _frozen(normal, "normal")
        if not np.any(self.normal != 0):
            raise InputError("halfspace normal must be nonzero")
        self.offset = float(offset)
        if not math.isfinite(self.offset):
            raise InputError("halfspace offset must be finite")
        self.dim = self.normal.size

    def _project_rows(self, X):
        return kernels.project_halfspace(X, self.normal, self.offset)

    def _draw(self, rng, m):
        nn = float(self.normal @ self.normal)
        anchor = self.offset / nn * self.normal
        scale = max(1.0, float(np.linalg.norm(anchor)))
        return rng.standard_normal((m, self.dim)) * scale + anchor, nn

    def _interior(self, rng, m):
        X, nn = self._draw(rng, m)
        v = X @ self.normal - self.offset
        return X - (2.0 * np.maximum(v, 0.0) / nn)[:, None] * self.normal

    def _exterior(self, rng, m):
        X, nn = self._draw(rng, m)
        v = X @ self.normal - self.offset
        shift = np.where(v > 0, 0.0, -2.0 * v + 0.1 * np.sqrt(nn))
        return X + (shift / nn)[:, None] * self.normal

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(), "offset": self.offset}

    def __repr__(self):
        return f"Halfspace(normal={self.normal.tolist()}, offset={self.offset})"


class Simplex(ConvexSet):
    """``{x : x_i >= 0, sum(x) = scale}``; projection by sort-and-threshold."""

    kind = "simplex"

    def __init__(self, dim, scale=1.0):
        self.dim = int(dim)
        if self.dim < 1:
            raise InputError("simplex dimension must be >= 1")
        self.scale = float(scale)
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InputError("simplex scale must be positive and finite")

    def _project_rows(self, X):
        return kernels.project_simplex(X, self.scale)

    def _interior(self, rng, m):
        if m == 0:
            return np.empty((0, self.dim))
        P = rng.dirichlet(np.ones(self.dim), size=m) * self.scale
        # renormalise so the coordinate sum is exact to rounding
        return P * (self.scale / P.sum(axis=1))[:, None]

    def _exterior(self, rng, m):
        return self.scale / self.dim + self.scale * rng.standard_normal((m, self.dim))

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "scale": self.scale}

    def __repr__(self):
        return f"Simplex(dim={self.dim}, scale={self.scale})"


def project(cset, point):
    return cset.project(point)


def contains(cset, point, tol=MEMBERSHIP_TOL):
    return cset.contains(point, tol)


def sample(cset, seed, count):
    return cset.sample(seed, count)


def set_from_dict(d):
    """Build a catalog set from its config form, e.g. ``{"kind": "ball", ...}``."""
    kind = d.get("kind")
    try:
        if kind == "ball":
            return Ball(d["center"], d["radius"])
        if kind == "box":
            return Box(d["lower"], d["upper"])
        if kind == "interval":
            return Interval(d["lower"], d["upper"])
        if kind == "halfspace":
            return Halfspace(d["normal"], d["offset"])
        if kind == "simplex":
            return Simplex(d["dim"], d.get("scale", 1.0))
    except KeyError as exc:
        raise InputError(f"{kind} set is missing parameter {exc.args[0]!r}") from None
    raise InputError(f"unknown set kind {kind!r}")
