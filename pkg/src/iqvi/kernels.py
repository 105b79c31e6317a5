"""Batched projection kernels.

Every kernel takes a C-contiguous ``(m, n)`` float64 array of points (one per
row) and returns a new array of the same shape.  Two implementations exist
for each kernel: a loop form compiled by numba and a vectorised numpy form.
The module-level names (``project_ball`` etc.) are bound to one of them at
import time, see :mod:`iqvi._jit`.
"""
import numpy as np
from scipy import ndimage

from ._jit import USE_NUMBA, njit

__all__ = [
    "project_ball",
    "project_box",
    "project_halfspace",
    "project_simplex",
    "count_components",
    "BACKEND",
    "numba_kernels",
    "numpy_kernels",
]


# ---------------------------------------------------------------- numba path


@njit
def _ball_loop(X, center, radius):
    m, n = X.shape
    out = X.copy()
    for i in range(m):
        s = 0.0
        for j in range(n):
            d = X[i, j] - center[j]
            s += d * d
        nrm = np.sqrt(s)
        if nrm > radius:
            scale = radius / nrm
            for j in range(n):
                out[i, j] = center[j] + (X[i, j] - center[j]) * scale
    return out


@njit
def _box_loop(X, lower, upper):
    m, n = X.shape
    out = X.copy()
    for i in range(m):
        for j in range(n):
            v = X[i, j]
            if v < lower[j]:
                out[i, j] = lower[j]
            elif v > upper[j]:
                out[i, j] = upper[j]
    return out


@njit
def _halfspace_loop(X, normal, offset):
    m, n = X.shape
    out = X.copy()
    nn = 0.0
    for j in range(n):
        nn += normal[j] * normal[j]
    for i in range(m):
        v = -offset
        for j in range(n):
            v += normal[j] * X[i, j]
        if v > 0.0:
            step = v / nn
            for j in range(n):
                out[i, j] = X[i, j] - step * normal[j]
    return out


@njit
def _simplex_loop(X, scale):
    m, n = X.shape
    out = np.empty_like(X)
    u = np.empty(n)
    for i in range(m):
        if n <= 32:
            # insertion sort beats the generic sort on short rows
            for j in range(n):
                v = X[i, j]
                k = j - 1
                while k >= 0 and u[k] > v:
                    u[k + 1] = u[k]
                    k -= 1
                u[k + 1] = v
        else:
            u[:] = X[i]
            u.sort()
        # walk the ascending buffer from the top
        cs = 0.0
        tau = 0.0
        for j in range(n):
            v = u[n - 1 - j]
            cs += v
            t = (cs - scale) / (j + 1)
            if v - t > 0.0:
                tau = t
        for j in range(n):
            v = X[i, j] - tau
            out[i, j] = v if v > 0.0 else 0.0
    return out


@njit
def _components_loop(mask):
    # 4-neighbour connectivity on a 2-D boolean grid
    rows, cols = mask.shape
    seen = np.zeros((rows, cols), dtype=np.bool_)
    stack = np.empty((rows * cols, 2), dtype=np.int64)
    count = 0
    for r0 in range(rows):
        for c0 in range(cols):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            count += 1
            top = 0
            stack[0, 0] = r0
            stack[0, 1] = c0
            seen[r0, c0] = True
            while top >= 0:
                r = stack[top, 0]
                c = stack[top, 1]
                top -= 1
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    rr = r + dr
                    cc = c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        if mask[rr, cc] and not seen[rr, cc]:
                            seen[rr, cc] = True
                            top += 1
                            stack[top, 0] = rr
                            stack[top, 1] = cc
    return count


# ---------------------------------------------------------------- numpy path


def _ball_np(X, center, radius):
    d = X - center
    nrm = np.sqrt(np.einsum("ij,ij->i", d, d))
    out = X.copy()
    outside = nrm > radius
    out[outside] = center + d[outside] * (radius / nrm[outside])[:, None]
    return out


def _box_np(X, lower, upper):
    return np.minimum(np.maximum(X, lower), upper)


def _halfspace_np(X, normal, offset):
    v = X @ normal - offset
    step = np.where(v > 0.0, v, 0.0) / (normal @ normal)
    return X - step[:, None] * normal


def _simplex_np(X, scale):
    m, n = X.shape
    u = -np.sort(-X, axis=1)
    cs = np.cumsum(u, axis=1)
    k = np.arange(1, n + 1)
    t = (cs - scale) / k
    active = (u - t) > 0.0
    rho = n - 1 - np.argmax(active[:, ::-1], axis=1)
    tau = t[np.arange(m), rho]
    return np.maximum(X - tau[:, None], 0.0)


def _components_np(mask):
    _, count = ndimage.label(mask)
    return int(count)


class _Kernels:
    def __init__(self, ball, box, halfspace, simplex, components):
        self.ball = ball
        self.box = box
        self.halfspace = halfspace
        self.simplex = simplex
        self.components = components


numba_kernels = _Kernels(_ball_loop, _box_loop, _halfspace_loop, _simplex_loop, _components_loop)
numpy_kernels = _Kernels(_ball_np, _box_np, _halfspace_np, _simplex_np, _components_np)

_active = numba_kernels if USE_NUMBA else numpy_kernels
BACKEND = "numba" if USE_NUMBA else "numpy"


def project_ball(X, center, radius):
    return _active.ball(X, center, float(radius))


def project_box(X, lower, upper):
    return _active.box(X, lower, upper)


def project_halfspace(X, normal, offset):
    return _active.halfspace(X, normal, float(offset))


def project_simplex(X, scale):
    return _active.simplex(X, float(scale))


def count_components(mask):
    """Number of 4-connected components of ``True`` cells in a 1-D or 2-D mask."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 1:
        mask = mask[None, :]
    return int(_active.components(np.ascontiguousarray(mask)))
