"""Problem instances: the mapping f, the moving set Phi, the gain schedule,
and the composite maps built from them (moving projection, residual of the
projection equation, network vector field, contraction map).

All vector arguments accept either one point of shape ``(n,)`` or a stack of
points of shape ``(m, n)``; maps act row-wise.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InputError, NumericError
from .sets import ConvexSet, set_from_dict

__all__ = [
    "Mapping",
    "Affine",
    "ScaledIdentity",
    "Componentwise",
    "COMPONENT_FUNCTIONS",
    "MovingSet",
    "Translation",
    "ConstantSet",
    "DeclaredKappa",
    "ProblemInstance",
    "LambdaSchedule",
    "ConstantGain",
    "PolynomialGain",
    "moving_project",
    "residual",
    "vector_field",
    "contraction_map",
    "mapping_from_dict",
    "moving_set_from_dict",
    "schedule_from_dict",
]


def _vec(x, dim, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != dim:
        raise InputError(f"{name} has dimension {x.shape[-1]}, expected {dim}")
    return x


# ------------------------------------------------------------------ mappings


class Mapping:
    """Single-valued map R^n -> R^n with declared constants.

    ``L`` is a Lipschitz constant and ``beta`` a strong-monotonicity modulus.
    ``beta == 0`` makes no monotonicity claim at all.
    """

    kind = ""
    dim = 0
    L = 0.0
    beta = 0.0

    def _declare(self, L, beta, L_decl, beta_decl):
        # declared constants may be looser than the computed ones, never tighter
        if L_decl is not None:
            if L_decl < L - 1e-12 * max(1.0, L):
                raise InputError(f"declared L={L_decl} is below the true Lipschitz constant {L}")
            L = float(L_decl)
        if beta_decl is not None:
            if beta_decl > beta + 1e-12 * max(1.0, beta) or beta_decl < 0:
                raise InputError(f"declared beta={beta_decl} is not a valid modulus (true value {beta})")
            beta = float(beta_decl)
        if beta > 0 and L < beta:
            raise InputError("a strongly monotone Lipschitz map needs L >= beta")
        self.L = float(L)
        self.beta = float(beta)

    def __call__(self, x):
        return self._eval(_vec(x, self.dim))

    def _eval(self, x):
        raise NotImplementedError

    def _extra(self):
        return {}

    def to_dict(self):
        d = {"kind": self.kind}
        d.update(self._extra())
        d["L"] = self.L
        d["beta"] = self.beta
        return d


class Affine(Mapping):
    """``x -> M x + q``.  L is the spectral norm of M, beta the smallest
    eigenvalue of the symmetric part (clamped at zero)."""

    kind = "affine"

    def __init__(self, matrix, shift=None, L=None, beta=None):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError("affine matrix must be square")
        self.dim = M.shape[0]
        q = np.zeros(self.dim) if shift is None else np.array(shift, dtype=float).reshape(-1)
        if q.size != self.dim:
            raise InputError("affine shift length must match the matrix")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(q))):
            raise InputError("affine parameters must be finite")
        M.setflags(write=False)
        q.setflags(write=False)
        self.matrix, self.shift = M, q
        L_true = float(np.linalg.norm(M, 2))
        beta_true = max(float(np.linalg.eigvalsh(0.5 * (M + M.T))[0]), 0.0)
        self._declare(L_true, beta_true, L, beta)

    def _eval(self, x):
        return x @ self.matrix.T + self.shift

    def _extra(self):
        return {"matrix": self.matrix.tolist(), "shift": self.shift.tolist()}


class ScaledIdentity(Mapping):
    """``x -> c x``."""

    kind = "scaled_identity"

    def __init__(self, factor, dim, L=None, beta=None):
        self.factor = float(factor)
        self.dim = int(dim)
        if self.dim < 1 or not math.isfinite(self.factor):
            raise InputError("scaled identity needs dim >= 1 and a finite factor")
        self._declare(abs(self.factor), max(self.factor, 0.0), L, beta)

    def _eval(self, x):
        return self.factor * x

    def _extra(self):
        return {"factor": self.factor, "dim": self.dim}


# name -> (function, Lipschitz constant, monotonicity modulus)
COMPONENT_FUNCTIONS = {
    "identity": (lambda v: v.copy(), 1.0, 1.0),
    "zero": (np.zeros_like, 0.0, 0.0),
    "inv1p_abs": (lambda v: 1.0 / (1.0 + np.abs(v)), 1.0, 0.0),
    "tanh": (np.tanh, 1.0, 0.0),
    "atan": (np.arctan, 1.0, 0.0),
    "sigmoid": (lambda v: 0.5 * (1.0 + np.tanh(0.5 * v)), 0.25, 0.0),
    "softplus": (lambda v: np.logaddexp(0.0, v), 1.0, 0.0),
}


class Componentwise(Mapping):
    """Applies a named scalar function to each coordinate.

    ``functions`` is one name (used for every coordinate) or a list with one
    name per coordinate.  Constants come from the catalog table: L is the
    largest per-coordinate constant and beta the smallest.
    """

    kind = "componentwise"

    def __init__(self, functions, dim=None, L=None, beta=None):
        names = [functions] if isinstance(functions, str) else list(functions)
        if dim is None:
            dim = len(names)
        self.dim = int(dim)
        if len(names) == 1:
            names = names * self.dim
        if len(names) != self.dim or self.dim < 1:
            raise InputError("componentwise map needs one function name per coordinate")
        unknown = [nm for nm in names if nm not in COMPONENT_FUNCTIONS]
        if unknown:
            raise InputError(f"unknown component functions {unknown}; known: {sorted(COMPONENT_FUNCTIONS)}")
        self.functions = tuple(names)
        entries = [COMPONENT_FUNCTIONS[nm] for nm in names]
        self._fns = [e[0] for e in entries]
        self._uniform = len(set(names)) == 1
        self._declare(max(e[1] for e in entries), min(e[2] for e in entries), L, beta)

    def _eval(self, x):
        if self._uniform:
            return self._fns[0](x)
        out = np.empty_like(x)
        for j, fn in enumerate(self._fns):
            out[..., j] = fn(x[..., j])
        return out

    def _extra(self):
        return {"functions": list(self.functions), "dim": self.dim}


def mapping_from_dict(d, dim=None):
    kind = d.get("kind")
    L, beta = d.get("L"), d.get("beta")
    if kind == "affine":
        return Affine(d["matrix"], d.get("shift"), L=L, beta=beta)
    if kind == "scaled_identity":
        return ScaledIdentity(d["factor"], d.get("dim", dim), L=L, beta=beta)
    if kind == "componentwise":
        return Componentwise(d["functions"], d.get("dim", dim), L=L, beta=beta)
    raise InputError(f"unknown mapping kind {kind!r}")


# --------------------------------------------------------------- moving sets


class MovingSet:
    """Set-valued map x -> Phi(x) with closed convex values.

    ``kappa`` is the constant in ``|P_Phi(x)(z) - P_Phi(y)(z)| <= kappa |x - y|``
    and ``l`` the Lipschitz constant of the translation map (equal to kappa in
    the translation model).
    """

    kind = ""
    dim = 0
    kappa = 0.0
    l = 0.0  # noqa: E741

    def project(self, x, z):
        raise NotImplementedError

    def sample_image(self, x, seed, count):
        """Points of Phi(x) for a single point x."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


class Translation(MovingSet):
    """``Phi(x) = s(x) + base``."""

    kind = "translation"

    def __init__(self, shift_map: Mapping, base: ConvexSet):
        if shift_map.dim != base.dim:
            raise InputError("translation map and base set dimensions differ")
        self.shift_map, self.base = shift_map, base
        self.dim = base.dim
        self.l = self.kappa = float(shift_map.L)

    def project(self, x, z):
        s = self.shift_map(x)
        return s + self.base.project(_vec(z, self.dim, "z") - s)

    def sample_image(self, x, seed, count):
        return self.shift_map(_vec(x, self.dim)) + self.base.sample(seed, count)

    def to_dict(self):
        return {"kind": self.kind, "shift_map": self.shift_map.to_dict(), "base": self.base.to_dict()}


class ConstantSet(MovingSet):
    """``Phi(x) = base`` for every x."""

    kind = "constant"

    def __init__(self, base: ConvexSet):
        self.base = base
        self.dim = base.dim

    def project(self, x, z):
        _vec(x, self.dim)
        return self.base.project(_vec(z, self.dim, "z"))

    def sample_image(self, x, seed, count):
        return self.base.sample(seed, count)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict()}


class DeclaredKappa(MovingSet):
    """User-supplied projection rule ``rule(x, z) -> P_Phi(x)(z)`` with a
    declared kappa.  The constant is taken on trust; see
    :func:`iqvi.certify.kappa_probe` for an empirical lower bound.
    """

    kind = "declared_kappa"

    def __init__(self, rule, kappa, dim):
        self.rule = rule
        self.kappa = self.l = float(kappa)
        self.dim = int(dim)
        if self.kappa < 0:
            raise InputError("kappa must be nonnegative")

    def project(self, x, z):
        x = _vec(x, self.dim)
        z = _vec(z, self.dim, "z")
        if x.ndim == 1 and z.ndim == 1:
            return np.asarray(self.rule(x, z), dtype=float)
        X, Z = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(z))
        return np.array([self.rule(a, b) for a, b in zip(X, Z)], dtype=float)

    def sample_image(self, x, seed, count):
        rng = np.random.default_rng(seed)
        x = _vec(x, self.dim)
        anchor = self.project(x, x)
        draws = anchor + rng.standard_normal((count, self.dim)) * max(1.0, float(np.linalg.norm(anchor)))
        return self.project(np.broadcast_to(x, draws.shape), draws)

    def to_dict(self):
        raise InputError("declared-kappa moving sets cannot be serialized")


def moving_set_from_dict(d, dim=None):
    kind = d.get("kind")
    if kind == "translation":
        base = set_from_dict(d["base"])
        return Translation(mapping_from_dict(d["shift_map"], base.dim), base)
    if kind == "constant":
        return ConstantSet(set_from_dict(d["base"]))
    raise InputError(f"unknown moving set kind {kind!r}")


# ------------------------------------------------------------------ problem


class ProblemInstance:
    """IQVIP: find x with f(x) in Phi(x) and <x, y - f(x)> >= 0 on Phi(x)."""

    def __init__(self, f: Mapping, phi: MovingSet, alpha, dim=None):
        self.dim = int(f.dim if dim is None else dim)
        if f.dim != self.dim or phi.dim != self.dim:
            raise InputError(f"dimension mismatch: dim={self.dim}, f={f.dim}, phi={phi.dim}")
        self.alpha = float(alpha)
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InputError("alpha must be positive and finite")
        self.f, self.phi = f, phi

    def to_dict(self):
        return {"dim": self.dim, "mapping": self.f.to_dict(), "moving_set": self.phi.to_dict(), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d):
        dim = d["dim"]
        return cls(mapping_from_dict(d["mapping"], dim), moving_set_from_dict(d["moving_set"], dim), d["alpha"], dim)

    def __repr__(self):
        return f"ProblemInstance(dim={self.dim}, f={self.f.kind}, phi={self.phi.kind}, alpha={self.alpha})"


# ---------------------------------------------------------------- schedules


class LambdaSchedule:
    """Positive continuous gain t -> lambda(t) on [0, inf)."""

    kind = ""

    def __call__(self, t):
        raise NotImplementedError

    def integral(self, t0, t1):
        """Closed-form integral of lambda over [t0, t1]."""
        raise NotImplementedError

    def lower_bound(self):
        """inf of lambda on [0, inf)."""
        raise NotImplementedError

    def max_on(self, t0, t1):
        raise NotImplementedError

    def diverges(self):
        """Whether the integral of lambda over [t0, inf) is infinite."""
        raise NotImplementedError


class ConstantGain(LambdaSchedule):
    kind = "constant"

    def __init__(self, gain):
        self.gain = float(gain)
        if not (self.gain > 0 and math.isfinite(self.gain)):
            raise InputError("constant gain must be positive")

    def __call__(self, t):
        return self.gain + 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else self.gain

    def integral(self, t0, t1):
        return self.gain * (np.asarray(t1, dtype=float) - t0)

    def lower_bound(self):
        return self.gain

    def max_on(self, t0, t1):
        return self.gain

    def diverges(self):
        return True

    def to_dict(self):
        return {"kind": self.kind, "gain": self.gain}


class PolynomialGain(LambdaSchedule):
    """``lambda(t) = a + b t**p`` with a > 0 and b, p >= 0 (nondecreasing)."""

    kind = "polynomial"

    def __init__(self, a, b=0.0, p=1.0):
        self.a, self.b, self.p = float(a), float(b), float(p)
        if not (self.a > 0 and self.b >= 0 and self.p >= 0):
            raise InputError("polynomial gain needs a > 0, b >= 0, p >= 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.a + self.b * t**self.p
        return float(val) if val.ndim == 0 else val

    def integral(self, t0, t1):
        t1 = np.asarray(t1, dtype=float)
        q = self.p + 1.0
        return self.a * (t1 - t0) + self.b * (t1**q - float(t0) ** q) / q

    def lower_bound(self):
        return self.a + (self.b if self.p == 0 else 0.0)

    def max_on(self, t0, t1):
        return self(max(t0, t1))

    def diverges(self):
        return self.a > 0 or self.b > 0

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "p": self.p}


def schedule_from_dict(d):
    kind = d.get("kind")
    if kind == "constant":
        return ConstantGain(d["gain"])
    if kind == "polynomial":
        return PolynomialGain(d["a"], d.get("b", 0.0), d.get("p", 1.0))
    raise InputError(f"unknown schedule kind {kind!r}")


# ----------------------------------------------------------- composite maps


def moving_project(phi: MovingSet, x, z):
    """P_Phi(x)(z); for translations via P_{s(x)+K}(z) = s(x) + P_K(z - s(x))."""
    return phi.project(x, z)


def _gap(problem, x):
    # P_Phi(x)(f(x) - alpha x) - f(x)
    x = _vec(x, problem.dim)
    with np.errstate(invalid="ignore", over="ignore"):
        fx = problem.f(x)
        g = problem.phi.project(x, fx - problem.alpha * x) - fx
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite value in the projection equation")
    return g


def residual(problem: ProblemInstance, x):
    """``|f(x) - P_Phi(x)(f(x) - alpha x)|``; zero exactly at solutions."""
    g = _gap(problem, x)
    r = np.linalg.norm(g, axis=-1)
    return float(r) if np.ndim(r) == 0 else r


def vector_field(problem: ProblemInstance, schedule: LambdaSchedule, x, t):
    """Network right-hand side ``lambda(t) (P_Phi(x)(f(x) - alpha x) - f(x))``."""
    if t < 0:
        raise InputError("time must be nonnegative")
    return schedule(t) * _gap(problem, x)


def contraction_map(problem: ProblemInstance, x):
    """``h(x) = x + (P_Phi(x)(f(x) - alpha x) - f(x)) / alpha``."""
    x = _vec(x, problem.dim)
    return x + _gap(problem, x) / problem.alpha
