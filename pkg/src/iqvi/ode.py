"""Time integration of the projection network dx/dt = S(x, t).

Each base step is split into sub-steps so that the dimensionless step
``lambda(t) * h_sub * (2L + alpha + kappa)`` never exceeds the stiffness cap;
the gain grows without bound for polynomial schedules, so the sub-step count
grows with t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import ConstantsBundle, check_stability
from .errors import InputError, NumericError, RegimeError
from .model import LambdaSchedule, ProblemInstance, _gap, _vec, residual

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "rate_envelope",
    "EnvelopeReport",
    "lyapunov_series",
    "LyapunovSeries",
    "format_float",
]


def format_float(v):
    return format(float(v), ".17g")


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    method: str = "rk4"
    base_step: float = 1e-3
    t0: float = 0.0
    record_every: int = 1
    stiffness_cap: float = 0.5
    divergence_radius: float = 1e6

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise InputError(f"unknown integration method {self.method!r}")
        if not self.base_step > 0:
            raise InputError("base_step must be positive")
        if not (0 <= self.t0 < self.t_end):
            raise InputError("need 0 <= t0 < t_end")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InputError("record_every must be a positive integer")
        if not (0 < self.stiffness_cap <= 1):
            raise InputError("stiffness_cap must lie in (0, 1]")
        if not self.divergence_radius > 0:
            raise InputError("divergence_radius must be positive")

    def to_dict(self):
        return {
            "method": self.method,
            "base_step": self.base_step,
            "t0": self.t0,
            "t_end": self.t_end,
            "record_every": self.record_every,
            "stiffness_cap": self.stiffness_cap,
            "divergence_radius": self.divergence_radius,
        }


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    residual: np.ndarray
    termination: str
    dist: np.ndarray | None = None
    substeps: int = 0

    def __len__(self):
        return len(self.t)

    @property
    def final(self):
        return self.x[-1]

    def to_csv(self):
        n = self.x.shape[1]
        cols = ["t"] + [f"x_{i + 1}" for i in range(n)] + ["residual"]
        if self.dist is not None:
            cols.append("dist")
        lines = [",".join(cols)]
        for k in range(len(self.t)):
            row = [self.t[k], *self.x[k], self.residual[k]]
            if self.dist is not None:
                row.append(self.dist[k])
            lines.append(",".join(format_float(v) for v in row))
        return "\n".join(lines) + "\n"

    def summary(self):
        return {
            "samples": len(self.t),
            "t_final": float(self.t[-1]),
            "x_final": [float(v) for v in self.x[-1]],
            "final_norm": float(np.linalg.norm(self.x[-1])),
            "final_residual": float(self.residual[-1]),
            "termination": self.termination,
            "substeps": int(self.substeps),
        }


def _rk4(problem, schedule, x, t, h):
    k1 = schedule(t) * _gap(problem, x)
    k2 = schedule(t + 0.5 * h) * _gap(problem, x + 0.5 * h * k1)
    k3 = schedule(t + 0.5 * h) * _gap(problem, x + 0.5 * h * k2)
    k4 = schedule(t + h) * _gap(problem, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler(problem, schedule, x, t, h):
    return x + h * schedule(t) * _gap(problem, x)


def integrate(problem: ProblemInstance, schedule: LambdaSchedule, x0, cfg: IntegratorConfig, tol=1e-8, x_star=None):
    """Integrate the network from ``x0`` at ``cfg.t0``.

    Stops early once the residual drops to ``tol`` (pass ``tol=None`` to run
    the full horizon) and flags divergence when ``|x|`` exceeds
    ``cfg.divergence_radius``; neither is an exception.
    """
    x = _vec(x0, problem.dim, "x0").astype(float).copy()
    if x.ndim != 1:
        raise InputError("x0 must be a single point")
    if tol is not None and tol < 0:
        raise InputError("tol must be nonnegative")
    xs = None if x_star is None else _vec(x_star, problem.dim, "x_star")
    c = ConstantsBundle.from_problem(problem)
    stiff = c.lipschitz_S
    step = _rk4 if cfg.method == "rk4" else _euler

    ts, xs_rec, rs = [cfg.t0], [x.copy()], [residual(problem, x)]
    termination = "reached_t_end"
    substeps = 0
    k = 0
    t = cfg.t0
    recorded = True

    def partial():
        return _pack(ts, xs_rec, rs, "numeric_error", xs, substeps)

    if tol is not None and rs[0] <= tol:
        return _pack(ts, xs_rec, rs, "residual_below_tol", xs, substeps)

    while t < cfg.t_end:
        t_next = min(cfg.t0 + (k + 1) * cfg.base_step, cfg.t_end)
        h = t_next - t
        m = max(1, math.ceil(schedule.max_on(t, t_next) * h * stiff / cfg.stiffness_cap))
        h_sub = h / m
        for j in range(m):
            x = step(problem, schedule, x, t + j * h_sub, h_sub)
        substeps += m
        k += 1
        t = t_next
        if not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite state at t={t}", partial=partial())
        r = residual(problem, x)
        recorded = k % cfg.record_every == 0
        if recorded:
            ts.append(t)
            xs_rec.append(x.copy())
            rs.append(r)
        stop = None
        if tol is not None and r <= tol:
            stop = "residual_below_tol"
        elif np.linalg.norm(x) > cfg.divergence_radius:
            stop = "diverged"
        if stop:
            termination = stop
            break
    if not recorded:
        ts.append(t)
        xs_rec.append(x.copy())
        rs.append(r)
    return _pack(ts, xs_rec, rs, termination, xs, substeps)


def _pack(ts, xs_rec, rs, termination, x_star, substeps):
    X = np.array(xs_rec)
    dist = None if x_star is None else np.linalg.norm(X - x_star, axis=1)
    return Trajectory(np.array(ts), X, np.array(rs, dtype=float), termination, dist, substeps)


# ---------------------------------------------------------------- envelopes


@dataclass
class EnvelopeReport:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    checked: np.ndarray
    passed: np.ndarray
    coefficient: float
    exponent: float
    slack: float
    notes: list = field(default_factory=list)

    @property
    def overall(self):
        return bool(np.all(self.passed[self.checked]))

    @property
    def worst_margin(self):
        m = (self.rhs - self.lhs)[self.checked]
        return float(m.min()) if m.size else math.inf

    def to_dict(self):
        return {
            "coefficient": self.coefficient,
            "exponent": self.exponent,
            "slack": self.slack,
            "samples_checked": int(self.checked.sum()),
            "samples_failed": int((~self.passed & self.checked).sum()),
            "worst_margin": self.worst_margin if self.checked.any() else None,
            "overall": self.overall,
            "notes": list(self.notes),
        }


def rate_envelope(traj: Trajectory, x_star, c: ConstantsBundle, schedule: LambdaSchedule, slack=1e-3, exponent=0.5, floor=1e-12):
    """Sample-wise check of the exponential decay envelope

        log|x(t) - x*| - log|x(t0) - x*| <= exponent * Lambda_coef * int_{t0}^t lambda + slack

    ``exponent=0.5`` is the bound that follows from dV/dt <= Lambda(t) V for
    V = |x - x*|^2; ``exponent=1`` is the stronger form stated for the norm
    itself.  Samples within ``floor`` of x* are not checked.
    """
    if x_star is None:
        raise InputError("rate_envelope needs the solution x_star")
    stab = check_stability(c, schedule)
    if not stab.verdict:
        raise RegimeError("stability conditions do not hold; the envelope is not guaranteed")
    xs = _vec(x_star, traj.x.shape[1], "x_star")
    d = np.linalg.norm(traj.x - xs, axis=1)
    coef = c.stability_coefficient
    t0 = float(traj.t[0])
    rhs = exponent * coef * schedule.integral(t0, traj.t) + slack
    checked = (d > floor) & (d[0] > floor)
    with np.errstate(divide="ignore"):
        lhs = np.where(checked, np.log(np.where(checked, d, 1.0)) - np.log(max(d[0], floor)), -np.inf)
    passed = lhs <= rhs
    notes = ["slack is an integration-error allowance, not part of the continuous-time bound"]
    return EnvelopeReport(np.asarray(traj.t), lhs, rhs, checked, passed, coef, float(exponent), float(slack), notes)


@dataclass
class LyapunovSeries:
    t: np.ndarray
    V: np.ndarray
    V_dot: np.ndarray
    eps: np.ndarray
    bound: np.ndarray | None
    fraction_ok: float | None

    def strictly_decreasing(self, floor=1e-12):
        """V_{k+1} < V_k for every sample with V_k above ``floor``."""
        active = self.V[:-1] > floor
        return bool(np.all(self.V[1:][active] < self.V[:-1][active]))


def lyapunov_series(traj: Trajectory, x_star, c: ConstantsBundle | None = None, schedule: LambdaSchedule | None = None):
    """V = |x - x*|^2 along the samples with a finite-difference dV/dt.

    When constants and schedule are given, also reports the fraction of
    samples with ``dV/dt <= Lambda(t) V + eps``; ``eps`` is the change of the
    one-sided slopes around each sample, which is first order in the spacing.
    """
    if x_star is None:
        raise InputError("lyapunov_series needs x_star")
    t = np.asarray(traj.t, dtype=float)
    if len(t) < 3:
        raise InputError("need at least 3 samples")
    if np.any(np.diff(t) <= 0):
        raise InputError("sample times must be strictly increasing")
    xs = _vec(x_star, traj.x.shape[1], "x_star")
    V = np.sum((traj.x - xs) ** 2, axis=1)
    V_dot = np.gradient(V, t)
    slopes = np.diff(V) / np.diff(t)
    eps = np.empty_like(V)
    eps[1:-1] = np.abs(np.diff(slopes))
    eps[0], eps[-1] = eps[1], eps[-2]
    bound = fraction = None
    if c is not None and schedule is not None:
        bound = c.stability_coefficient * schedule(t) * V + eps
        fraction = float(np.mean(V_dot <= bound))
    return LyapunovSeries(t, V, V_dot, eps, bound, fraction)
