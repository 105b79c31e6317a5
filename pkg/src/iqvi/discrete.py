"""Iterative solvers: the explicit discretisation of the network with
variable step sizes, its fixed-set special case with step 1/alpha, and
Picard iteration on the contraction map h.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import ConstantsBundle, _discrete_report, check_existence, he_rate, q_factor
from .errors import InputError, NumericError, ParameterError, RegimeError
from .model import ConstantSet, ProblemInstance, _gap, _vec, residual
from .ode import format_float

__all__ = [
    "ConstantStep",
    "CyclicSteps",
    "SeededUniform",
    "lambda_seq_from_dict",
    "IterationConfig",
    "IterateLog",
    "iterate",
    "he_iterate",
    "banach_iterate",
    "per_step_certificate",
    "StepCertificate",
    "step_regime",
]


class ConstantStep:
    kind = "constant"
    bounds = None

    def __init__(self, value):
        self.value = float(value)
        if not self.value > 0:
            raise InputError("step size must be positive")

    def generator(self):
        while True:
            yield self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


class CyclicSteps:
    kind = "cyclic"
    bounds = None

    def __init__(self, values):
        self.values = tuple(float(v) for v in values)
        if not self.values or min(self.values) <= 0:
            raise InputError("cyclic steps must be a non-empty list of positive values")

    def generator(self):
        while True:
            yield from self.values

    def to_dict(self):
        return {"kind": self.kind, "values": list(self.values)}


class SeededUniform:
    """Independent uniform draws from the open interval ``(A, B)``."""

    kind = "uniform"

    def __init__(self, A, B, seed):
        self.A, self.B, self.seed = float(A), float(B), int(seed)
        if not 0 < self.A < self.B:
            raise InputError("need 0 < A < B")
        self.bounds = (self.A, self.B)

    def generator(self):
        rng = np.random.default_rng(self.seed)
        while True:
            v = rng.uniform(self.A, self.B)
            if self.A < v < self.B:
                yield float(v)

    def to_dict(self):
        return {"kind": self.kind, "A": self.A, "B": self.B, "seed": self.seed}


def lambda_seq_from_dict(d):
    kind = d.get("kind")
    if kind == "constant":
        return ConstantStep(d["value"])
    if kind == "cyclic":
        return CyclicSteps(d["values"])
    if kind == "uniform":
        return SeededUniform(d["A"], d["B"], d["seed"])
    raise InputError(f"unknown step sequence kind {kind!r}")


@dataclass(frozen=True)
class IterationConfig:
    lambda_seq: object
    h: float = 1.0
    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if not self.h > 0:
            raise InputError("h must be positive")
        if self.tol < 0:
            raise InputError("tol must be nonnegative")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InputError("max_iter must be a positive integer")


@dataclass
class IterateLog:
    """Iterates x_0, x_1, ... with residuals.  ``lambda_used[k]`` is the
    effective gain of the step x_k -> x_{k+1}; the last entry is NaN."""

    x: np.ndarray
    residual: np.ndarray
    lambda_used: np.ndarray
    termination: str
    dist: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return np.arange(len(self.residual))

    @property
    def iterations(self):
        return len(self.residual) - 1

    @property
    def final(self):
        return self.x[-1]

    def step_ratios(self):
        """``|x_{k+1} - x_k| / |x_k - x_{k-1}|`` for k >= 1 (NaN where undefined)."""
        steps = np.linalg.norm(np.diff(self.x, axis=0), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(steps[:-1] > 0, steps[1:] / np.where(steps[:-1] > 0, steps[:-1], 1.0), np.nan)

    def to_csv(self):
        dim = self.x.shape[1]
        cols = ["n"] + [f"x_{i + 1}" for i in range(dim)] + ["residual", "lambda"]
        if self.dist is not None:
            cols.append("dist")
        lines = [",".join(cols)]
        for k in range(len(self.residual)):
            lam = self.lambda_used[k]
            row = [str(k)] + [format_float(v) for v in self.x[k]] + [format_float(self.residual[k])]
            row.append("" if math.isnan(lam) else format_float(lam))
            if self.dist is not None:
                row.append(format_float(self.dist[k]))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def summary(self):
        return {
            "iterations": self.iterations,
            "final_residual": float(self.residual[-1]),
            "termination": self.termination,
        }


def _run(problem, gains, x0, tol, max_iter, x_star, meta):
    x = _vec(x0, problem.dim, "x0").astype(float).copy()
    if x.ndim != 1:
        raise InputError("x0 must be a single point")
    xs_ = None if x_star is None else _vec(x_star, problem.dim, "x_star")
    X, R, lams = [x.copy()], [residual(problem, x)], []

    def pack(termination):
        Xa = np.array(X)
        lam = np.append(np.array(lams, dtype=float), np.nan)
        dist = None if xs_ is None else np.linalg.norm(Xa - xs_, axis=1)
        return IterateLog(Xa, np.array(R, dtype=float), lam, termination, dist, dict(meta))

    termination = "max_iter"
    for _ in range(max_iter + 1):
        if R[-1] <= tol:
            termination = "residual_below_tol"
            break
        if len(lams) == max_iter:
            break
        lam = next(gains)
        try:
            x = x + lam * _gap(problem, x)
        except NumericError as exc:
            raise NumericError(str(exc), partial=pack("numeric_error")) from None
        if not np.all(np.isfinite(x)):
            raise NumericError("non-finite iterate", partial=pack("numeric_error"))
        lams.append(lam)
        X.append(x.copy())
        R.append(residual(problem, x))
    return pack(termination)


def iterate(problem: ProblemInstance, cfg: IterationConfig, x0, x_star=None) -> IterateLog:
    """x_{n+1} = x_n + lambda_n h (P_Phi(x_n)(f(x_n) - alpha x_n) - f(x_n)).

    Stops at ``residual <= cfg.tol`` or after ``cfg.max_iter`` steps.  With
    ``h != 1`` the recorded gains are the effective products lambda_n * h.
    """
    base = cfg.lambda_seq.generator()
    gains = (lam * cfg.h for lam in base) if cfg.h != 1.0 else base
    meta = {"lambda_seq": cfg.lambda_seq.to_dict(), "h": cfg.h, "effective_gain": cfg.h != 1.0}
    if cfg.lambda_seq.bounds is not None:
        A, B = cfg.lambda_seq.bounds
        meta["bounds"] = [A * cfg.h, B * cfg.h]
    return _run(problem, gains, x0, cfg.tol, cfg.max_iter, x_star, meta)


def he_iterate(problem: ProblemInstance, x0, tol=1e-8, max_iter=1000, x_star=None) -> IterateLog:
    """Fixed-set scheme x_{n+1} = x_n + (P_K(f(x_n) - alpha x_n) - f(x_n)) / alpha.

    Requires a constant moving set and alpha > L^2 / beta; the linear rate is
    stored under ``meta["rate"]``.
    """
    if not isinstance(problem.phi, ConstantSet):
        raise InputError("he_iterate needs a constant moving set")
    c = ConstantsBundle.from_problem(problem)
    rate = he_rate(c)
    gain = 1.0 / problem.alpha
    return _run(problem, ConstantStep(gain).generator(), x0, tol, max_iter, x_star, {"rate": rate})


def banach_iterate(problem: ProblemInstance, x0, tol=1e-10, max_iter=200, x_star=None) -> IterateLog:
    """Picard iteration x_{k+1} = h(x_k).

    ``meta`` carries the contraction factor ``theta`` and the a-priori error
    bounds ``theta^k / (1 - theta) * |x_1 - x_0|``.
    """
    c = ConstantsBundle.from_problem(problem)
    rep = check_existence(c)
    theta = rep.derived["theta"]
    if not rep.verdict:
        raise RegimeError(f"h is not a strict contraction (theta = {theta})")
    gain = 1.0 / problem.alpha
    log = _run(problem, ConstantStep(gain).generator(), x0, tol, max_iter, x_star, {"theta": theta})
    first = float(np.linalg.norm(log.x[1] - log.x[0])) if len(log.x) > 1 else 0.0
    k = np.arange(len(log.x))
    log.meta["apriori_bound"] = (theta**k / (1 - theta) * first).tolist()
    return log


# --------------------------------------------------------------- certificate


@dataclass
class StepCertificate:
    regime_ok: bool
    regime: dict
    ratios: np.ndarray
    q: np.ndarray | None
    step_pass: np.ndarray | None
    envelope: np.ndarray | None
    envelope_pass: np.ndarray | None
    effective_gain: bool = False
    notes: list = field(default_factory=list)

    @property
    def overall(self):
        if not self.regime_ok:
            return None
        return bool(np.all(self.step_pass) and np.all(self.envelope_pass))

    def to_dict(self):
        def clean(a):
            return None if a is None else [None if not np.isfinite(v) else float(v) for v in a]

        return {
            "regime_ok": self.regime_ok,
            "regime": self.regime,
            "effective_gain": self.effective_gain,
            "ratios": clean(self.ratios),
            "q": clean(self.q),
            "steps_passed": None if self.step_pass is None else int(np.sum(self.step_pass)),
            "steps_total": len(self.ratios),
            "envelope_passed": None if self.envelope_pass is None else bool(np.all(self.envelope_pass)),
            "overall": self.overall,
            "notes": list(self.notes),
        }


def step_regime(lambdas, c: ConstantsBundle, A=None, B=None):
    """Whether recorded gains fall in a regime where the discrete convergence
    conditions hold.  Returns ``(ok, report_dict, notes)``.

    With explicit ``(A, B)`` every gain must lie strictly inside; otherwise
    the closed range of the gains is tested, which is equivalent to the
    existence of a valid open interval because all conditions are strict.
    """
    lam = np.asarray(lambdas, dtype=float)
    notes = []
    if A is not None and B is not None:
        if not 0 < A < B:
            raise InputError("need 0 < A < B")
        inside = bool(np.all((lam > A) & (lam < B)))
        rep = _discrete_report(c, float(A), float(B))
    else:
        inside = True
        rep = _discrete_report(c, float(lam.min()), float(lam.max()))
        notes.append("regime taken as the closed range of the recorded gains")
    regime = rep.to_dict()
    regime["gains_inside"] = inside
    return inside and rep.verdict, regime, notes


def per_step_certificate(log: IterateLog, x_star, c: ConstantsBundle, A=None, B=None, tol=1e-12) -> StepCertificate:
    """Check ``|x_{n+1} - x*| <= Q(lambda_n) |x_n - x*|`` per step and the
    global envelope ``|x_n - x*| < r^(n/2) |x_0 - x*|``.

    The regime is the interval ``(A, B)`` when given, else the closed range of
    the recorded gains.  Outside the regime only observed ratios are reported.
    """
    if x_star is None:
        raise InputError("per_step_certificate needs x_star")
    lam = np.asarray(log.lambda_used, dtype=float)[:-1]
    if lam.size != len(log.x) - 1 or np.any(np.isnan(lam)):
        raise InputError("log lacks a recorded step size for some step")
    xs = _vec(x_star, log.x.shape[1], "x_star")
    d = np.linalg.norm(log.x - xs, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(d[:-1] > 0, d[1:] / np.where(d[:-1] > 0, d[:-1], 1.0), np.nan)
    notes = []
    if log.meta.get("effective_gain"):
        notes.append("gains are effective products lambda_n * h_n")
    if lam.size == 0:
        return StepCertificate(True, {}, ratios, np.array([]), np.array([], bool), np.array([d[0]]), np.array([True]), bool(log.meta.get("effective_gain")), notes)

    regime_ok, regime, regime_notes = step_regime(lam, c, A, B)
    notes.extend(regime_notes)
    if not regime_ok:
        notes.append("convergence regime violated; ratios are observations only")
        return StepCertificate(False, regime, ratios, None, None, None, None, bool(log.meta.get("effective_gain")), notes)

    try:
        q = np.array([q_factor(c, v) for v in lam])
    except ParameterError as exc:
        notes.append(str(exc))
        return StepCertificate(False, regime, ratios, None, None, None, None, bool(log.meta.get("effective_gain")), notes)
    step_pass = d[1:] <= q * d[:-1] + tol
    r = regime["derived"]["r"]
    envelope = r ** (np.arange(len(d)) / 2.0) * d[0]
    envelope_pass = d < envelope + tol
    return StepCertificate(True, regime, ratios, q, step_pass, envelope, envelope_pass, bool(log.meta.get("effective_gain")), notes)
