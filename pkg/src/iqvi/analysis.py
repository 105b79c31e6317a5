"""Parameter conditions for existence, stability and discrete convergence,
together with the constants derived from them.

Every check returns a :class:`ConditionReport` whose entries are strict
inequalities ``lhs < rhs``.  No tolerance is applied; the margin
``rhs - lhs`` is exposed so callers can flag fragile cases.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError
from .model import LambdaSchedule, Mapping, ProblemInstance

__all__ = [
    "ConstantsBundle",
    "ConditionEntry",
    "ConditionReport",
    "check_existence",
    "check_stability",
    "check_discrete",
    "q_factor",
    "optimal_lambda",
    "feasible_alpha_range",
    "he_rate",
    "estimate_constants",
    "EmpiricalConstants",
]


@dataclass(frozen=True)
class ConstantsBundle:
    """``L``: Lipschitz constant of f; ``beta``: its strong-monotonicity
    modulus; ``kappa``: contraction constant of the moving projection;
    ``l``: Lipschitz constant of the translation map; ``alpha`` > 0."""

    L: float
    beta: float
    kappa: float
    l: float  # noqa: E741
    alpha: float

    def __post_init__(self):
        vals = (self.L, self.beta, self.kappa, self.l, self.alpha)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("constants must be finite")
        if self.L < 0 or self.beta < 0 or self.kappa < 0 or self.l < 0:
            raise InputError("L, beta, kappa, l must be nonnegative")
        if self.alpha <= 0:
            raise InputError("alpha must be positive")
        if self.beta > 0 and self.L < self.beta:
            raise InputError("L >= beta is required when beta > 0")

    @classmethod
    def from_problem(cls, problem: ProblemInstance):
        return cls(problem.f.L, problem.f.beta, problem.phi.kappa, problem.phi.l, problem.alpha)

    @property
    def C1(self):
        return (2 * self.alpha * (self.beta - self.l) - (self.L**2 + self.l**2)) / self.alpha

    @property
    def C2(self):
        return self.alpha * (self.beta - self.l)

    @property
    def stability_coefficient(self):
        a, b, L, k = self.alpha, self.beta, self.L, self.kappa
        return 1 + 2 * k - 2 * b + a**2 + L**2 - 2 * a * b

    @property
    def lipschitz_S(self):
        """Lipschitz constant of the vector field per unit gain: 2L + alpha + kappa."""
        return 2 * self.L + self.alpha + self.kappa


def _json_num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class ConditionEntry:
    label: str
    lhs: float | None
    rhs: float | None
    satisfied: bool

    @property
    def margin(self):
        if self.lhs is None or self.rhs is None:
            return None
        return self.rhs - self.lhs

    def to_dict(self):
        return {
            "label": self.label,
            "lhs": _json_num(self.lhs),
            "rhs": _json_num(self.rhs),
            "margin": _json_num(self.margin),
            "satisfied": bool(self.satisfied),
        }


def _lt(label, lhs, rhs):
    return ConditionEntry(label, float(lhs), float(rhs), bool(lhs < rhs))


@dataclass
class ConditionReport:
    name: str
    entries: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return all(e.satisfied for e in self.entries)

    def entry(self, label):
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)

    def fragile(self, threshold=1e-6):
        """Labels of satisfied entries whose margin is below ``threshold``."""
        return [e.label for e in self.entries if e.satisfied and e.margin is not None and e.margin < threshold]

    def to_dict(self):
        return {
            "entries": [e.to_dict() for e in self.entries],
            "derived": {k: _json_num(v) for k, v in self.derived.items()},
            "verdict": self.verdict,
        }


# ----------------------------------------------------------------- checks


def _theta(c):
    rad = c.L**2 - 2 * c.beta * c.alpha + c.alpha**2
    if rad < 0:
        warnings.warn(
            f"L^2 - 2 beta alpha + alpha^2 = {rad} < 0: declared constants are inconsistent; clamped to 0",
            RuntimeWarning,
            stacklevel=3,
        )
        rad = 0.0
    return (math.sqrt(rad) + c.kappa) / c.alpha


def check_existence(c: ConstantsBundle) -> ConditionReport:
    """Unique solvability: ``L^2 - 2 alpha (beta - kappa) < kappa^2``.

    The derived ``theta`` is the contraction factor of the fixed-point map h.
    """
    theta = _theta(c)
    rep = ConditionReport("existence")
    rep.entries.append(_lt("L^2 - 2*alpha*(beta - kappa) < kappa^2", c.L**2 - 2 * c.alpha * (c.beta - c.kappa), c.kappa**2))
    rep.entries.append(_lt("theta < 1", theta, 1.0))
    rep.derived["theta"] = theta
    return rep


def check_stability(c: ConstantsBundle, schedule: LambdaSchedule) -> ConditionReport:
    """Global stability of the continuous network under the gain ``schedule``.

    Besides the quadratic condition this embeds the divergence of the
    integrated gain (decided from the schedule form, not by quadrature) and
    the existence condition.
    """
    coef = c.stability_coefficient
    rep = ConditionReport("stability")
    rep.entries.append(_lt("1 + 2*kappa - 2*beta + alpha^2 + L^2 - 2*alpha*beta < 0", coef, 0.0))
    rep.entries.append(ConditionEntry("integral of lambda diverges", None, None, bool(schedule.diverges())))
    existence = check_existence(c)
    rep.entries.extend(existence.entries)
    lam_low = schedule.lower_bound()
    rep.derived["Lambda_coefficient"] = coef
    rep.derived["lambda_lower_bound"] = lam_low
    rep.derived["zeta"] = -lam_low * coef if lam_low > 0 else None
    rep.derived["theta"] = existence.derived["theta"]
    return rep


def _discrete_report(c, A, B):
    gap = c.beta - c.l
    M = c.L**2 + c.l**2
    rep = ConditionReport("discrete")
    rep.entries.append(_lt("l < beta", c.l, c.beta))
    if gap > 0:
        alpha_low = M / (2 * gap)
        ratio_bound = (2 * c.alpha * gap - M) / (c.alpha**2 * gap)
    else:
        alpha_low, ratio_bound = math.inf, -math.inf
    rep.entries.append(_lt("(L^2 + l^2) / (2*(beta - l)) < alpha", alpha_low, c.alpha))
    rep.entries.append(_lt("B^2/A < (2*alpha*(beta - l) - (L^2 + l^2)) / (alpha^2*(beta - l))", B * B / A, ratio_bound))
    C1, C2 = c.C1, c.C2
    r = 1 + B * B * C2 - A * C1
    rep.entries.append(_lt("r < 1", r, 1.0))
    rep.derived.update({"A": A, "B": B, "C1": C1, "C2": C2, "r": r})
    return rep


def check_discrete(c: ConstantsBundle, A, B) -> ConditionReport:
    """Convergence of the explicit scheme for step sizes in ``(A, B)``.

    Derived: ``C1``, ``C2`` and ``r = 1 + B^2 C2 - A C1``, the uniform bound on
    the squared per-step factor.
    """
    A, B = float(A), float(B)
    if not (0 < A < B):
        raise InputError(f"need 0 < A < B, got A={A}, B={B}")
    return _discrete_report(c, A, B)


def q_factor(c: ConstantsBundle, lambda_n) -> float:
    """Per-step error contraction ``sqrt(1 + lambda^2 C2 - lambda C1)``."""
    q2 = 1 + lambda_n**2 * c.C2 - lambda_n * c.C1
    if q2 < 0:
        raise ParameterError(f"Q^2 = {q2} < 0 for lambda = {lambda_n}: constants outside the convergence regime")
    return math.sqrt(q2)


def optimal_lambda(c: ConstantsBundle) -> float:
    """Step size minimising :func:`q_factor`: ``C1 / (2 C2)``."""
    C1, C2 = c.C1, c.C2
    if C1 <= 0 or C2 <= 0:
        raise ParameterError(f"optimal step needs C1 > 0 and C2 > 0 (C1={C1}, C2={C2})")
    return C1 / (2 * C2)


def feasible_alpha_range(L, beta, kappa):
    """Open interval ``(low, inf)`` of alpha satisfying the existence
    condition, or ``None`` when no alpha works (beta <= kappa)."""
    if beta <= kappa:
        return None
    low = max(kappa, (L**2 - kappa**2) / (2 * (beta - kappa)))
    return (low, math.inf)


def he_rate(c: ConstantsBundle) -> float:
    """Linear rate of the fixed-set scheme with step 1/alpha,
    ``sqrt(1 - (alpha beta - L^2) / alpha^2)``; needs alpha > L^2 / beta."""
    if c.beta <= 0 or not c.alpha > c.L**2 / c.beta:
        raise ParameterError(f"he_rate needs alpha > L^2/beta (alpha={c.alpha}, L={c.L}, beta={c.beta})")
    return math.sqrt(1 - (c.alpha * c.beta - c.L**2) / c.alpha**2)


@dataclass(frozen=True)
class EmpiricalConstants:
    L_emp: float
    beta_emp: float
    pairs_used: int


def estimate_constants(f: Mapping, seed, pairs, box) -> EmpiricalConstants:
    """Sampled audit of the declared constants of ``f``.

    ``L_emp`` is a lower bound on the true Lipschitz constant and ``beta_emp``
    an upper bound on the true monotonicity modulus.  ``box`` is a
    ``(lower, upper)`` pair; coincident pairs are skipped.
    """
    if int(pairs) < 1:
        raise InputError("pairs must be >= 1")
    lower, upper = (np.broadcast_to(np.asarray(b, dtype=float), (f.dim,)) for b in box)
    rng = np.random.default_rng(seed)
    X = lower + rng.random((int(pairs), f.dim)) * (upper - lower)
    Y = lower + rng.random((int(pairs), f.dim)) * (upper - lower)
    D = X - Y
    dd = np.einsum("ij,ij->i", D, D)
    keep = dd > 0
    if not np.any(keep):
        raise InputError("all sampled pairs were degenerate")
    F = f(X[keep]) - f(Y[keep])
    D, dd = D[keep], dd[keep]
    L_emp = float(np.max(np.linalg.norm(F, axis=1) / np.sqrt(dd)))
    beta_emp = float(np.min(np.einsum("ij,ij->i", F, D) / dd))
    return EmpiricalConstants(L_emp, beta_emp, int(keep.sum()))
