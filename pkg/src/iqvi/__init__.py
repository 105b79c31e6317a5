"""Solvers and condition checks for inverse quasi-variational inequalities

    find x*  with  f(x*) in Phi(x*)  and  <x*, y - f(x*)> >= 0  for all y in Phi(x*)

where Phi(x) = s(x) + K is a translated convex set.
"""
from .analysis import (
    ConditionReport,
    ConstantsBundle,
    check_discrete,
    check_existence,
    check_stability,
    estimate_constants,
    feasible_alpha_range,
    he_rate,
    optimal_lambda,
    q_factor,
)
from .certify import certify_solution, grid_oracle, kappa_probe, projection_oracle
from .discrete import (
    ConstantStep,
    CyclicSteps,
    IterateLog,
    IterationConfig,
    SeededUniform,
    banach_iterate,
    he_iterate,
    iterate,
    per_step_certificate,
)
from .errors import InputError, IQVIError, NumericError, ParameterError, RegimeError
from .kernels import BACKEND
from .model import (
    Affine,
    Componentwise,
    ConstantGain,
    ConstantSet,
    DeclaredKappa,
    PolynomialGain,
    ProblemInstance,
    ScaledIdentity,
    Translation,
    contraction_map,
    moving_project,
    residual,
    vector_field,
)
from .ode import IntegratorConfig, Trajectory, integrate, lyapunov_series, rate_envelope
from .sets import Ball, Box, Halfspace, Interval, Simplex, contains, project, sample

__version__ = "0.1.0"
