import numpy as np
import pytest

from iqvi.analysis import ConstantsBundle, he_rate, q_factor
from iqvi.discrete import (
    ConstantStep,
    CyclicSteps,
    IterateLog,
    IterationConfig,
    SeededUniform,
    banach_iterate,
    he_iterate,
    iterate,
    lambda_seq_from_dict,
    per_step_certificate,
)
from iqvi.errors import InputError, ParameterError, RegimeError
from iqvi.model import ConstantGain, ProblemInstance, ScaledIdentity, Translation, residual, vector_field
from iqvi.ode import IntegratorConfig, integrate
from iqvi.sets import Ball

from conftest import ball_problem, fixed_ball_problem, interval_problem

X0 = np.ones(3)
ORIGIN = np.zeros(3)


def test_constant_step_converges(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.2), max_iter=400), X0, x_star=ORIGIN)
    assert log.termination == "residual_below_tol"
    assert log.residual[-1] <= 1e-8 and log.iterations <= 400
    # guaranteed count from Q ~ 0.91992
    assert log.iterations <= np.ceil(np.log(1e-8 / np.linalg.norm(X0)) / np.log(q_factor(ConstantsBundle.from_problem(p7), 0.2))) + 30


def test_start_at_solution(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), ORIGIN)
    assert log.iterations == 0 and log.residual[0] == 0


def test_uniform_steps_stay_inside(p7):
    seq = SeededUniform(0.18, 0.24, seed=3)
    log = iterate(p7, IterationConfig(seq), X0, x_star=ORIGIN)
    lam = log.lambda_used[:-1]
    assert log.termination == "residual_below_tol"
    assert np.all((lam > 0.18) & (lam < 0.24))


def test_uniform_deterministic(p7):
    a = iterate(p7, IterationConfig(SeededUniform(0.18, 0.24, 3)), X0)
    b = iterate(p7, IterationConfig(SeededUniform(0.18, 0.24, 3)), X0)
    assert a.to_csv() == b.to_csv()
    c = iterate(p7, IterationConfig(SeededUniform(0.18, 0.24, 4)), X0)
    assert not np.array_equal(a.lambda_used, c.lambda_used)


def test_one_step_is_euler_step():
    rng = np.random.default_rng(12)
    p = ball_problem()
    for x in rng.normal(size=(100, 3)) * 4:
        lam = rng.uniform(0.05, 0.5)
        log = iterate(p, IterationConfig(ConstantStep(lam), tol=0, max_iter=1), x)
        euler = x + vector_field(p, ConstantGain(lam), x, 0.0)
        np.testing.assert_allclose(log.x[1], euler, atol=1e-12)


def test_step_size_folding(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.4), h=0.5), X0)
    ref = iterate(p7, IterationConfig(ConstantStep(0.2)), X0)
    np.testing.assert_allclose(log.x, ref.x, atol=1e-15)
    assert log.meta["effective_gain"]
    np.testing.assert_allclose(log.lambda_used[:-1], 0.2)


def test_monotone_and_bounded(p7):
    for seq in (ConstantStep(0.2), SeededUniform(0.18, 0.24, 3), CyclicSteps([0.19, 0.21, 0.23])):
        for x0 in ([1, 1, 1], [-2, 0.5, 3], [5, -5, 5], [0.1, 0, -0.1]):
            log = iterate(p7, IterationConfig(seq), x0, x_star=ORIGIN)
            assert np.all(np.diff(log.dist) <= 0)
            assert np.max(np.linalg.norm(log.x - log.x[0], axis=1)) <= 2 * log.dist[0]


def test_residuals_consistent(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), [5, -5, 5])
    np.testing.assert_allclose(log.residual, residual(p7, log.x), atol=1e-15)


def test_he_example():
    p = fixed_ball_problem(4.0)
    log = he_iterate(p, [3, -2, 1], x_star=ORIGIN)
    assert log.meta["rate"] == pytest.approx(np.sqrt(0.75))
    d = log.dist
    assert np.all(d[1:] <= 0.866025 * d[:-1] + 1e-9)
    assert log.residual[-1] <= 1e-8
    with pytest.raises(ParameterError):
        he_iterate(fixed_ball_problem(2.0), [3, -2, 1])
    assert he_iterate(p, ORIGIN).iterations == 0


def test_he_needs_fixed_set(p7):
    with pytest.raises(InputError):
        he_iterate(p7, X0)


def test_banach_sec7(p7):
    log = banach_iterate(p7, X0, tol=1e-10, max_iter=15)
    assert log.residual[-1] <= 1e-10 and log.iterations <= 15
    steps = np.linalg.norm(np.diff(log.x, axis=0), axis=1)
    assert np.all(steps[1:] <= 0.125 * steps[:-1] + 1e-9)
    assert log.meta["theta"] == 0.125


def test_banach_interval_example(p3):
    log = banach_iterate(p3, [10.0], x_star=[0.0])
    assert abs(log.final[0]) <= 1e-9
    assert banach_iterate(p3, [0.0]).iterations == 0


def test_banach_refuses_without_contraction():
    p = ProblemInstance(ScaledIdentity(2.0, 3), Translation(ScaledIdentity(1.5, 3), Ball([0, 0, 0], 1)), 1.0)
    with pytest.raises(RegimeError):
        banach_iterate(p, X0)


def test_certificate_constant(p7):
    c = ConstantsBundle.from_problem(p7)
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), X0, x_star=ORIGIN)
    cert = per_step_certificate(log, ORIGIN, c)
    assert cert.overall and cert.regime_ok
    np.testing.assert_allclose(cert.q, 0.9199184745, atol=1e-9)


def test_certificate_uniform(p7):
    c = ConstantsBundle.from_problem(p7)
    log = iterate(p7, IterationConfig(SeededUniform(0.18, 0.24, 3)), X0, x_star=ORIGIN)
    cert = per_step_certificate(log, ORIGIN, c, 0.18, 0.24)
    assert cert.overall
    assert cert.regime["derived"]["r"] == pytest.approx(0.937225)


def test_certificate_regime_violation(p7):
    c = ConstantsBundle.from_problem(p7)
    log = iterate(p7, IterationConfig(ConstantStep(0.3)), X0, x_star=ORIGIN)
    cert = per_step_certificate(log, ORIGIN, c, 0.18, 0.24)
    assert not cert.regime_ok and cert.overall is None
    assert cert.step_pass is None and np.isfinite(cert.ratios).any()


def test_endpoint_is_outside_regime(p7):
    c = ConstantsBundle.from_problem(p7)
    log = iterate(p7, IterationConfig(ConstantStep(0.18)), X0, x_star=ORIGIN)
    assert not per_step_certificate(log, ORIGIN, c, 0.18, 0.24).regime_ok


def test_certificate_needs_gains(p7):
    c = ConstantsBundle.from_problem(p7)
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), X0)
    broken = IterateLog(log.x, log.residual, np.full(len(log.x), np.nan), log.termination)
    with pytest.raises(InputError):
        per_step_certificate(broken, ORIGIN, c)


def test_sequence_validation():
    with pytest.raises(InputError):
        SeededUniform(0.24, 0.18, 0)
    with pytest.raises(InputError):
        ConstantStep(0)
    with pytest.raises(InputError):
        CyclicSteps([])
    with pytest.raises(InputError):
        IterationConfig(ConstantStep(1), max_iter=0)
    for seq in (ConstantStep(0.2), CyclicSteps([0.1, 0.2]), SeededUniform(0.1, 0.2, 9)):
        assert lambda_seq_from_dict(seq.to_dict()).to_dict() == seq.to_dict()


def test_csv_and_summary(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), X0, x_star=ORIGIN)
    lines = log.to_csv().splitlines()
    assert lines[0] == "n,x_1,x_2,x_3,residual,lambda,dist"
    assert lines[-1].split(",")[5] == ""
    assert set(log.summary()) == {"iterations", "final_residual", "termination"}


def test_max_iter_termination(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.01), max_iter=5), X0)
    assert log.termination == "max_iter" and log.iterations == 5


def test_discrete_agrees_with_ode_limit(p7):
    # many tiny steps approximate the flow with constant gain
    lam, n = 0.001, 1000
    log = iterate(p7, IterationConfig(ConstantStep(lam), tol=0, max_iter=n), X0)
    tr = integrate(p7, ConstantGain(1.0), X0, IntegratorConfig(t_end=lam * n), tol=None)
    # first-order global error: about n * (2 lam)^2 / 2 = 2e-3 relative
    np.testing.assert_allclose(log.final, tr.final, rtol=4e-3)
