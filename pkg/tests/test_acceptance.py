"""Acceptance criteria, one test each.  Every test prints a single
``[ACCEPT n] PASS|FAIL ...`` line; run with ``pytest tests/test_acceptance.py -v``
or directly as a script."""
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from iqvi.analysis import ConstantsBundle, feasible_alpha_range, q_factor
from iqvi.certify import certify_solution, grid_oracle
from iqvi.cli import EXIT_OK, bundled_spec, run
from iqvi.config import parse_spec
from iqvi.discrete import ConstantStep, IterationConfig, SeededUniform, banach_iterate, he_iterate, iterate, per_step_certificate
from iqvi.model import PolynomialGain
from iqvi.ode import IntegratorConfig, integrate, lyapunov_series, rate_envelope

from conftest import ball_problem, fixed_ball_problem, interval_problem

STARTS = [(1, 1, 1), (-2, 0.5, 3), (5, -5, 5), (0.1, 0, -0.1)]
CUBIC = PolynomialGain(1, 1, 3)
CFG = IntegratorConfig(t_end=3.0, method="rk4", base_step=1e-3, stiffness_cap=0.5)
ORIGIN = np.zeros(3)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[ACCEPT {n}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def test_criterion_1_ode_reproduction(report):
    p = ball_problem()
    integrate(p, CUBIC, STARTS[0], IntegratorConfig(t_end=0.01))  # compile kernels outside the timed part
    t0 = time.perf_counter()
    trajs = [integrate(p, CUBIC, x0, CFG, tol=1e-8, x_star=ORIGIN) for x0 in STARTS]
    elapsed = time.perf_counter() - t0
    norms = [float(np.linalg.norm(tr.final)) for tr in trajs]
    decreasing = [lyapunov_series(tr, ORIGIN).strictly_decreasing(1e-12) for tr in trajs]
    ok = max(norms) <= 1e-6 and all(decreasing) and elapsed < 5.0
    report(1, ok, f"max final |x| = {max(norms):.3e} (<= 1e-6), V strictly decreasing = {all(decreasing)}, runtime {elapsed:.2f} s (< 5 s)")


def test_criterion_2_condition_report(report, tmp_path):
    d = bundled_spec("sec7").to_dict()
    d["solver"]["mode"] = "check"
    b = run(parse_spec(d), tmp_path)
    s = json.loads((tmp_path / "check_summary.json").read_text())
    der = s["derived"]
    lo, _ = feasible_alpha_range(2.0, 2.0, 0.25)
    exact = der["theta"] == 0.125 and der["Lambda_coefficient"] == -2.5 and der["C1"] == 1.46875 and der["C2"] == 3.5
    ok = b.exit_code == EXIT_OK and all(s["verdicts"].values()) and len(s["verdicts"]) == 3 and exact and abs(lo - 1.125) <= 1e-12
    report(2, ok, f"verdicts {s['verdicts']}, theta={der['theta']}, Lambda={der['Lambda_coefficient']}, C1={der['C1']}, C2={der['C2']}, alpha_low={lo!r}")


def test_criterion_3_rate_envelope(report):
    # envelope as stated for the norm: log|x - x*| - log|x0 - x*| <= -2.5 (t + t^4/4) + 1e-3
    p = ball_problem()
    tr = integrate(p, CUBIC, STARTS[0], CFG, tol=1e-8, x_star=ORIGIN)
    env = rate_envelope(tr, ORIGIN, ConstantsBundle.from_problem(p), CUBIC, slack=1e-3, exponent=1.0, floor=1e-12)
    failed = int((~env.passed & env.checked).sum())
    # for comparison only: the bound obtained from V = |x - x*|^2 carries a factor 1/2
    half = rate_envelope(tr, ORIGIN, ConstantsBundle.from_problem(p), CUBIC, slack=1e-3, exponent=0.5, floor=1e-12)
    report(3, env.overall, f"coefficient {env.coefficient}, {failed}/{int(env.checked.sum())} samples violate, "
                           f"worst margin {env.worst_margin:.3e}; with the 1/2 factor: overall {half.overall}")


def test_criterion_4_discrete_certificate(report):
    p = ball_problem()
    c = ConstantsBundle.from_problem(p)
    const = iterate(p, IterationConfig(ConstantStep(0.2)), STARTS[0], x_star=ORIGIN)
    d = const.dist
    per_step = bool(np.all(d[1:] <= 0.91992 * d[:-1] + 1e-12))
    cert = per_step_certificate(const, ORIGIN, c, 0.18, 0.24)
    unif = iterate(p, IterationConfig(SeededUniform(0.18, 0.24, 3), tol=1e-8), STARTS[0], x_star=ORIGIN)
    du = unif.dist
    envelope = bool(np.all(du < 0.937225 ** (np.arange(len(du)) / 2) * du[0] + 1e-12))
    ok = per_step and cert.overall and envelope and unif.residual[-1] <= 1e-8
    report(4, ok, f"Q(0.2)={q_factor(c, 0.2):.6f}, per-step pass={per_step} over {const.iterations} steps, "
                  f"r^(n/2) envelope pass={envelope} over {unif.iterations} steps")


def test_criterion_5_he_reduction(report):
    p = fixed_ball_problem(4.0)
    log = he_iterate(p, [3, -2, 1], tol=1e-8, max_iter=1000, x_star=ORIGIN)
    d = log.dist
    ratios = d[1:][d[:-1] > 0] / d[:-1][d[:-1] > 0]
    ok = bool(np.all(ratios <= 0.866025 + 1e-9)) and log.residual[-1] <= 1e-8 and log.iterations <= 140
    report(5, ok, f"max error ratio {ratios.max():.6f} (<= 0.866025), {log.iterations} iterations (<= 140)")


def test_criterion_6_banach(report):
    p = ball_problem()
    log = banach_iterate(p, STARTS[0], tol=1e-10, max_iter=15)
    steps = np.linalg.norm(np.diff(log.x, axis=0), axis=1)
    ratios = steps[1:][steps[:-1] > 0] / steps[:-1][steps[:-1] > 0]
    worst = float(ratios.max()) if ratios.size else 0.0
    ok = log.residual[-1] <= 1e-10 and log.iterations <= 15 and worst <= 0.125 + 1e-9
    report(6, ok, f"residual {log.residual[-1]:.1e} after {log.iterations} iterations, max step ratio {worst:.3g}")


def test_criterion_7_interval_example(report):
    p = interval_problem()
    ode = integrate(p, CUBIC, [5.0], CFG, tol=1e-8)
    ban = banach_iterate(p, [5.0], tol=1e-10, max_iter=200)
    dis = iterate(p, IterationConfig(ConstantStep(0.2), tol=1e-8, max_iter=1000), [5.0])
    finals = [abs(ode.final[0]), abs(ban.final[0]), abs(dis.final[0])]
    g = grid_oracle(p, ([-3.0], [3.0]), 1e-3)
    cert = certify_solution(p, [0.0])
    ok = max(finals) <= 1e-6 and abs(g.x_best[0]) <= 1e-4 and cert.verdict == "certified"
    report(7, ok, f"|x| ode/banach/discrete = {finals[0]:.1e}/{finals[1]:.1e}/{finals[2]:.1e}, grid minimiser {g.x_best[0]:.2e}, certificate {cert.verdict}")


def test_criterion_8_property_suites(report):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-m", "property", "-q", "-p", "no:cacheprovider", str(Path(__file__).parent)],
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(8, proc.returncode == 0 and elapsed <= 30.0, f"{tail} in {elapsed:.1f} s (<= 30 s)")


def test_criterion_9_determinism(report, tmp_path):
    a = run(bundled_spec("sec7"), tmp_path / "a", mode="reproduce")
    b = run(bundled_spec("sec7"), tmp_path / "b", mode="reproduce")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.suffix in (".csv", ".json"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    ok = same and len(files) > 0 and a.exit_code == b.exit_code == EXIT_OK
    report(9, ok, f"{len(files)} CSV/JSON files byte-identical across two reproduce runs = {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
