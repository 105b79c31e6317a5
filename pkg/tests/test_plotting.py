import numpy as np
import pytest

from iqvi.discrete import ConstantStep, IterationConfig, iterate
from iqvi.errors import InputError
from iqvi.model import PolynomialGain
from iqvi.ode import IntegratorConfig, Trajectory, integrate
from iqvi.plotting import emit_plot


def _points(svg, k):
    polys = [seg.split('points="')[1].split('"')[0] for seg in svg.split("<polyline")[1:]]
    return np.array([[float(v) for v in p.split(",")] for p in polys[k].split()])


def test_four_start_state_plot(p7):
    cfg = IntegratorConfig(t_end=3.0)
    logs = [integrate(p7, PolynomialGain(1, 1, 3), x0, cfg) for x0 in ([1, 1, 1], [-2, 0.5, 3], [5, -5, 5], [0.1, 0, -0.1])]
    svg = emit_plot(logs)
    assert svg.startswith("<svg") and svg.count("<polyline") == 12
    assert ">t<" in svg and "http" not in svg.replace('xmlns="http://www.w3.org/2000/svg"', "")
    # every coordinate ends at the zero line
    ends = {round(_points(svg, k)[-1, 1], 1) for k in range(12)}
    assert len(ends) == 1
    assert emit_plot(logs) == svg


def test_constant_trajectory_is_flat():
    tr = Trajectory(np.linspace(0, 1, 5), np.full((5, 2), 0.3), np.zeros(5), "reached_t_end")
    svg = emit_plot([tr])
    for k in range(2):
        assert len(set(_points(svg, k)[:, 1])) == 1


def test_residual_slope(p7):
    log = iterate(p7, IterationConfig(ConstantStep(0.2)), [1, 1, 1])
    svg = emit_plot([log], kind="residual")
    pts = _points(svg, 0)
    n, y = log.n[log.residual > 0], np.log10(log.residual[log.residual > 0])
    slope, icept = np.polyfit(n, y, 1)
    # Q(0.2) only bounds the rate; inside the ball the step is x -> 0.6 x exactly
    assert slope <= np.log10(0.91992)
    assert slope == pytest.approx(np.log10(0.6), rel=1e-6)
    assert np.abs(y - (slope * n + icept)).max() < 1e-6
    # the drawn polyline is linear too
    d = np.diff(pts[:, 1]) / np.diff(pts[:, 0])
    assert np.ptp(d) < 0.05 * np.abs(d).mean()
    assert pts.shape[0] == np.count_nonzero(log.residual > 0)
    assert ">n<" in svg


def test_errors(p7):
    with pytest.raises(InputError):
        emit_plot([])
    with pytest.raises(InputError):
        emit_plot([Trajectory(np.arange(3.0), np.zeros((3, 1)), np.zeros(3), "x")], kind="bars")
    a = Trajectory(np.arange(3.0), np.zeros((3, 1)), np.zeros(3), "x")
    b = Trajectory(np.arange(3.0), np.zeros((3, 2)), np.zeros(3), "x")
    with pytest.raises(InputError):
        emit_plot([a, b])
