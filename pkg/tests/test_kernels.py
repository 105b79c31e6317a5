import os
import subprocess
import sys

import numpy as np
import pytest

from iqvi import kernels
from iqvi._jit import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba missing")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@needs_numba
def test_backends_agree(rng):
    nb, npk = kernels.numba_kernels, kernels.numpy_kernels
    X = rng.normal(size=(500, 4)) * 3
    c, lo, hi = rng.normal(size=4), -np.ones(4), np.arange(1.0, 5.0)
    a = rng.normal(size=4)
    np.testing.assert_allclose(nb.ball(X, c, 1.3), npk.ball(X, c, 1.3), atol=1e-14)
    np.testing.assert_allclose(nb.box(X, lo, hi), npk.box(X, lo, hi), atol=0)
    np.testing.assert_allclose(nb.halfspace(X, a, 0.4), npk.halfspace(X, a, 0.4), atol=1e-13)
    np.testing.assert_allclose(nb.simplex(X, 2.0), npk.simplex(X, 2.0), atol=1e-13)


@needs_numba
def test_component_count_agrees(rng):
    for _ in range(20):
        mask = rng.random((40, 30)) < 0.45
        assert kernels.numba_kernels.components(mask) == kernels.numpy_kernels.components(mask)
    line = np.array([1, 1, 0, 1, 0, 0, 1, 1, 1], bool)
    assert kernels.count_components(line) == 3
    assert kernels.count_components(np.zeros((3, 3), bool)) == 0


def test_simplex_ties_deterministic():
    X = np.array([[0.5, 0.5, 0.5, 0.5]])
    np.testing.assert_allclose(kernels.project_simplex(X, 1.0), [[0.25] * 4])


def test_env_flag_selects_numpy():
    env = dict(os.environ, IQVI_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from iqvi import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
