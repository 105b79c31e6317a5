import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqvi.certify import projection_oracle
from iqvi.errors import InputError
from iqvi.sets import Ball, Box, Halfspace, Interval, Simplex, contains, project, sample, set_from_dict


def simplex_grid_minimizer(p, step=1e-3):
    """Nearest point on the 3-simplex by exhaustive grid search then local polish."""
    best, best_d = None, np.inf
    n = int(round(1 / step))
    i = np.arange(n + 1)
    a, b = np.meshgrid(i, i, indexing="ij")
    keep = a + b <= n
    pts = np.stack([a[keep], b[keep], n - a[keep] - b[keep]], axis=1) * step
    d = ((pts - p) ** 2).sum(axis=1)
    k = int(np.argmin(d))
    best, best_d = pts[k], d[k]
    h = step
    while h > 1e-9:
        moved = False
        for u in [(1, -1, 0), (-1, 1, 0), (1, 0, -1), (-1, 0, 1), (0, 1, -1), (0, -1, 1)]:
            cand = best + h * np.array(u)
            if (cand >= 0).all():
                dc = ((cand - p) ** 2).sum()
                if dc < best_d:
                    best, best_d, moved = cand, dc, True
        if not moved:
            h /= 2
    return best


def test_ball_radial():
    np.testing.assert_allclose(project(Ball([0, 0, 0], 1), [2, 0, 0]), [1, 0, 0])


def test_interval_clamp():
    assert project(Interval(-1, 1), 3) == 1.0


def test_simplex_against_grid():
    p = np.array([0.9, 0.6, -0.1])
    z = project(Simplex(3), p)
    np.testing.assert_allclose(z, simplex_grid_minimizer(p), atol=1e-6)
    np.testing.assert_allclose(z, [0.65, 0.35, 0.0], atol=1e-12)


def test_membership():
    assert contains(Ball([0, 0, 0], 1), [0.5, 0, 0], tol=0)
    assert not contains(Ball([0, 0, 0], 1), [1 + 1e-6, 0, 0], tol=1e-9)
    assert contains(Box([0, 0], [1, 1]), [1, 1], tol=0)


def test_sample_contracts():
    s = sample(Ball([0, 0, 0], 1), 7, 8)
    n = np.linalg.norm(s, axis=1)
    assert s.shape == (8, 3) and (n <= 1 + 1e-12).all()
    assert (np.abs(n - 1) <= 1e-12).sum() >= 2
    s = sample(Interval(-1, 1), 1, 4)
    assert s.size == 4 and (np.abs(s) <= 1).all()
    s = sample(Simplex(3), 11, 100)
    assert (s >= 0).all()
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_sample_deterministic():
    a = sample(Halfspace([1, 2], 0.5), 5, 20)
    b = sample(Halfspace([1, 2], 0.5), 5, 20)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("bad", [
    lambda: Ball([0, 0], 0.0),
    lambda: Ball([0, 0], -1.0),
    lambda: Box([0, 1], [1, 0]),
    lambda: Halfspace([0, 0], 1.0),
    lambda: Simplex(3, scale=0),
    lambda: Ball([np.nan, 0], 1.0),
])
def test_invalid_parameters(bad):
    with pytest.raises(InputError):
        bad()


def test_dimension_mismatch():
    with pytest.raises(InputError):
        project(Ball([0, 0, 0], 1), [1, 2])


def test_round_trip_dict():
    for s in [Ball([1, 2], 3), Box([0, -1], [1, 1]), Interval(-2, 5), Halfspace([1, 1, 0], 2), Simplex(4, 2.0)]:
        t = set_from_dict(s.to_dict())
        assert t.to_dict() == s.to_dict()


def test_batched_matches_single():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3)) * 3
    for s in [Ball([0, 1, 0], 1.5), Box([-1, -1, 0], [1, 2, 1]), Halfspace([1, -1, 2], 0.3), Simplex(3, 2)]:
        Z = s.project(X)
        for x, z in zip(X, Z):
            np.testing.assert_allclose(s.project(x), z, atol=1e-14)


def _sets(dim):
    return [Ball(np.arange(dim) * 0.3, 1.2), Box(-np.ones(dim), np.arange(1, dim + 1.0)),
            Halfspace(np.arange(1, dim + 1.0), 0.7), Simplex(dim, 1.5)]


PROPERTY_CASES = 1000


@pytest.mark.property
@pytest.mark.parametrize("dim", [1, 2, 3, 5])
def test_projection_properties(dim):
    # idempotence, nonexpansiveness and the obtuse-angle characterization
    rng = np.random.default_rng(dim)
    for s in _sets(dim):
        X = rng.normal(size=(PROPERTY_CASES, dim)) * 4
        Y = rng.normal(size=(PROPERTY_CASES, dim)) * 4
        PX, PY = s.project(X), s.project(Y)
        np.testing.assert_allclose(s.project(PX), PX, atol=1e-12)
        assert (np.linalg.norm(PX - PY, axis=1) <= np.linalg.norm(X - Y, axis=1) + 1e-12).all()
        W = s.sample(dim, 64)
        inner = np.einsum("ij,kj->ik", X - PX, W) - np.einsum("ij,ij->i", X - PX, PX)[:, None]
        assert inner.max() <= 1e-9 * (1 + np.abs(X).max()) ** 2
        assert all(s.contains(p, tol=1e-9) for p in PX[:50])


def test_simplex_oracle_many_points():
    rng = np.random.default_rng(3)
    s = Simplex(3)
    for p in rng.normal(size=(20, 3)) * 2:
        assert projection_oracle(s, p, seed=1, samples=10_000)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.floats(0.01, 100))
def test_ball_projection_inside(point, radius):
    z = Ball([0, 0, 0], radius).project(point)
    assert np.linalg.norm(z) <= radius * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6), st.floats(0.1, 10))
def test_simplex_sums_to_scale(point, scale):
    z = Simplex(len(point), scale).project(point)
    assert z.min() >= 0
    assert abs(z.sum() - scale) <= 1e-9 * max(1, scale)
