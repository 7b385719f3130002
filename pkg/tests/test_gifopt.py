import math

import numpy as np
import pytest

import oracles
from skintone import gifopt


def small_scene(rng, n=10):
    y = rng.uniform(size=(n, n, 3))
    skin = np.zeros((n, n), bool)
    skin[3:7, 3:7] = True
    bg = np.zeros((n, n), bool)
    bg[:, :2] = True
    return y, skin, bg


# Local linear model

def test_constant_x_gives_zero_slope(rng):
    y = rng.uniform(size=(8, 8, 3))
    model = gifopt.fit_local_models(np.full((8, 8, 3), 0.3), y, 3, 1e-4)
    assert np.abs(model.A).max() <= 1e-10
    np.testing.assert_allclose(model.b, 0.3, atol=1e-10)


def test_fit_matches_direct_ridge_regression(rng):
    y = rng.uniform(size=(6, 6, 3))
    x = rng.uniform(size=(6, 6, 3))
    for xx in (x, y):
        model = gifopt.fit_local_models(xx, y, 3, 1e-3)
        A, b, total = oracles.direct_local_fit(xx, y, 1, 1e-3)
        assert np.abs(model.A - A).max() <= 1e-8
        assert np.abs(model.b - b).max() <= 1e-8
        assert gifopt.smooth_value(model) == pytest.approx(total, rel=1e-8, abs=1e-12)


def test_affine_function_of_guide_is_recovered(rng):
    y = rng.uniform(size=(9, 9, 3))
    M = rng.normal(size=(3, 3))
    c = rng.normal(size=3)
    x = y @ M.T + c
    model = gifopt.fit_local_models(x, y, 5, 1e-12)
    np.testing.assert_allclose(model.A, np.broadcast_to(M, model.A.shape), atol=1e-5)
    assert gifopt.smooth_value(model) < 1e-8


def test_gradient_is_twice_laplacian_product(rng):
    y = rng.uniform(size=(7, 7, 3))
    x = rng.uniform(size=(7, 7, 3))
    L = oracles.dense_matting_laplacian(y, 1, 1e-3)
    model = gifopt.fit_local_models(x, y, 3, 1e-3)
    grad = gifopt.grad_f(x, y, model)
    expected = 2 * (L @ x.reshape(-1, 3)).reshape(x.shape)
    assert np.abs(grad - expected).max() <= 1e-9


def test_gradient_of_constant_is_zero(rng):
    y = rng.uniform(size=(8, 8, 3))
    x = np.full((8, 8, 3), 0.7)
    model = gifopt.fit_local_models(x, y, 5, 1e-5)
    assert np.abs(gifopt.grad_f(x, y, model)).max() <= 1e-9


def test_stale_model_rejected(rng):
    y = rng.uniform(size=(5, 5, 3))
    x = rng.uniform(size=(5, 5, 3))
    model = gifopt.fit_local_models(x, y, 3, 1e-3)
    with pytest.raises(ValueError, match="stale"):
        gifopt.grad_f(x + 0.1, y, model)
    with pytest.raises(ValueError, match="different guide"):
        gifopt.grad_f(x, y + 0.1, model)


def test_kernel_matches_numpy(rng):
    y = rng.uniform(size=(23, 17, 3))
    x = rng.uniform(size=(23, 17, 3))
    stats = gifopt.guide_stats(y, 7, 1e-6)
    np.testing.assert_allclose(gifopt.laplacian_product(stats, x), gifopt.apply_laplacian(stats, x), atol=1e-10)
    a = rng.uniform(size=(23, 17))
    np.testing.assert_allclose(gifopt.laplacian_product(stats, a), gifopt.apply_laplacian(stats, a), atol=1e-10)


def test_guide_stats_validation(rng):
    y = rng.uniform(size=(4, 4, 3))
    with pytest.raises(ValueError):
        gifopt.guide_stats(y, 4, 1e-3)
    with pytest.raises(ValueError):
        gifopt.guide_stats(y, 3, 0.0)


# Constraints and projection

def test_projection_examples():
    y = np.zeros((1, 2, 3))
    skin = np.array([[True, False]])
    bg = np.array([[False, True]])
    cons = gifopt.ConstraintSpec(skin, bg, y.copy(), y.copy(), 1.0, 0.0)
    inside = np.array([[[0.5, 0, 0], [0, 0, 0]]])
    np.testing.assert_array_equal(gifopt.prox_regions(inside, cons), inside)
    out = gifopt.prox_regions(np.array([[[3.0, 0, 0], [0.2, 0.4, 0.1]]]), cons)
    np.testing.assert_allclose(out, [[[1.0, 0, 0], [0, 0, 0]]], atol=1e-15)


def test_zero_radius_returns_guide(rng):
    y, skin, bg = small_scene(rng)
    g = rng.uniform(size=y.shape)
    cons = gifopt.ConstraintSpec(skin, bg, g, y, 0.0, 0.0)
    z = gifopt.prox_regions(rng.uniform(size=y.shape), cons)
    np.testing.assert_array_equal(z[skin], g[skin])
    np.testing.assert_array_equal(z[bg], y[bg])


def test_constraints_must_be_disjoint(rng):
    y = rng.uniform(size=(3, 3, 3))
    m = np.ones((3, 3), bool)
    with pytest.raises(ValueError, match="disjoint"):
        gifopt.ConstraintSpec(m, m, y, y, 1.0, 1.0)
    with pytest.raises(ValueError):
        gifopt.ConstraintSpec(m, ~m, y, y, -1.0, 1.0)


def test_default_radii():
    skin = np.zeros((10, 10), bool)
    skin[:4] = True
    assert gifopt.default_radii(skin, ~skin) == pytest.approx((0.02, 3e-8))


def test_objective_infinite_outside_background_ball(rng):
    y, skin, bg = small_scene(rng)
    cons = gifopt.make_constraints(y, y, skin, bg)
    x = y.copy()
    x[0, 0] += 0.5
    model = gifopt.fit_local_models(x, y, 3, 1e-3)
    assert gifopt.eval_objective(x, y, model, cons) == math.inf


def test_objective_zero_for_constant_feasible_image():
    y = np.full((8, 8, 3), 0.4)
    skin = np.zeros((8, 8), bool)
    skin[2:5, 2:5] = True
    cons = gifopt.make_constraints(y, y, skin, ~gifopt_dilate(skin))
    model = gifopt.fit_local_models(y, y, 3, 1e-3)
    assert gifopt.eval_objective(y, y, model, cons) == pytest.approx(0.0, abs=1e-12)


def gifopt_dilate(m):
    from skintone.imgcore import dilate_disc
    return dilate_disc(m, 1)


# MFISTA

def test_momentum_recursion():
    assert gifopt.next_momentum(1.0) == pytest.approx((1 + math.sqrt(5)) / 2)
    t = 1.0
    for _ in range(50):
        t_next = gifopt.next_momentum(t)
        assert t_next ** 2 - t_next == pytest.approx(t * t, rel=1e-12)
        t = t_next


def test_solver_monotone_and_feasible(rng):
    y, skin, bg = small_scene(rng, 16)
    g = y.copy()
    g[skin] = np.clip(g[skin] * [1.1, 0.95, 0.9], 0, 1)
    cons = gifopt.make_constraints(y, g, skin, bg, s_scale=1e-2)
    res = gifopt.mfista_solve(y, g, cons, window_side=3, eps=1e-4, lipschitz=100.0, max_iters=60, tol=0.0)
    assert np.all(np.diff(res.objective) <= 1e-12 * max(res.objective[0], 1.0))
    assert cons.feasible(res.x)
    assert len(res.log_rows()) == res.iterations + 1
    model = gifopt.fit_local_models(res.x, y, 3, 1e-4)
    assert res.final_objective == pytest.approx(gifopt.smooth_value(model), rel=1e-8)


def test_constant_image_is_fixed_point():
    y = np.full((10, 10, 3), 0.5)
    skin = np.zeros((10, 10), bool)
    skin[4:6, 4:6] = True
    bg = np.zeros((10, 10), bool)
    bg[0] = True
    cons = gifopt.make_constraints(y, y, skin, bg)
    res = gifopt.mfista_solve(y, y, cons, window_side=3, eps=1e-4, max_iters=5)
    assert res.final_objective == pytest.approx(0.0, abs=1e-12)
    assert np.abs(res.x - y).max() <= 1e-12


def test_solver_deterministic(rng):
    y, skin, bg = small_scene(rng)
    g = np.clip(y * 1.1, 0, 1)
    cons = gifopt.make_constraints(y, g, skin, bg)
    a = gifopt.mfista_solve(y, g, cons, window_side=3, max_iters=20)
    b = gifopt.mfista_solve(y.copy(), g.copy(), cons, window_side=3, max_iters=20)
    assert a.x.tobytes() == b.x.tobytes()


def test_solver_errors(rng):
    y, skin, bg = small_scene(rng)
    cons = gifopt.make_constraints(y, y, skin, bg)
    with pytest.raises(ValueError):
        gifopt.mfista_solve(y, y, cons, lipschitz=0.0)
    x0 = y.copy()
    x0[5, 5] = np.nan
    with pytest.raises(gifopt.SolverError) as info, np.errstate(invalid="ignore"):
        gifopt.mfista_solve(y, y, cons, window_side=3, max_iters=3, x0=x0)
    assert info.value.iteration == 1
