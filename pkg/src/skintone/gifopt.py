"""Hybrid guided image filtering solved with MFISTA.

The smooth term is the local-linear-model data fidelity

    f(x) = sum_i min_{A_i, b_i} sum_{j in w_i} |x_j - A_i y_j - b_i|^2 + eps |A_i|_F^2

whose value is ``sum_c x_c^T L x_c`` for the matting Laplacian ``L`` of the
input ``y``; its gradient is ``2 L x``. The non-smooth term is the
indicator of two l2 balls: one around the guide ``g`` on the skin region
and one around ``y`` on the background.

Windows are clipped at the border; |w_i| counts in-bounds pixels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .imgcore import box_sum, window_count


class SolverError(RuntimeError):
    """Raised when an iterate stops being finite."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


# --------------------------------------------------------------------------
# Local linear model

@dataclass(frozen=True)
class GuideStats:
    """Per-window statistics of the guide that do not depend on x."""
    radius: int
    eps: float
    count: np.ndarray          # (H, W)      |w_i|
    y: np.ndarray              # (H, W, 3)
    mean: np.ndarray           # (H, W, 3)   window mean of y
    inv_delta: np.ndarray      # (H, W, 3, 3) (Sigma_i + eps/|w_i| U)^-1
    planes: tuple = ()         # planes-first copies of (y, mean, inv_delta) for the kernel

    @property
    def window_side(self):
        return 2 * self.radius + 1


def guide_stats(y, window_side, eps):
    if window_side < 1 or window_side % 2 == 0:
        raise ValueError("window side must be an odd integer >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("guide contains non-finite values")
    r = window_side // 2
    count = window_count(y.shape, r)
    mean = box_sum(y, r) / count[..., None]
    outer = y[..., :, None] * y[..., None, :]
    second = box_sum(outer.reshape(y.shape[:2] + (9,)), r).reshape(y.shape[:2] + (3, 3))
    sigma = second / count[..., None, None] - mean[..., :, None] * mean[..., None, :]
    delta = sigma + (eps / count)[..., None, None] * np.eye(3)
    inv_delta = np.linalg.inv(delta)
    planes = (np.ascontiguousarray(y.transpose(2, 0, 1)),
              np.ascontiguousarray(mean.transpose(2, 0, 1)),
              np.ascontiguousarray(inv_delta.transpose(2, 3, 0, 1)))
    return GuideStats(r, float(eps), count, y, mean, inv_delta, planes)


@dataclass(frozen=True)
class LocalLinearModel:
    """Optimal per-window affine maps ``x_j ~ A_i y_j + b_i`` for a given x.

    ``A`` has shape (H, W, C, 3) and ``b`` (H, W, C); C is the number of
    channels of x (3 for color, 1 for a matte).
    """
    stats: GuideStats
    x: np.ndarray
    A: np.ndarray
    b: np.ndarray
    x_mean: np.ndarray
    cov: np.ndarray

    @property
    def window_side(self):
        return self.stats.window_side

    @property
    def eps(self):
        return self.stats.eps


def _as_channels(x):
    x = np.asarray(x, dtype=np.float64)
    return x[..., None] if x.ndim == 2 else x


def fit_local_models(x, y, window_side=None, eps=None):
    """Closed-form ``A*_i, b*_i`` of every window.

    ``y`` is either the guide image (then ``window_side`` and ``eps`` are
    required) or precomputed ``GuideStats``.
    """
    stats = y if isinstance(y, GuideStats) else guide_stats(y, window_side, eps)
    x = _as_channels(x)
    if x.shape[:2] != stats.count.shape:
        raise ValueError(f"x shape {x.shape[:2]} does not match guide {stats.count.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite values")
    h, w, c = x.shape
    r = stats.radius
    cnt = stats.count[..., None]
    x_mean = box_sum(x, r) / cnt
    cross = (x[..., :, None] * stats.y[..., None, :]).reshape(h, w, 3 * c)
    cov = (box_sum(cross, r) / cnt).reshape(h, w, c, 3) - x_mean[..., :, None] * stats.mean[..., None, :]
    A = np.einsum("hwcd,hwde->hwce", cov, stats.inv_delta)
    b = x_mean - np.einsum("hwcd,hwd->hwc", A, stats.mean)
    return LocalLinearModel(stats, x, A, b, x_mean, cov)


def laplacian_from_model(model):
    """``L x`` for the x the model was fit to (per channel)."""
    stats = model.stats
    h, w, c = model.x.shape
    r = stats.radius
    sum_a = box_sum(model.A.reshape(h, w, 3 * c), r).reshape(h, w, c, 3)
    sum_b = box_sum(model.b, r)
    return stats.count[..., None] * model.x - np.einsum("hwcd,hwd->hwc", sum_a, stats.y) - sum_b


def apply_laplacian(stats, x):
    """Matting Laplacian of the guide applied to each channel of x."""
    squeeze = np.ndim(x) == 2
    out = laplacian_from_model(fit_local_models(x, stats))
    return out[..., 0] if squeeze else out


def laplacian_product(stats, x):
    """Same as ``apply_laplacian`` through the compiled kernel."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 2
    xp = np.ascontiguousarray(x[None] if squeeze else x.transpose(2, 0, 1))
    y_p, mean_p, inv_p = stats.planes
    out = _kernels.laplacian_planes(xp, y_p, mean_p, inv_p, stats.count, stats.radius)
    return out[0] if squeeze else out.transpose(1, 2, 0)


def grad_f(x, y, model):
    """Gradient of the data-fidelity term, ``2 (|w_i| x_i - (sum A*_j) y_i - sum b*_j)``.

    ``model`` must be the fit for this very ``x``; ``y`` must be its guide.
    """
    x = _as_channels(x)
    if model.x.shape != x.shape or not np.array_equal(model.x, x):
        raise ValueError("stale local linear model: refit it for the current x")
    if y is not None and not (y is model.stats.y or np.array_equal(np.asarray(y, dtype=np.float64), model.stats.y)):
        raise ValueError("model was fit with a different guide")
    return 2.0 * laplacian_from_model(model)


def smooth_value(model):
    """Data-fidelity value from the window statistics of the fitted model.

    Each window contributes ``|w_i| (var_i(x) - cov_i^T Delta_i^-1 cov_i)``
    summed over channels, which is the minimum over (A_i, b_i).
    """
    stats = model.stats
    x = model.x
    cnt = stats.count
    sq = box_sum(x * x, stats.radius) / cnt[..., None]
    var = sq - model.x_mean ** 2
    quad = np.einsum("hwcd,hwde,hwce->hwc", model.cov, stats.inv_delta, model.cov)
    return float(np.sum(cnt[..., None] * (var - quad)))


# --------------------------------------------------------------------------
# Constraints

@dataclass(frozen=True)
class ConstraintSpec:
    """Two l2 balls: skin pixels near the guide, background pixels near the input."""
    skin: np.ndarray
    background: np.ndarray
    guide: np.ndarray
    y: np.ndarray
    eta_s: float
    eta_b: float

    def __post_init__(self):
        if np.any(self.skin & self.background):
            raise ValueError("skin and background regions must be disjoint")
        if self.eta_s < 0 or self.eta_b < 0:
            raise ValueError("ball radii must be non-negative")
        # flat pixel indices and ball centers, gathered once
        skin_idx = np.flatnonzero(self.skin)
        bg_idx = np.flatnonzero(self.background)
        object.__setattr__(self, "_skin_idx", skin_idx)
        object.__setattr__(self, "_bg_idx", bg_idx)
        object.__setattr__(self, "_skin_center", self.guide.reshape(-1, 3)[skin_idx])
        object.__setattr__(self, "_bg_center", self.y.reshape(-1, 3)[bg_idx])

    def distances(self, x):
        flat = np.asarray(x).reshape(-1, 3)
        d_s = math.sqrt(float(np.sum((flat[self._skin_idx] - self._skin_center) ** 2)))
        d_b = math.sqrt(float(np.sum((flat[self._bg_idx] - self._bg_center) ** 2)))
        return d_s, d_b

    def within(self, d_s, d_b, rtol=1e-9):
        # slack absorbs the rounding of an exact projection onto the sphere
        return d_s <= self.eta_s * (1 + rtol) + 1e-15 and d_b <= self.eta_b * (1 + rtol) + 1e-15

    def feasible(self, x, rtol=1e-9):
        return self.within(*self.distances(x), rtol=rtol)


def default_radii(skin, background, s_scale=5e-4, b_scale=5e-10):
    """eta_S = 5e-4 |skin|, eta_B = 5e-10 |background| (scales per pixel)."""
    return s_scale * int(np.sum(skin)), b_scale * int(np.sum(background))


def make_constraints(y, g, skin, background, s_scale=5e-4, b_scale=5e-10):
    skin = np.asarray(skin, dtype=bool)
    background = np.asarray(background, dtype=bool)
    eta_s, eta_b = default_radii(skin, background, s_scale, b_scale)
    return ConstraintSpec(skin, background, np.asarray(g, dtype=np.float64),
                          np.asarray(y, dtype=np.float64), eta_s, eta_b)


def _project_ball(flat, idx, center, radius):
    diff = flat[idx] - center
    d = math.sqrt(float(np.sum(diff * diff)))
    if d > radius:
        flat[idx] = center + (radius / d) * diff


def prox_regions(z_hat, cons):
    """Projection onto both balls; pixels outside both regions pass through."""
    z = np.array(z_hat, dtype=np.float64, copy=True)
    flat = z.reshape(-1, 3)
    _project_ball(flat, cons._skin_idx, cons._skin_center, cons.eta_s)
    _project_ball(flat, cons._bg_idx, cons._bg_center, cons.eta_b)
    return z


def eval_objective(x, y, model, cons):
    """``f(x) + h(x)``; ``inf`` when x leaves either ball."""
    if not cons.feasible(np.asarray(x, dtype=np.float64)):
        return math.inf
    x = _as_channels(x)
    if model.x.shape != x.shape or not np.array_equal(model.x, x):
        raise ValueError("stale local linear model: refit it for the current x")
    return smooth_value(model)


# --------------------------------------------------------------------------
# MFISTA

def next_momentum(t):
    return (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0


@dataclass
class SolverState:
    x: np.ndarray
    z: np.ndarray
    v: np.ndarray
    t: float = 1.0
    k: int = 0
    objective: list = field(default_factory=list)
    dist_s: list = field(default_factory=list)
    dist_b: list = field(default_factory=list)
    accepted: list = field(default_factory=list)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    converged: bool
    objective: list
    dist_s: list
    dist_b: list

    @property
    def final_objective(self):
        return self.objective[-1]

    def log_rows(self):
        """(iteration, F, d_S, d_B) rows; iteration 0 is the starting point."""
        return [(k, f, ds, db) for k, (f, ds, db)
                in enumerate(zip(self.objective, self.dist_s, self.dist_b))]


def mfista_solve(y, g, cons, window_side=19, eps=1e-7, lipschitz=500.0,
                 max_iters=500, tol=1e-8, x0=None, callback=None):
    """Minimize the data fidelity over the two balls with monotone FISTA.

    Each iteration takes a gradient step of size ``1/lipschitz`` from the
    extrapolated point, projects onto the balls, keeps whichever of the
    projection and the previous iterate has the lower objective, and
    updates the momentum. The run stops after ``max_iters`` or once an
    accepted step lowers F by less than ``tol`` relative to its previous
    value.

    ``L`` is linear, so ``L v`` is assembled from the stored ``L x`` and
    ``L z`` of earlier iterates; this gives exactly the gradient of a
    fresh local-model fit at ``v`` with one Laplacian product per
    iteration.
    """
    if not lipschitz > 0:
        raise ValueError("Lipschitz constant must be positive")
    y = np.asarray(y, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    stats = guide_stats(y, window_side, eps)
    if x0 is None:
        x0 = np.where(cons.skin[..., None], g, y)
    x0 = np.asarray(x0, dtype=np.float64)
    if not cons.feasible(x0):
        x0 = prox_regions(x0, cons)

    lx = laplacian_product(stats, x0)
    f_prev = float(np.sum(x0 * lx))
    state = SolverState(x=x0.copy(), z=x0.copy(), v=x0.copy())
    dx = cons.distances(x0)
    state.objective.append(f_prev)
    state.dist_s.append(dx[0])
    state.dist_b.append(dx[1])

    x_prev, lx_prev = x0, lx
    lv = lx
    v = x0
    converged = False
    step = 1.0 / lipschitz
    for k in range(1, max_iters + 1):
        z_hat = v - step * 2.0 * lv
        z = prox_regions(z_hat, cons)
        if not np.all(np.isfinite(z)):
            raise SolverError(f"non-finite iterate at iteration {k}", iteration=k)
        lz = laplacian_product(stats, z)
        dz = cons.distances(z)
        fz = float(np.sum(z * lz)) if cons.within(*dz) else math.inf
        accepted = fz <= f_prev
        if accepted:
            x, lx, f_cur, dx = z, lz, fz, dz
        else:
            x, lx, f_cur = x_prev, lx_prev, f_prev

        t_next = next_momentum(state.t)
        a = state.t / t_next
        b = (state.t - 1.0) / t_next
        v = x + a * (z - x) + b * (x - x_prev)
        lv = lx + a * (lz - lx) + b * (lx - lx_prev)

        state.t = t_next
        state.k = k
        state.objective.append(f_cur)
        state.dist_s.append(dx[0])
        state.dist_b.append(dx[1])
        state.accepted.append(accepted)
        if callback is not None:
            callback(k, x, f_cur)

        done = accepted and abs(f_prev - f_cur) / max(f_prev, 1e-12) < tol
        x_prev, lx_prev, f_prev = x, lx, f_cur
        if done:
            converged = True
            break

    state.x, state.z, state.v = x_prev, z, v
    return SolveResult(x=state.x, iterations=state.k, converged=converged,
                       objective=state.objective, dist_s=state.dist_s, dist_b=state.dist_b)
