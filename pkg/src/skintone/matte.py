"""Foreground matting with seed growing, and background replacement.

The matte solves ``(L + lam D) alpha = lam v`` where ``L`` is the matting
Laplacian of the image, ``D`` marks seed pixels and ``v`` is 1 on
foreground seeds. Confident pixels are promoted to seeds and the solve is
repeated with a shrinking window; a sigmoid sharpens the final matte.
Convention: alpha = 1 is foreground.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .gifopt import guide_stats, laplacian_product
from .imgcore import as_mask, box_sum, erode_rect, flat_image

log = logging.getLogger(__name__)

_FOUR = ndimage.generate_binary_structure(2, 1)


class MattingError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class MattingConfig:
    lam: float = 100.0
    eps: float = 1e-7
    tol: float = 1e-6
    max_iter: int = 2000
    window: int = 31
    rounds: int = 4
    low: float = 0.2
    high: float = 0.8
    slope: float = 10.0
    center: float = 0.5
    # seed geometry
    dark_value: float = 0.35
    hair_band: float = 0.5
    clothes_width: float = 2.0
    clothes_erode: int = 5
    side_width: float = 0.1
    side_span: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("grow thresholds must satisfy low < high")


@dataclass(frozen=True)
class Trimap:
    fg: np.ndarray
    bg: np.ndarray

    def __post_init__(self):
        if np.any(self.fg & self.bg):
            raise ValueError("foreground and background seeds overlap")

    @property
    def unknown(self):
        return ~(self.fg | self.bg)

    @property
    def seeded(self):
        return self.fg | self.bg


@dataclass
class AlphaMat:
    alpha: np.ndarray
    raw: np.ndarray = None
    iterations: int = 0
    residual: float = 0.0
    energy: list = field(default_factory=list)


def pin(alpha, trimap):
    a = np.clip(alpha, 0.0, 1.0)
    a[trimap.fg] = 1.0
    a[trimap.bg] = 0.0
    return a


# --------------------------------------------------------------------------
# Seeds

def init_trimap(face, skin, img, cfg=MattingConfig(), hsv=None):
    """Initial seeds around a portrait.

    Foreground: the skin region, the largest dark component reaching into
    the band just above the skin, and a rectangle below the skin for the
    clothes. Background: two margin strips level with the face. Geometry
    is taken from the skin region's bounding box and the face size.
    """
    skin = as_mask(skin, img.shape)
    if not skin.any():
        raise ValueError("skin region is empty")
    h, w = skin.shape
    rows = np.flatnonzero(skin.any(axis=1))
    cols = np.flatnonzero(skin.any(axis=0))
    top, bottom = rows[0], rows[-1] + 1
    left, right = cols[0], cols[-1] + 1

    fg = skin.copy()

    value = np.asarray(img).max(axis=-1) if hsv is None else hsv[..., 2]
    band = np.zeros_like(skin)
    band[max(top - int(math.ceil(cfg.hair_band * face.h)), 0):top, left:right] = True
    dark, n = ndimage.label(value < cfg.dark_value, structure=_FOUR)
    if n and band.any():
        touching = np.unique(dark[band & (dark > 0)])
        if touching.size:
            sizes = np.bincount(dark.ravel(), minlength=n + 1)
            hair_id = touching[np.argmax(sizes[touching])]
            fg |= dark == hair_id

    half = cfg.clothes_width * face.w / 2.0
    clothes = np.zeros_like(skin)
    c0 = max(int(math.floor(face.x - half + 0.5)), 0)
    c1 = min(int(math.floor(face.x + half + 0.5)), w)
    clothes[bottom:, c0:c1] = True
    fg |= erode_rect(clothes, cfg.clothes_erode)

    bg = np.zeros_like(skin)
    side = int(math.ceil(cfg.side_width * w))
    r0 = max(int(math.floor(face.y - cfg.side_span * face.h + 0.5)), 0)
    r1 = min(int(math.floor(face.y + cfg.side_span * face.h + 0.5)) + 1, h)
    bg[r0:r1, :side] = True
    bg[r0:r1, w - side:] = True

    conflict = fg & bg
    if conflict.any():
        log.warning("%d pixels seeded as both foreground and background; keeping background",
                    int(conflict.sum()))
        fg &= ~bg
    return Trimap(fg=fg, bg=bg)


def grow_seeds(alpha, trimap, low=0.2, high=0.8):
    """Promote confident pixels to seeds; returns the new trimap and pinned alpha."""
    alpha = np.asarray(alpha, dtype=np.float64)
    bg = trimap.bg | ((alpha <= low) & ~trimap.fg)
    fg = trimap.fg | ((alpha >= high) & ~bg)
    new = Trimap(fg=fg, bg=bg)
    return new, pin(alpha, new)


# --------------------------------------------------------------------------
# Solve

def laplacian_diagonal(stats):
    """Diagonal of the matting Laplacian, from window sums."""
    r = stats.radius
    cnt = stats.count
    m = stats.inv_delta / cnt[..., None, None]
    mu = stats.mean
    m_mu = np.einsum("hwde,hwe->hwd", m, mu)
    mu_m_mu = np.einsum("hwd,hwd->hw", mu, m_mu)
    sums = box_sum(np.concatenate([m.reshape(cnt.shape + (9,)), m_mu, mu_m_mu[..., None],
                                   (1.0 / cnt)[..., None]], axis=-1), r)
    s_m = sums[..., :9].reshape(cnt.shape + (3, 3))
    s_mmu = sums[..., 9:12]
    s_mumu = sums[..., 12]
    s_inv = sums[..., 13]
    y = stats.y
    quad = np.einsum("hwd,hwde,hwe->hw", y, s_m, y) - 2.0 * np.einsum("hwd,hwd->hw", y, s_mmu) + s_mumu
    return cnt - s_inv - quad


def pcg(apply, b, diag, x0, tol, max_iter, energy=None):
    """Jacobi-preconditioned conjugate gradients for an SPD operator.

    Stops when ``|r| <= tol |b|``. Returns ``(x, iterations, relative residual)``.
    When ``energy`` is a list, ``x^T A x - 2 b^T x`` is appended per iterate.
    """
    x = x0.copy()
    r = b - apply(x)
    bnorm = float(np.linalg.norm(b)) or 1.0
    z = r / diag
    p = z.copy()
    rz = float(np.vdot(r, z))
    res = float(np.linalg.norm(r)) / bnorm
    if energy is not None:
        energy.append(-float(np.vdot(x, b + r)))
    it = 0
    while res > tol and it < max_iter:
        it += 1
        ap = apply(p)
        step = rz / float(np.vdot(p, ap))
        x += step * p
        r -= step * ap
        res = float(np.linalg.norm(r)) / bnorm
        if energy is not None:
            energy.append(-float(np.vdot(x, b + r)))
        z = r / diag
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it, res


def solve_alpha_pcg(img, trimap, radius, cfg=MattingConfig(), x0=None, stats=None, track_energy=False):
    """Closed-form matte for the given seeds at window radius ``radius``."""
    if not trimap.fg.any() or not trimap.bg.any():
        raise MattingError("matting needs at least one foreground and one background seed")
    stats = stats or guide_stats(img, 2 * radius + 1, cfg.eps)
    seeded = trimap.seeded.astype(np.float64)
    rhs = cfg.lam * trimap.fg.astype(np.float64)
    diag = laplacian_diagonal(stats) + cfg.lam * seeded
    if x0 is None:
        x0 = np.where(trimap.fg, 1.0, np.where(trimap.bg, 0.0, 0.5))

    def apply(a):
        return laplacian_product(stats, a) + cfg.lam * seeded * a

    energy = [] if track_energy else None
    raw, iters, res = pcg(apply, rhs, diag, np.asarray(x0, dtype=np.float64), cfg.tol, cfg.max_iter, energy)
    if res > cfg.tol:
        raise MattingError(f"PCG did not converge in {iters} iterations (relative residual {res:.3g})",
                           residual=res)
    return AlphaMat(alpha=pin(raw, trimap), raw=raw, iterations=iters, residual=res,
                    energy=energy or [])


def radius_schedule(window=31, rounds=4):
    r = window // 2
    out = []
    for _ in range(rounds):
        out.append(r)
        r = max(r // 2, 1)
    return out


def sigmoid(alpha, slope=10.0, center=0.5):
    return 1.0 / (1.0 + np.exp(-slope * (np.asarray(alpha, dtype=np.float64) - center)))


@dataclass
class MatteResult:
    alpha: np.ndarray
    trimaps: list
    alphas: list
    iterations: list


def matte_iterate(img, trimap, cfg=MattingConfig()):
    """Solve, grow seeds, halve the window; repeat, then sharpen with a sigmoid."""
    img = np.asarray(img, dtype=np.float64)
    trimaps = [trimap]
    alphas = []
    iters = []
    x0 = None
    for radius in radius_schedule(cfg.window, cfg.rounds):
        mat = solve_alpha_pcg(img, trimap, radius, cfg, x0=x0)
        trimap, pinned = grow_seeds(mat.alpha, trimap, cfg.low, cfg.high)
        trimaps.append(trimap)
        alphas.append(pinned)
        iters.append(mat.iterations)
        x0 = pinned
    alpha = np.clip(sigmoid(alphas[-1], cfg.slope, cfg.center), 0.0, 1.0)
    return MatteResult(alpha=alpha, trimaps=trimaps, alphas=alphas, iterations=iters)


# --------------------------------------------------------------------------
# Compositing

def parse_color(text):
    """``"#4a6fb3"`` -> (r, g, b) in [0, 1]."""
    s = text.strip().lstrip("#")
    if len(s) != 6:
        raise ValueError(f"expected a #rrggbb color, got {text!r}")
    try:
        return tuple(int(s[i:i + 2], 16) / 255.0 for i in (0, 2, 4))
    except ValueError as exc:
        raise ValueError(f"expected a #rrggbb color, got {text!r}") from exc


def replace_background(y, alpha, z):
    """``alpha * y + (1 - alpha) * z``; ``z`` may be an image or a color triple."""
    y = np.asarray(y, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if z.shape == (3,):
        z = flat_image(z, *y.shape[:2])
    if z.shape != y.shape or alpha.shape != y.shape[:2]:
        raise ValueError(f"shape mismatch: image {y.shape}, alpha {alpha.shape}, background {z.shape}")
    a = alpha[..., None]
    return np.clip(a * y + (1.0 - a) * z, 0.0, 1.0)
