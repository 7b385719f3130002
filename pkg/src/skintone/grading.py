"""Color grading by iterative distribution transfer (IDT).

Each iteration rotates both color clouds by a random orthonormal basis,
matches the 1-D marginals of the source to the target along the three
rotated axes, and rotates back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IDTConfig:
    iterations: int = 20
    bins: int = 300
    seed: int = 0
    clip: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")


def _cdf_inverse(cdf, edges, q):
    # smallest position with cdf >= q (cdf > 0 for q == 0), linear inside the bin
    k = np.where(q > 0, np.searchsorted(cdf, q, side="left"), np.searchsorted(cdf, 0.0, side="right"))
    k = np.clip(k, 1, len(cdf) - 1)
    lo, hi = cdf[k - 1], cdf[k]
    frac = np.where(hi > lo, (q - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
    return edges[k - 1] + np.clip(frac, 0.0, 1.0) * (edges[k] - edges[k - 1])


def pdf_transfer_1d(src, tgt, bins=300):
    """Map ``src`` values so their distribution matches ``tgt``.

    Both samples are histogrammed on ``bins`` equal-width bins over the
    joint range; mass is spread uniformly inside a bin, so both CDFs are
    piecewise linear. Each source value goes to the target quantile at its
    source CDF level, clamped to the target range. The map is non-decreasing.
    """
    src = np.asarray(src, dtype=np.float64).ravel()
    tgt = np.asarray(tgt, dtype=np.float64).ravel()
    if src.size == 0 or tgt.size == 0:
        raise ValueError("pdf_transfer_1d needs nonempty samples")
    t_lo, t_hi = tgt.min(), tgt.max()
    if t_hi == t_lo:
        return np.full_like(src, t_lo)
    s_lo, s_hi = src.min(), src.max()
    if s_hi == s_lo:
        return np.full_like(src, np.sort(tgt)[(tgt.size - 1) // 2])
    lo, hi = min(s_lo, t_lo), max(s_hi, t_hi)
    edges = np.linspace(lo, hi, bins + 1)
    cdf_s = np.concatenate([[0.0], np.cumsum(np.histogram(src, bins=edges)[0])]) / src.size
    cdf_t = np.concatenate([[0.0], np.cumsum(np.histogram(tgt, bins=edges)[0])]) / tgt.size
    q = np.interp(src, edges, cdf_s)
    # spreading mass across a whole bin can overshoot the samples themselves
    return np.clip(_cdf_inverse(cdf_t, edges, q), t_lo, t_hi)


def random_rotation(rng, dim=3):
    """Haar-distributed orthonormal matrix from the QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def idt_transfer(src, tgt, cfg=IDTConfig(), rotations=None, history=None):
    """Reshape the (N, 3) color cloud ``src`` toward ``tgt``.

    ``rotations`` overrides the seeded random bases (one per iteration).
    When ``history`` is a list, the intermediate (unclipped) cloud after
    every iteration is appended to it.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(tgt, dtype=np.float64).reshape(-1, 3)
    if len(src) == 0 or len(tgt) == 0:
        raise ValueError("color sample sets must be nonempty")
    rng = np.random.default_rng(cfg.seed)
    cur = src.copy()
    n_iter = cfg.iterations if rotations is None else len(rotations)
    for it in range(n_iter):
        rot = random_rotation(rng) if rotations is None else np.asarray(rotations[it], dtype=np.float64)
        cur_r = cur @ rot
        tgt_r = tgt @ rot
        mapped = np.empty_like(cur_r)
        for axis in range(3):
            mapped[:, axis] = pdf_transfer_1d(cur_r[:, axis], tgt_r[:, axis], cfg.bins)
        cur = mapped @ rot.T
        if history is not None:
            history.append(cur.copy())
    if cfg.clip:
        cur = np.clip(cur, 0.0, 1.0)
    return cur


def sliced_distance(a, b, directions):
    """Mean 1-D Wasserstein-1 distance between projections of two clouds."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    levels = (np.arange(256) + 0.5) / 256
    total = 0.0
    for d in np.asarray(directions, dtype=np.float64):
        qa = np.quantile(a @ d, levels)
        qb = np.quantile(b @ d, levels)
        total += np.mean(np.abs(qa - qb))
    return total / len(directions)


def skin_samples(img, mask):
    """Pixels of ``img`` under ``mask`` in row-major order, as an (N, 3) array."""
    return np.asarray(img, dtype=np.float64)[np.asarray(mask, dtype=bool)]


def assemble_guide(y, mapped, skin):
    """Guide image: graded colors on the skin region, the input elsewhere."""
    skin = np.asarray(skin, dtype=bool)
    mapped = np.asarray(mapped, dtype=np.float64).reshape(-1, 3)
    if mapped.shape[0] != int(skin.sum()):
        raise ValueError(f"{mapped.shape[0]} graded colors for {int(skin.sum())} skin pixels")
    g = np.array(y, dtype=np.float64, copy=True)
    g[skin] = mapped
    return g


def grade_skin(y, skin, target, target_skin, cfg=IDTConfig()):
    """Grade the skin colors of ``y`` toward the target's skin and build the guide."""
    mapped = idt_transfer(skin_samples(y, skin), skin_samples(target, target_skin), cfg)
    return assemble_guide(y, mapped, skin)
