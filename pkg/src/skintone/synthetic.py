"""Synthetic portraits with known regions, for tests and demos.

A portrait is a flat wall with a faint gradient, an elliptic face with a
neck and soft shading, a dark hair cap and a torso. Every part's mask is
returned alongside the image so tests can check extraction and matting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .faceprep import RectCandidate

NEUTRAL_SKIN = (0.86, 0.64, 0.52)
BLUE_TINT = (0.82, 0.92, 1.18)
GRAY_WALL = (0.55, 0.60, 0.68)
BEIGE_WALL = (0.86, 0.78, 0.60)
HAIR = (0.12, 0.09, 0.07)
SHIRT = (0.30, 0.46, 0.38)


@dataclass
class Portrait:
    image: np.ndarray
    candidates: list
    skin: np.ndarray
    hair: np.ndarray
    torso: np.ndarray
    wall: np.ndarray

    @property
    def foreground(self):
        return self.skin | self.hair | self.torso


def make_portrait(size=400, skin=NEUTRAL_SKIN, tint=(1.0, 1.0, 1.0), wall=GRAY_WALL,
                  hair=HAIR, shirt=SHIRT, center=None, face_radii=(58, 72), noise=0.01,
                  n_candidates=5, seed=0):
    rng = np.random.default_rng(seed)
    h = w = size
    cx, cy = center if center is not None else (w / 2.0, 0.475 * h)
    ax, ay = face_radii
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)

    face = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0
    neck = (np.abs(xx - cx) <= 0.42 * ax) & (yy >= cy + 0.6 * ay) & (yy < cy + 1.55 * ay)
    cap = ((xx - cx) / (1.18 * ax)) ** 2 + ((yy - cy + 0.28 * ay) / (1.02 * ay)) ** 2 <= 1.0
    cap &= yy < cy - 0.05 * ay
    shoulders = (yy >= cy + 1.45 * ay) & (np.abs(xx - cx) <= 1.7 * ax + 0.5 * (yy - cy - 1.45 * ay))
    torso = shoulders
    skin_mask = (face | neck) & ~torso
    hair_mask = cap & ~skin_mask
    wall_mask = ~(skin_mask | hair_mask | torso)

    img = np.empty((h, w, 3))
    grad = 1.0 + 0.04 * (yy / h - 0.5)
    img[:] = np.asarray(wall) * grad[..., None]

    # soft side lighting on the skin
    shade = 1.0 - 0.12 * (xx - cx) / ax - 0.05 * (yy - cy) / ay
    skin_rgb = np.asarray(skin) * np.asarray(tint)
    img[skin_mask] = (skin_rgb * shade[skin_mask][:, None])
    img[hair_mask] = np.asarray(hair)
    img[torso] = np.asarray(shirt) * (1.0 - 0.08 * (yy[torso] - cy) / h)[:, None]
    img += noise * rng.standard_normal(img.shape)
    img = np.clip(img, 0.0, 1.0)

    box = 0.6 * 2 * ax
    cands = []
    for _ in range(n_candidates):
        jx, jy, jw, jh = rng.uniform(-3, 3, size=4)
        cands.append(RectCandidate(float(cx + jx), float(cy + jy), float(box + jw), float(box + jh)))
    return Portrait(image=img, candidates=cands, skin=skin_mask, hair=hair_mask,
                    torso=torso, wall=wall_mask)


def two_region_scene(size=64, seed=0, noise=0.02):
    """Disc of skin-like color on a bluish field; used for solver checks."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    disc = (yy - size / 2) ** 2 + (xx - size / 2) ** 2 < (size / 4) ** 2
    img = np.where(disc[..., None], NEUTRAL_SKIN, GRAY_WALL) + noise * rng.standard_normal((size, size, 3))
    return np.clip(img, 0.0, 1.0), disc
