"""Intensity/color decomposition and the shading-preserving recombination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IntensityColorPair:
    intensity: np.ndarray   # (H, W)
    color: np.ndarray       # (H, W, 3)


def decompose(img):
    """``I = sum(x_c^2) / sum(x_c)`` and ``C = x / I``.

    Black pixels get ``I = 0`` and ``C = (1, 1, 1)``.
    """
    x = np.asarray(img, dtype=np.float64)
    l1 = x.sum(axis=-1)
    black = l1 <= 0
    intensity = np.where(black, 0.0, np.sum(x * x, axis=-1) / np.where(black, 1.0, l1))
    safe = np.where(black, 1.0, intensity)[..., None]
    color = np.where(black[..., None], 1.0, x / safe)
    return IntensityColorPair(intensity, color)


def recombine_luminance(input_pair, filtered_pair):
    """Input intensity times filtered color, clipped to [0, 1]."""
    out = input_pair.intensity[..., None] * filtered_pair.color
    return np.clip(out, 0.0, 1.0)


def preserve_luminance(y, x):
    return recombine_luminance(decompose(y), decompose(x))
