"""Skin color region extraction and the derived region system.

Hue is clustered on the unit circle with k-means++ seeding, the cluster
dominating the face is grown into connected regions, and the result is
thresholded on saturation and value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imgcore import as_mask, dilate_disc

TWO_PI = 2.0 * np.pi
_FOUR = ndimage.generate_binary_structure(2, 1)


def _embed(hues):
    ang = TWO_PI * np.asarray(hues, dtype=np.float64)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def _angle_to_hue(vec):
    h = np.mod(np.arctan2(vec[..., 1], vec[..., 0]) / TWO_PI, 1.0)
    return np.where(h >= 1.0, 0.0, h)


def circular_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


def circular_mean(hues):
    """Mean direction of hues in [0, 1); 0 when the resultant vanishes."""
    v = _embed(hues).sum(axis=0)
    if np.hypot(v[0], v[1]) < 1e-12:
        return 0.0
    return float(_angle_to_hue(v))


def circular_cost(hues, centers, labels):
    """Within-cluster circular variance: sum of ``1 - cos(2*pi*(h - c))``."""
    diff = TWO_PI * (np.asarray(hues) - np.asarray(centers)[labels])
    return float(np.sum(1.0 - np.cos(diff)))


@dataclass
class HueClusterModel:
    k: int
    centers: np.ndarray
    labels: np.ndarray
    seed: int
    n_iter: int = 0
    cost: float = 0.0
    cost_history: list = field(default_factory=list)


def _kmeanspp(points, k, rng):
    n = len(points)
    centers = np.empty((k, 2))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(points, hues, centers, max_iter):
    k = len(centers)
    labels = np.argmax(points @ centers.T, axis=1)
    history = [circular_cost(hues, _angle_to_hue(centers), labels)]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        sums = np.stack([np.bincount(labels, weights=points[:, 0], minlength=k),
                         np.bincount(labels, weights=points[:, 1], minlength=k)], axis=1)
        norms = np.hypot(sums[:, 0], sums[:, 1])
        ok = norms > 1e-12
        # empty or balanced clusters keep their previous center
        centers = np.where(ok[:, None], sums / np.where(ok, norms, 1.0)[:, None], centers)
        new_labels = np.argmax(points @ centers.T, axis=1)
        history.append(circular_cost(hues, _angle_to_hue(centers), new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers, labels, history, n_iter


def kmeans_hue(hues, k=4, seed=0, max_iter=100, n_init=4):
    """k-means on circular hue values.

    Runs ``n_init`` k-means++ seeded Lloyd passes on the embedding
    ``(cos 2*pi*h, sin 2*pi*h)`` and keeps the lowest-cost one.
    """
    hues = np.asarray(hues, dtype=np.float64).ravel()
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(np.unique(hues)):
        raise ValueError(f"k={k} exceeds the number of distinct hue values")
    points = _embed(hues)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(int(n_init), 1)):
        centers, labels, history, n_iter = _lloyd(points, hues, _kmeanspp(points, k, rng), max_iter)
        cost = history[-1]
        if best is None or cost < best[0]:
            best = (cost, centers, labels, history, n_iter)
    cost, centers, labels, history, n_iter = best
    return HueClusterModel(k=k, centers=_angle_to_hue(centers), labels=labels, seed=seed,
                           n_iter=n_iter, cost=cost, cost_history=history)


def skin_hue_region(labels, rect, core=None, min_overlap=0.1):
    """Connected regions of the skin cluster that sit mainly in the face window.

    The skin cluster is the most frequent label inside ``core`` (defaults to
    ``rect``). A 4-connected component of that label is kept when at least
    ``min_overlap`` of its own pixels lie inside ``rect``.
    """
    rect = as_mask(rect)
    labels = np.asarray(labels).reshape(rect.shape)
    core = rect if core is None else as_mask(core, rect.shape) & rect
    if not rect.any():
        raise ValueError("face window is empty")
    if not core.any():
        core = rect
    skin_label = np.bincount(labels[core].astype(np.int64)).argmax()
    comp, n = ndimage.label(labels == skin_label, structure=_FOUR)
    if n == 0:
        return np.zeros_like(rect)
    size = np.bincount(comp.ravel(), minlength=n + 1)
    inside = np.bincount(comp[rect], minlength=n + 1)
    keep = inside >= min_overlap * size
    keep[0] = False
    return keep[comp]


def lower_median(values):
    vals = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if vals.size == 0:
        raise ValueError("median of an empty set")
    return float(vals[(vals.size - 1) // 2])


def refine_sv(hue_region, hsv, face_area, s_band=0.2, v_range=(0.15, 0.95)):
    """Keep hue-region pixels whose saturation is within ``s_band`` of the
    face-area median saturation and whose value lies in ``v_range``.

    Returns ``(skin_mask, s_hat)``.
    """
    hue_region = as_mask(hue_region)
    face_area = as_mask(face_area, hue_region.shape)
    s = hsv[..., 1]
    v = hsv[..., 2]
    s_hat = lower_median(s[face_area])
    keep = (hue_region & (s >= s_hat - s_band) & (s <= s_hat + s_band)
            & (v >= v_range[0]) & (v <= v_range[1]))
    return keep, s_hat


@dataclass(frozen=True)
class RegionSystem:
    """Skin region, its dilation, background and the free band between them."""
    skin: np.ndarray
    dilated: np.ndarray
    background: np.ndarray
    boundary: np.ndarray
    s_hat: float = float("nan")

    def sizes(self):
        return {"skin": int(self.skin.sum()), "background": int(self.background.sum()),
                "boundary": int(self.boundary.sum())}


def build_regions(skin, radius=20, s_hat=float("nan")):
    skin = as_mask(skin)
    dilated = dilate_disc(skin, radius)
    return RegionSystem(skin=skin.copy(), dilated=dilated, background=~dilated,
                        boundary=dilated & ~skin, s_hat=s_hat)


def regions_from_masks(skin, background):
    """Region system from user-drawn skin/background masks (boundary = the rest)."""
    skin = as_mask(skin)
    background = as_mask(background, skin.shape)
    if np.any(skin & background):
        raise ValueError("skin and background masks overlap")
    return RegionSystem(skin=skin.copy(), dilated=~background, background=background.copy(),
                        boundary=~(skin | background))
