"""Image containers, color conversion, morphology and windowed statistics.

Images are plain ``(H, W, 3)`` float64 arrays with samples in [0, 1];
masks are ``(H, W)`` bool arrays. Everything here is a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage


def as_image(img, name="image"):
    """Validate and return ``img`` as a contiguous float64 (H, W, 3) array."""
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} samples must lie in [0, 1]")
    return arr


def as_mask(mask, shape=None, name="mask"):
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape[:2]):
        raise ValueError(f"{name} shape {m.shape} does not match image {tuple(shape[:2])}")
    return m


def flat_image(color, height, width):
    return np.broadcast_to(np.asarray(color, dtype=np.float64), (height, width, 3)).copy()


# --------------------------------------------------------------------------
# PNG I/O

def load_png(path):
    """Read an 8-bit PNG as RGB in [0, 1] (sample k maps to k/255)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def to_uint8(arr):
    # round half up
    return np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(path, img):
    Image.fromarray(to_uint8(img)).save(path)


def load_mask_png(path):
    """Grayscale PNG mask; values >= 128 are members."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr >= 128


def save_mask_png(path, mask):
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)).save(path)


# --------------------------------------------------------------------------
# HSV (hexcone model, every channel in [0, 1], hue of grays is 0)

def rgb_to_hsv(img):
    rgb = np.asarray(img, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    chromatic = c > 0
    safe_c = np.where(chromatic, c, 1.0)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    h = np.zeros_like(v)
    rmax = chromatic & (v == r)
    gmax = chromatic & ~rmax & (v == g)
    bmax = chromatic & ~rmax & ~gmax
    h = np.where(rmax, np.mod((g - b) / safe_c, 6.0), h)
    h = np.where(gmax, (b - r) / safe_c + 2.0, h)
    h = np.where(bmax, (r - g) / safe_c + 4.0, h)
    h = h / 6.0
    h = np.where(h >= 1.0, h - 1.0, h)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv):
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = np.mod(h, 1.0) * 6.0
    sector = np.floor(h6)
    f = h6 - sector
    sector = sector.astype(int) % 6
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(sector, choices_r)
    g = np.choose(sector, choices_g)
    b = np.choose(sector, choices_b)
    return np.stack([r, g, b], axis=-1)


# --------------------------------------------------------------------------
# Morphology and labelling

def disc_offsets(radius):
    r = int(np.floor(radius))
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dx * dx + dy * dy <= radius * radius
    return dy[keep], dx[keep]


def dilate_disc(mask, radius):
    """Dilate by the discrete Euclidean disc ``{dx^2 + dy^2 <= radius^2}``."""
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if not mask.any() or mask.all():
        return mask.copy()
    # nearest member pixel per location, then an exact integer distance test
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    yy, xx = np.indices(mask.shape)
    d2 = (yy - iy) ** 2 + (xx - ix) ** 2
    return d2 <= radius * radius


def erode_rect(mask, margin):
    """Binary erosion with a (2*margin+1)^2 square; pixels off-image count as outside."""
    mask = as_mask(mask)
    if margin <= 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=np.ones((2 * margin + 1, 2 * margin + 1), bool),
                                  border_value=0)


_FOUR = ndimage.generate_binary_structure(2, 1)


def connected_components(labels):
    """4-connected components of equal-label pixels.

    Returns ``(ids, members)`` where ``ids`` is an (H, W) int array of
    component ids ``0..n-1`` and ``members[k]`` holds the flat (row-major)
    indices of component ``k``.
    """
    labels = np.asarray(labels)
    ids = np.full(labels.shape, -1, dtype=np.int64)
    n = 0
    for value in np.unique(labels):
        comp, count = ndimage.label(labels == value, structure=_FOUR)
        hit = comp > 0
        ids[hit] = comp[hit] - 1 + n
        n += count
    flat = ids.ravel()
    order = np.argsort(flat, kind="stable")
    splits = np.cumsum(np.bincount(flat, minlength=n))[:-1]
    members = np.split(order, splits)
    return ids, members


# --------------------------------------------------------------------------
# Windowed (box) statistics

def _box_sum_axis(a, radius, axis):
    n = a.shape[axis]
    a = np.moveaxis(a, axis, 0)
    csum = np.empty((n + 1,) + a.shape[1:], dtype=np.float64)
    csum[0] = 0.0
    np.cumsum(a, axis=0, out=csum[1:])
    idx = np.arange(n)
    hi = np.minimum(idx + radius, n - 1) + 1
    lo = np.maximum(idx - radius, 0)
    out = csum[hi] - csum[lo]
    return np.moveaxis(out, 0, axis)


def box_sum(a, radius):
    """Sum over the ``(2r+1) x (2r+1)`` window centered at every pixel.

    Windows are clipped at the image border (no padding). Sums run over
    axes 0 and 1; trailing axes are carried along. Accumulation is a
    running sum down the rows followed by one across the columns, so the
    result is reproducible bit for bit.
    """
    a = np.asarray(a, dtype=np.float64)
    if radius == 0:
        return a.copy()
    return _box_sum_axis(_box_sum_axis(a, radius, 0), radius, 1)


def window_count(shape, radius):
    """|w_i|: number of in-bounds pixels in the clipped window around each pixel."""
    h, w = shape[:2]
    def span(n):
        idx = np.arange(n)
        return (np.minimum(idx + radius, n - 1) - np.maximum(idx - radius, 0) + 1).astype(np.float64)
    return np.outer(span(h), span(w))


@dataclass(frozen=True)
class WindowStats:
    """Windowed sums of planes and of pairwise plane products.

    ``sums[..., k]`` is the window sum of plane k, ``products[(a, b)]`` the
    window sum of plane a times plane b, ``count`` is |w_i|.
    """
    radius: int
    sums: np.ndarray
    products: dict
    count: np.ndarray

    @property
    def means(self):
        return self.sums / self.count[..., None]


def windowed_sums(planes, window_side, pairs=()):
    """Window statistics of an (H, W) or (H, W, P) stack of planes."""
    if window_side < 1 or window_side % 2 == 0:
        raise ValueError("window_side must be an odd integer >= 1")
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim == 2:
        planes = planes[..., None]
    radius = window_side // 2
    sums = box_sum(planes, radius)
    products = {}
    if pairs:
        prod = np.stack([planes[..., a] * planes[..., b] for a, b in pairs], axis=-1)
        psums = box_sum(prod, radius)
        products = {tuple(p): psums[..., k] for k, p in enumerate(pairs)}
    return WindowStats(radius, sums, products, window_count(planes.shape, radius))
