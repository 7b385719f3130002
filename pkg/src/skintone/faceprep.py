"""Face area from detector candidates, working window sizing, crop and resize."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RectCandidate:
    """A detector hit: barycenter (x, y) and size (w, h), in pixels."""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"candidate size must be positive, got w={self.w}, h={self.h}")


@dataclass(frozen=True)
class FaceArea:
    """Aggregated face: center (x, y), base size (w, h)."""
    x: float
    y: float
    w: float
    h: float

    def box(self, shape):
        """Clipped (top, bottom, left, right) of the w x h face rectangle; bottom/right exclusive."""
        top = max(int(math.floor(self.y - self.h / 2 + 0.5)), 0)
        bottom = min(int(math.floor(self.y + self.h / 2 + 0.5)), shape[0])
        left = max(int(math.floor(self.x - self.w / 2 + 0.5)), 0)
        right = min(int(math.floor(self.x + self.w / 2 + 0.5)), shape[1])
        return top, bottom, left, right

    def box_mask(self, shape):
        top, bottom, left, right = self.box(shape)
        m = np.zeros(shape[:2], dtype=bool)
        m[top:bottom, left:right] = True
        return m


@dataclass(frozen=True)
class FaceWindow:
    """Square working window of odd ``side`` around ``(row, col)``, clipped to the image.

    ``top``/``left`` are inclusive and ``bottom``/``right`` exclusive, after clipping.
    """
    row: int
    col: int
    side: int
    top: int
    bottom: int
    left: int
    right: int
    shape: tuple

    @property
    def area(self):
        return max(self.bottom - self.top, 0) * max(self.right - self.left, 0)

    def mask(self):
        m = np.zeros(self.shape[:2], dtype=bool)
        m[self.top:self.bottom, self.left:self.right] = True
        return m


def _lower_median(values):
    vals = sorted(values)
    return vals[(len(vals) - 1) // 2]


def aggregate_candidates(cands):
    """Coordinate-wise (lower) median of the candidate rectangles."""
    cands = list(cands)
    if not cands:
        raise ValueError("no face candidates")
    return FaceArea(
        x=float(_lower_median(c.x for c in cands)),
        y=float(_lower_median(c.y for c in cands)),
        w=float(_lower_median(c.w for c in cands)),
        h=float(_lower_median(c.h for c in cands)),
    )


def window_side(w, scale):
    """round_half_up(2*scale*w) + 1, bumped to the next odd number if even."""
    if scale <= 0:
        raise ValueError("scale factor must be positive")
    side = int(math.floor(2.0 * scale * w + 0.5)) + 1
    if side % 2 == 0:
        side += 1
    return side


def face_window(face, scale, shape):
    """Working window of side ``window_side(face.w, scale)`` centered on the face."""
    side = window_side(face.w, scale)
    row = int(math.floor(face.y + 0.5))
    col = int(math.floor(face.x + 0.5))
    half = side // 2
    h, w = shape[:2]
    return FaceWindow(
        row=row, col=col, side=side,
        top=max(row - half, 0), bottom=min(row + half + 1, h),
        left=max(col - half, 0), right=min(col + half + 1, w),
        shape=(h, w),
    )


def _resize_bilinear(img, out_h, out_w):
    h, w = img.shape[:2]
    # pixel-center convention; unit scale samples the integer grid exactly
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def crop_resize(img, window, out_side):
    """Crop the working window and resample it to ``out_side x out_side``."""
    if out_side < 1:
        raise ValueError("out_side must be >= 1")
    crop = np.asarray(img, dtype=np.float64)[window.top:window.bottom, window.left:window.right]
    if crop.shape[0] == 0 or crop.shape[1] == 0:
        raise ValueError("degenerate crop: working window does not overlap the image")
    squeeze = crop.ndim == 2
    if squeeze:
        crop = crop[..., None]
    out = np.clip(_resize_bilinear(crop, out_side, out_side), 0.0, 1.0)
    return out[..., 0] if squeeze else out


def map_candidates(cands, window, out_side):
    """Express candidates in the coordinates of ``crop_resize(img, window, out_side)``."""
    sy = out_side / (window.bottom - window.top)
    sx = out_side / (window.right - window.left)
    return [RectCandidate((c.x - window.left + 0.5) * sx - 0.5,
                          (c.y - window.top + 0.5) * sy - 0.5,
                          c.w * sx, c.h * sy) for c in cands]


def load_candidates(path):
    """Read a JSON array of ``{"x", "y", "w", "h"}`` objects."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("candidate file must hold a JSON array")
    try:
        return [RectCandidate(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"])) for d in data]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed candidate entry: {exc}") from exc


def save_candidates(path, cands):
    with open(path, "w") as fh:
        json.dump([{"x": c.x, "y": c.y, "w": c.w, "h": c.h} for c in cands], fh, indent=1)
