"""Correct every corpus portrait toward the neutral target and make yearbook crops.

    python demos/yearbook_demo.py out_dir

Prints the skin hue before and after correction next to the target hue.
"""
import sys
from pathlib import Path

import numpy as np

from skintone import correct_headshot, yearbook_generate
from skintone.corpus import YEARBOOK_BACKGROUND, load_corpus
from skintone.imgcore import rgb_to_hsv, save_png
from skintone.pipeline import target_samples


def hue(img, mask):
    return float(rgb_to_hsv(img[mask].mean(axis=0)[None, None])[0, 0, 0])


out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)
items = load_corpus()
target = items["target_neutral"]
tgt = target_samples(target.image, target.candidates)
t_hue = float(rgb_to_hsv(tgt.mean(axis=0)[None, None])[0, 0, 0])

for item in items.values():
    if item.role != "source":
        continue
    res = correct_headshot(item.image, None, item.candidates, tgt_samples=tgt)
    skin = res.regions.skin
    print(f"{item.name:12s} hue {hue(item.image, skin):.4f} -> {hue(res.image, skin):.4f}"
          f"  (target {t_hue:.4f}, {res.report.solver_iterations} iterations)")
    save_png(out / f"{item.name}_corrected.png", res.image)
    yb = yearbook_generate(item.image, None, YEARBOOK_BACKGROUND, item.candidates, tgt_samples=tgt)
    save_png(out / f"{item.name}_yearbook.png", yb.image)
    save_png(out / f"{item.name}_alpha.png", yb.alpha)
    print(f"{'':12s} yearbook {yb.image.shape[0]}x{yb.image.shape[1]}, "
          f"{yb.report.total_seconds:.1f} s, matte mean {np.mean(yb.alpha):.3f}")
