"""How far the corrected skin hue lands from the target for several skin ball radii.

    python demos/green_tint_residual.py

A blue cast is removed to within about 0.012 in hue at the default skin
ball radius. A mild green cast is not: the ball lets the solution drift
back toward the input, leaving a gap of about 0.03. Shrinking the radius
closes the gap at the price of a stiffer fit to the graded guide.
"""
from skintone import PipelineConfig, correct_headshot
from skintone.corpus import load_corpus
from skintone.imgcore import rgb_to_hsv
from skintone.pipeline import target_samples
from skintone.synthetic import BLUE_TINT, GRAY_WALL, make_portrait


def hue(img, mask):
    return float(rgb_to_hsv(img[mask].mean(axis=0)[None, None])[0, 0, 0])


def gap(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


target = load_corpus()["target_neutral"]
tgt = target_samples(target.image, target.candidates)
t_hue = float(rgb_to_hsv(tgt.mean(axis=0)[None, None])[0, 0, 0])

for name, tint in (("blue", BLUE_TINT), ("green", (0.92, 1.10, 1.0))):
    p = make_portrait(400, tint=tint, wall=GRAY_WALL, seed=5)
    for scale in (5e-4, 2.5e-4, 1e-4):
        cfg = PipelineConfig(eta_s_scale=scale)
        res = correct_headshot(p.image, None, p.candidates, cfg=cfg, tgt_samples=tgt)
        g = gap(hue(res.image, res.regions.skin), t_hue)
        print(f"{name:5s} eta_s scale {scale:.1e}: hue gap {g:.4f}")
