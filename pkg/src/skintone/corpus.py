"""The bundled synthetic corpus: tinted portraits with a neutral target.

Each item is a PNG, its face candidates (JSON) and its true skin mask.
``build_corpus`` regenerates the files; ``load_corpus`` reads them back.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import synthetic
from .faceprep import load_candidates, save_candidates
from .imgcore import load_mask_png, load_png, save_mask_png, save_png

DATA_DIR = Path(__file__).parent / "data" / "corpus"
YEARBOOK_BACKGROUND = "#4a6fb3"

# name -> (role, tint, wall, seed)
ITEMS = {
    "target_neutral": ("target", (1.0, 1.0, 1.0), synthetic.GRAY_WALL, 2),
    "blue_gray": ("source", synthetic.BLUE_TINT, synthetic.GRAY_WALL, 1),
    "blue_beige": ("source", synthetic.BLUE_TINT, synthetic.BEIGE_WALL, 3),
}


@dataclass
class CorpusItem:
    name: str
    role: str
    image: np.ndarray
    candidates: list
    skin: np.ndarray
    image_path: Path
    candidates_path: Path
    skin_path: Path
    wall: str


def build_corpus(dest=DATA_DIR, size=400):
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, (role, tint, wall, seed) in ITEMS.items():
        p = synthetic.make_portrait(size, tint=tint, wall=wall, seed=seed)
        save_png(dest / f"{name}.png", p.image)
        save_candidates(dest / f"{name}.json", p.candidates)
        save_mask_png(dest / f"{name}_skin.png", p.skin)
        manifest.append({"name": name, "role": role, "tint": list(tint), "wall": list(wall),
                         "seed": seed,
                         "wall_kind": "skin-colored" if wall == synthetic.BEIGE_WALL else "gray"})
    with open(dest / "manifest.json", "w") as fh:
        json.dump({"background": YEARBOOK_BACKGROUND, "items": manifest}, fh, indent=2)
    return dest


def load_corpus(root=DATA_DIR):
    """All corpus items keyed by name."""
    root = Path(root)
    with open(root / "manifest.json") as fh:
        manifest = json.load(fh)
    out = {}
    for entry in manifest["items"]:
        name = entry["name"]
        paths = (root / f"{name}.png", root / f"{name}.json", root / f"{name}_skin.png")
        out[name] = CorpusItem(name=name, role=entry["role"], image=load_png(paths[0]),
                               candidates=load_candidates(paths[1]), skin=load_mask_png(paths[2]),
                               image_path=paths[0], candidates_path=paths[1], skin_path=paths[2],
                               wall=entry["wall_kind"])
    return out
