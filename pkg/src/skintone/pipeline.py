"""End-to-end flows: headshot correction, yearbook photos, user-masked correction."""
from __future__ import annotations

import dataclasses
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import faceprep, gifopt, grading, luma, matte, skinmask
from .imgcore import as_image, as_mask, flat_image, rgb_to_hsv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_SKIN = 3
EXIT_SOLVER = 4


class PipelineError(Exception):
    """Failure with a machine-readable ``code`` and a process exit status."""

    exit_codes = {"invalid_input": EXIT_INVALID, "skin_not_found": EXIT_NO_SKIN,
                  "solver_failure": EXIT_SOLVER}

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message

    @property
    def exit_code(self):
        return self.exit_codes.get(self.code, EXIT_INVALID)

    def to_dict(self):
        return {"code": self.code, "message": self.message}


@dataclass(frozen=True)
class PipelineConfig:
    # face window and crop
    scale: float = 2.0
    crop_side: int = 320
    # skin extraction
    clusters: int = 4
    kmeans_seed: int = 0
    kmeans_init: int = 4
    min_overlap: float = 0.1
    s_band: float = 0.2
    v_min: float = 0.15
    v_max: float = 0.95
    dilation: int = 20
    # grading
    idt_iters: int = 20
    idt_bins: int = 300
    seed: int = 0
    # guided filter
    window: int = 19
    epsilon: float = 1e-7
    lipschitz: float = 500.0
    max_iters: int = 500
    tol: float = 1e-8
    eta_s_scale: float = 5e-4
    eta_b_scale: float = 5e-10
    luma: bool = True
    # matting
    matting_window: int = 31
    matting_rounds: int = 4
    matting_lambda: float = 100.0
    matting_eps: float = 1e-7
    pcg_tol: float = 1e-6
    pcg_max_iter: int = 2000
    background: str = "#4a6fb3"

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise PipelineError("invalid_input", f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes):
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def idt(self):
        return grading.IDTConfig(iterations=self.idt_iters, bins=self.idt_bins, seed=self.seed)

    def matting(self):
        return matte.MattingConfig(lam=self.matting_lambda, eps=self.matting_eps, tol=self.pcg_tol,
                                   max_iter=self.pcg_max_iter, window=self.matting_window,
                                   rounds=self.matting_rounds)


@dataclass
class RunReport:
    stages: dict = field(default_factory=dict)
    total_seconds: float = 0.0
    solver_iterations: int = 0
    solver_converged: bool = False
    final_objective: float = float("nan")
    regions: dict = field(default_factory=dict)
    radii: dict = field(default_factory=dict)
    matting_iterations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    status: str = "ok"
    error: dict = None

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            self.stages[name] = self.stages.get(name, 0.0) + dt
            self.total_seconds += dt

    def to_dict(self, timings=True):
        d = dataclasses.asdict(self)
        if not timings:
            d.pop("stages")
            d.pop("total_seconds")
        return d

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


@dataclass
class SkinExtraction:
    face: faceprep.FaceArea
    window: faceprep.FaceWindow
    hue_region: np.ndarray
    regions: skinmask.RegionSystem


@dataclass
class CorrectionResult:
    image: np.ndarray
    guide: np.ndarray
    filtered: np.ndarray
    regions: skinmask.RegionSystem
    report: RunReport
    solve: gifopt.SolveResult = None
    face: faceprep.FaceArea = None


@dataclass
class YearbookResult:
    image: np.ndarray
    alpha: np.ndarray
    corrected: CorrectionResult
    report: RunReport


def _check_image(img, name):
    try:
        return as_image(img, name)
    except ValueError as exc:
        raise PipelineError("invalid_input", str(exc)) from exc


def extract_skin(img, cands, cfg=PipelineConfig()):
    """Face area, working window and skin region system of a portrait."""
    cands = list(cands)
    if not cands:
        raise PipelineError("invalid_input", "no face candidates")
    h, w = img.shape[:2]
    for c in cands:
        if not (0 <= c.x < w and 0 <= c.y < h):
            raise PipelineError("invalid_input", f"candidate center ({c.x}, {c.y}) outside the image")
    face = faceprep.aggregate_candidates(cands)
    window = faceprep.face_window(face, cfg.scale, img.shape)
    hsv = rgb_to_hsv(img)
    try:
        model = skinmask.kmeans_hue(hsv[..., 0].ravel(), cfg.clusters, seed=cfg.kmeans_seed,
                                    n_init=cfg.kmeans_init)
    except ValueError as exc:
        raise PipelineError("invalid_input", str(exc)) from exc
    core = face.box_mask(img.shape)
    hue_region = skinmask.skin_hue_region(model.labels, window.mask(), core=core,
                                          min_overlap=cfg.min_overlap)
    skin, s_hat = skinmask.refine_sv(hue_region, hsv, core, cfg.s_band, (cfg.v_min, cfg.v_max))
    return SkinExtraction(face, window, hue_region, skinmask.build_regions(skin, cfg.dilation, s_hat))


def _require_skin(mask, which):
    if not np.any(mask):
        raise PipelineError("skin_not_found", f"skin region not found in the {which} image")


def target_samples(target, target_cands=None, cfg=PipelineConfig(), target_skin=None, report=None):
    """Skin colors of the target image, shared by every input in a batch."""
    target = _check_image(target, "target")
    report = report or RunReport()
    with report.stage("target_extraction"):
        if target_skin is None:
            target_skin = extract_skin(target, target_cands, cfg).regions.skin
        else:
            target_skin = as_mask(target_skin, target.shape, "target skin mask")
    _require_skin(target_skin, "target")
    return grading.skin_samples(target, target_skin)


def _correct_with_regions(y, regions, tgt_samples, cfg, report):
    _require_skin(regions.skin, "input")
    report.regions = regions.sizes()
    with report.stage("grading"):
        mapped = grading.idt_transfer(grading.skin_samples(y, regions.skin), tgt_samples, cfg.idt())
        guide = grading.assemble_guide(y, mapped, regions.skin)
    with report.stage("filtering"):
        try:
            cons = gifopt.make_constraints(y, guide, regions.skin, regions.background,
                                           cfg.eta_s_scale, cfg.eta_b_scale)
            res = gifopt.mfista_solve(y, guide, cons, window_side=cfg.window, eps=cfg.epsilon,
                                      lipschitz=cfg.lipschitz, max_iters=cfg.max_iters, tol=cfg.tol)
        except gifopt.SolverError as exc:
            raise PipelineError("solver_failure", str(exc)) from exc
    report.radii = {"eta_s": cons.eta_s, "eta_b": cons.eta_b}
    report.solver_iterations = res.iterations
    report.solver_converged = res.converged
    report.final_objective = res.final_objective
    filtered = res.x
    with report.stage("luminance"):
        out = luma.preserve_luminance(y, filtered) if cfg.luma else np.clip(filtered, 0.0, 1.0)
    return CorrectionResult(image=out, guide=guide, filtered=filtered, regions=regions,
                            report=report, solve=res)


def correct_headshot(y, target, cands, target_cands=None, cfg=PipelineConfig(),
                     skin_mask=None, target_skin=None, tgt_samples=None):
    """Correct the facial skin color of ``y`` toward the skin of ``target``.

    ``skin_mask`` replaces the extracted skin region of the input;
    ``tgt_samples`` (from ``target_samples``) skips the target extraction.
    """
    report = RunReport()
    y = _check_image(y, "input")
    with report.stage("extraction"):
        ext = extract_skin(y, cands, cfg)
        regions = ext.regions
        if skin_mask is not None:
            regions = skinmask.build_regions(as_mask(skin_mask, y.shape, "skin mask"), cfg.dilation)
    if tgt_samples is None:
        tgt_samples = target_samples(target, target_cands, cfg, target_skin, report)
    result = _correct_with_regions(y, regions, tgt_samples, cfg, report)
    result.face = ext.face
    return result


def semiauto_correct(y, target, skin, background, target_skin, cfg=PipelineConfig()):
    """Correction with user-drawn regions; pixels in neither mask are free."""
    report = RunReport()
    y = _check_image(y, "input")
    try:
        regions = skinmask.regions_from_masks(as_mask(skin, y.shape, "skin mask"),
                                              as_mask(background, y.shape, "background mask"))
    except ValueError as exc:
        raise PipelineError("invalid_input", str(exc)) from exc
    tgt = target_samples(target, cfg=cfg, target_skin=target_skin, report=report)
    return _correct_with_regions(y, regions, tgt, cfg, report)


def resolve_background(spec, shape):
    """A ``#rrggbb`` string, a color triple or an image resized to ``shape``."""
    if isinstance(spec, str):
        return flat_image(matte.parse_color(spec), *shape[:2])
    arr = np.asarray(spec, dtype=np.float64)
    if arr.shape == (3,):
        return flat_image(arr, *shape[:2])
    if arr.shape[:2] != tuple(shape[:2]):
        arr = faceprep._resize_bilinear(arr, shape[0], shape[1])
    return np.clip(arr, 0.0, 1.0)


def yearbook_generate(y, target, background, cands, target_cands=None, cfg=PipelineConfig(),
                      target_skin=None, tgt_samples=None):
    """Crop to ``crop_side``, correct the skin, then matte and swap the background."""
    y = _check_image(y, "input")
    report = RunReport()
    with report.stage("crop"):
        if not cands:
            raise PipelineError("invalid_input", "no face candidates")
        face = faceprep.aggregate_candidates(cands)
        window = faceprep.face_window(face, cfg.scale, y.shape)
        try:
            crop = faceprep.crop_resize(y, window, cfg.crop_side)
        except ValueError as exc:
            raise PipelineError("invalid_input", str(exc)) from exc
        crop_cands = faceprep.map_candidates(cands, window, cfg.crop_side)
    if tgt_samples is None:
        tgt_samples = target_samples(target, target_cands, cfg, target_skin, report)
    with report.stage("extraction"):
        ext = extract_skin(crop, crop_cands, cfg)
    corrected = _correct_with_regions(crop, ext.regions, tgt_samples, cfg, report)
    corrected.face = ext.face
    with report.stage("matting"):
        try:
            trimap = matte.init_trimap(ext.face, ext.regions.skin, corrected.image, cfg.matting())
            mres = matte.matte_iterate(corrected.image, trimap, cfg.matting())
        except matte.MattingError as exc:
            raise PipelineError("solver_failure", str(exc)) from exc
        report.matting_iterations = mres.iterations
        z = resolve_background(background if background is not None else cfg.background, crop.shape)
        out = matte.replace_background(corrected.image, mres.alpha, z)
    return YearbookResult(image=out, alpha=mres.alpha, corrected=corrected, report=report)
