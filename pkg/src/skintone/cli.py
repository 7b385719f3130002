"""Command line entry point: ``skintone <subcommand> ...``.

Exit status: 0 success, 2 invalid input, 3 skin region not found,
4 solver failure. Failures print a JSON error object on stderr and write
no output image.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np
from PIL import UnidentifiedImageError

from . import faceprep, grading, matte, pipeline
from .imgcore import load_mask_png, load_png, save_mask_png, save_png
from .pipeline import PipelineConfig, PipelineError, RunReport

log = logging.getLogger("skintone")

# flag name -> PipelineConfig field
_OVERRIDES = {
    "window": "window", "epsilon": "epsilon", "lipschitz": "lipschitz", "max_iters": "max_iters",
    "tol": "tol", "eta_s_scale": "eta_s_scale", "eta_b_scale": "eta_b_scale",
    "idt_iters": "idt_iters", "idt_bins": "idt_bins",
}


def _common(p):
    p.add_argument("--input", required=True, help="input PNG")
    p.add_argument("--output", help="output PNG")
    p.add_argument("--config", help="JSON file of PipelineConfig fields")
    p.add_argument("--seed", type=int, help="seed for hue clustering and color grading")
    p.add_argument("--report", help="write the JSON run report here")
    p.add_argument("-v", "--verbose", action="store_true")


def _face(p, required=True):
    p.add_argument("--candidates", required=required, help="JSON array of face rectangles")
    p.add_argument("--skin-mask", help="PNG mask replacing the extracted skin region")
    p.add_argument("--mask-out", help="write the input skin mask PNG here")


def _target(p):
    p.add_argument("--target", required=True, help="target PNG whose skin tone is matched")
    p.add_argument("--target-candidates", help="face rectangles of the target")
    p.add_argument("--target-mask", help="PNG skin mask of the target")
    p.add_argument("--idt-iters", type=int)
    p.add_argument("--idt-bins", type=int)


def _solver(p):
    p.add_argument("--window", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--eta-s-scale", type=float)
    p.add_argument("--eta-b-scale", type=float)
    p.add_argument("--no-luma", action="store_true", help="skip the luminance recombination")
    p.add_argument("--solver-log", help="CSV of (iteration, F, d_S, d_B)")


def _matting(p):
    p.add_argument("--background", help="#rrggbb color or PNG image")
    p.add_argument("--alpha-out", help="write the matte as a grayscale PNG")


def build_parser():
    parser = argparse.ArgumentParser(prog="skintone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="correct the facial skin tone of a headshot")
    _common(p)
    _face(p)
    _target(p)
    _solver(p)

    p = sub.add_parser("yearbook", help="crop, correct and replace the background")
    _common(p)
    _face(p)
    _target(p)
    _solver(p)
    _matting(p)

    p = sub.add_parser("semiauto", help="correct with hand-drawn skin and background masks")
    _common(p)
    _target(p)
    _solver(p)
    p.add_argument("--skin-mask", required=True)
    p.add_argument("--background-mask", required=True)

    p = sub.add_parser("extract-mask", help="write the extracted skin mask")
    _common(p)
    _face(p)

    p = sub.add_parser("grade", help="write the guide image (graded skin, input elsewhere)")
    _common(p)
    _face(p)
    _target(p)

    p = sub.add_parser("matte", help="matte a portrait and optionally swap its background")
    _common(p)
    _face(p)
    _matting(p)
    return parser


def _config(args):
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    changes = {field: getattr(args, flag, None) for flag, field in _OVERRIDES.items()}
    if args.seed is not None:
        changes.update(seed=args.seed, kmeans_seed=args.seed)
    if getattr(args, "no_luma", False):
        changes["luma"] = False
    try:
        return cfg.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise PipelineError("invalid_input", str(exc)) from exc


def _load_image(path, what):
    try:
        return load_png(path)
    except (OSError, UnidentifiedImageError) as exc:
        raise PipelineError("invalid_input", f"cannot read {what} {path!r}: {exc}") from exc


def _load_mask(path, what):
    if path is None:
        return None
    try:
        return load_mask_png(path)
    except (OSError, UnidentifiedImageError) as exc:
        raise PipelineError("invalid_input", f"cannot read {what} {path!r}: {exc}") from exc


def _load_cands(path, what="candidates"):
    if path is None:
        return None
    try:
        return faceprep.load_candidates(path)
    except (OSError, ValueError) as exc:
        raise PipelineError("invalid_input", f"cannot read {what} {path!r}: {exc}") from exc


def _require(value, flag):
    if value is None:
        raise PipelineError("invalid_input", f"{flag} is required for this command")
    return value


def _target_samples(args, cfg, report):
    target = _load_image(args.target, "target")
    t_mask = _load_mask(args.target_mask, "target mask")
    t_cands = _load_cands(args.target_candidates, "target candidates")
    if t_mask is None:
        _require(t_cands, "--target-candidates or --target-mask")
    return pipeline.target_samples(target, t_cands, cfg, t_mask, report)


def _write_solver_log(path, solve):
    if path is None or solve is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "F", "d_S", "d_B"])
        for row in solve.log_rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _run(args):
    """Returns (report, outputs) where outputs maps a path to a writer."""
    cfg = _config(args)
    y = _load_image(args.input, "input")
    outputs = []
    cmd = args.command

    if cmd in ("correct", "yearbook"):
        cands = _load_cands(args.candidates)
        pre = RunReport()
        tgt = _target_samples(args, cfg, pre)
        if cmd == "correct":
            res = pipeline.correct_headshot(y, None, cands, cfg=cfg,
                                            skin_mask=_load_mask(args.skin_mask, "skin mask"),
                                            tgt_samples=tgt)
            corrected = res
            outputs.append((args.output, save_png, res.image))
        else:
            bg = args.background or cfg.background
            if not bg.startswith("#"):
                bg = _load_image(bg, "background")
            try:
                res = pipeline.yearbook_generate(y, None, bg, cands, cfg=cfg, tgt_samples=tgt)
            except ValueError as exc:
                raise PipelineError("invalid_input", str(exc)) from exc
            corrected = res.corrected
            outputs.append((args.output, save_png, res.image))
            outputs.append((args.alpha_out, save_png, res.alpha))
        report = res.report
        _merge(report, pre)
        outputs.append((args.mask_out, save_mask_png, corrected.regions.skin))
        _write_solver_log(args.solver_log, corrected.solve)
        return report, outputs

    if cmd == "semiauto":
        skin = _load_mask(args.skin_mask, "skin mask")
        bgm = _load_mask(args.background_mask, "background mask")
        t_mask = _require(_load_mask(args.target_mask, "target mask"), "--target-mask")
        target = _load_image(args.target, "target")
        res = pipeline.semiauto_correct(y, target, skin, bgm, t_mask, cfg)
        outputs.append((args.output, save_png, res.image))
        _write_solver_log(args.solver_log, res.solve)
        return res.report, outputs

    report = RunReport()
    with report.stage("extraction"):
        skin = _load_mask(args.skin_mask, "skin mask")
        cands = _load_cands(args.candidates)
        ext = None
        if cands is not None:
            ext = pipeline.extract_skin(y, cands, cfg)
            skin = skin if skin is not None else ext.regions.skin
        skin = _require(skin, "--candidates or --skin-mask")
    if not skin.any():
        raise PipelineError("skin_not_found", "skin region not found in the input image")
    report.regions = {"skin": int(skin.sum())}

    if cmd == "extract-mask":
        outputs.append((args.mask_out or args.output, save_mask_png, skin))
    elif cmd == "grade":
        tgt = _target_samples(args, cfg, report)
        with report.stage("grading"):
            mapped = grading.idt_transfer(grading.skin_samples(y, skin), tgt, cfg.idt())
            outputs.append((args.output, save_png, grading.assemble_guide(y, mapped, skin)))
        outputs.append((args.mask_out, save_mask_png, skin))
    elif cmd == "matte":
        face = _require(ext, "--candidates").face
        with report.stage("matting"):
            try:
                trimap = matte.init_trimap(face, skin, y, cfg.matting())
                mres = matte.matte_iterate(y, trimap, cfg.matting())
            except (matte.MattingError, ValueError) as exc:
                raise PipelineError("solver_failure", str(exc)) from exc
            report.matting_iterations = mres.iterations
        outputs.append((args.alpha_out, save_png, mres.alpha))
        if args.output:
            bg = args.background or cfg.background
            if not bg.startswith("#"):
                bg = _load_image(bg, "background")
            z = pipeline.resolve_background(bg, y.shape)
            outputs.append((args.output, save_png, matte.replace_background(y, mres.alpha, z)))
        outputs.append((args.mask_out, save_mask_png, skin))
    return report, outputs


def _merge(report, pre):
    for name, dt in pre.stages.items():
        report.stages[name] = report.stages.get(name, 0.0) + dt
        report.total_seconds += dt


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report, outputs = _run(args)
    except PipelineError as exc:
        print(json.dumps({"error": exc.to_dict()}), file=sys.stderr)
        if args.report:
            failed = RunReport(status="error", error=exc.to_dict())
            failed.write(args.report)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        err = PipelineError("invalid_input", str(exc))
        print(json.dumps({"error": err.to_dict()}), file=sys.stderr)
        return err.exit_code
    for path, writer, data in outputs:
        if path:
            writer(path, np.asarray(data))
    if args.report:
        report.write(args.report)
    log.info("done in %.2f s", report.total_seconds)
    return 0


if __name__ == "__main__":
    sys.exit(main())
