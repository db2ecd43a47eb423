"""Command-line shell: train / eval / compare / similarity / upcycle-preview / crops.

Exit codes: 0 on success, 2 for usage errors (bad flags, out-of-range boxes),
1 for configuration or data failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .config import load_config
from .data import eval_pairs, ingest
from .errors import SRDistillError
from .imaging import bicubic_down, load_png, mod_crop_center, save_png
from .metrics import cap_psnr, evaluate_pairs, prepare_sr_output, psnr_y, similarity_report, sr_forward_image
from .model import load_checkpoint
from .trainer import run
from .upcycle import TrainingPair, build_upcycled_batch


@dataclass
class ResultsTable:
    """(method, scale, dataset) -> PSNR/SSIM rows, best PSNR markable."""

    rows: list[dict] = field(default_factory=list)

    def add(self, method: str, scale: int, dataset: str, psnr: float, ssim: float):
        self.rows.append(
            {"method": method, "scale": scale, "dataset": dataset, "psnr": psnr, "ssim": ssim}
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["method", "scale", "dataset", "psnr", "ssim"])
            writer.writeheader()
            writer.writerows(self.rows)

    def to_text(self) -> str:
        if not self.rows:
            return "(empty table)"
        best = max(r["psnr"] for r in self.rows)
        lines = [f"{'method':<24} {'scale':>5} {'dataset':<16} {'PSNR/SSIM':>16}"]
        for r in self.rows:
            mark = "*" if r["psnr"] == best else " "
            lines.append(
                f"{r['method']:<24} x{r['scale']:<4} {r['dataset']:<16} "
                f"{r['psnr']:>8.2f}/{r['ssim']:.4f}{mark}"
            )
        return "\n".join(lines)


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run(cfg, resume_from=args.resume)
    print(f"finished {result.iterations} iterations")
    print(f"checkpoint: {result.checkpoint}")
    print(f"log: {result.log_path}")
    for rec in result.report.records:
        print(f"  {rec.dataset}: {rec.psnr:.2f} dB / {rec.ssim:.4f}")
    return 0


def _cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    scale = args.scale or model.config.scale
    manifest = ingest(args.dataset, scale)
    shave = args.shave if args.shave is not None else scale
    rec = evaluate_pairs(
        model, eval_pairs(manifest), dataset=manifest.name, scale=scale,
        method=Path(args.checkpoint).stem, shave=shave, quantized=not args.no_quantize,
    )
    print(json.dumps(rec.to_dict(), indent=2))
    if args.json:
        Path(args.json).write_text(json.dumps(rec.to_dict(), indent=2))
    return 0


def _cmd_compare(args) -> int:
    table = ResultsTable()
    manifest = ingest(args.dataset, args.scale)
    for ckpt in args.checkpoints:
        model = load_checkpoint(ckpt)
        if model.config.scale != args.scale:
            raise SRDistillError(
                f"{ckpt}: checkpoint scale {model.config.scale} != requested {args.scale}"
            )
        rec = evaluate_pairs(
            model, eval_pairs(manifest), dataset=manifest.name, scale=args.scale,
            method=Path(ckpt).stem, shave=args.scale,
        )
        table.add(rec.method, rec.scale, rec.dataset, rec.psnr, rec.ssim)
    print(table.to_text())
    if args.csv:
        table.to_csv(args.csv)
        print(f"wrote {args.csv}")
    return 0


def _cmd_similarity(args) -> int:
    student = load_checkpoint(args.student)
    teacher = load_checkpoint(args.teacher)
    manifest = ingest(args.dataset, student.config.scale)
    report = similarity_report(student, teacher, eval_pairs(manifest), split=args.split)
    print(report.to_json())
    if args.json:
        Path(args.json).write_text(report.to_json())
    return 0


def _cmd_upcycle_preview(args) -> int:
    hr = mod_crop_center(load_png(args.hr_image), args.scale)
    lr = load_png(args.lr) if args.lr else bicubic_down(hr, args.scale)
    pair = TrainingPair(lr=lr, hr=hr, scale=args.scale)
    rng = np.random.default_rng(args.seed)
    zoomable = lr.shape[0] % args.scale == 0 and lr.shape[1] % args.scale == 0
    batch = build_upcycled_batch(pair, enable_zoom_out=zoomable, rng=rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_png(batch.zoom_in, out / "zoom_in.png")
    save_png(batch.lr_ref, out / "lr_ref.png")
    if batch.zoom_out is not None:
        save_png(batch.zoom_out, out / "zoom_out.png")
    else:
        print(f"zoom-out skipped: LR {lr.shape[:2]} not divisible by {args.scale}")
    print(f"wrote previews to {out}")
    return 0


def _cmd_crops(args, parser) -> int:
    hr = mod_crop_center(load_png(args.image), args.scale)
    top, left, height, width = args.box
    if (top < 0 or left < 0 or height <= 0 or width <= 0
            or top + height > hr.shape[0] or left + width > hr.shape[1]):
        parser.error(f"--box {args.box} outside image bounds {hr.shape[:2]}")
    lr = bicubic_down(hr, args.scale)
    hr_crop = hr[top : top + height, left : left + width]
    panels = [("HR", hr_crop, None)]
    for ckpt in args.checkpoints:
        model = load_checkpoint(ckpt)
        if model.config.scale != args.scale:
            raise SRDistillError(
                f"{ckpt}: checkpoint scale {model.config.scale} != requested {args.scale}"
            )
        sr = prepare_sr_output(sr_forward_image(model, lr))
        crop = sr[top : top + height, left : left + width]
        panels.append((Path(ckpt).stem, crop, cap_psnr(psnr_y(crop, hr_crop, shave=0))))

    pad, label_h = 4, 14
    tile_w = width + pad
    canvas = Image.new("RGB", (tile_w * len(panels) - pad, height + label_h), "white")
    draw = ImageDraw.Draw(canvas)
    for i, (name, crop, crop_psnr) in enumerate(panels):
        tile = Image.fromarray((np.clip(crop, 0, 1) * 255).round().astype(np.uint8))
        canvas.paste(tile, (i * tile_w, 0))
        label = name if crop_psnr is None else f"{name} {crop_psnr:.2f}dB"
        draw.text((i * tile_w + 1, height + 1), label, fill="black")
        print(f"{name}: {'-' if crop_psnr is None else f'{crop_psnr:.2f} dB'}")
    canvas.save(args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srdistill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run an experiment from a YAML config")
    p.add_argument("config")
    p.add_argument("--resume", default=None, help="train-state .npz to resume from")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("eval", help="PSNR/SSIM of a checkpoint on a dataset directory")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("--scale", type=int, default=None)
    p.add_argument("--shave", type=int, default=None)
    p.add_argument("--no-quantize", action="store_true")
    p.add_argument("--json", default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compare", help="results table over several checkpoints")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("dataset")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--csv", default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("similarity", help="PSNR(student, teacher) vs PSNR(student, GT)")
    p.add_argument("student")
    p.add_argument("teacher")
    p.add_argument("dataset")
    p.add_argument("--split", choices=("train", "test"), required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("upcycle-preview", help="write zoom-in/zoom-out images for one pair")
    p.add_argument("hr_image")
    p.add_argument("--lr", default=None, help="existing LR image (default: generate)")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("crops", help="side-by-side crop panel with per-crop PSNR")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("image", help="ground-truth HR image")
    p.add_argument("--box", type=int, nargs=4, required=True, metavar=("TOP", "LEFT", "H", "W"))
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "similarity":
            return _cmd_similarity(args)
        if args.command == "upcycle-preview":
            return _cmd_upcycle_preview(args)
        if args.command == "crops":
            return _cmd_crops(args, parser)
        parser.error(f"unknown command {args.command!r}")
    except (SRDistillError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
