"""Batch command-line front end: grid | aggregate | metrics | converge | synth.

Exit codes: 0 success, 2 input validation, 3 file I/O, 4 internal invariant
breach or unexpected failure. Failures emit one machine-parseable JSON object
on stderr. Output files are written atomically (temp + rename) and re-running
a command with identical flags reproduces JSON outputs byte-identically.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .convergence import ConvergenceReport, convergence, synth_annotators
from .errors import DataIntegrityError, GridLabError, InputError
from .importance import ImportanceMap, aggregate, load_annotation_dir
from .metrics import METRIC_NAMES, compute, compute_all
from .optimizer import adaptive_grid
from .raster import canny_edges, load_png, save_mask_png, to_grayscale
from .regions import (
    GridMode,
    GridSpec,
    RegionLabel,
    detect_text_heuristic,
    label_tiles,
    load_text_boxes,
    static_grid,
    validate_exact_cover,
)

_REGION_COLORS = {
    RegionLabel.TEXT: (220, 60, 60),
    RegionLabel.EDGE: (60, 90, 220),
    RegionLabel.BACKGROUND: (70, 170, 90),
}
_CURVE_COLORS = ("#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d68910")


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _atomic_write_json(path: Path, doc) -> None:
    _atomic_write_bytes(Path(path), (json.dumps(doc, indent=2) + "\n").encode())


def _load_spec(path: str) -> GridSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse grid spec {path}: {exc}")
    spec = GridSpec.from_json(doc)
    validate_exact_cover(spec)
    return spec


def _load_map(path: str) -> ImportanceMap:
    p = Path(path)
    try:
        if p.suffix.lower() == ".png":
            arr = np.asarray(Image.open(p).convert("L"), dtype=np.float64) / 255.0
            return ImportanceMap(arr)
        return ImportanceMap.from_json(json.loads(p.read_text()))
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot parse importance map {path}: {exc}")


def _overlay_png(image_path: str, spec: GridSpec) -> bytes:
    import io

    with Image.open(image_path) as im:
        canvas = im.convert("RGB")
    draw = ImageDraw.Draw(canvas)
    for b in spec.blocks:
        draw.rectangle(
            [b.px_x, b.px_y, b.px_x + b.px_w - 1, b.px_y + b.px_h - 1],
            outline=_REGION_COLORS[b.region],
        )
    buf = io.BytesIO()
    canvas.save(buf, format="PNG")
    return buf.getvalue()


def curve_svg(reports: dict[str, ConvergenceReport], threshold: float) -> str:
    """Deterministic line chart of the mean-similarity curves, one polyline
    per metric, with the convergence threshold as a dashed rule."""
    w, h, ml, mb, mt, mr = 640, 400, 60, 46, 24, 20
    plot_w, plot_h = w - ml - mr, h - mt - mb
    max_n = max((len(r.curve) for r in reports.values()), default=1)

    def sx(n):
        return ml + (n - 1) / max(max_n - 1, 1) * plot_w

    def sy(v):
        return mt + (1.0 - v) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{h - mb}" x2="{w - mr}" y2="{h - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{sy(threshold):.1f}" x2="{w - mr}" y2="{sy(threshold):.1f}" '
        f'stroke="#888" stroke-dasharray="5,4"/>',
        f'<text x="{ml - 8}" y="{sy(threshold):.1f}" text-anchor="end">{threshold:g}</text>',
        f'<text x="{(ml + w - mr) / 2:.0f}" y="{h - 12}" text-anchor="middle">participants (n)</text>',
        f'<text x="14" y="{(mt + h - mb) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(mt + h - mb) / 2:.0f})">mean similarity</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{ml - 8}" y="{sy(tick) + 4:.1f}" text-anchor="end">{tick:g}</text>')
    for k, (name, report) in enumerate(sorted(reports.items())):
        color = _CURVE_COLORS[k % len(_CURVE_COLORS)]
        pts = " ".join(
            f"{sx(n):.1f},{sy(v):.1f}" for n, v in report.curve if v is not None
        )
        if pts:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{w - mr - 120}" y="{mt + 16 + 16 * k}" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_grid(args) -> int:
    img = load_png(args.image)
    stimulus_id = args.stimulus_id or Path(args.image).stem
    if args.mode == "static":
        spec = static_grid(img, args.static_n, stimulus_id=stimulus_id)
    else:
        gray = to_grayscale(img)
        edges = canny_edges(gray, args.edge_low, args.edge_high, args.blur_sigma)
        if args.edges_out:
            save_mask_png(edges, args.edges_out)
        if args.text_boxes:
            boxes = load_text_boxes(args.text_boxes)
        else:
            boxes = detect_text_heuristic(img, edges)
        tiles = label_tiles(img, edges, boxes, args.tile_size)
        spec = adaptive_grid(
            tiles,
            budget_ms=args.budget_ms,
            max_w=args.max_block_w,
            max_h=args.max_block_h,
            stimulus_id=stimulus_id,
        )
    validate_exact_cover(spec)
    _atomic_write_json(Path(args.out), spec.to_json())
    if args.overlay:
        _atomic_write_bytes(Path(args.overlay), _overlay_png(args.image, spec))
    print(f"{spec.mode.value} grid: {len(spec.blocks)} blocks -> {args.out}")
    return 0


def cmd_aggregate(args) -> int:
    spec = _load_spec(args.spec)
    annotations = load_annotation_dir(args.annotations)
    imap = aggregate(annotations, spec)
    out = Path(args.out)
    if out.suffix == ".png":
        _atomic_write_bytes(out, imap.to_png_bytes())
        _atomic_write_json(out.with_suffix(".json"), imap.to_json())
    else:
        _atomic_write_json(out, imap.to_json())
        _atomic_write_bytes(out.with_suffix(".png"), imap.to_png_bytes())
    print(f"aggregated {len(annotations)} annotations -> {args.out}")
    return 0


def cmd_metrics(args) -> int:
    a, b = _load_map(args.a), _load_map(args.b)
    if args.metric == "all":
        scores = compute_all(a, b, scale=args.metric_scale)
        doc = {
            name: (s.to_json() if s is not None else None) for name, s in scores.items()
        }
    else:
        kwargs = {}
        if args.metric == "ssim" and args.ssim_global:
            kwargs["global_window"] = True
        if args.metric in ("dice", "jaccard") and args.binarize is not None:
            kwargs["binarize"] = args.binarize
        doc = compute(args.metric, a, b, **kwargs).to_json()
    text = json.dumps(doc, indent=2)
    if args.out:
        _atomic_write_bytes(Path(args.out), (text + "\n").encode())
    print(text)
    return 0


def cmd_converge(args) -> int:
    spec = _load_spec(args.spec)
    annotations = load_annotation_dir(args.annotations)
    names = METRIC_NAMES if args.metric == "all" else (args.metric,)
    reports = {
        name: convergence(
            annotations, spec, name, orders=args.orders, threshold=args.threshold, seed=args.seed
        )
        for name in names
    }
    doc = reports[args.metric].to_json() if args.metric != "all" else {
        name: r.to_json() for name, r in reports.items()
    }
    _atomic_write_json(Path(args.out), doc)
    if args.svg:
        _atomic_write_bytes(Path(args.svg), curve_svg(reports, args.threshold).encode())
    summary = {name: r.mean_n for name, r in reports.items()}
    print(f"convergence (mean n to {args.threshold:g}): {json.dumps(summary)} -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    spec = _load_spec(args.spec)
    truth = set(filter(None, args.truth.split(","))) if args.truth else set()
    cohort = synth_annotators(
        spec, truth, p_flip_in=args.flip_in, p_flip_out=args.flip_out,
        count=args.count, seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ann in cohort:
        _atomic_write_json(out / f"{ann.participant_id}.json", ann.to_json())
    print(f"wrote {len(cohort)} synthetic annotations -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="generate a static or adaptive grid spec")
    p.add_argument("image")
    p.add_argument("--mode", choices=["static", "adaptive"], default="adaptive")
    p.add_argument("--tile-size", type=int, default=32)
    p.add_argument("--static-n", type=int, default=8)
    p.add_argument("--text-boxes", help="sidecar JSON with external text boxes")
    p.add_argument("--budget-ms", type=float, default=5000.0)
    p.add_argument("--max-block-w", type=int, default=None)
    p.add_argument("--max-block-h", type=int, default=None)
    p.add_argument("--edge-low", type=float, default=50.0)
    p.add_argument("--edge-high", type=float, default=150.0)
    p.add_argument("--blur-sigma", type=float, default=1.4)
    p.add_argument("--edges-out", help="write the Canny mask as a 0/255 PNG")
    p.add_argument("--stimulus-id", default=None)
    p.add_argument("--overlay", help="write a debug PNG with region-colored block outlines")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("aggregate", help="average annotation masks into an importance map")
    p.add_argument("annotations", help="directory of annotation *.json files")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True, help="map path (.json; a .png sibling is written too)")
    p.set_defaults(fn=cmd_aggregate)

    p = sub.add_parser("metrics", help="similarity between two importance maps")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=list(METRIC_NAMES) + ["all"], default="all")
    p.add_argument("--metric-scale", type=int, default=1)
    p.add_argument("--ssim-global", action="store_true")
    p.add_argument("--binarize", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("converge", help="participants-to-threshold convergence report")
    p.add_argument("annotations", help="directory of annotation *.json files")
    p.add_argument("--spec", required=True)
    p.add_argument("--metric", choices=list(METRIC_NAMES) + ["all"], default="all")
    p.add_argument("--orders", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", help="also emit a line-chart SVG of the curves")
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("synth", help="generate a synthetic annotator cohort")
    p.add_argument("--spec", required=True)
    p.add_argument("--truth", default="", help="comma-separated ground-truth block ids")
    p.add_argument("--flip-in", type=float, default=0.0)
    p.add_argument("--flip-out", type=float, default=0.0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, DataIntegrityError) as exc:
        _fail(exc)
        return 2
    except OSError as exc:
        _fail(exc)
        return 3
    except GridLabError as exc:
        _fail(exc)
        return 4
    except Exception as exc:  # noqa: BLE001 -- invariant breach / bug
        _fail(exc)
        return 4


def _fail(exc: Exception) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
