#!/usr/bin/env python3
"""End-to-end convergence experiment on a synthetic chart.

Builds the adaptive grid for the bar-chart fixture, generates synthetic
annotator cohorts at increasing noise levels, and writes one convergence
report plus a similarity-curve SVG per noise level.
"""
import argparse
import json
from pathlib import Path

from gridlab.cli import curve_svg
from gridlab.convergence import convergence, synth_annotators
from gridlab.fixtures import bar_chart
from gridlab.metrics import METRIC_NAMES
from gridlab.optimizer import adaptive_grid
from gridlab.raster import canny_edges, to_grayscale
from gridlab.regions import detect_text_heuristic, label_tiles


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="convergence-demo")
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--orders", type=int, default=10)
    parser.add_argument("--threshold", type=float, default=0.9)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--budget-ms", type=float, default=2000.0)
    args = parser.parse_args()

    img = bar_chart()
    edges = canny_edges(to_grayscale(img))
    boxes = detect_text_heuristic(img, edges)
    tiles = label_tiles(img, edges, boxes)
    spec = adaptive_grid(tiles, budget_ms=args.budget_ms, stimulus_id="bar-demo")
    truth = {b.id for b in spec.blocks if b.region.value == "edge"}
    print(f"adaptive grid: {len(spec.blocks)} blocks, truth = {len(truth)} edge blocks")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for flip_out in (0.05, 0.2, 0.4):
        cohort = synth_annotators(
            spec, truth, p_flip_in=0.05, p_flip_out=flip_out,
            count=args.count, seed=args.seed,
        )
        reports = {
            m: convergence(cohort, spec, m, orders=args.orders,
                           threshold=args.threshold, seed=args.seed)
            for m in METRIC_NAMES
        }
        tag = f"flip{int(flip_out * 100):02d}"
        (out / f"report_{tag}.json").write_text(
            json.dumps({m: r.to_json() for m, r in reports.items()}, indent=2)
        )
        (out / f"curves_{tag}.svg").write_text(curve_svg(reports, args.threshold))
        summary = {m: (round(r.mean_n, 2) if r.mean_n else None) for m, r in reports.items()}
        print(f"flip_out={flip_out}: mean participants to {args.threshold:.0%} = {summary}")


if __name__ == "__main__":
    main()
