"""Deterministic synthetic chart renderings used as test stimuli.

These stand in for real chart exports: each renderer draws axes, marks and
text labels with fixed geometry so grid generation is reproducible across
runs. All charts are 512x384 RGB on a white background.
"""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .raster import Raster

CHART_W, CHART_H = 512, 384
_INK = (20, 20, 20)


def _font():
    return ImageFont.load_default()


def _chart_canvas() -> tuple[Image.Image, ImageDraw.ImageDraw]:
    im = Image.new("RGB", (CHART_W, CHART_H), (255, 255, 255))
    return im, ImageDraw.Draw(im)


def _axes(draw: ImageDraw.ImageDraw, left=60, right=480, top=40, bottom=330) -> tuple[int, int, int, int]:
    draw.line([(left, top), (left, bottom)], fill=_INK, width=2)
    draw.line([(left, bottom), (right, bottom)], fill=_INK, width=2)
    return left, right, top, bottom


def _to_raster(im: Image.Image) -> Raster:
    return Raster(np.asarray(im))


def bar_chart() -> Raster:
    im, draw = _chart_canvas()
    left, right, top, bottom = _axes(draw)
    draw.text((200, 12), "Quarterly totals", fill=_INK, font=_font())
    heights = [0.45, 0.8, 0.3, 0.65, 0.95, 0.5, 0.7]
    span = right - left - 20
    bw = span // (2 * len(heights))
    for k, frac in enumerate(heights):
        x0 = left + 14 + k * 2 * bw
        y0 = int(bottom - frac * (bottom - top))
        draw.rectangle([x0, y0, x0 + bw, bottom - 1], outline=_INK, fill=(90, 90, 200))
        draw.text((x0 + 2, bottom + 8), f"Q{k+1}", fill=_INK, font=_font())
    return _to_raster(im)


def line_chart() -> Raster:
    im, draw = _chart_canvas()
    left, right, top, bottom = _axes(draw)
    draw.text((190, 12), "Trust over time", fill=_INK, font=_font())
    ys = [0.3, 0.5, 0.42, 0.7, 0.62, 0.85, 0.55, 0.75, 0.9, 0.8]
    pts = [
        (left + 20 + k * (right - left - 40) // (len(ys) - 1), int(bottom - f * (bottom - top)))
        for k, f in enumerate(ys)
    ]
    draw.line(pts, fill=(200, 60, 60), width=3)
    for x, y in pts:
        draw.ellipse([x - 3, y - 3, x + 3, y + 3], fill=_INK)
    draw.text((220, bottom + 12), "year", fill=_INK, font=_font())
    return _to_raster(im)


def pie_chart() -> Raster:
    im, draw = _chart_canvas()
    draw.text((210, 12), "Market share", fill=_INK, font=_font())
    box = [140, 60, 380, 300]
    shades = [(80, 80, 200), (200, 80, 80), (80, 180, 80), (220, 180, 60)]
    start = 0
    for k, sweep in enumerate((110, 80, 95, 75)):
        draw.pieslice(box, start, start + sweep, fill=shades[k], outline=_INK)
        start += sweep
    draw.text((60, 330), "segments A-D", fill=_INK, font=_font())
    return _to_raster(im)


def scatter_chart() -> Raster:
    im, draw = _chart_canvas()
    left, right, top, bottom = _axes(draw)
    draw.text((200, 12), "Size vs weight", fill=_INK, font=_font())
    # points along a noisy diagonal trend, fixed positions
    fracs = [
        (0.08, 0.15), (0.15, 0.22), (0.2, 0.18), (0.28, 0.35), (0.33, 0.3),
        (0.4, 0.45), (0.47, 0.5), (0.52, 0.44), (0.6, 0.62), (0.66, 0.58),
        (0.72, 0.7), (0.8, 0.78), (0.86, 0.82), (0.9, 0.9),
    ]
    for fx, fy in fracs:
        x = int(left + 10 + fx * (right - left - 20))
        y = int(bottom - 10 - fy * (bottom - top - 20))
        draw.ellipse([x - 4, y - 4, x + 4, y + 4], fill=(60, 60, 180), outline=_INK)
    return _to_raster(im)


def heatmap_chart() -> Raster:
    im, draw = _chart_canvas()
    draw.text((210, 12), "Density map", fill=_INK, font=_font())
    x0, y0, cell = 80, 50, 36
    for i in range(8):
        for j in range(11):
            v = (i * 37 + j * 59) % 200 + 30
            draw.rectangle(
                [x0 + j * cell, y0 + i * cell, x0 + (j + 1) * cell, y0 + (i + 1) * cell],
                fill=(v, 255 - v, 120),
                outline=_INK,
            )
    return _to_raster(im)


CHART_FIXTURES = {
    "bar": bar_chart,
    "line": line_chart,
    "pie": pie_chart,
    "scatter": scatter_chart,
    "heatmap": heatmap_chart,
}


def blank(width: int = 256, height: int = 256, value: int = 255) -> Raster:
    return Raster(np.full((height, width), value, dtype=np.uint8))


def step_edge(width: int = 64, height: int = 64, boundary: int | None = None) -> Raster:
    """Left half 0, right half 255; the true edge sits at `boundary`."""
    boundary = width // 2 if boundary is None else boundary
    arr = np.zeros((height, width), dtype=np.uint8)
    arr[:, boundary:] = 255
    return Raster(arr)


def black_square(size: int = 64, square: int = 8, offset: int | None = None) -> Raster:
    """A filled black square centered on a white canvas."""
    offset = (size - square) // 2 if offset is None else offset
    arr = np.full((size, size), 255, dtype=np.uint8)
    arr[offset : offset + square, offset : offset + square] = 0
    return Raster(arr)
