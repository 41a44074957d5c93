"""Region segmentation: text detection, tile labeling and the Static Grid.

A stimulus is partitioned into text / edge / background tiles on a lattice of
t-pixel squares (remainder pixel strips are absorbed into the last row and
column of tiles so the lattice always covers the image exactly).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataIntegrityError, InputError
from .raster import BinaryMask, Raster, canny_edges, to_grayscale

DEFAULT_TILE_SIZE = 32
DEFAULT_STATIC_N = 8
MIN_TILE_SIZE = 8


class RegionLabel(enum.Enum):
    TEXT = "text"
    EDGE = "edge"
    BACKGROUND = "background"


class BoxSource(enum.Enum):
    EXTERNAL = "external"
    HEURISTIC = "heuristic"


@dataclass(frozen=True)
class TextBox:
    """Pixel-space text bounding box (top-left anchored)."""

    x: int
    y: int
    w: int
    h: int
    source: BoxSource = BoxSource.HEURISTIC

    def clamped(self, image_w: int, image_h: int) -> "TextBox | None":
        """Clip to image bounds; None if nothing remains."""
        x0, y0 = max(self.x, 0), max(self.y, 0)
        x1, y1 = min(self.x + self.w, image_w), min(self.y + self.h, image_h)
        if x1 - x0 < 1 or y1 - y0 < 1:
            return None
        return TextBox(x0, y0, x1 - x0, y1 - y0, self.source)


@dataclass(frozen=True)
class TileGrid:
    """M x N lattice of region labels over an image of tile size t."""

    rows: int
    cols: int
    tile_size: int
    image_w: int
    image_h: int
    labels: np.ndarray = field(repr=False)  # (rows, cols) of RegionLabel values

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InputError("tile grid must have at least one row and column")
        if self.labels.shape != (self.rows, self.cols):
            raise InputError("label array shape does not match grid dimensions")

    def region_grid(self, label: RegionLabel) -> np.ndarray:
        """Binary occupancy matrix for one region."""
        return self.labels == label

    def tile_pixel_rect(self, row: int, col: int) -> tuple[int, int, int, int]:
        """(x, y, w, h) of the tile's pixel footprint, remainder absorbed."""
        return tile_pixel_rect(
            row, col, 1, 1, self.tile_size, self.rows, self.cols, self.image_w, self.image_h
        )


def tile_pixel_rect(
    row: int,
    col: int,
    w: int,
    h: int,
    t: int,
    grid_rows: int,
    grid_cols: int,
    image_w: int,
    image_h: int,
) -> tuple[int, int, int, int]:
    """Pixel rect of a w x h tile span; last-row/col spans absorb remainders."""
    px_x = col * t
    px_y = row * t
    px_x1 = image_w if col + w == grid_cols else (col + w) * t
    px_y1 = image_h if row + h == grid_rows else (row + h) * t
    return px_x, px_y, px_x1 - px_x, px_y1 - px_y


@dataclass(frozen=True)
class Block:
    """One clickable rectangle: tile-space footprint plus derived pixel rect."""

    id: str
    row: int
    col: int
    w: int
    h: int
    px_x: int
    px_y: int
    px_w: int
    px_h: int
    region: RegionLabel


class GridMode(enum.Enum):
    STATIC = "static"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class GridSpec:
    """Final block partition served to annotators."""

    stimulus_id: str
    mode: GridMode
    blocks: tuple[Block, ...]
    tile_size: int | None = None
    static_n: int | None = None
    solver_status: dict | None = None

    @property
    def block_ids(self) -> set[str]:
        return {b.id for b in self.blocks}

    def block_by_id(self) -> dict[str, Block]:
        return {b.id: b for b in self.blocks}

    def image_size(self) -> tuple[int, int]:
        """(width, height) implied by the block union."""
        w = max(b.px_x + b.px_w for b in self.blocks)
        h = max(b.px_y + b.px_h for b in self.blocks)
        return w, h

    def to_json(self) -> dict:
        out: dict = {"stimulus_id": self.stimulus_id, "mode": self.mode.value}
        if self.tile_size is not None:
            out["tile_size"] = self.tile_size
        if self.static_n is not None:
            out["static_n"] = self.static_n
        out["blocks"] = [
            {
                "id": b.id,
                "x": b.px_x,
                "y": b.px_y,
                "w": b.px_w,
                "h": b.px_h,
                "region": b.region.value,
            }
            for b in self.blocks
        ]
        if self.solver_status is not None:
            out["solver_status"] = self.solver_status
        return out

    @staticmethod
    def from_json(doc: dict) -> "GridSpec":
        try:
            mode = GridMode(doc["mode"])
            blocks = tuple(
                Block(
                    id=str(b["id"]),
                    row=0,
                    col=0,
                    w=1,
                    h=1,
                    px_x=int(b["x"]),
                    px_y=int(b["y"]),
                    px_w=int(b["w"]),
                    px_h=int(b["h"]),
                    region=RegionLabel(b["region"]),
                )
                for b in doc["blocks"]
            )
            return GridSpec(
                stimulus_id=str(doc["stimulus_id"]),
                mode=mode,
                blocks=blocks,
                tile_size=doc.get("tile_size"),
                static_n=doc.get("static_n"),
                solver_status=doc.get("solver_status"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DataIntegrityError(f"malformed grid spec: {exc}") from exc


def validate_exact_cover(spec: GridSpec) -> None:
    """Assert blocks are pairwise disjoint and cover the image rectangle exactly.

    Raises DataIntegrityError on any gap or overlap (checked by rasterizing
    block ids onto a coverage-count canvas).
    """
    if not spec.blocks:
        raise DataIntegrityError(f"grid spec {spec.stimulus_id} has no blocks")
    w, h = spec.image_size()
    canvas = np.zeros((h, w), dtype=np.int32)
    for b in spec.blocks:
        if b.px_w < 1 or b.px_h < 1 or b.px_x < 0 or b.px_y < 0:
            raise DataIntegrityError(f"block {b.id} has a degenerate pixel rect")
        canvas[b.px_y : b.px_y + b.px_h, b.px_x : b.px_x + b.px_w] += 1
    if (canvas > 1).any():
        raise DataIntegrityError(f"grid spec {spec.stimulus_id} has overlapping blocks")
    if (canvas == 0).any():
        raise DataIntegrityError(f"grid spec {spec.stimulus_id} does not cover the image")


def load_text_boxes(path: str | Path) -> list[TextBox]:
    """Read the external sidecar format: [{"x":int,"y":int,"w":int,"h":int}]."""
    try:
        doc = json.loads(Path(path).read_text())
        boxes = [
            TextBox(int(b["x"]), int(b["y"]), int(b["w"]), int(b["h"]), BoxSource.EXTERNAL)
            for b in doc
        ]
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid text-box sidecar {path}: {exc}") from exc
    return boxes


# Text-like component filters. Glyph components in chart labels are short,
# partially filled strokes; merged words become wide runs.
TEXT_HEIGHT_RANGE = (6, 40)
TEXT_FILL_RANGE = (0.05, 0.9)
TEXT_MIN_ASPECT = 1.5
TEXT_GAP_FACTOR = 0.8


def detect_text_heuristic(img: Raster, edges: BinaryMask | None = None) -> list[TextBox]:
    """Connected-component stand-in for an OCR text detector.

    Edge-mask components passing glyph-like height and fill-ratio filters are
    merged along horizontal proximity (gap <= 0.8 x component height, with
    vertical overlap); merged runs with aspect ratio >= 1.5 become TextBoxes.
    May return an empty list.
    """
    if edges is None:
        edges = canny_edges(to_grayscale(img))
    labels, n = ndimage.label(edges.bits, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return []

    slices = ndimage.find_objects(labels)
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    components = []
    for idx, sl in enumerate(slices, start=1):
        if sl is None:
            continue
        y0, y1 = sl[0].start, sl[0].stop
        x0, x1 = sl[1].start, sl[1].stop
        h, w = y1 - y0, x1 - x0
        if not (TEXT_HEIGHT_RANGE[0] <= h <= TEXT_HEIGHT_RANGE[1]):
            continue
        fill = counts[idx] / float(w * h)
        if not (TEXT_FILL_RANGE[0] <= fill <= TEXT_FILL_RANGE[1]):
            continue
        components.append([x0, y0, x1, y1])

    merged = _merge_horizontal_runs(components)
    out = []
    for x0, y0, x1, y1 in merged:
        w, h = x1 - x0, y1 - y0
        if w / h >= TEXT_MIN_ASPECT:
            out.append(TextBox(x0, y0, w, h, BoxSource.HEURISTIC))
    return out


def _merge_horizontal_runs(boxes: list[list[int]]) -> list[list[int]]:
    """Repeatedly merge boxes that sit on the same line within the gap limit."""
    runs = [list(b) for b in sorted(boxes, key=lambda b: (b[0], b[1]))]
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(runs):
            j = i + 1
            while j < len(runs):
                if _mergeable(runs[i], runs[j]):
                    a, b = runs[i], runs.pop(j)
                    runs[i] = [min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])]
                    changed = True
                else:
                    j += 1
            i += 1
    return runs


def _mergeable(a: list[int], b: list[int]) -> bool:
    ha, hb = a[3] - a[1], b[3] - b[1]
    gap = max(b[0] - a[2], a[0] - b[2])  # negative when overlapping horizontally
    if gap > TEXT_GAP_FACTOR * max(ha, hb):
        return False
    overlap = min(a[3], b[3]) - max(a[1], b[1])
    return overlap >= 0.5 * min(ha, hb)


def label_tiles(
    img: Raster,
    edges: BinaryMask,
    text: list[TextBox],
    t: int = DEFAULT_TILE_SIZE,
    edge_fraction: float = 0.0,
) -> TileGrid:
    """Assign exactly one region label per tile, precedence Text > Edge > Background.

    A tile is Text when its pixel footprint intersects any TextBox, else Edge
    when the fraction of edge pixels in the footprint exceeds edge_fraction
    (default 0.0: a single edge pixel suffices), else Background.
    """
    if (edges.width, edges.height) != (img.width, img.height):
        raise InputError("edge mask dimensions do not match the image")
    if t < MIN_TILE_SIZE:
        raise InputError(f"tile size {t} too small; minimum usable tile size is {MIN_TILE_SIZE}")
    rows, cols = img.height // t, img.width // t
    if rows < 1 or cols < 1:
        raise InputError(
            f"tile size {t} too large for a {img.width}x{img.height} image; "
            f"usable tile sizes are {MIN_TILE_SIZE}..{min(img.width, img.height)}"
        )
    if not (0.0 <= edge_fraction < 1.0):
        raise InputError(f"edge_fraction must be in [0, 1), got {edge_fraction}")

    labels = np.full((rows, cols), RegionLabel.BACKGROUND, dtype=object)

    for row in range(rows):
        for col in range(cols):
            x, y, w, h = tile_pixel_rect(row, col, 1, 1, t, rows, cols, img.width, img.height)
            count = int(edges.bits[y : y + h, x : x + w].sum())
            if count > edge_fraction * (w * h) and count >= 1:
                labels[row, col] = RegionLabel.EDGE

    for box in text:
        clamped = box.clamped(img.width, img.height)
        if clamped is None:
            continue
        # remainder strips belong to the last tile, hence the min() clamp
        c0 = min(clamped.x // t, cols - 1)
        c1 = min((clamped.x + clamped.w - 1) // t, cols - 1)
        r0 = min(clamped.y // t, rows - 1)
        r1 = min((clamped.y + clamped.h - 1) // t, rows - 1)
        labels[r0 : r1 + 1, c0 : c1 + 1] = RegionLabel.TEXT

    return TileGrid(rows=rows, cols=cols, tile_size=t, image_w=img.width, image_h=img.height, labels=labels)


def static_grid(img: Raster, n: int = DEFAULT_STATIC_N, stimulus_id: str = "") -> GridSpec:
    """Uniform n x n partition: block (i, j) spans pixel rows
    [floor(i*h/n), floor((i+1)*h/n)) and the analogous columns."""
    if n < 1 or n > min(img.width, img.height):
        raise InputError(
            f"static n must be in [1, {min(img.width, img.height)}] for a "
            f"{img.width}x{img.height} image, got {n}"
        )
    w, h = img.width, img.height
    blocks = []
    for i in range(n):
        y0, y1 = (i * h) // n, ((i + 1) * h) // n
        for j in range(n):
            x0, x1 = (j * w) // n, ((j + 1) * w) // n
            blocks.append(
                Block(
                    id=f"cell-{i}-{j}",
                    row=i,
                    col=j,
                    w=1,
                    h=1,
                    px_x=x0,
                    px_y=y0,
                    px_w=x1 - x0,
                    px_h=y1 - y0,
                    region=RegionLabel.BACKGROUND,
                )
            )
    return GridSpec(stimulus_id=stimulus_id, mode=GridMode.STATIC, blocks=tuple(blocks), static_n=n)
