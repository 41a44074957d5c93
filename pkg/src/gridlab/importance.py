"""Participant annotations and their aggregation into importance maps."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataIntegrityError, InputError
from .raster import BinaryMask
from .regions import GridMode, GridSpec

DEFAULT_POINT_SIGMA = 32.0


@dataclass(frozen=True)
class TelemetryEvent:
    t_ms: int
    kind: str  # click | move | toggle_on | toggle_off
    x: int
    y: int

    def to_json(self) -> dict:
        return {"t_ms": self.t_ms, "kind": self.kind, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class Annotation:
    """One participant's block selection for one stimulus/task."""

    participant_id: str
    stimulus_id: str
    grid_mode: GridMode
    selected_block_ids: frozenset[str]
    duration_ms: int = 0
    click_count: int = 0
    mouse_travel_px: float = 0.0
    events: tuple[TelemetryEvent, ...] = ()

    def to_json(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "stimulus_id": self.stimulus_id,
            "grid_mode": self.grid_mode.value,
            "selected_block_ids": sorted(self.selected_block_ids),
            "duration_ms": self.duration_ms,
            "click_count": self.click_count,
            "mouse_travel_px": self.mouse_travel_px,
            "events": [e.to_json() for e in self.events],
        }

    @staticmethod
    def from_json(doc: dict) -> "Annotation":
        try:
            return Annotation(
                participant_id=str(doc["participant_id"]),
                stimulus_id=str(doc["stimulus_id"]),
                grid_mode=GridMode(doc["grid_mode"]),
                selected_block_ids=frozenset(str(b) for b in doc["selected_block_ids"]),
                duration_ms=int(doc["duration_ms"]),
                click_count=int(doc["click_count"]),
                mouse_travel_px=float(doc["mouse_travel_px"]),
                events=tuple(
                    TelemetryEvent(int(e["t_ms"]), str(e["kind"]), int(e["x"]), int(e["y"]))
                    for e in doc.get("events", [])
                ),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DataIntegrityError(f"malformed annotation: {exc}") from exc


@dataclass(frozen=True)
class PointAnnotation:
    """Click-point export from bubble-style tools, for cross-method ingestion."""

    participant_id: str
    stimulus_id: str
    clicks: tuple[tuple[int, int, int], ...]  # (x, y, t_ms)


@dataclass(frozen=True)
class ImportanceMap:
    """Normalized scalar field in [0, 1], one value per stimulus pixel."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"importance map must be 2-D, got ndim={arr.ndim}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InputError("importance values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def to_png_bytes(self) -> bytes:
        import io

        buf = io.BytesIO()
        gray = np.rint(self.values * 255.0).astype(np.uint8)
        Image.fromarray(gray).save(buf, format="PNG")
        return buf.getvalue()

    def save_png(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_png_bytes())

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "values": self.values.ravel().tolist()}

    @staticmethod
    def from_json(doc: dict) -> "ImportanceMap":
        w, h = int(doc["width"]), int(doc["height"])
        vals = np.asarray(doc["values"], dtype=np.float64).reshape(h, w)
        return ImportanceMap(vals)


def annotation_mask(ann: Annotation, spec: GridSpec) -> BinaryMask:
    """Rasterize the selected blocks: true exactly on their pixels."""
    if ann.stimulus_id and spec.stimulus_id and ann.stimulus_id != spec.stimulus_id:
        raise DataIntegrityError(
            f"annotation is for stimulus {ann.stimulus_id!r}, spec is {spec.stimulus_id!r}"
        )
    by_id = spec.block_by_id()
    unknown = sorted(ann.selected_block_ids - by_id.keys())
    if unknown:
        raise DataIntegrityError(f"annotation references unknown block ids: {', '.join(unknown)}")
    w, h = spec.image_size()
    bits = np.zeros((h, w), dtype=bool)
    for bid in ann.selected_block_ids:
        b = by_id[bid]
        bits[b.px_y : b.px_y + b.px_h, b.px_x : b.px_x + b.px_w] = True
    return BinaryMask(bits)


def aggregate(annotations: list[Annotation], spec: GridSpec) -> ImportanceMap:
    """Per-pixel mean of the participants' binary masks."""
    if not annotations:
        raise InputError("aggregate requires at least one annotation")
    stimuli = {a.stimulus_id for a in annotations}
    if len(stimuli) > 1:
        raise InputError(f"aggregate got annotations for mixed stimuli: {sorted(stimuli)}")
    w, h = spec.image_size()
    acc = np.zeros((h, w), dtype=np.float64)
    for ann in annotations:
        acc += annotation_mask(ann, spec).bits
    return ImportanceMap(acc / len(annotations))


def render_points(
    ann: PointAnnotation, width: int, height: int, sigma: float = DEFAULT_POINT_SIGMA
) -> ImportanceMap:
    """Sum of isotropic Gaussian kernels at the click points, truncated at
    3*sigma, max-normalized to [0, 1]. Zero clicks give an all-zero map."""
    if sigma <= 0:
        raise InputError(f"sigma must be > 0, got {sigma}")
    acc = np.zeros((height, width), dtype=np.float64)
    radius = math.ceil(3.0 * sigma)
    for x, y, _t in ann.clicks:
        if not (0 <= x < width and 0 <= y < height):
            raise InputError(f"click ({x}, {y}) outside the {width}x{height} image")
        x0, x1 = max(x - radius, 0), min(x + radius + 1, width)
        y0, y1 = max(y - radius, 0), min(y + radius + 1, height)
        ys = np.arange(y0, y1, dtype=np.float64) - y
        xs = np.arange(x0, x1, dtype=np.float64) - x
        d2 = ys[:, None] ** 2 + xs[None, :] ** 2
        kern = np.exp(-d2 / (2.0 * sigma * sigma))
        kern[d2 > 9.0 * sigma * sigma] = 0.0  # truncate at 3 sigma
        acc[y0:y1, x0:x1] += kern
    peak = acc.max()
    if peak > 0:
        acc /= peak
    return ImportanceMap(acc)


def telemetry_stats(ann: Annotation, spec: GridSpec) -> dict:
    """Interaction-efficiency summary: clicks, mouse travel, annotated area,
    and area per unit travel (travel floor-guarded at 1 px).

    When telemetry events are present the click count and travel distance are
    recomputed from them; otherwise the annotation's summary fields are used.
    """
    if ann.events:
        moves = [e for e in ann.events if e.kind == "move"]
        travel = sum(
            math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(moves, moves[1:])
        )
        clicks = sum(1 for e in ann.events if e.kind in ("click", "toggle_on", "toggle_off"))
    else:
        travel = ann.mouse_travel_px
        clicks = ann.click_count
    area = annotation_mask(ann, spec).count()
    ratio = area / max(travel, 1.0) if area else 0.0
    return {
        "click_count": clicks,
        "mouse_travel_px": travel,
        "annotated_area_px": area,
        "area_per_travel": ratio,
    }


def load_annotation(path: str | Path) -> Annotation:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read annotation file {path}: {exc}") from exc
    try:
        return Annotation.from_json(doc)
    except DataIntegrityError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_annotation_dir(path: str | Path) -> list[Annotation]:
    """All *.json annotations under a directory, sorted by filename."""
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise InputError(f"no annotation files (*.json) found in {path}")
    return [load_annotation(f) for f in files]
