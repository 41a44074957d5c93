"""Image decoding, grayscale conversion and Canny edge extraction.

All operations are pure functions over immutable array wrappers and are safe
to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InputError

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Raster:
    """8-bit pixel image, row-major, shape (height, width, channels)."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise InputError(f"raster data must be 2- or 3-dimensional, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise InputError(f"raster dimensions must be >= 1, got {w}x{h}")
        if c not in (1, 3, 4):
            raise InputError(f"unsupported channel count {c}; expected 1, 3 or 4")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean mask with the same geometry as its source image."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise InputError(f"mask must be 2-dimensional, got ndim={arr.ndim}")
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


def load_png(path: str | Path) -> Raster:
    """Decode a PNG (JPEG also accepted) into a Raster."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "RGB", "RGBA"):
                im = im.convert("RGBA" if "A" in im.mode or "P" == im.mode else "RGB")
            arr = np.asarray(im)
    except FileNotFoundError:
        raise
    except (OSError, SyntaxError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc
    return Raster(arr)


def decode_image(data: bytes) -> Raster:
    """Decode in-memory PNG/JPEG bytes."""
    import io

    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.mode not in ("L", "RGB", "RGBA"):
                im = im.convert("RGBA" if "A" in im.mode or "P" == im.mode else "RGB")
            arr = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise InputError(f"cannot decode image bytes: {exc}") from exc
    return Raster(arr)


def save_png(img: Raster, path: str | Path) -> None:
    arr = img.data[:, :, 0] if img.channels == 1 else img.data
    Image.fromarray(arr).save(path, format="PNG")


def save_mask_png(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as an 8-bit PNG with values 0/255 (debugging aid)."""
    Image.fromarray(mask.bits.astype(np.uint8) * 255).save(path, format="PNG")


def to_grayscale(img: Raster) -> Raster:
    """Convert to a single-channel raster via Rec.601 luminance.

    RGBA input is composited over a white background before the luminance
    weighting, so transparent chart exports read as white. Grayscale input is
    returned unchanged.
    """
    if img.channels == 1:
        return img
    rgb = img.data[:, :, :3].astype(np.float64)
    if img.channels == 4:
        alpha = img.data[:, :, 3].astype(np.float64)[:, :, None] / 255.0
        rgb = rgb * alpha + 255.0 * (1.0 - alpha)
    lum = np.rint(rgb @ _LUMA).clip(0, 255).astype(np.uint8)
    return Raster(lum)


def _gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def canny_edges(
    gray: Raster,
    low_threshold: float = 50.0,
    high_threshold: float = 150.0,
    blur_sigma: float = 1.4,
) -> BinaryMask:
    """Classic Canny pipeline on a single-channel raster.

    Gaussian blur (kernel radius ceil(3*sigma)), Sobel gradients, non-maximum
    suppression with 4-bin direction quantization, then double-threshold
    hysteresis with 8-connectivity. Thresholds apply to the L2 gradient
    magnitude; zero-gradient pixels are never seeds, so constant images
    always produce an empty mask.
    """
    if gray.channels != 1:
        raise InputError(f"canny_edges expects a grayscale raster, got {gray.channels} channels")
    if not (0 <= low_threshold <= high_threshold <= 255):
        raise InputError(
            f"thresholds must satisfy 0 <= low <= high <= 255, got low={low_threshold} high={high_threshold}"
        )
    if blur_sigma < 0:
        raise InputError(f"blur_sigma must be >= 0, got {blur_sigma}")

    img = gray.data[:, :, 0].astype(np.float64)
    if blur_sigma > 0:
        k = _gaussian_kernel1d(blur_sigma)
        img = ndimage.correlate1d(img, k, axis=0, mode="reflect")
        img = ndimage.correlate1d(img, k, axis=1, mode="reflect")

    gx = ndimage.correlate(img, _SOBEL_X, mode="reflect")
    gy = ndimage.correlate(img, _SOBEL_Y, mode="reflect")
    mag = np.hypot(gx, gy)

    nms = _non_max_suppression(mag, gx, gy)

    strong = (nms >= high_threshold) & (nms > 0)
    weak = (nms >= low_threshold) & (nms > 0)
    return BinaryMask(_hysteresis(strong, weak))


def _non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Zero out pixels that are not local maxima along the quantized gradient
    direction (0/45/90/135 degrees). Ties keep both pixels, so a perfectly
    symmetric edge can survive two pixels wide."""
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    padded[1:-1, 1:-1] = mag

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    # bins: 0 -> E/W neighbors, 1 -> NE/SW, 2 -> N/S, 3 -> NW/SE
    bins = np.zeros(mag.shape, dtype=np.uint8)
    bins[(angle >= 22.5) & (angle < 67.5)] = 1
    bins[(angle >= 67.5) & (angle < 112.5)] = 2
    bins[(angle >= 112.5) & (angle < 157.5)] = 3

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    neighbors = {
        0: (shifted(0, 1), shifted(0, -1)),
        1: (shifted(1, 1), shifted(-1, -1)),
        2: (shifted(1, 0), shifted(-1, 0)),
        3: (shifted(1, -1), shifted(-1, 1)),
    }
    keep = np.zeros(mag.shape, dtype=bool)
    for b, (n1, n2) in neighbors.items():
        sel = bins == b
        keep |= sel & (mag >= n1) & (mag >= n2)
    return np.where(keep, mag, 0.0)


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """Keep weak pixels only in 8-connected components that contain a strong pixel."""
    if not strong.any():
        return np.zeros_like(strong)
    structure = np.ones((3, 3), dtype=int)
    labels, n = ndimage.label(weak | strong, structure=structure)
    if n == 0:
        return np.zeros_like(strong)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return seeded[labels]
