"""Five similarity measures between 2-D importance maps.

Every metric reports both its native value (`raw`) and a [0, 1] similarity
(`similarity01`) normalized so that comparing a map with itself yields exactly
1.0. The per-metric normalizations:

  spearman  raw in [-1, 1]   similarity01 = (raw + 1) / 2
  ssim      raw in [-1, 1]   similarity01 = clamp(raw, 0, 1)
  dice      raw in [0, 1]    similarity01 = raw            (fuzzy min/sum form)
  jaccard   raw in [0, 1]    similarity01 = raw            (fuzzy min/max form)
  kl        raw >= 0         similarity01 = exp(-raw)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.stats import rankdata

from .errors import InputError, MetricUndefinedError
from .importance import ImportanceMap

METRIC_NAMES = ("spearman", "ssim", "dice", "jaccard", "kl")

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 1.0) ** 2  # dynamic range L = 1.0
SSIM_C2 = (0.03 * 1.0) ** 2
KL_EPSILON = 1e-7


@dataclass(frozen=True)
class SimilarityScore:
    metric: str
    raw: float
    similarity01: float

    def to_json(self) -> dict:
        return {"metric": self.metric, "raw": self.raw, "similarity01": self.similarity01}


def _values(m) -> np.ndarray:
    if isinstance(m, ImportanceMap):
        return m.values
    return np.asarray(m, dtype=np.float64)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise InputError(f"map dimensions differ: {va.shape} vs {vb.shape}")
    return va, vb


def spearman(a, b) -> SimilarityScore:
    """Rank correlation of the flattened maps (average ranks on ties)."""
    va, vb = _pair(a, b)
    if va.size < 2:
        raise InputError("spearman needs at least 2 pixels")
    if np.ptp(va) == 0 or np.ptp(vb) == 0:
        raise MetricUndefinedError("spearman is undefined on a constant map")
    ra = rankdata(va.ravel(), method="average")
    rb = rankdata(vb.ravel(), method="average")
    if np.array_equal(ra, rb):  # identical rankings correlate exactly
        r = 1.0
    else:
        r = float(np.corrcoef(ra, rb)[0, 1])
        r = min(1.0, max(-1.0, r))
    return SimilarityScore("spearman", r, (r + 1.0) / 2.0)


def _ssim_filter(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    y = ndimage.correlate1d(x, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(y, kernel, axis=1, mode="reflect")


def ssim(a, b, global_window: bool = False) -> SimilarityScore:
    """Mean structural similarity over 11x11 Gaussian windows (sigma 1.5),
    dynamic range 1.0. With global_window=True a single whole-image window is
    used instead, which also covers maps smaller than the window."""
    va, vb = _pair(a, b)
    if global_window:
        mu_x, mu_y = va.mean(), vb.mean()
        vx = ((va - mu_x) ** 2).mean()
        vy = ((vb - mu_y) ** 2).mean()
        vxy = ((va - mu_x) * (vb - mu_y)).mean()
        s = ((2 * mu_x * mu_y + SSIM_C1) * (2 * vxy + SSIM_C2)) / (
            (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (vx + vy + SSIM_C2)
        )
        s = float(s)
        return SimilarityScore("ssim", s, min(1.0, max(0.0, s)))

    if min(va.shape) < SSIM_WINDOW:
        raise InputError(
            f"map {va.shape[1]}x{va.shape[0]} is smaller than the {SSIM_WINDOW}px SSIM window; "
            "use global_window=True (CLI: --ssim-global)"
        )
    radius = SSIM_WINDOW // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    kernel /= kernel.sum()

    ux = _ssim_filter(va, kernel)
    uy = _ssim_filter(vb, kernel)
    uxx = _ssim_filter(va * va, kernel)
    uyy = _ssim_filter(vb * vb, kernel)
    uxy = _ssim_filter(va * vb, kernel)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    smap = ((2 * ux * uy + SSIM_C1) * (2 * vxy + SSIM_C2)) / (
        (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2)
    )
    # only windows fully inside the image contribute to the mean
    s = float(smap[radius:-radius, radius:-radius].mean())
    return SimilarityScore("ssim", s, min(1.0, max(0.0, s)))


def _binarized(va: np.ndarray, vb: np.ndarray, threshold: float | None):
    if threshold is None:
        return va, vb
    return (va >= threshold).astype(np.float64), (vb >= threshold).astype(np.float64)


def dice(a, b, binarize: float | None = None) -> SimilarityScore:
    """Fuzzy Dice: 2*sum(min(a,b)) / (sum(a) + sum(b)); two empty maps are
    identical (1.0). Optional binarize threshold recovers the classic set form."""
    va, vb = _binarized(*_pair(a, b), binarize)
    denom = va.sum() + vb.sum()
    raw = 1.0 if denom == 0 else float(2.0 * np.minimum(va, vb).sum() / denom)
    return SimilarityScore("dice", raw, raw)


def jaccard(a, b, binarize: float | None = None) -> SimilarityScore:
    """Fuzzy Jaccard: sum(min(a,b)) / sum(max(a,b)); empty-vs-empty is 1.0."""
    va, vb = _binarized(*_pair(a, b), binarize)
    denom = np.maximum(va, vb).sum()
    raw = 1.0 if denom == 0 else float(np.minimum(va, vb).sum() / denom)
    return SimilarityScore("jaccard", raw, raw)


def kl_divergence(a, b) -> SimilarityScore:
    """KL(p || q) after per-pixel epsilon regularization and normalization of
    both maps to probability distributions. Asymmetric by nature."""
    va, vb = _pair(a, b)
    p = va + KL_EPSILON
    q = vb + KL_EPSILON
    p /= p.sum()
    q /= q.sum()
    raw = float(np.sum(p * (np.log(p) - np.log(q))))
    raw = max(raw, 0.0)  # guard the tiny negative round-off of identical maps
    return SimilarityScore("kl", raw, float(np.exp(-raw)))


_DISPATCH = {
    "spearman": spearman,
    "ssim": ssim,
    "dice": dice,
    "jaccard": jaccard,
    "kl": kl_divergence,
}


def compute(metric: str, a, b, **kwargs) -> SimilarityScore:
    """Evaluate one metric by name (see METRIC_NAMES)."""
    try:
        fn = _DISPATCH[metric]
    except KeyError:
        raise InputError(f"unknown metric {metric!r}; expected one of {', '.join(METRIC_NAMES)}")
    return fn(a, b, **kwargs)


def compute_all(a, b, scale: int = 1) -> dict[str, SimilarityScore | None]:
    """All five metrics; undefined ones (constant map under Spearman) are None.

    scale > 1 block-averages both maps by that integer factor first, for very
    large stimuli."""
    if scale > 1:
        a, b = downsample(a, scale), downsample(b, scale)
    out: dict[str, SimilarityScore | None] = {}
    for name in METRIC_NAMES:
        try:
            out[name] = _DISPATCH[name](a, b)
        except MetricUndefinedError:
            out[name] = None
    return out


def downsample(m, scale: int) -> ImportanceMap:
    """Block-mean downsampling by an integer factor (trailing partial blocks
    are averaged over their actual extent)."""
    if scale < 1:
        raise InputError(f"scale must be >= 1, got {scale}")
    v = _values(m)
    h, w = v.shape
    oh, ow = -(-h // scale), -(-w // scale)
    out = np.zeros((oh, ow), dtype=np.float64)
    for i in range(oh):
        for j in range(ow):
            out[i, j] = v[i * scale : (i + 1) * scale, j * scale : (j + 1) * scale].mean()
    return ImportanceMap(out)
