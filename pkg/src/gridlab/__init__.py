"""Grid-based importance annotation toolkit for chart images."""

from .convergence import ConvergenceReport, convergence, synth_annotators
from .errors import (
    ConflictError,
    DataIntegrityError,
    GridLabError,
    InputError,
    MetricUndefinedError,
    NotEnoughAnnotationsError,
    NotFoundError,
)
from .importance import (
    Annotation,
    ImportanceMap,
    PointAnnotation,
    aggregate,
    annotation_mask,
    render_points,
    telemetry_stats,
)
from .metrics import SimilarityScore, compute_all, dice, jaccard, kl_divergence, spearman, ssim
from .optimizer import (
    CandidateBlock,
    PartitionSolution,
    SolveStatus,
    adaptive_grid,
    enumerate_candidates,
    greedy_fallback,
    solve_min_partition,
)
from .raster import BinaryMask, Raster, canny_edges, load_png, save_png, to_grayscale
from .regions import (
    Block,
    GridMode,
    GridSpec,
    RegionLabel,
    TextBox,
    TileGrid,
    detect_text_heuristic,
    label_tiles,
    static_grid,
    validate_exact_cover,
)
from .store import AnnotationStore

__version__ = "0.1.0"

__all__ = [
    "AnnotationStore",
    "Annotation",
    "BinaryMask",
    "Block",
    "CandidateBlock",
    "ConflictError",
    "ConvergenceReport",
    "DataIntegrityError",
    "GridLabError",
    "GridMode",
    "GridSpec",
    "ImportanceMap",
    "InputError",
    "MetricUndefinedError",
    "NotEnoughAnnotationsError",
    "NotFoundError",
    "PartitionSolution",
    "PointAnnotation",
    "Raster",
    "RegionLabel",
    "SimilarityScore",
    "SolveStatus",
    "TextBox",
    "TileGrid",
    "adaptive_grid",
    "aggregate",
    "annotation_mask",
    "canny_edges",
    "compute_all",
    "convergence",
    "detect_text_heuristic",
    "dice",
    "enumerate_candidates",
    "greedy_fallback",
    "jaccard",
    "kl_divergence",
    "label_tiles",
    "load_png",
    "render_points",
    "save_png",
    "solve_min_partition",
    "spearman",
    "ssim",
    "static_grid",
    "synth_annotators",
    "telemetry_stats",
    "to_grayscale",
    "validate_exact_cover",
]
