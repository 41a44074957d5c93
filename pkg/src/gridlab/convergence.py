"""Participants-to-convergence analysis over randomized response orders.

For each randomized order the aggregate of the first n responses is compared
with the full-cohort aggregate; the report records the smallest n whose
similarity reaches the threshold, per order, plus the per-n similarity curve
averaged across orders.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .errors import InputError, MetricUndefinedError
from .importance import Annotation, aggregate, annotation_mask
from .metrics import METRIC_NAMES, compute
from .regions import GridSpec

DEFAULT_ORDERS = 10
DEFAULT_THRESHOLD = 0.9
NEVER = "never"  # JSON sentinel for an order that did not reach the threshold


@dataclass(frozen=True)
class ConvergenceReport:
    stimulus_id: str
    metric: str
    orders: int
    threshold: float
    seed: int
    per_order_n: tuple[int | None, ...]
    mean_n: float | None
    median_n: float | None
    curve: tuple[tuple[int, float | None], ...]
    # (order index, prefix length) pairs where the metric was undefined
    undefined_prefixes: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {
            "stimulus_id": self.stimulus_id,
            "metric": self.metric,
            "orders": self.orders,
            "threshold": self.threshold,
            "seed": self.seed,
            "per_order_n": [NEVER if n is None else n for n in self.per_order_n],
            "mean_n": self.mean_n,
            "median_n": self.median_n,
            "curve": [[n, s] for n, s in self.curve],
            "undefined_prefixes": [list(p) for p in self.undefined_prefixes],
        }


def convergence(
    annotations: list[Annotation],
    spec: GridSpec,
    metric: str,
    orders: int = DEFAULT_ORDERS,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
) -> ConvergenceReport:
    """Smallest prefix of each randomized order whose aggregate reaches
    `threshold` similarity against the full aggregate.

    Prefixes on which the metric is undefined are skipped and flagged rather
    than counted as converged. Identical seeds reproduce the report exactly.
    """
    if metric not in METRIC_NAMES:
        raise InputError(f"unknown metric {metric!r}; expected one of {', '.join(METRIC_NAMES)}")
    if len(annotations) < 2:
        raise InputError(f"convergence needs at least 2 annotations, got {len(annotations)}")
    if not (0.0 < threshold <= 1.0):
        raise InputError(f"threshold must be in (0, 1], got {threshold}")
    if orders < 1:
        raise InputError(f"orders must be >= 1, got {orders}")

    reference = aggregate(annotations, spec)
    p = len(annotations)
    masks = [annotation_mask(a, spec).bits.astype(np.float64) for a in annotations]

    rng = np.random.default_rng(seed)
    per_order_n: list[int | None] = []
    sims_by_n: list[list[float]] = [[] for _ in range(p)]
    undefined: list[tuple[int, int]] = []

    for order_idx in range(orders):
        perm = rng.permutation(p)
        acc = np.zeros_like(reference.values)
        reached: int | None = None
        for n in range(1, p + 1):
            acc += masks[perm[n - 1]]
            try:
                sim = compute(metric, acc / n, reference.values).similarity01
            except MetricUndefinedError:
                undefined.append((order_idx, n))
                continue
            sims_by_n[n - 1].append(sim)
            if reached is None and sim >= threshold:
                reached = n
        per_order_n.append(reached)

    defined = [n for n in per_order_n if n is not None]
    curve = tuple(
        (n + 1, statistics.fmean(vals) if vals else None) for n, vals in enumerate(sims_by_n)
    )
    return ConvergenceReport(
        stimulus_id=spec.stimulus_id,
        metric=metric,
        orders=orders,
        threshold=threshold,
        seed=seed,
        per_order_n=tuple(per_order_n),
        mean_n=statistics.fmean(defined) if defined else None,
        median_n=float(statistics.median(defined)) if defined else None,
        curve=curve,
        undefined_prefixes=tuple(undefined),
    )


def synth_annotators(
    spec: GridSpec,
    truth_block_ids: set[str],
    p_flip_in: float,
    p_flip_out: float,
    count: int,
    seed: int = 0,
) -> list[Annotation]:
    """Synthetic cohort around a ground-truth selection: each annotator drops
    truth blocks with probability p_flip_in and adds non-truth blocks with
    probability p_flip_out, independently per block. Deterministic under seed."""
    for name, prob in (("p_flip_in", p_flip_in), ("p_flip_out", p_flip_out)):
        if not (0.0 <= prob <= 1.0):
            raise InputError(f"{name} must be in [0, 1], got {prob}")
    if count < 0:
        raise InputError(f"count must be >= 0, got {count}")
    unknown = sorted(set(truth_block_ids) - spec.block_ids)
    if unknown:
        raise InputError(f"truth block ids not in the grid spec: {', '.join(unknown)}")

    rng = np.random.default_rng(seed)
    truth = set(truth_block_ids)
    cohort = []
    for k in range(count):
        selected = set()
        for block in spec.blocks:
            u = rng.random()
            if block.id in truth:
                if u >= p_flip_in:
                    selected.add(block.id)
            elif u < p_flip_out:
                selected.add(block.id)
        cohort.append(
            Annotation(
                participant_id=f"synth-{k:04d}",
                stimulus_id=spec.stimulus_id,
                grid_mode=spec.mode,
                selected_block_ids=frozenset(selected),
                click_count=len(selected),
            )
        )
    return cohort
