"""End-to-end selection: scores -> graph -> solve -> merge -> metrics.

Large datasets are split into d disjoint random partitions that are
solved independently (the similarity graph is built per partition, so
cross-partition redundancy is deliberately not modelled) and merged by
concatenating the per-partition selections.  Budgets are apportioned
proportionally to partition sizes with the remainder distributed one
per partition in order, which keeps the merged budget exact for every
(n, p, d).

With d=1 the pipeline is a direct solve over the whole dataset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    EmbeddingMatrix,
    ScoreVector,
    SelectionProblem,
    SelectionResult,
)
from .errors import InputError
from .scoring import KMeansParams, normalize_scores, ssp_scores
from .simgraph import KnnParams, build_knn_similarity, l2_normalize
from .solver import SolverParams, solve

__all__ = [
    "PipelineConfig",
    "MetricsReport",
    "partition_dataset",
    "partition_budgets",
    "resolve_budget",
    "run_pipeline",
    "evaluate_selection",
]

log = logging.getLogger(__name__)

_HIST_BINS = 20
_COVERAGE_BLOCK_BYTES = 128 * 1024 * 1024


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline-level settings; exactly one of ratio/budget_p is given.

    ``ssp`` switches on the built-in prototype-distance scorer (used
    when no external scores are supplied).  ``seed`` drives the
    partition shuffle only; scorer and solver carry their own seeds.
    """

    ratio: float | None = None
    budget_p: int | None = None
    partitions: int = 1
    knn: KnnParams = field(default_factory=KnnParams)
    solver: SolverParams = field(default_factory=SolverParams)
    ssp: KMeansParams | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.ratio is None) == (self.budget_p is None):
            raise InputError("exactly one of ratio and budget_p must be set")
        if self.ratio is not None and not 0.0 < float(self.ratio) < 1.0:
            raise InputError(f"ratio must be in (0, 1), got {self.ratio}")
        if self.budget_p is not None and int(self.budget_p) < 1:
            raise InputError(f"budget_p must be >= 1, got {self.budget_p}")
        if int(self.partitions) < 1:
            raise InputError(f"partitions must be >= 1, got {self.partitions}")


@dataclass(eq=False)
class MetricsReport:
    """Selection quality summary used by reports and the eval command."""

    objective: float
    coverage_mean: float
    coverage_max: float
    score_quantiles: dict[str, float]
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray


def resolve_budget(config: PipelineConfig, n: int) -> int:
    """Concrete budget for n samples: explicit p, or round(ratio * n)."""
    if config.budget_p is not None:
        p = int(config.budget_p)
    else:
        p = int(np.floor(float(config.ratio) * n + 0.5))  # round half up
    if not 1 <= p <= n:
        raise InputError(f"resolved budget {p} violates 1 <= p <= n (n={n})")
    return p


def partition_dataset(n: int, d: int, seed: int = 0) -> list[np.ndarray]:
    """Split indices 0..n-1 into d disjoint random parts, sizes differing
    by at most one (larger parts first).  Each part is returned sorted
    ascending, so d=1 is exactly the identity."""
    if d < 1:
        raise InputError(f"partitions must be >= 1, got {d}")
    if d > n:
        raise InputError(f"cannot split {n} samples into {d} partitions")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, d)
    parts = []
    start = 0
    for i in range(d):
        size = base + (1 if i < extra else 0)
        parts.append(np.sort(perm[start : start + size]))
        start += size
    return parts


def partition_budgets(p: int, sizes: list[int], n: int) -> list[int]:
    """Proportional budgets floor(p * n_i / n) plus one-per-partition
    remainder, exact integer arithmetic throughout."""
    if sum(sizes) != n:
        raise InputError("partition sizes must sum to n")
    budgets = [(p * s) // n for s in sizes]
    remainder = p - sum(budgets)
    for i in range(len(budgets)):
        if remainder == 0:
            break
        budgets[i] += 1
        remainder -= 1
    return budgets


def run_pipeline(
    config: PipelineConfig,
    embeddings: EmbeddingMatrix,
    scores: ScoreVector | None = None,
) -> tuple[SelectionResult, MetricsReport]:
    """Full selection run; returns the merged result and its metrics.

    Scores come either from ``scores`` (raw, any scale) or from the
    built-in scorer when ``config.ssp`` is set -- exactly one source.
    Raw scores are min-max normalized once, globally, before problems
    are built.  The merged probability vector weighs each partition by
    its share of the solved samples; the merged objective is the sum of
    per-partition objectives (cross-partition pairs are not counted).
    """
    n = embeddings.n
    if (scores is None) == (config.ssp is None):
        raise InputError("provide external scores or configure the built-in scorer, not both")
    if scores is None:
        raw = ssp_scores(embeddings, config.ssp)
    else:
        if scores.n != n:
            raise InputError(f"scores ({scores.n}) and embeddings ({n}) disagree on n")
        raw = scores
    p = resolve_budget(config, n)
    norm = normalize_scores(raw)
    unit = l2_normalize(embeddings)

    parts = partition_dataset(n, config.partitions, config.seed)
    budgets = partition_budgets(p, [part.size for part in parts], n)

    selected_parts: list[np.ndarray] = []
    probabilities = np.zeros(n, dtype=np.float64)
    traces: list[np.ndarray] = []
    objective = 0.0
    covered = sum(part.size for part, b in zip(parts, budgets) if b > 0)
    for part, budget in zip(parts, budgets):
        if budget == 0:
            log.debug("partition of size %d receives no budget, skipped", part.size)
            continue
        sub = EmbeddingMatrix(unit.data[part], normalized=True)
        sim = build_knn_similarity(sub, config.knn)
        prob = SelectionProblem(
            ScoreVector(norm.values[part], normalized=True), sim, budget, config.solver.alpha
        )
        res = solve(prob, config.solver)
        selected_parts.append(part[res.selected])
        probabilities[part] = res.probabilities * (part.size / covered)
        traces.append(res.trace)
        objective += res.objective

    selected = np.sort(np.concatenate(selected_parts))
    trace = np.sum(traces, axis=0)
    result = SelectionResult(selected, probabilities, objective, trace)
    report = evaluate_selection(selected, embeddings, raw, objective)
    return result, report


def _coverage(embeddings: EmbeddingMatrix, selected: np.ndarray) -> tuple[float, float]:
    """Mean and max over samples of the Euclidean distance to the nearest
    selected sample (selected samples are at distance exactly 0)."""
    x = embeddings.data.astype(np.float64, copy=False)
    centers = x[selected]
    c_sq = (centers * centers).sum(axis=1)
    n = x.shape[0]
    block = max(1, min(n, _COVERAGE_BLOCK_BYTES // max(1, centers.shape[0] * 8)))
    mind = np.empty(n, dtype=np.float64)
    for start in range(0, n, block):
        stop = min(n, start + block)
        xb = x[start:stop]
        d2 = (xb * xb).sum(axis=1)[:, None] - 2.0 * (xb @ centers.T) + c_sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        mind[start:stop] = np.sqrt(d2.min(axis=1))
    mind[selected] = 0.0
    return float(mind.mean()), float(mind.max())


def evaluate_selection(
    selected: np.ndarray,
    embeddings: EmbeddingMatrix,
    raw_scores: ScoreVector,
    objective: float,
) -> MetricsReport:
    """Coverage and score-distribution metrics for a selection.

    Histogram bins are 20 equal-width bins over the full raw score
    range (a single degenerate value widens to a unit range around it);
    counts cover the selected samples only and sum to |selection|.
    """
    sel = np.asarray(selected, dtype=np.int64)
    if sel.size == 0:
        raise InputError("selection must be non-empty")
    if sel.min() < 0 or sel.max() >= embeddings.n:
        raise InputError("selection index out of range")
    if raw_scores.n != embeddings.n:
        raise InputError("scores and embeddings disagree on n")

    mean_d, max_d = _coverage(embeddings, sel)
    picked = raw_scores.values[sel]
    qs = np.quantile(picked, [0.0, 0.25, 0.5, 0.75, 1.0])
    quantiles = {
        "min": float(qs[0]),
        "q25": float(qs[1]),
        "median": float(qs[2]),
        "q75": float(qs[3]),
        "max": float(qs[4]),
    }
    lo, hi = float(raw_scores.values.min()), float(raw_scores.values.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, _HIST_BINS + 1)
    counts, _ = np.histogram(picked, bins=edges)
    return MetricsReport(
        objective=float(objective),
        coverage_mean=mean_d,
        coverage_max=max_d,
        score_quantiles=quantiles,
        histogram_edges=edges,
        histogram_counts=counts.astype(np.int64),
    )
