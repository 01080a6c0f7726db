"""Importance scores: cluster-distance scoring and normalization.

The built-in scorer runs plain Lloyd k-means (k-means++ seeding,
Euclidean metric) on the raw embeddings and scores every sample by its
distance to its assigned centroid -- samples far from any prototype are
treated as more informative.  External scores can be loaded from
(index, score) tables instead.

The k-means here is deliberately hand-rolled: the selection contract
pins seeding, the empty-cluster rule and determinism at fixed seed,
which off-the-shelf implementations do not guarantee bit-for-bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import EmbeddingMatrix, ScoreVector
from .errors import InputError

__all__ = [
    "KMeansParams",
    "KMeansResult",
    "lloyd_kmeans",
    "ssp_scores",
    "normalize_scores",
    "load_scores",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KMeansParams:
    clusters: int
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.clusters) < 1:
            raise InputError(f"clusters must be >= 1, got {self.clusters}")
        if int(self.max_iters) < 1:
            raise InputError(f"max_iters must be >= 1, got {self.max_iters}")
        if not np.isfinite(self.tol) or self.tol < 0:
            raise InputError(f"tol must be finite and >= 0, got {self.tol}")


@dataclass(eq=False)
class KMeansResult:
    """Final centroids and labels plus assignment-time inertia history."""

    centroids: np.ndarray
    labels: np.ndarray
    inertia: np.ndarray  # one SSE value per assignment step, non-increasing


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x - c||^2 via the gemm identity, clamped at 0 against rounding.
    d2 = (
        (x * x).sum(axis=1)[:, None]
        - 2.0 * (x @ centroids.T)
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _plus_plus_init(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(x, x[chosen[-1]][None, :])[:, 0]
    while len(chosen) < c:
        total = d2.sum()
        if total > 0.0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining mass is zero (duplicate points): fall back to
            # the lowest index not already used
            used = np.zeros(n, dtype=bool)
            used[chosen] = True
            nxt = int(np.flatnonzero(~used)[0])
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(x, x[nxt][None, :])[:, 0])
    return x[chosen].copy()


def lloyd_kmeans(data: np.ndarray, params: KMeansParams) -> KMeansResult:
    """Lloyd iterations with k-means++ seeding, deterministic at fixed seed.

    Empty clusters are re-seeded (in ascending cluster order) at the
    point currently farthest from its assigned centroid, ties to the
    lower index, never reusing a point within one update.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError(f"k-means expects a non-empty 2-D array, got shape {x.shape}")
    n = x.shape[0]
    c = int(params.clusters)
    if c > n:
        raise InputError(f"clusters must be <= n, got clusters={c}, n={n}")

    rng = np.random.default_rng(params.seed)
    centroids = _plus_plus_init(x, c, rng)
    inertia: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    for it in range(params.max_iters):
        d2 = _sq_dists(x, centroids)
        labels = d2.argmin(axis=1)
        mind2 = d2[np.arange(n), labels]
        inertia.append(float(mind2.sum()))

        counts = np.bincount(labels, minlength=c)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, x)
        new = centroids.copy()
        nonempty = counts > 0
        new[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not nonempty.all():
            taken = np.zeros(n, dtype=bool)
            for j in np.flatnonzero(~nonempty):
                cand = np.where(taken, -np.inf, mind2)
                far = int(cand.argmax())
                new[j] = x[far]
                taken[far] = True

        shift = float(np.linalg.norm(new - centroids, axis=1).max())
        centroids = new
        if shift < params.tol:
            log.debug("k-means converged after %d iterations (shift %.3g)", it + 1, shift)
            break

    d2 = _sq_dists(x, centroids)
    labels = d2.argmin(axis=1)
    return KMeansResult(centroids, labels, np.asarray(inertia, dtype=np.float64))


def ssp_scores(embeddings: EmbeddingMatrix, params: KMeansParams) -> ScoreVector:
    """Prototype-distance scores: distance of each sample to its centroid.

    Returns raw (unnormalized) scores; pipelines min-max normalize
    before the solve.
    """
    result = lloyd_kmeans(embeddings.data, params)
    d2 = _sq_dists(
        np.asarray(embeddings.data, dtype=np.float64), result.centroids
    )
    mind2 = d2[np.arange(embeddings.n), result.labels]
    return ScoreVector(np.sqrt(mind2), normalized=False)


def normalize_scores(scores: ScoreVector) -> ScoreVector:
    """Min-max rescale onto [0, 1]; a constant vector maps to all 0.5."""
    v = scores.values
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        out = np.full_like(v, 0.5)
    else:
        out = (v - lo) / (hi - lo)
    return ScoreVector(out, normalized=True)


def load_scores(entries: Iterable[tuple[int, float]]) -> ScoreVector:
    """Assemble a raw ScoreVector from (index, score) pairs in any order.

    The indices must cover 0..n-1 exactly once; violations raise
    InputError naming the offending 1-based data row.
    """
    pairs = list(entries)
    n = len(pairs)
    if n == 0:
        raise InputError("score table is empty")
    values = np.empty(n, dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    for rownum, (idx, score) in enumerate(pairs, start=1):
        try:
            i = int(idx)
        except (TypeError, ValueError):
            raise InputError(f"row {rownum}: index {idx!r} is not an integer") from None
        if not 0 <= i < n:
            raise InputError(f"row {rownum}: index {i} outside 0..{n - 1}")
        if seen[i]:
            raise InputError(f"row {rownum}: duplicate index {i}")
        s = float(score)
        if not np.isfinite(s):
            raise InputError(f"row {rownum}: score {score!r} is not finite")
        seen[i] = True
        values[i] = s
    return ScoreVector(values, normalized=False)
