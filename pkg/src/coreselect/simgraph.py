"""Exact k-nearest-neighbour similarity graphs over unit-norm embeddings.

Similarity is the inner product (cosine, given unit rows).  The search
is brute force but blocked: rows are processed in chunks sized to a
fixed byte budget, each chunk doing one dense GEMM against the full
matrix followed by a partition-based top-k.  This keeps peak memory
bounded and is exact -- no approximate index is involved.  All
similarity arithmetic runs in float64 regardless of storage dtype.

Ties at the k-th similarity break towards the lower column index, so
graphs are bit-reproducible across runs and block sizes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix, SparseSimilarity, csr_from_coo
from .errors import InputError

__all__ = ["KnnParams", "l2_normalize", "topk_neighbors", "build_knn_similarity"]

log = logging.getLogger(__name__)

# Per-block scratch budget for the n_block x n similarity slab.
_BLOCK_BYTES = 256 * 1024 * 1024


@dataclass(frozen=True)
class KnnParams:
    """Graph construction knobs.

    clamp_negative maps negative cosines to 0 (keep within [0, 1]);
    symmetrize unions directed edges with max-weight dedupe.  Both
    default on; disabling them yields expert-mode graphs that skip the
    corresponding type checks.
    """

    k: int = 5
    clamp_negative: bool = True
    symmetrize: bool = True

    def __post_init__(self) -> None:
        if int(self.k) < 1:
            raise InputError(f"k must be >= 1, got {self.k}")


def l2_normalize(embeddings: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit L2 norm.

    Rows with exactly zero norm are rejected with the offending row
    index.  Already-unit rows pass through unchanged up to rounding in
    the storage dtype.
    """
    data = embeddings.data
    norms = np.linalg.norm(data.astype(np.float64, copy=False), axis=1)
    zero = norms == 0.0
    if zero.any():
        row = int(np.flatnonzero(zero)[0])
        raise InputError(f"cannot normalize: row {row} has zero norm")
    out = (data.astype(np.float64, copy=False) / norms[:, None]).astype(data.dtype)
    return EmbeddingMatrix(out, normalized=True)


def _block_rows(n: int, itemsize: int = 8) -> int:
    return max(1, min(n, _BLOCK_BYTES // max(1, n * itemsize)))


def _topk_block(sims: np.ndarray, k: int, row_base: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-k per row of a similarity block, self excluded.

    Returns (indices, values), each (rows, k), with neighbour indices
    sorted ascending per row.  Ties at the threshold go to the lowest
    column index.
    """
    rows, n = sims.shape
    arange = np.arange(rows)
    self_cols = row_base + arange
    in_range = self_cols < n
    sims[arange[in_range], self_cols[in_range]] = -np.inf

    # k-th largest value per row, then split entries into strictly-above
    # and equal-to the threshold; fill remaining slots from the equals in
    # index order.  count(> thr) <= k-1 always, so the fill is exact.
    thr = np.partition(sims, n - k, axis=1)[:, n - k]
    greater = sims > thr[:, None]
    equal = sims == thr[:, None]
    idx = np.empty((rows, k), dtype=np.int64)
    val = np.empty((rows, k), dtype=np.float64)
    for r in range(rows):
        g = np.flatnonzero(greater[r])
        need = k - g.size
        e = np.flatnonzero(equal[r])[:need]
        cols = np.sort(np.concatenate([g, e]))
        idx[r] = cols
        val[r] = sims[r, cols]
    return idx, val


def topk_neighbors(
    embeddings: EmbeddingMatrix, k: int, block_rows: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Directed exact k-NN over inner-product similarity.

    Returns (neighbors, sims): both (n, k), neighbour indices sorted
    ascending per row, self always excluded.  Requires normalized
    embeddings and k < n.
    """
    if not embeddings.normalized:
        raise InputError("embeddings must be L2-normalized before graph construction")
    n = embeddings.n
    k = int(k)
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if k >= n:
        raise InputError(f"k must be < n, got k={k}, n={n}")

    data = embeddings.data.astype(np.float64, copy=False)
    if block_rows is None:
        block_rows = _block_rows(n)
    neighbors = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, block_rows):
        stop = min(n, start + block_rows)
        block = data[start:stop] @ data.T
        idx, val = _topk_block(block, k, start)
        neighbors[start:stop] = idx
        sims[start:stop] = val
        log.debug("knn block %d:%d done", start, stop)
    return neighbors, sims


def build_knn_similarity(
    embeddings: EmbeddingMatrix, params: KnnParams = KnnParams()
) -> SparseSimilarity:
    """Build the sparse similarity graph used by the quadratic objective.

    Each sample contributes edges to its k most similar other samples.
    With symmetrize on, the directed edge sets are unioned (duplicate
    coordinates keep the max weight), so every row stores at least k
    entries and the total entry count is between n*k and 2*n*k.  The
    diagonal is always zero/absent.
    """
    neighbors, sims = topk_neighbors(embeddings, params.k)
    n, k = neighbors.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = neighbors.ravel()
    w = sims.ravel().copy()
    if params.clamp_negative:
        np.clip(w, 0.0, 1.0, out=w)
    else:
        np.clip(w, -1.0, 1.0, out=w)
    if params.symmetrize:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        w = np.concatenate([w, w])
    off, cidx, wout = csr_from_coo(n, rows, cols, w)
    check = params.symmetrize and params.clamp_negative
    return SparseSimilarity(n, off, cidx, wout, check=check)
