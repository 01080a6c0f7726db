"""Shared domain types and the exact quadratic selection objective.

A selection problem values a subset S of n samples as

    sum_{z in S} I(z)  -  alpha * sum_{z != s in S} K[z, s]

where I holds per-sample importance scores and K is a symmetric,
zero-diagonal sparse similarity matrix of pairwise redundancies.  The
redundancy sum runs over ordered pairs, so each unordered pair
contributes twice.  Objective and solver arithmetic is 64-bit
throughout; embeddings may be stored as float32 and are widened on use.

The dataclasses here validate their invariants on construction and are
treated as immutable afterwards (callers must not mutate the wrapped
arrays).
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InputError

__all__ = [
    "EmbeddingMatrix",
    "ScoreVector",
    "SparseSimilarity",
    "SelectionProblem",
    "SelectionResult",
    "csr_from_coo",
    "evaluate_objective",
]

# Tolerance for "rows are unit-norm" on normalized embeddings; float32
# storage keeps row norms well inside this at moderate dimensions.
_UNIT_NORM_TOL = 1e-6
_SIMPLEX_TOL = 1e-9


def _as_float_matrix(data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return np.ascontiguousarray(arr)


@dataclass(eq=False)
class EmbeddingMatrix:
    """n x dim real matrix of sample embeddings, row-major.

    ``normalized`` asserts that every row has unit L2 norm (checked to
    ``1e-6``).  Rows must be finite; zero-size matrices are rejected.
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        self.data = _as_float_matrix(self.data)
        if self.data.ndim != 2:
            raise InputError(f"embeddings must be 2-D, got shape {self.data.shape}")
        n, dim = self.data.shape
        if n < 1 or dim < 1:
            raise InputError(f"embeddings must be non-empty, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise InputError("embeddings contain non-finite values")
        if self.normalized:
            norms = np.linalg.norm(self.data.astype(np.float64, copy=False), axis=1)
            bad = np.abs(norms - 1.0) > _UNIT_NORM_TOL
            if bad.any():
                row = int(np.flatnonzero(bad)[0])
                raise InputError(
                    f"row {row} has norm {norms[row]!r} but the matrix is marked normalized"
                )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class ScoreVector:
    """Per-sample importance scores.

    ``normalized`` asserts values lie in [0, 1] exactly.  Values are
    stored as float64 and must be finite.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise InputError(f"scores must be 1-D, got shape {self.values.shape}")
        if self.values.size < 1:
            raise InputError("scores must be non-empty")
        if not np.isfinite(self.values).all():
            row = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise InputError(f"score at index {row} is not finite")
        if self.normalized and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise InputError("scores marked normalized must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(eq=False)
class SparseSimilarity:
    """Symmetric zero-diagonal similarity matrix in CSR layout.

    ``row_offsets`` has length n+1; row z's entries live at positions
    ``row_offsets[z]:row_offsets[z+1]`` of ``col_indices``/``weights``
    with strictly increasing column indices.  With ``check=True`` (the
    default) construction also verifies value symmetry and that weights
    lie in [0, 1]; expert paths (unsymmetrized or unclamped graphs) may
    pass ``check=False``, which still validates the structural layout
    and finiteness.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray
    check: InitVar[bool] = True
    _mat: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self, check: bool) -> None:
        if int(self.n) < 1:
            raise InputError(f"similarity needs n >= 1, got {self.n}")
        self.n = int(self.n)
        self.row_offsets = np.ascontiguousarray(np.asarray(self.row_offsets, dtype=np.int64))
        self.col_indices = np.ascontiguousarray(np.asarray(self.col_indices, dtype=np.int64))
        self.weights = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        off, cols, w = self.row_offsets, self.col_indices, self.weights

        if off.shape != (self.n + 1,):
            raise InputError(f"row_offsets must have shape ({self.n + 1},), got {off.shape}")
        if cols.shape != w.shape or cols.ndim != 1:
            raise InputError("col_indices and weights must be 1-D and equal length")
        nnz = cols.size
        if off[0] != 0 or off[-1] != nnz or (np.diff(off) < 0).any():
            raise InputError("row_offsets must be non-decreasing from 0 to nnz")
        if nnz:
            if cols.min() < 0 or cols.max() >= self.n:
                raise InputError("column index out of range")
            rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(off))
            if (rows == cols).any():
                raise InputError("diagonal entries are not allowed")
            if nnz > 1:
                interior = np.ones(nnz - 1, dtype=bool)
                bounds = off[1:-1] - 1
                bounds = bounds[(bounds >= 0) & (bounds < nnz - 1)]
                interior[bounds] = False
                if (np.diff(cols)[interior] <= 0).any():
                    raise InputError("column indices must be strictly increasing within a row")
            if not np.isfinite(w).all():
                raise InputError("weights contain non-finite values")
            if check and (w.min() < 0.0 or w.max() > 1.0):
                raise InputError("weights must lie in [0, 1]")

        self._mat = sp.csr_matrix((w, cols, off), shape=(self.n, self.n))
        if check and (self._mat - self._mat.T).count_nonzero() != 0:
            raise InputError("similarity matrix is not symmetric")

    @property
    def nnz(self) -> int:
        return self.col_indices.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """K @ x in float64."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise InputError(f"matvec expects shape ({self.n},), got {x.shape}")
        return self._mat @ x

    def toarray(self) -> np.ndarray:
        return self._mat.toarray()

    def row(self, z: int) -> tuple[np.ndarray, np.ndarray]:
        """(column indices, weights) of row z."""
        lo, hi = self.row_offsets[z], self.row_offsets[z + 1]
        return self.col_indices[lo:hi], self.weights[lo:hi]


def csr_from_coo(
    n: int, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical CSR arrays from COO triples.

    Sorts by (row, col), drops diagonal entries and collapses duplicate
    coordinates by keeping the maximum weight.  Returns
    (row_offsets, col_indices, weights).
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if not (rows.size == cols.size == weights.size):
        raise InputError("rows, cols and weights must have equal length")
    keep = rows != cols
    rows, cols, weights = rows[keep], cols[keep], weights[keep]
    if rows.size == 0:
        return (
            np.zeros(n + 1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.float64),
        )
    order = np.lexsort((cols, rows))
    rows, cols, weights = rows[order], cols[order], weights[order]
    new_group = np.empty(rows.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.flatnonzero(new_group)
    rows_u, cols_u = rows[starts], cols[starts]
    weights_u = np.maximum.reduceat(weights, starts)
    counts = np.bincount(rows_u, minlength=n)
    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_offsets[1:])
    return row_offsets, cols_u, weights_u


@dataclass(eq=False)
class SelectionProblem:
    """A concrete instance: scores, similarity, budget and trade-off alpha.

    Scores must be marked normalized (in [0, 1]); the pipeline applies
    min-max normalization before building problems.
    """

    scores: ScoreVector
    similarity: SparseSimilarity
    budget_p: int
    alpha: float

    def __post_init__(self) -> None:
        if not isinstance(self.scores, ScoreVector) or not isinstance(
            self.similarity, SparseSimilarity
        ):
            raise InputError("scores must be a ScoreVector and similarity a SparseSimilarity")
        if not self.scores.normalized:
            raise InputError("problem scores must be normalized to [0, 1]")
        if self.scores.n != self.similarity.n:
            raise InputError(
                f"scores ({self.scores.n}) and similarity ({self.similarity.n}) disagree on n"
            )
        self.budget_p = int(self.budget_p)
        if not 1 <= self.budget_p <= self.scores.n:
            raise InputError(
                f"budget must satisfy 1 <= p <= n, got p={self.budget_p}, n={self.scores.n}"
            )
        self.alpha = float(self.alpha)
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise InputError(f"alpha must be finite and >= 0, got {self.alpha}")

    @property
    def n(self) -> int:
        return self.scores.n


@dataclass(eq=False)
class SelectionResult:
    """Outcome of one selection run.

    ``selected`` is sorted ascending and unique; ``probabilities`` is a
    length-n simplex vector (non-negative, sums to 1 within 1e-9);
    ``trace`` holds per-iteration L1 iterate differences and may be
    empty for one-shot methods.
    """

    selected: np.ndarray
    probabilities: np.ndarray
    objective: float
    trace: np.ndarray

    def __post_init__(self) -> None:
        self.selected = np.ascontiguousarray(np.asarray(self.selected, dtype=np.int64))
        self.probabilities = np.ascontiguousarray(
            np.asarray(self.probabilities, dtype=np.float64)
        )
        self.trace = np.ascontiguousarray(np.asarray(self.trace, dtype=np.float64))
        self.objective = float(self.objective)
        n = self.probabilities.size
        sel = self.selected
        if sel.ndim != 1 or self.probabilities.ndim != 1 or self.trace.ndim != 1:
            raise InputError("selected, probabilities and trace must be 1-D")
        if sel.size:
            if sel.min() < 0 or sel.max() >= n:
                raise InputError("selected index out of range")
            if (np.diff(sel) <= 0).any():
                raise InputError("selected must be strictly increasing")
        if self.probabilities.size and self.probabilities.min() < 0.0:
            raise InputError("probabilities must be non-negative")
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > _SIMPLEX_TOL:
            raise InputError(f"probabilities must sum to 1 within 1e-9, got {total!r}")
        if not np.isfinite(self.objective):
            raise InputError("objective must be finite")


def _as_index_array(selected) -> np.ndarray:
    if isinstance(selected, (set, frozenset)):
        selected = sorted(selected)
    arr = np.asarray(selected)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise InputError("selection indices must be integers")
    return arr.astype(np.int64).ravel()


def evaluate_objective(problem: SelectionProblem, selected) -> float:
    """Exact objective of a subset: score mass minus alpha times redundancy.

    ``selected`` may be any collection of distinct in-range indices; an
    empty selection evaluates to 0.0.  The redundancy term counts
    ordered pairs, i.e. each unordered stored pair twice.
    """
    sel = _as_index_array(selected)
    if sel.size == 0:
        return 0.0
    n = problem.n
    if sel.min() < 0 or sel.max() >= n:
        raise InputError("selection index out of range")
    if np.unique(sel).size != sel.size:
        raise InputError("selection indices must be distinct")
    sel = np.sort(sel)  # canonical order: exact permutation invariance
    linear = float(problem.scores.values[sel].sum())
    x = np.zeros(n, dtype=np.float64)
    x[sel] = 1.0
    quad = float(x @ problem.similarity.matvec(x))
    return float(linear - problem.alpha * quad)
