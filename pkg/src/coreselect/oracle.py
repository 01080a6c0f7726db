"""Exhaustive reference optimum for small selection problems.

Enumerates all C(n, p) subsets in lexicographic order and returns the
objective maximizer, breaking exact ties towards the lexicographically
smallest subset.  Guarded by a combination cap so callers cannot
accidentally launch an astronomically large enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .core import SelectionProblem, evaluate_objective
from .errors import CapacityError, InputError

__all__ = ["OracleLimit", "brute_force_optimum"]

_CHUNK = 100_000


@dataclass(frozen=True)
class OracleLimit:
    max_combinations: int = 2_000_000

    def __post_init__(self) -> None:
        if int(self.max_combinations) < 1:
            raise InputError(f"max_combinations must be >= 1, got {self.max_combinations}")


def brute_force_optimum(
    problem: SelectionProblem, limit: OracleLimit = OracleLimit()
) -> tuple[np.ndarray, float]:
    """Return (selected, objective) of the exact global optimum.

    Raises CapacityError when C(n, p) exceeds the limit.  The returned
    objective is recomputed with evaluate_objective on the winning
    subset, so it matches the public objective bit-for-bit.
    """
    n, p = problem.n, problem.budget_p
    total = math.comb(n, p)
    if total > limit.max_combinations:
        raise CapacityError(
            f"C({n}, {p}) = {total} subsets exceeds the cap of {limit.max_combinations}"
        )
    scores = problem.scores.values
    if p == 1:
        best = int(np.argmax(scores))  # first maximum = lexicographic winner
        sel = np.array([best], dtype=np.int64)
        return sel, evaluate_objective(problem, sel)
    if p == n:
        sel = np.arange(n, dtype=np.int64)
        return sel, evaluate_objective(problem, sel)

    # 2 <= p <= n-1 and C(n, p) <= cap bounds n to ~2000, so a dense
    # similarity copy is safe here.
    dense = problem.similarity.toarray()
    pair_idx = list(combinations(range(p), 2))
    best_obj = -np.inf
    best_sel: np.ndarray | None = None
    it = combinations(range(n), p)
    while True:
        chunk = list(islice(it, _CHUNK))
        if not chunk:
            break
        arr = np.asarray(chunk, dtype=np.int64)
        obj = scores[arr].sum(axis=1)
        for a, b in pair_idx:
            ia, ib = arr[:, a], arr[:, b]
            obj -= problem.alpha * (dense[ia, ib] + dense[ib, ia])
        i = int(np.argmax(obj))
        if obj[i] > best_obj:
            best_obj = float(obj[i])
            best_sel = arr[i]
    assert best_sel is not None
    return best_sel.copy(), evaluate_objective(problem, best_sel)
