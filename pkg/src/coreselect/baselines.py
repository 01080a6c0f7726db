"""Classical one-shot selection baselines for comparison runs.

All methods return a SelectionResult with the same shape as the
iterative solver (sorted unique indices, uniform probabilities over the
selection, the exact objective, empty trace), so downstream reporting
treats them interchangeably.  Bin-based and decay-based methods are
simple, deterministic variants of their published namesakes; reports
label them as approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix, SelectionProblem, SelectionResult, evaluate_objective
from .errors import InputError

__all__ = ["BaselineSpec", "METHODS", "baseline_select", "greedy_kcenter"]

METHODS = ("random", "top_score", "k_center", "moderate", "ccs", "d2_greedy")

# Methods whose implementation is a simplified stand-in for the
# published procedure; reports carry this label.
APPROXIMATE_METHODS = {
    "ccs": "equal-width score bins with round-robin redistribution",
    "d2_greedy": "multiplicative exp(-gamma * similarity) score decay",
    "moderate": "distance to the score median (score-space variant)",
}


@dataclass(frozen=True)
class BaselineSpec:
    """Which baseline to run and its knobs (bins for ccs, gamma for d2)."""

    method: str
    seed: int = 0
    bins: int = 10
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if int(self.bins) < 1:
            raise InputError(f"bins must be >= 1, got {self.bins}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise InputError(f"gamma must be finite and >= 0, got {self.gamma}")


def _random(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(n, size=p, replace=False)


def _top_score(scores: np.ndarray, p: int) -> np.ndarray:
    return np.argsort(-scores, kind="stable")[:p]


def greedy_kcenter(embeddings: EmbeddingMatrix, scores: np.ndarray, p: int) -> np.ndarray:
    """Farthest-point greedy centers, in pick order (not sorted).

    The first center is the highest-scoring sample; each subsequent
    center maximizes Euclidean distance to the chosen set.  Ties go to
    the lower index.
    """
    x = embeddings.data.astype(np.float64, copy=False)
    n = x.shape[0]
    if scores.size != n:
        raise InputError(f"scores ({scores.size}) and embeddings ({n}) disagree on n")
    order = np.empty(p, dtype=np.int64)
    order[0] = int(np.argmax(scores))
    mind = np.linalg.norm(x - x[order[0]], axis=1)
    mind[order[0]] = -np.inf
    for i in range(1, p):
        nxt = int(np.argmax(mind))
        order[i] = nxt
        np.minimum(mind, np.linalg.norm(x - x[nxt], axis=1), out=mind)
        mind[nxt] = -np.inf
    return order


def _moderate(scores: np.ndarray, p: int) -> np.ndarray:
    med = float(np.median(scores))
    return np.argsort(np.abs(scores - med), kind="stable")[:p]


def _ccs(scores: np.ndarray, p: int, bins: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = float(scores.min()), float(scores.max())
    if hi == lo:
        bin_of = np.zeros(scores.size, dtype=np.int64)
    else:
        bin_of = np.minimum(((scores - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    members = [np.flatnonzero(bin_of == b) for b in range(bins)]
    nonempty = [b for b in range(bins) if members[b].size]

    base = p // bins
    alloc = {b: base for b in nonempty}
    remainder = p - base * len(nonempty)
    by_population = sorted(nonempty, key=lambda b: (-members[b].size, b))
    i = 0
    while remainder > 0:
        alloc[by_population[i % len(by_population)]] += 1
        remainder -= 1
        i += 1
    # cap at bin population and push the deficit round-robin onto bins
    # that still have headroom (in bin-index order)
    deficit = 0
    for b in nonempty:
        over = alloc[b] - members[b].size
        if over > 0:
            alloc[b] -= over
            deficit += over
    while deficit > 0:
        for b in nonempty:
            if deficit == 0:
                break
            if alloc[b] < members[b].size:
                alloc[b] += 1
                deficit -= 1
    picks = [
        rng.choice(members[b], size=alloc[b], replace=False) for b in nonempty if alloc[b] > 0
    ]
    return np.concatenate(picks) if picks else np.empty(0, dtype=np.int64)


def _d2_greedy(problem: SelectionProblem, p: int, gamma: float) -> np.ndarray:
    work = problem.scores.values.copy()
    picked = np.zeros(problem.n, dtype=bool)
    out = np.empty(p, dtype=np.int64)
    for i in range(p):
        z = int(np.argmax(np.where(picked, -np.inf, work)))
        out[i] = z
        picked[z] = True
        cols, w = problem.similarity.row(z)
        live = ~picked[cols]
        work[cols[live]] *= np.exp(-gamma * w[live])
    return out


def baseline_select(
    spec: BaselineSpec,
    problem: SelectionProblem,
    embeddings: EmbeddingMatrix | None = None,
) -> SelectionResult:
    """Run one baseline on a problem; k_center additionally needs embeddings.

    Stochastic methods (random, ccs) are deterministic at fixed seed.
    """
    n, p = problem.n, problem.budget_p
    scores = problem.scores.values
    rng = np.random.default_rng(spec.seed)

    if spec.method == "random":
        sel = _random(n, p, rng)
    elif spec.method == "top_score":
        sel = _top_score(scores, p)
    elif spec.method == "k_center":
        if embeddings is None:
            raise InputError("k_center requires embeddings")
        if embeddings.n != n:
            raise InputError(f"embeddings ({embeddings.n}) and problem ({n}) disagree on n")
        sel = greedy_kcenter(embeddings, scores, p)
    elif spec.method == "moderate":
        sel = _moderate(scores, p)
    elif spec.method == "ccs":
        sel = _ccs(scores, p, int(spec.bins), rng)
    else:  # d2_greedy
        sel = _d2_greedy(problem, p, float(spec.gamma))

    sel = np.sort(np.asarray(sel, dtype=np.int64))
    if np.unique(sel).size != sel.size or sel.size != p:
        raise InputError(f"{spec.method} produced an invalid selection")
    probs = np.zeros(n, dtype=np.float64)
    probs[sel] = 1.0 / p
    return SelectionResult(
        sel, probs, evaluate_objective(problem, sel), np.empty(0, dtype=np.float64)
    )
