"""Iterative softmax solver for the quadratic selection objective.

The budgeted subset problem

    maximize  sum_z I(z) x_z - alpha * x^T K x   over  sum_z x_z = p

is relaxed to a probability vector x on the simplex and driven by the
fixed-point update

    x^{t+1} = softmax((p * I - 2 * p * alpha * K x^t) / tau)

i.e. a softmax of the objective gradient scaled by the budget, with an
optional temperature tau for sharpness control (tau = 1 reproduces the
plain update).  After T iterations the top-p entries of x are returned.

A generalized entropy-regularized proximal update is also provided; its
(lambda=1, beta -> infinity) limit recovers the plain softmax step and
serves as a consistency check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import SelectionProblem, SelectionResult, evaluate_objective
from .errors import InputError, NumericDomainError

__all__ = [
    "SolverParams",
    "SolverState",
    "GeneralizedParams",
    "softmax",
    "softmax_step",
    "generalized_step",
    "solve",
    "resolve_temperature",
    "alpha_from_lambda",
]

log = logging.getLogger(__name__)

_SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class SolverParams:
    """Solver knobs.

    ``temperature`` is either a positive float or the string "auto",
    which resolves to max(1, p/10) for budget p.  ``alpha`` is the
    redundancy trade-off used when this parameter set is the source of
    problem construction (the step itself always reads the problem's
    own alpha).  ``jitter_eps`` sets the relative amplitude of the
    seeded symmetry-breaking noise on the uniform start.
    """

    iters: int = 20
    alpha: float = 0.3
    temperature: float | str = "auto"
    jitter_eps: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.iters) < 1:
            raise InputError(f"iters must be >= 1, got {self.iters}")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InputError(f"alpha must be finite and >= 0, got {self.alpha}")
        if isinstance(self.temperature, str):
            if self.temperature != "auto":
                raise InputError(f"temperature must be a positive number or 'auto', got {self.temperature!r}")
        elif not np.isfinite(self.temperature) or self.temperature <= 0:
            raise InputError(f"temperature must be > 0, got {self.temperature}")
        if not np.isfinite(self.jitter_eps) or self.jitter_eps < 0:
            raise InputError(f"jitter_eps must be finite and >= 0, got {self.jitter_eps}")


@dataclass(eq=False)
class SolverState:
    """Simplex iterate plus iteration counter."""

    x: np.ndarray
    iteration: int = 0

    def __post_init__(self) -> None:
        self.x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        if self.x.ndim != 1 or self.x.size < 1:
            raise InputError("state must be a non-empty 1-D vector")
        if not np.isfinite(self.x).all():
            raise InputError("state contains non-finite values")
        if self.x.min() < 0.0:
            raise InputError("state entries must be non-negative")
        total = float(self.x.sum())
        if abs(total - 1.0) > _SIMPLEX_TOL:
            raise InputError(f"state must sum to 1 within 1e-9, got {total!r}")
        self.iteration = int(self.iteration)


@dataclass(frozen=True)
class GeneralizedParams:
    """Entropy weight and proximal step size for the generalized update.

    The product lam*beta must differ from 1 (the update divides by
    lam*beta - 1); values very close to 1 are numerically unstable.
    """

    lam: float = 1.0
    beta: float = 1e9

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or not np.isfinite(self.beta):
            raise InputError("lam and beta must be finite")
        if self.lam * self.beta == 1.0:
            raise InputError("lam * beta must differ from 1")


def resolve_temperature(params: SolverParams, budget_p: int) -> float:
    if params.temperature == "auto":
        return max(1.0, float(budget_p) / 10.0)
    return float(params.temperature)


def softmax(v: np.ndarray) -> np.ndarray:
    """Shift-stabilized softmax; exact under constant offsets to 1e-12."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise InputError("softmax expects a non-empty 1-D vector")
    if not np.isfinite(v).all():
        raise InputError("softmax input must be finite")
    e = np.exp(v - v.max())
    return e / e.sum()


def _gradient(problem: SelectionProblem, x: np.ndarray) -> np.ndarray:
    # d/dx of the relaxed objective: I - 2*alpha*K x
    return problem.scores.values - 2.0 * problem.alpha * problem.similarity.matvec(x)


def softmax_step(
    state: SolverState, problem: SelectionProblem, params: SolverParams
) -> SolverState:
    """One fixed-point update x <- softmax(p * (I - 2 alpha K x) / tau)."""
    if state.x.size != problem.n:
        raise InputError(f"state size {state.x.size} does not match problem n={problem.n}")
    p = float(problem.budget_p)
    tau = resolve_temperature(params, problem.budget_p)
    u = p * _gradient(problem, state.x)
    return SolverState(softmax(u / tau), state.iteration + 1)


def generalized_step(
    state: SolverState,
    problem: SelectionProblem,
    gen: GeneralizedParams,
    params: SolverParams | None = None,
) -> SolverState:
    """Entropy-regularized proximal update on the scaled simplex.

    Solves the per-step subproblem in closed form:

        x^{t+1}  propto  exp( (beta p / (lam beta - 1)) * (I - 2 alpha K x)
                              + (log(x / p) - x) / (1 - lam beta) )

    renormalized to the simplex.  Requires a strictly positive iterate
    (the update takes its log).  With lam = 1 and large beta this
    reproduces softmax_step at unit temperature.
    """
    if state.x.size != problem.n:
        raise InputError(f"state size {state.x.size} does not match problem n={problem.n}")
    x = state.x
    if x.min() <= 0.0:
        raise NumericDomainError("generalized step requires a strictly positive iterate")
    p = float(problem.budget_p)
    lb = gen.lam * gen.beta
    g = _gradient(problem, x)
    expo = (gen.beta * p / (lb - 1.0)) * g + (np.log(x / p) - x) / (1.0 - lb)
    expo -= expo.max()
    nxt = np.exp(expo)
    nxt /= nxt.sum()
    return SolverState(nxt, state.iteration + 1)


def _initial_state(n: int, params: SolverParams) -> SolverState:
    rng = np.random.default_rng(params.seed)
    x = 1.0 + params.jitter_eps * rng.random(n)
    x /= x.sum()
    return SolverState(x, 0)


def top_p_indices(x: np.ndarray, p: int) -> np.ndarray:
    """Indices of the p largest entries, ties to the lower index, sorted."""
    order = np.argsort(-np.asarray(x, dtype=np.float64), kind="stable")
    return np.sort(order[:p])


def solve(problem: SelectionProblem, params: SolverParams = SolverParams()) -> SelectionResult:
    """Run T softmax iterations from a jittered uniform start and take top-p.

    Deterministic at fixed seed.  The trace records ||x^{t+1} - x^t||_1
    per iteration; the reported objective is the exact subset objective
    of the returned selection.
    """
    state = _initial_state(problem.n, params)
    trace = np.empty(params.iters, dtype=np.float64)
    for t in range(params.iters):
        new = softmax_step(state, problem, params)
        trace[t] = float(np.abs(new.x - state.x).sum())
        state = new
        log.debug("iteration %d: l1 step %.3e", t + 1, trace[t])
    selected = top_p_indices(state.x, problem.budget_p)
    objective = evaluate_objective(problem, selected)
    return SelectionResult(selected, state.x, objective, trace)


def alpha_from_lambda(lam: float, budget_p: int) -> float:
    """Map a graph-cut trade-off lambda to this objective's alpha: lam/(p-1)."""
    if int(budget_p) < 2:
        raise InputError(f"budget must be >= 2 to map lambda, got {budget_p}")
    lam = float(lam)
    if not np.isfinite(lam):
        raise InputError("lambda must be finite")
    return lam / (float(budget_p) - 1.0)
