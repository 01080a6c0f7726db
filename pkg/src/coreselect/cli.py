"""Command line front end.

Subcommands mirror the library stages:

    knn       embeddings -> sparse similarity CSV
    score     embeddings -> importance score CSV (built-in scorer)
    select    full pipeline -> selection JSON
    baseline  classical baselines -> selection JSON
    oracle    exhaustive optimum for small instances (JSON on stdout)
    eval      selection + data -> JSON report, histogram CSV, figures

Exit codes: 0 success, 1 I/O or file-format problems, 2 invalid
arguments or precondition violations, 3 enumeration capacity exceeded.
Errors print one machine-parseable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .baselines import APPROXIMATE_METHODS, METHODS, BaselineSpec, baseline_select
from .core import ScoreVector, SelectionProblem, SelectionResult, evaluate_objective
from .errors import CapacityError, FormatError, InputError
from .fileio import (
    read_embeddings,
    read_scores_csv,
    read_selection,
    read_similarity_csv,
    write_report,
    write_scores_csv,
    write_selection,
    write_similarity_csv,
)
from .oracle import OracleLimit, brute_force_optimum
from .pipeline import PipelineConfig, evaluate_selection, resolve_budget, run_pipeline
from .scoring import KMeansParams, normalize_scores, ssp_scores
from .simgraph import KnnParams, build_knn_similarity, l2_normalize
from .solver import SolverParams

log = logging.getLogger(__name__)


def _temperature(value: str):
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {value!r}") from None


def _add_budget_group(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--ratio", type=float, help="fraction of samples to keep, in (0, 1)")
    group.add_argument("--budget", type=int, help="absolute number of samples to keep")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreselect",
        description="Select informative subsets by quadratic score/redundancy trade-off.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_knn = sub.add_parser("knn", help="build the k-NN similarity graph")
    p_knn.add_argument("--embeddings", required=True)
    p_knn.add_argument("--k", type=int, default=5)
    p_knn.add_argument(
        "--no-clamp",
        dest="clamp",
        action="store_false",
        help="keep negative cosine weights instead of clamping to 0",
    )
    p_knn.add_argument("--out", required=True)
    p_knn.set_defaults(func=_cmd_knn)

    p_score = sub.add_parser("score", help="compute importance scores")
    p_score.add_argument("mode", choices=["ssp"], help="scoring method")
    p_score.add_argument("--embeddings", required=True)
    p_score.add_argument("--clusters", type=int, required=True)
    p_score.add_argument("--max-iters", type=int, default=100)
    p_score.add_argument("--seed", type=int, default=0)
    p_score.add_argument("--out", required=True)
    p_score.set_defaults(func=_cmd_score)

    p_sel = sub.add_parser("select", help="run the full selection pipeline")
    p_sel.add_argument("--embeddings", required=True)
    p_sel.add_argument("--scores", help="score CSV; omit to use the built-in scorer")
    p_sel.add_argument(
        "--clusters", type=int, help="built-in scorer cluster count (when --scores is omitted)"
    )
    _add_budget_group(p_sel)
    p_sel.add_argument("--alpha", type=float, default=0.3)
    p_sel.add_argument("--k", type=int, default=5)
    p_sel.add_argument("--iters", type=int, default=20)
    p_sel.add_argument("--partitions", type=int, default=1)
    p_sel.add_argument("--temperature", type=_temperature, default="auto")
    p_sel.add_argument("--jitter", type=float, default=1e-6)
    p_sel.add_argument("--seed", type=int, default=0)
    p_sel.add_argument("--out", required=True)
    p_sel.set_defaults(func=_cmd_select)

    p_base = sub.add_parser("baseline", help="run a classical baseline")
    p_base.add_argument("--method", required=True, choices=list(METHODS))
    p_base.add_argument("--embeddings", help="needed by k_center")
    p_base.add_argument("--scores", required=True)
    p_base.add_argument("--similarity", help="similarity CSV (needed by d2_greedy)")
    _add_budget_group(p_base)
    p_base.add_argument("--alpha", type=float, default=0.3, help="alpha for objective reporting")
    p_base.add_argument("--bins", type=int, default=10)
    p_base.add_argument("--gamma", type=float, default=1.0)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--out", required=True)
    p_base.set_defaults(func=_cmd_baseline)

    p_oracle = sub.add_parser("oracle", help="exhaustive optimum for small instances")
    p_oracle.add_argument("--scores", required=True)
    p_oracle.add_argument("--similarity", required=True)
    p_oracle.add_argument("--budget", type=int, required=True)
    p_oracle.add_argument("--alpha", type=float, default=0.3)
    p_oracle.add_argument("--max-combinations", type=int, default=2_000_000)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_eval = sub.add_parser("eval", help="evaluate a stored selection")
    p_eval.add_argument("--selection", required=True)
    p_eval.add_argument("--embeddings", required=True)
    p_eval.add_argument("--scores", required=True)
    p_eval.add_argument("--k", type=int, default=5, help="k for the reporting similarity graph")
    p_eval.add_argument("--alpha", type=float, default=0.3)
    p_eval.add_argument("--out", required=True, help="report JSON path; CSV/PNGs land beside it")
    p_eval.set_defaults(func=_cmd_eval)

    return parser


def _load_normalized_scores(path: str) -> tuple[ScoreVector, ScoreVector]:
    raw = read_scores_csv(path)
    return raw, normalize_scores(raw)


def _cmd_knn(args: argparse.Namespace) -> int:
    emb = read_embeddings(args.embeddings)
    params = KnnParams(k=args.k, clamp_negative=args.clamp)
    sim = build_knn_similarity(l2_normalize(emb), params)
    write_similarity_csv(args.out, sim)
    print(f"wrote {args.out}: n={sim.n} nnz={sim.nnz}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    emb = read_embeddings(args.embeddings)
    params = KMeansParams(clusters=args.clusters, max_iters=args.max_iters, seed=args.seed)
    scores = ssp_scores(emb, params)
    write_scores_csv(args.out, scores)
    print(f"wrote {args.out}: n={scores.n}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    emb = read_embeddings(args.embeddings)
    scores = None
    ssp = None
    if args.scores is not None:
        if args.clusters is not None:
            raise InputError("--clusters only applies when --scores is omitted")
        scores = read_scores_csv(args.scores)
    else:
        if args.clusters is None:
            raise InputError("either --scores or --clusters is required")
        ssp = KMeansParams(clusters=args.clusters, seed=args.seed)

    config = PipelineConfig(
        ratio=args.ratio,
        budget_p=args.budget,
        partitions=args.partitions,
        knn=KnnParams(k=args.k),
        solver=SolverParams(
            iters=args.iters,
            alpha=args.alpha,
            temperature=args.temperature,
            jitter_eps=args.jitter,
            seed=args.seed,
        ),
        ssp=ssp,
        seed=args.seed,
    )
    result, _report = run_pipeline(config, emb, scores)
    params = {
        "n": emb.n,
        "dim": emb.dim,
        "budget": int(result.selected.size),
        "ratio": args.ratio,
        "alpha": args.alpha,
        "k": args.k,
        "iters": args.iters,
        "partitions": args.partitions,
        "temperature": "auto" if args.temperature == "auto" else float(args.temperature),
        "jitter_eps": args.jitter,
        "seed": args.seed,
        "score_source": "external" if scores is not None else "ssp",
        "clusters": args.clusters,
    }
    write_selection(args.out, result, params, __version__)
    print(f"wrote {args.out}: selected {result.selected.size} of {emb.n}, objective {result.objective:.6g}")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    raw, norm = _load_normalized_scores(args.scores)
    n = norm.n
    emb = read_embeddings(args.embeddings) if args.embeddings else None
    if args.method == "k_center" and emb is None:
        raise InputError("k_center requires --embeddings")
    if args.method == "d2_greedy" and not args.similarity:
        raise InputError("d2_greedy requires --similarity")
    if args.similarity:
        sim = read_similarity_csv(args.similarity, n)
    else:
        sim = _empty_similarity(n)
    config = PipelineConfig(ratio=args.ratio, budget_p=args.budget)
    p = resolve_budget(config, n)
    problem = SelectionProblem(norm, sim, p, args.alpha)
    spec = BaselineSpec(method=args.method, seed=args.seed, bins=args.bins, gamma=args.gamma)
    result = baseline_select(spec, problem, emb)
    params = {
        "method": args.method,
        "n": n,
        "budget": p,
        "ratio": args.ratio,
        "alpha": args.alpha,
        "seed": args.seed,
        "bins": args.bins if args.method == "ccs" else None,
        "gamma": args.gamma if args.method == "d2_greedy" else None,
    }
    if args.method in APPROXIMATE_METHODS:
        params["approximation"] = APPROXIMATE_METHODS[args.method]
    write_selection(args.out, result, params, __version__)
    print(f"wrote {args.out}: {args.method} selected {p} of {n}, objective {result.objective:.6g}")
    return 0


def _empty_similarity(n: int):
    from .core import SparseSimilarity

    return SparseSimilarity(
        n,
        np.zeros(n + 1, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.float64),
    )


def _cmd_oracle(args: argparse.Namespace) -> int:
    raw, norm = _load_normalized_scores(args.scores)
    sim = read_similarity_csv(args.similarity, norm.n)
    problem = SelectionProblem(norm, sim, args.budget, args.alpha)
    limit = OracleLimit(max_combinations=args.max_combinations)
    selected, objective = brute_force_optimum(problem, limit)
    doc = {
        "selected": [int(i) for i in selected.tolist()],
        "objective": float(objective),
        "n": norm.n,
        "budget": int(args.budget),
        "alpha": float(args.alpha),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    doc = read_selection(args.selection)
    emb = read_embeddings(args.embeddings)
    raw, norm = _load_normalized_scores(args.scores)
    selected = np.asarray(doc["selected"], dtype=np.int64)
    if selected.size == 0:
        raise InputError("selection file contains an empty selection")
    if norm.n != emb.n:
        raise InputError(f"scores ({norm.n}) and embeddings ({emb.n}) disagree on n")
    if selected.max() >= emb.n:
        raise InputError("selection index out of range for these embeddings")
    # the similarity graph is rebuilt from the embeddings so the reported
    # objective follows the same contract as select
    sim = build_knn_similarity(l2_normalize(emb), KnnParams(k=args.k))
    problem = SelectionProblem(norm, sim, selected.size, args.alpha)
    objective = evaluate_objective(problem, selected)
    report = evaluate_selection(selected, emb, raw, objective)

    out = args.out
    base = out[:-5] if out.endswith(".json") else out
    doc_out = {
        "objective": report.objective,
        "coverage_mean": report.coverage_mean,
        "coverage_max": report.coverage_max,
        "score_quantiles": report.score_quantiles,
        "score_histogram": {
            "edges": [float(e) for e in report.histogram_edges.tolist()],
            "counts": [int(c) for c in report.histogram_counts.tolist()],
        },
        "params": {"k": args.k, "alpha": args.alpha, "n": emb.n, "budget": int(selected.size)},
        "tool_version": __version__,
    }
    write_report(out, doc_out)

    from .report import render_histogram, render_trace, write_histogram_csv

    write_histogram_csv(base + "_histogram.csv", report)
    render_histogram(base + "_histogram.png", report)
    render_trace(base + "_trace.png", np.asarray(doc["trace"], dtype=np.float64))
    print(
        f"wrote {out}: objective {report.objective:.6g}, "
        f"coverage mean {report.coverage_mean:.6g} max {report.coverage_max:.6g}"
    )
    return 0


def _fail(kind: str, exc: BaseException, code: int) -> int:
    print(f"error: kind={kind} exit={code} msg={str(exc)!r}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FormatError as exc:
        return _fail("format", exc, 1)
    except FileNotFoundError as exc:
        return _fail("io", exc, 1)
    except OSError as exc:
        return _fail("io", exc, 1)
    except InputError as exc:
        return _fail("input", exc, 2)
    except CapacityError as exc:
        return _fail("capacity", exc, 3)


if __name__ == "__main__":
    sys.exit(main())
