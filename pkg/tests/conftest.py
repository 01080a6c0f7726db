"""Shared instance builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from coreselect import (
    EmbeddingMatrix,
    KnnParams,
    ScoreVector,
    SelectionProblem,
    SparseSimilarity,
    build_knn_similarity,
    l2_normalize,
    normalize_scores,
)
from coreselect.core import csr_from_coo


def dup_problem(scores, w01: float, alpha: float, p: int) -> SelectionProblem:
    """The 4-sample near-duplicate instance: K[0][1]=K[1][0]=w01, else 0."""
    off = np.array([0, 1, 2, 2, 2], dtype=np.int64)
    cols = np.array([1, 0], dtype=np.int64)
    w = np.array([w01, w01], dtype=np.float64)
    sim = SparseSimilarity(4, off, cols, w)
    return SelectionProblem(ScoreVector(scores, normalized=True), sim, p, alpha)


def random_symmetric_similarity(rng: np.random.Generator, n: int, density: float = 0.2) -> SparseSimilarity:
    """Random symmetric sparse similarity with weights in [0, 1]."""
    m = max(1, int(density * n * n / 2))
    rows = rng.integers(0, n, size=m)
    cols = rng.integers(0, n, size=m)
    w = rng.random(m)
    off, cidx, wout = csr_from_coo(
        n, np.concatenate([rows, cols]), np.concatenate([cols, rows]), np.concatenate([w, w])
    )
    return SparseSimilarity(n, off, cidx, wout)


def random_problem(
    rng: np.random.Generator, n: int, p: int, alpha: float = 0.3, from_embeddings: bool = False,
    dim: int = 8, k: int = 5,
) -> SelectionProblem:
    scores = normalize_scores(ScoreVector(rng.random(n)))
    if from_embeddings:
        emb = EmbeddingMatrix(rng.normal(size=(n, dim)).astype(np.float32))
        sim = build_knn_similarity(l2_normalize(emb), KnnParams(k=k))
    else:
        sim = random_symmetric_similarity(rng, n)
    return SelectionProblem(scores, sim, p, alpha)


def blob_embeddings(rng: np.random.Generator, blobs: int, per_blob: int, dim: int,
                    spread: float, sigma: float) -> EmbeddingMatrix:
    centers = rng.normal(0.0, spread, size=(blobs, dim))
    pts = np.repeat(centers, per_blob, axis=0)
    pts = pts + rng.normal(0.0, sigma, size=pts.shape)
    return EmbeddingMatrix(pts.astype(np.float32))


@pytest.fixture
def rng():
    return np.random.default_rng(42)
