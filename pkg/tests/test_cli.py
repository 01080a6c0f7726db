"""CLI tests drive main() in-process; one test covers the module entry point."""

import json
import re
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from coreselect import (
    EmbeddingMatrix,
    KMeansParams,
    KnnParams,
    ScoreVector,
    build_knn_similarity,
    l2_normalize,
    ssp_scores,
)
from coreselect.cli import main
from coreselect.fileio import (
    read_scores_csv,
    read_selection,
    read_similarity_csv,
    write_embeddings,
    write_scores_csv,
    write_similarity_csv,
)

from conftest import random_symmetric_similarity


@pytest.fixture
def dataset(tmp_path, rng):
    x = rng.normal(size=(100, 8)).astype(np.float32)
    scores = rng.random(100)
    emb_path = str(tmp_path / "emb.bin")
    scores_path = str(tmp_path / "scores.csv")
    write_embeddings(emb_path, EmbeddingMatrix(x))
    write_scores_csv(scores_path, ScoreVector(scores))
    return {"x": x, "scores": scores, "emb": emb_path, "scores_csv": scores_path, "dir": tmp_path}


def strip_created_at(path: str) -> dict:
    doc = json.loads(open(path).read())
    doc.pop("created_at", None)
    return doc


class TestSelect:
    def test_ratio_selects_ten_of_hundred(self, dataset, capsys):
        out = str(dataset["dir"] / "sel.json")
        code = main([
            "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
            "--ratio", "0.1", "--out", out,
        ])
        assert code == 0
        doc = read_selection(out)
        assert len(doc["selected"]) == 10
        assert len(doc["trace"]) == 20
        assert "selected 10 of 100" in capsys.readouterr().out

    def test_deterministic_output_bytes(self, dataset):
        a = str(dataset["dir"] / "a.json")
        b = str(dataset["dir"] / "b.json")
        argv = ["select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
                "--budget", "7", "--seed", "3"]
        assert main(argv + ["--out", a]) == 0
        assert main(argv + ["--out", b]) == 0
        assert strip_created_at(a) == strip_created_at(b)

    def test_ratio_out_of_range_exits_2(self, dataset, capsys):
        out = str(dataset["dir"] / "sel.json")
        code = main([
            "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
            "--ratio", "1.5", "--out", out,
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "kind=input" in err and "exit=2" in err

    def test_missing_embeddings_file_exits_1(self, dataset, capsys):
        code = main([
            "select", "--embeddings", str(dataset["dir"] / "nope.bin"),
            "--scores", dataset["scores_csv"], "--budget", "5",
            "--out", str(dataset["dir"] / "s.json"),
        ])
        assert code == 1
        assert "kind=io" in capsys.readouterr().err

    def test_malformed_scores_exits_1(self, dataset, capsys):
        bad = dataset["dir"] / "bad.csv"
        bad.write_text("0,0.5\n1,oops\n")
        code = main([
            "select", "--embeddings", dataset["emb"], "--scores", str(bad),
            "--budget", "5", "--out", str(dataset["dir"] / "s.json"),
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "kind=format" in err and "bad.csv:2" in err

    def test_builtin_scorer_requires_clusters(self, dataset, capsys):
        code = main([
            "select", "--embeddings", dataset["emb"], "--budget", "5",
            "--out", str(dataset["dir"] / "s.json"),
        ])
        assert code == 2
        assert "--clusters" in capsys.readouterr().err

    def test_builtin_scorer_mode(self, dataset):
        out = str(dataset["dir"] / "sel.json")
        code = main([
            "select", "--embeddings", dataset["emb"], "--clusters", "4",
            "--budget", "6", "--out", out,
        ])
        assert code == 0
        doc = read_selection(out)
        assert doc["params"]["score_source"] == "ssp"
        assert len(doc["selected"]) == 6

    def test_scores_and_clusters_conflict(self, dataset, capsys):
        code = main([
            "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
            "--clusters", "4", "--budget", "5", "--out", str(dataset["dir"] / "s.json"),
        ])
        assert code == 2

    def test_budget_and_ratio_mutually_exclusive(self, dataset, capsys):
        with pytest.raises(SystemExit) as exc:
            main([
                "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
                "--ratio", "0.1", "--budget", "5", "--out", str(dataset["dir"] / "s.json"),
            ])
        assert exc.value.code == 2


class TestKnn:
    def test_graph_matches_library(self, dataset):
        out = str(dataset["dir"] / "sim.csv")
        assert main(["knn", "--embeddings", dataset["emb"], "--k", "4", "--out", out]) == 0
        loaded = read_similarity_csv(out, 100)
        direct = build_knn_similarity(
            l2_normalize(EmbeddingMatrix(dataset["x"])), KnnParams(k=4)
        )
        assert_array_equal(loaded.row_offsets, direct.row_offsets)
        assert_array_equal(loaded.col_indices, direct.col_indices)
        # CSV stores repr() of each float so weights survive bit-exactly
        assert loaded.weights.tobytes() == direct.weights.tobytes()


class TestScore:
    def test_matches_library_scorer(self, dataset):
        out = str(dataset["dir"] / "ssp.csv")
        code = main([
            "score", "ssp", "--embeddings", dataset["emb"], "--clusters", "5",
            "--seed", "2", "--out", out,
        ])
        assert code == 0
        loaded = read_scores_csv(out)
        direct = ssp_scores(EmbeddingMatrix(dataset["x"]), KMeansParams(clusters=5, seed=2))
        assert loaded.values.tobytes() == direct.values.tobytes()


class TestBaseline:
    @pytest.mark.parametrize("method", ["random", "top_score", "moderate", "ccs"])
    def test_score_only_methods(self, dataset, method):
        out = str(dataset["dir"] / f"{method}.json")
        code = main([
            "baseline", "--method", method, "--scores", dataset["scores_csv"],
            "--budget", "9", "--out", out,
        ])
        assert code == 0
        doc = read_selection(out)
        assert len(doc["selected"]) == 9
        assert doc["params"]["method"] == method

    def test_k_center_needs_embeddings(self, dataset, capsys):
        code = main([
            "baseline", "--method", "k_center", "--scores", dataset["scores_csv"],
            "--budget", "5", "--out", str(dataset["dir"] / "kc.json"),
        ])
        assert code == 2
        assert "--embeddings" in capsys.readouterr().err

    def test_k_center_with_embeddings(self, dataset):
        out = str(dataset["dir"] / "kc.json")
        code = main([
            "baseline", "--method", "k_center", "--scores", dataset["scores_csv"],
            "--embeddings", dataset["emb"], "--budget", "5", "--out", out,
        ])
        assert code == 0
        assert len(read_selection(out)["selected"]) == 5

    def test_d2_needs_similarity(self, dataset, capsys):
        code = main([
            "baseline", "--method", "d2_greedy", "--scores", dataset["scores_csv"],
            "--budget", "5", "--out", str(dataset["dir"] / "d2.json"),
        ])
        assert code == 2
        assert "--similarity" in capsys.readouterr().err

    def test_d2_with_similarity_labels_approximation(self, dataset, rng):
        sim_path = str(dataset["dir"] / "sim.csv")
        write_similarity_csv(sim_path, random_symmetric_similarity(rng, 100))
        out = str(dataset["dir"] / "d2.json")
        code = main([
            "baseline", "--method", "d2_greedy", "--scores", dataset["scores_csv"],
            "--similarity", sim_path, "--gamma", "2.0", "--budget", "8", "--out", out,
        ])
        assert code == 0
        doc = read_selection(out)
        assert "approximation" in doc["params"]
        assert doc["params"]["gamma"] == 2.0


class TestOracle:
    def small_instance(self, tmp_path, n=12):
        r = np.random.default_rng(0)
        scores_path = str(tmp_path / "os.csv")
        sim_path = str(tmp_path / "osim.csv")
        write_scores_csv(scores_path, ScoreVector(r.random(n)))
        write_similarity_csv(sim_path, random_symmetric_similarity(r, n))
        return scores_path, sim_path

    def test_prints_json_selection(self, tmp_path, capsys):
        scores_path, sim_path = self.small_instance(tmp_path)
        code = main([
            "oracle", "--scores", scores_path, "--similarity", sim_path,
            "--budget", "3", "--alpha", "0.3",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["selected"]) == 3
        assert doc["selected"] == sorted(doc["selected"])

    def test_capacity_exit_3(self, tmp_path, capsys):
        scores_path, sim_path = self.small_instance(tmp_path, n=30)
        code = main([
            "oracle", "--scores", scores_path, "--similarity", sim_path,
            "--budget", "10",
        ])
        assert code == 3
        err = capsys.readouterr().err
        assert "kind=capacity" in err and re.search(r"C\(30, 10\)", err)


class TestEval:
    def test_writes_report_and_figures(self, dataset, capsys):
        sel = str(dataset["dir"] / "sel.json")
        assert main([
            "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
            "--budget", "12", "--out", sel,
        ]) == 0
        out = str(dataset["dir"] / "report.json")
        code = main([
            "eval", "--selection", sel, "--embeddings", dataset["emb"],
            "--scores", dataset["scores_csv"], "--out", out,
        ])
        assert code == 0
        doc = json.loads(open(out).read())
        assert sum(doc["score_histogram"]["counts"]) == 12
        assert doc["coverage_mean"] <= doc["coverage_max"]
        base = str(dataset["dir"] / "report")
        hist_csv = open(base + "_histogram.csv").read().splitlines()
        assert hist_csv[0] == "bin_lo,bin_hi,count"
        assert sum(int(l.split(",")[2]) for l in hist_csv[1:]) == 12
        for fig in (base + "_histogram.png", base + "_trace.png"):
            assert open(fig, "rb").read(8) == b"\x89PNG\r\n\x1a\n"

    def test_selection_for_other_dataset_exits_2(self, dataset, tmp_path, capsys):
        sel = str(dataset["dir"] / "sel.json")
        assert main([
            "select", "--embeddings", dataset["emb"], "--scores", dataset["scores_csv"],
            "--budget", "5", "--out", sel,
        ]) == 0
        small = tmp_path / "small"
        small.mkdir()
        emb2 = str(small / "emb.bin")
        sc2 = str(small / "s.csv")
        r = np.random.default_rng(1)
        write_embeddings(emb2, EmbeddingMatrix(r.normal(size=(3, 8)).astype(np.float32)))
        write_scores_csv(sc2, ScoreVector(r.random(3)))
        code = main([
            "eval", "--selection", sel, "--embeddings", emb2, "--scores", sc2,
            "--out", str(small / "rep.json"),
        ])
        assert code == 2
        assert "out of range" in capsys.readouterr().err


def test_module_entry_point(dataset):
    out = str(dataset["dir"] / "sel.json")
    proc = subprocess.run(
        [sys.executable, "-m", "coreselect", "select", "--embeddings", dataset["emb"],
         "--scores", dataset["scores_csv"], "--budget", "4", "--out", out],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(read_selection(out)["selected"]) == 4


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "coreselect 0.1.0" in capsys.readouterr().out
