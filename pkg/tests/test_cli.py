"""Tests for the grad-dr command line"""

import json
import logging

import numpy as np
import pytest

from modules.cli import main
from modules.datasets import save_csv, save_labels


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


@pytest.fixture
def swiss_roll(tmp_path, capsys):
    data = tmp_path / "roll.csv"
    code, _ = run_json(capsys, ["generate", "swiss-roll", "--n", "60", "--seed", "7", "--out", str(data)])
    assert code == 0
    return data


@pytest.fixture
def sphere(tmp_path, capsys):
    data = tmp_path / "sphere.csv"
    code, _ = run_json(capsys, ["generate", "sphere", "--n", "50", "--seed", "3", "--out", str(data)])
    assert code == 0
    return data


def two_clusters(tmp_path):
    rng = np.random.default_rng(5)
    psi = np.hstack([rng.normal(0.0, 0.1, size=(2, 15)), rng.normal(10.0, 0.1, size=(2, 15))])
    labels = np.repeat([0, 1], 15)
    save_csv(tmp_path / "emb.csv", psi)
    save_labels(tmp_path / "emb.labels", labels)
    return tmp_path / "emb.csv", tmp_path / "emb.labels"


class TestGenerate:
    def test_swiss_roll_files(self, tmp_path, capsys):
        out = tmp_path / "roll.csv"
        code, document = run_json(capsys, ["generate", "swiss-roll", "--n", "50", "--seed", "7",
                                           "--out", str(out)])
        assert code == 0
        assert document["shape"] == {"samples": 50, "features": 3}
        assert np.loadtxt(out, delimiter=",").shape == (50, 3)
        labels = (tmp_path / "roll.labels").read_text().split()
        assert len(labels) == 50

    def test_same_seed_same_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["generate", "trefoil", "--n", "30", "--seed", "2", "--out", str(path)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_two_manifolds(self, tmp_path, capsys):
        out = tmp_path / "pht.csv"
        code, document = run_json(capsys, ["generate", "plane-hole-trefoil", "--n1", "20", "--n2", "40",
                                           "--D", "10", "--out", str(out)])
        assert code == 0
        assert document["params"]["noise_sigma2"] == 0.01
        assert np.loadtxt(out, delimiter=",").shape == (60, 10)
        labels = np.loadtxt(tmp_path / "pht.labels", dtype=int)
        assert sorted(np.unique(labels).tolist()) == [0, 1]

    def test_missing_out_is_usage_error(self, capsys):
        assert main(["generate", "swiss-roll"]) == 2

    def test_invalid_hole(self, tmp_path, capsys):
        code = main(["generate", "plane-with-hole", "--n", "20", "--hole-radius", "7",
                     "--out", str(tmp_path / "p.csv")])
        assert code == 2

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "grad-dr" in capsys.readouterr().out


class TestEmbed:
    def test_kpca_writes_embedding_and_metadata(self, swiss_roll, tmp_path, capsys):
        out = tmp_path / "kpca.csv"
        code, document = run_json(capsys, ["embed", "--input", str(swiss_roll), "--out", str(out),
                                           "--method", "kpca", "--sigma2", "50"])
        assert code == 0
        assert document["method"] == "kpca"
        assert document["params"]["d"] == 2
        assert np.loadtxt(out, delimiter=",").shape == (60, 2)
        assert json.loads((tmp_path / "kpca.csv.json").read_text())["method"] == "kpca"
        assert document["knn_preservation"]["k"] == 10
        assert 0.0 <= document["knn_preservation"]["score"] <= 1.0

    def test_gkpca_without_regularization_matches_kpca(self, swiss_roll, tmp_path, capsys):
        kpca_out, gkpca_out = tmp_path / "kpca.csv", tmp_path / "gkpca.csv"
        assert main(["embed", "--input", str(swiss_roll), "--out", str(kpca_out),
                     "--method", "kpca", "--sigma2", "50"]) == 0
        assert main(["embed", "--input", str(swiss_roll), "--out", str(gkpca_out), "--method", "gkpca",
                     "--sigma2", "50", "--graph-source", "knn", "--graph-k", "5", "--gamma", "0"]) == 0
        capsys.readouterr()
        code, document = run_json(capsys, ["compare", "--a", str(kpca_out), "--b", str(gkpca_out)])
        assert code == 0
        assert document["same_subspace"] is True
        assert document["projector_distance"] <= 1e-8

    def test_gmkpca_with_dictionary(self, sphere, tmp_path, capsys):
        code, document = run_json(capsys, [
            "embed", "--input", str(sphere), "--out", str(tmp_path / "g.csv"), "--method", "gmkpca",
            "--dictionary", "3", "--graph-source", "knn", "--graph-k", "5",
            "--graph-kernel", "diffusion", "regularized_laplacian", "--gamma", "0.5"])
        assert code == 0
        theta = np.array(document["theta"])
        assert theta.shape == (3,)
        assert np.all(theta >= 0)
        assert np.linalg.norm(theta) == pytest.approx(1.0)
        assert len(document["beta"]) == 2

    def test_lneg_on_dense_graph(self, swiss_roll, tmp_path, capsys):
        out = tmp_path / "lneg.csv"
        code, document = run_json(capsys, ["embed", "--input", str(swiss_roll), "--out", str(out),
                                           "--method", "lneg", "--graph-source", "dense", "--k", "8",
                                           "--P", "2", "--gamma", "0.1"])
        assert code == 0
        assert document["params"]["P"] == 2
        psi = np.loadtxt(out, delimiter=",")
        assert psi.shape == (60, 2)
        assert np.all(np.isfinite(psi))

    def test_lneg_without_graph_uses_dense_correlation_graph(self, swiss_roll, tmp_path, capsys):
        out = tmp_path / "lneg.csv"
        code, document = run_json(capsys, ["embed", "--input", str(swiss_roll), "--out", str(out),
                                           "--method", "lneg", "--k", "20", "--P", "2", "--gamma", "0.1"])
        assert code == 0
        assert document["params"]["graph_source"] == "none"
        assert document["info"]["method"] == "lneg"
        assert np.loadtxt(out, delimiter=",").shape == (60, 2)

        dense = tmp_path / "dense.csv"
        assert main(["embed", "--input", str(swiss_roll), "--out", str(dense), "--method", "lneg",
                     "--graph-source", "dense", "--k", "20", "--P", "2", "--gamma", "0.1"]) == 0
        np.testing.assert_array_equal(np.loadtxt(out, delimiter=","), np.loadtxt(dense, delimiter=","))

    def test_rank_deficient_lle_is_solver_error(self, tmp_path, capsys):
        data = tmp_path / "line.csv"
        data.write_text("0\n1\n2\n")
        assert main(["embed", "--input", str(data), "--out", str(tmp_path / "x.csv"),
                     "--method", "lle", "--k", "2", "--d", "2"]) == 4

    def test_malformed_csv_is_data_error(self, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("1,2\n3,oops\n")
        assert main(["embed", "--input", str(data), "--out", str(tmp_path / "x.csv")]) == 3

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        assert main(["embed", "--input", str(tmp_path / "nonexistent.csv"), "--out", str(tmp_path / "x.csv")]) == 3
        assert "Cannot read" in capsys.readouterr().err

    def test_missing_labels_is_data_error(self, swiss_roll, tmp_path, capsys):
        assert main(["embed", "--input", str(swiss_roll), "--out", str(tmp_path / "x.csv"), "--method", "pca",
                     "--labels", str(tmp_path / "absent.labels")]) == 3

    def test_command_line_overrides_config_file(self, swiss_roll, tmp_path, capsys):
        config = tmp_path / "run.conf"
        config.write_text("experiment.method = pca\nexperiment.d = 1\n")
        code, document = run_json(capsys, ["--config", str(config), "embed", "--input", str(swiss_roll),
                                           "--out", str(tmp_path / "a.csv")])
        assert code == 0
        assert document["method"] == "pca"
        assert document["params"]["d"] == 1

        code, document = run_json(capsys, ["--config", str(config), "embed", "--input", str(swiss_roll),
                                           "--out", str(tmp_path / "b.csv"), "--d", "2"])
        assert code == 0
        assert document["params"]["d"] == 2
        assert np.loadtxt(tmp_path / "b.csv", delimiter=",").shape == (60, 2)

    def test_unknown_config_key_is_a_warning(self, swiss_roll, tmp_path, capsys):
        config = tmp_path / "run.conf"
        config.write_text("experiment.method = pca\nfoo.bar = 1\n")
        code = main(["--config", str(config), "embed", "--input", str(swiss_roll),
                     "--out", str(tmp_path / "a.csv")])
        assert code == 0
        assert "Unknown configuration key: foo.bar" in capsys.readouterr().err

    def test_missing_config_file(self, swiss_roll, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "nope.conf"), "embed", "--input", str(swiss_roll),
                     "--out", str(tmp_path / "a.csv")]) == 2

    def test_create_missing_config_file(self, swiss_roll, tmp_path, capsys):
        config = tmp_path / "fresh.conf"
        code, document = run_json(capsys, ["--config", str(config), "--create-config", "embed",
                                           "--input", str(swiss_roll), "--out", str(tmp_path / "a.csv")])
        assert code == 0
        assert document["method"] == "kpca"
        assert "experiment.method=kpca" in config.read_text().splitlines()

    def test_saved_config_reproduces_the_run(self, swiss_roll, tmp_path, capsys):
        resolved = tmp_path / "resolved.conf"
        code, first = run_json(capsys, ["embed", "--input", str(swiss_roll), "--out", str(tmp_path / "a.csv"),
                                        "--method", "kpca", "--sigma2", "50", "--d", "3",
                                        "--save-config", str(resolved)])
        assert code == 0
        assert first["config_file"] == str(resolved)
        code, second = run_json(capsys, ["--config", str(resolved), "embed", "--input", str(swiss_roll),
                                         "--out", str(tmp_path / "b.csv")])
        assert code == 0
        assert second["params"] == first["params"]
        np.testing.assert_array_equal(np.loadtxt(tmp_path / "a.csv", delimiter=","),
                                      np.loadtxt(tmp_path / "b.csv", delimiter=","))

    def test_dump_plot_data(self, swiss_roll, tmp_path, capsys):
        plot = tmp_path / "plot.csv"
        code, document = run_json(capsys, ["embed", "--input", str(swiss_roll), "--out", str(tmp_path / "e.csv"),
                                           "--method", "pca", "--labels", str(tmp_path / "roll.labels"),
                                           "--dump-plot-data", str(plot)])
        assert code == 0
        assert document["plot_data"] == str(plot)
        lines = plot.read_text().splitlines()
        assert lines[0] == "x,y,label"
        assert len(lines) == 61


class TestEval:
    def test_cluster_separated(self, tmp_path, capsys):
        emb, labels = two_clusters(tmp_path)
        code, document = run_json(capsys, ["eval", "--embedding", str(emb), "--labels", str(labels),
                                           "--task", "cluster", "--trials", "2"])
        assert code == 0
        assert document["mean"] == 0.0
        assert document["std"] == 0.0
        assert document["failures"] == 0
        assert [t["seed"] for t in document["per_trial"]] == [0, 1]

    def test_classify_separated(self, tmp_path, capsys):
        emb, labels = two_clusters(tmp_path)
        code, document = run_json(capsys, ["eval", "--embedding", str(emb), "--labels", str(labels),
                                           "--task", "classify"])
        assert code == 0
        assert document["mean"] == 0.0

    def test_label_count_mismatch(self, tmp_path, capsys):
        emb, _ = two_clusters(tmp_path)
        short = tmp_path / "short.labels"
        save_labels(short, [0, 1, 0])
        assert main(["eval", "--embedding", str(emb), "--labels", str(short)]) == 3

    def test_cluster_needs_labels(self, tmp_path, capsys):
        emb, _ = two_clusters(tmp_path)
        assert main(["eval", "--embedding", str(emb), "--task", "cluster"]) == 2

    def test_knn_preserve_of_identity_embedding(self, swiss_roll, capsys):
        code, document = run_json(capsys, ["eval", "--embedding", str(swiss_roll), "--data", str(swiss_roll),
                                           "--task", "knn-preserve", "--k", "5"])
        assert code == 0
        assert document["mean"] == 1.0

    def test_trials_default_from_config(self, tmp_path, capsys):
        emb, labels = two_clusters(tmp_path)
        config = tmp_path / "run.conf"
        config.write_text("experiment.trials = 3\n")
        code, document = run_json(capsys, ["--config", str(config), "eval", "--embedding", str(emb),
                                           "--labels", str(labels)])
        assert code == 0
        assert len(document["per_trial"]) == 3
        assert document["params"]["trials"] == 3

    def test_report_written_to_file(self, tmp_path, capsys):
        emb, labels = two_clusters(tmp_path)
        report = tmp_path / "report.json"
        assert main(["eval", "--embedding", str(emb), "--labels", str(labels), "--out", str(report)]) == 0
        assert json.loads(report.read_text())["command"] == "eval"


class TestCompare:
    def test_sign_flip_is_same_subspace(self, tmp_path, capsys):
        psi = np.random.default_rng(1).standard_normal((2, 20))
        save_csv(tmp_path / "a.csv", psi)
        save_csv(tmp_path / "b.csv", -psi[::-1])
        code, document = run_json(capsys, ["compare", "--a", str(tmp_path / "a.csv"),
                                           "--b", str(tmp_path / "b.csv")])
        assert code == 0
        assert document["same_subspace"] is True

    def test_sample_count_mismatch(self, tmp_path, capsys):
        save_csv(tmp_path / "a.csv", np.ones((2, 5)))
        save_csv(tmp_path / "b.csv", np.ones((2, 6)))
        assert main(["compare", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv")]) == 3


class TestRepro:
    def test_semisupervised_trend_reports_bands(self, capsys):
        code, document = run_json(capsys, ["repro", "semisup", "--trials", "2"])
        assert code == 0
        assert document["command"] == "repro"
        assert len(document["per_trial"]) == 2
        assert len(document["bands"]) == 2
        assert isinstance(document["passed"], bool)

    @pytest.mark.parametrize("argv, pipeline, expected", [
        (["table3", "--trials", "3", "--ks", "5", "10"], "manifold_clustering",
         {"trials": 3, "ks": [5, 10], "restarts": 10}),
        (["table3"], "manifold_clustering", {"trials": 10, "ks": [5, 10, 20, 30, 40]}),
        (["classification", "--trials", "2", "--ds", "2", "4"], "kernel_classification",
         {"trials": 2, "ds": [2, 4]}),
        (["kernel-clustering"], "kernel_clustering", {"trials": 10, "ds": [2, 4, 6, 8, 10], "restarts": 50}),
    ])
    def test_targets_forward_their_options(self, monkeypatch, capsys, argv, pipeline, expected):
        calls = []

        def fake(**kwargs):
            calls.append(kwargs)
            return {"experiment": pipeline, "passed": True}

        monkeypatch.setattr(f"modules.cli.{pipeline}", fake)
        code, document = run_json(capsys, ["repro"] + argv)
        assert code == 0
        assert document == {"command": "repro", "experiment": pipeline, "passed": True}
        assert len(calls) == 1
        assert {key: calls[0][key] for key in expected} == expected

    def test_unknown_target_is_usage_error(self, capsys):
        assert main(["repro", "table9"]) == 2


class TestLogging:
    def test_log_file_from_config(self, swiss_roll, tmp_path, capsys):
        log = tmp_path / "run.log"
        config = tmp_path / "run.conf"
        config.write_text(f"logging.file = {log}\n")
        assert main(["--config", str(config), "embed", "--input", str(swiss_roll),
                     "--out", str(tmp_path / "a.csv"), "--method", "pca"]) == 0
        assert "Running pca" in log.read_text()

    def test_stdout_is_pure_json(self, swiss_roll, tmp_path, capsys):
        assert main(["-v", "embed", "--input", str(swiss_roll), "--out", str(tmp_path / "a.csv"),
                     "--method", "pca"]) == 0
        captured = capsys.readouterr()
        assert json.loads(captured.out)["method"] == "pca"
        assert "DEBUG" in captured.err or "INFO" in captured.err
