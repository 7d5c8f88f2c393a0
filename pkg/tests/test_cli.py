"""Command-line behavior: round trips, headers, exit codes, determinism."""

import pytest

from polytree_lingam import __version__, load_model
from polytree_lingam.cli import EXIT_DATA, EXIT_DEGENERATE, EXIT_OK, main
from polytree_lingam.errors import DegeneracyError


def run(args):
    return main(list(args))


@pytest.fixture
def generated(tmp_path):
    model = tmp_path / "model.txt"
    data = tmp_path / "data.csv"
    code = run([
        "generate", "--p", "12", "--n", "4000", "--error", "gamma",
        "--seed", "7", "--out-model", str(model), "--out-data", str(data),
    ])
    assert code == EXIT_OK
    return model, data


class TestGenerate:
    def test_reproducible_byte_for_byte(self, tmp_path, monkeypatch):
        # identical invocation in two working directories -> identical bytes
        dirs = []
        for tag in ("a", "b"):
            workdir = tmp_path / tag
            workdir.mkdir()
            monkeypatch.chdir(workdir)
            assert run([
                "generate", "--p", "6", "--n", "50", "--error", "uniform",
                "--seed", "3", "--out-model", "model.txt", "--out-data", "data.csv",
            ]) == EXIT_OK
            dirs.append(workdir)
        assert (dirs[0] / "model.txt").read_text() == (dirs[1] / "model.txt").read_text()
        assert (dirs[0] / "data.csv").read_text() == (dirs[1] / "data.csv").read_text()

    def test_p_one_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["generate", "--p", "1", "--n", "10"])
        assert err.value.code == 2

    def test_gauss_fraction_forces_gaussian_nodes(self, tmp_path):
        model_path = tmp_path / "m.txt"
        assert run([
            "generate", "--p", "10", "--n", "20", "--error", "uniform",
            "--gauss-fraction", "0.5", "--seed", "1",
            "--out-model", str(model_path), "--out-data", str(tmp_path / "d.csv"),
        ]) == EXIT_OK
        model = load_model(model_path)
        gaussian_nodes = sum(
            1
            for v in range(model.p)
            if model.error_cumulant(v, 3) == 0.0 and model.error_cumulant(v, 4) == 0.0
        )
        assert gaussian_nodes == 5

    def test_header_records_invocation(self, generated):
        model, data = generated
        head = model.read_text().splitlines()[:2]
        assert "invocation: polytree-lingam generate" in head[0]
        assert f"version: {__version__}" in head[1]
        assert data.read_text().startswith("# invocation: polytree-lingam generate")


class TestLearn:
    def test_learn_recovers_generated_model(self, generated, tmp_path, capsys):
        model, data = generated
        out = tmp_path / "learned.txt"
        assert run([
            "learn", str(data), "--algorithm", "pairwise", "--K", "3", "--out", str(out),
        ]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "phase seconds" in printed

        truth = load_model(model)
        learned_edges = set()
        for line in out.read_text().splitlines():
            if line.startswith("#"):
                continue
            u, v, tag = line.split()
            learned_edges.add((int(u), int(v)))
            assert tag == "rank-test"
        assert learned_edges == set(truth.edges)

    def test_unsupported_order_is_usage_error(self, generated):
        _, data = generated
        with pytest.raises(SystemExit) as err:
            run(["learn", str(data), "--K", "5"])
        assert err.value.code == 2

    def test_auto_threshold_recorded(self, generated, tmp_path):
        _, data = generated
        out = tmp_path / "learned_pto.txt"
        assert run([
            "learn", str(data), "--algorithm", "pto", "--out", str(out),
        ]) == EXIT_OK
        header = [l for l in out.read_text().splitlines() if l.startswith("#")]
        assert any("threshold:" in line for line in header)

    def test_threshold_grid_needs_truth(self, generated):
        _, data = generated
        assert run([
            "learn", str(data), "--algorithm", "pto", "--threshold-grid", "0.05:0.15:0.05",
        ]) == EXIT_DATA

    def test_threshold_grid_with_truth(self, generated, tmp_path):
        model, data = generated
        out = tmp_path / "grid.txt"
        assert run([
            "learn", str(data), "--algorithm", "tpo",
            "--threshold-grid", "0.05:0.25:0.1", "--truth", str(model),
            "--out", str(out), "--json", str(tmp_path / "grid.json"),
        ]) == EXIT_OK
        assert (tmp_path / "grid.json").exists()

    def test_missing_file_is_data_error(self):
        assert run(["learn", "/nonexistent/data.csv"]) == EXIT_DATA

    def test_too_few_samples(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("1.0,2.0\n2.0,1.0\n3.0,4.0\n")
        assert run(["learn", str(path), "--K", "3"]) == EXIT_DATA


class TestEval:
    def test_perfect_recovery_scores_zero(self, generated, tmp_path, capsys):
        model, data = generated
        learned = tmp_path / "learned.txt"
        assert run(["learn", str(data), "--out", str(learned)]) == EXIT_OK
        capsys.readouterr()
        assert run(["eval", "--truth", str(model), "--learned", str(learned)]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "normalized SHD: 0" in printed


class TestOracle:
    def test_generic_model_report(self, generated, capsys):
        model, _ = generated
        assert run(["oracle", str(model), "--K", "3"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "all edges generic; all three algorithms recover the true polytree" in printed
        assert "valid correlation-threshold interval" in printed

    def test_empty_interval_reported(self, tmp_path, capsys):
        # a zero-coefficient edge drives the weakest edge correlation to
        # zero; the oracle must name the empty interval instead of crashing
        model_path = tmp_path / "weak.txt"
        model_path.write_text(
            "3 3\n0 1 0.6\n1 2 0.0\n"
            "0 2 1.0\n0 3 1.0\n1 2 1.0\n1 3 1.0\n2 2 1.0\n2 3 1.0\n"
        )
        assert run(["oracle", str(model_path), "--K", "3"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "empty threshold interval" in printed
        assert "NOT generic" in printed  # the zero-coefficient edge

    def test_gaussian_model_not_generic(self, tmp_path, capsys):
        model_path = tmp_path / "gauss.txt"
        assert run([
            "generate", "--p", "5", "--n", "10", "--error", "gaussian",
            "--seed", "2", "--out-model", str(model_path),
            "--out-data", str(tmp_path / "d.csv"),
        ]) == EXIT_OK
        capsys.readouterr()
        assert run(["oracle", str(model_path), "--K", "3"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "NOT generic" in printed
        assert "degenerate" in printed


class TestExperimentCommand:
    def test_bundled_config_with_overrides(self, tmp_path, capsys):
        out = tmp_path / "results.csv"
        assert run([
            "experiment", "--config", "low-dim-gamma", "--out", str(out),
            "--p", "6", "--ratios", "10", "--replicates", "2",
            "--algorithms", "pairwise", "--threshold-grid", "0.05,0.2",
        ]) == EXIT_OK
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "algorithm,p,n,K,errorFamily,gaussFraction,threshold,replicate,shd,skeletonErrors,orientationErrors,seconds"
        assert len(lines) == 3  # header + 2 replicates

    def test_unknown_config_is_data_error(self, tmp_path):
        assert run([
            "experiment", "--config", "does-not-exist", "--out", str(tmp_path / "r.csv"),
        ]) == EXIT_DATA

    def test_empty_config_is_usage_error(self, tmp_path):
        empty = tmp_path / "empty.cfg"
        empty.write_text("# nothing here\n")
        assert run([
            "experiment", "--config", str(empty), "--out", str(tmp_path / "r.csv"),
        ]) == 2


class TestExitCodes:
    def test_degeneracy_maps_to_four(self, monkeypatch, generated):
        _, data = generated
        import polytree_lingam.cli as cli

        def explode(args):
            raise DegeneracyError("forced")

        monkeypatch.setattr(cli, "cmd_learn", explode)
        parser_default = main(["learn", str(data)])
        assert parser_default == EXIT_DEGENERATE
