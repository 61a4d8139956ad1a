import hashlib
import json

import pytest

from kdeknn.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_STALLED, main
from kdeknn.config import build_config, read_config_file
from kdeknn.dataset import load_csv
from kdeknn.errors import ConfigError

SMALL = ["--n-per-class", "90", "40", "--external-n-per-class", "50", "50", "--n-features", "4"]


def data_files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.name != "manifest.json"}


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--out", str(out), "--seed", "3", *SMALL]) == EXIT_OK
    return out


class TestSimulate:
    def test_default_cohort_sizes(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path)]) == EXIT_OK
        assert load_csv(tmp_path / "cohort.csv").n_samples == 1275
        assert load_csv(tmp_path / "external.csv").n_samples == 2028
        assert "1275" in capsys.readouterr().out

    def test_manifest_hashes(self, cohort_dir):
        manifest = json.loads((cohort_dir / "manifest.json").read_text())
        for name, entry in manifest["files"].items():
            assert hashlib.sha256((cohort_dir / name).read_bytes()).hexdigest() == entry["sha256"]
        assert manifest["seed"] == 3
        assert manifest["specs"]["cohort"]["n_per_class"] == [90, 40]

    def test_rerun_is_byte_identical(self, cohort_dir, tmp_path):
        main(["simulate", "--out", str(tmp_path), "--seed", "3", *SMALL])
        assert data_files(tmp_path) == data_files(cohort_dir)

    def test_env_default_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KDEKNN_OUT", str(tmp_path / "env"))
        assert main(["simulate", *SMALL]) == EXIT_OK
        assert (tmp_path / "env" / "cohort.csv").exists()


class TestGenerate:
    def test_minimal_run(self, cohort_dir, tmp_path):
        code = main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--method", "kde-knn",
                     "--per-class", "1", "--out", str(tmp_path)])
        assert code == EXIT_OK
        ds = load_csv(tmp_path / "synthetic.csv")
        assert ds.n_samples == 2
        side = json.loads((tmp_path / "synthetic.json").read_text())
        assert side["counts"] == [1, 1]

    def test_raw_units_by_default(self, cohort_dir, tmp_path):
        main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--per-class", "200",
              "--out", str(tmp_path)])
        real = load_csv(cohort_dir / "cohort.csv").features.mean(axis=0)
        syn = load_csv(tmp_path / "synthetic.csv").features.mean(axis=0)
        assert abs(syn - real).max() < 0.5

    def test_threads_byte_identical(self, cohort_dir, tmp_path):
        for t in ("1", "4"):
            main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--per-class", "50",
                  "--threads", t, "--out", str(tmp_path / t)])
        assert data_files(tmp_path / "1") == data_files(tmp_path / "4")

    def test_missing_input_is_config_error(self, tmp_path):
        assert main(["generate", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_stall_exit_code(self, cohort_dir, tmp_path, capsys):
        code = main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--per-class", "50",
                     "--max-attempts", "100", "--out", str(tmp_path)])
        assert code == EXIT_STALLED
        assert "accepted" in capsys.readouterr().err

    def test_io_error_exit_code(self, cohort_dir, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--per-class", "1",
                     "--out", str(blocker / "sub")])
        assert code == EXIT_IO

    def test_json_format(self, cohort_dir, tmp_path, capsys):
        main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--per-class", "3",
              "--method", "smote", "--format", "json", "--out", str(tmp_path)])
        assert json.loads(capsys.readouterr().out)["method"] == "smote"


class TestPrivacy:
    def test_verdict_and_files(self, cohort_dir, tmp_path, capsys):
        for m in ("smote", "kde-knn"):
            main(["generate", "--input", str(cohort_dir / "cohort.csv"), "--method", m,
                  "--per-class", "60", "--out", str(tmp_path / m)])
        capsys.readouterr()
        code = main(["privacy", "--real", str(cohort_dir / "cohort.csv"), "--out", str(tmp_path / "p"),
                     "--synthetic", f"smote={tmp_path / 'smote' / 'synthetic.csv'}",
                     f"kde_knn={tmp_path / 'kde-knn' / 'synthetic.csv'}"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "real-real baseline" in out
        result = json.loads((tmp_path / "p" / "dcr.json").read_text())
        assert set(result["sets"]) == {"smote", "kde_knn"}
        assert result["verdict"] in out
        for name in ("baseline", "smote", "kde_knn"):
            assert (tmp_path / "p" / f"dcr_hist_{name}.csv").exists()

    def test_requires_synthetic(self, cohort_dir, tmp_path):
        assert main(["privacy", "--real", str(cohort_dir / "cohort.csv"), "--out", str(tmp_path)]) == EXIT_CONFIG


class TestExperiment:
    def test_experiment2_outputs(self, tmp_path, capsys):
        code = main(["experiment", "--which", "2", "--seeds", "0", "--models", "svm_linear",
                     "--methods", "kde_knn", "--per-class", "40", "--out", str(tmp_path), *SMALL])
        assert code == EXIT_OK
        for name in ("experiment2.json", "experiment2.txt", "experiment2_roc.csv", "manifest.json"):
            assert (tmp_path / name).exists()
        assert "KDE-KNN" in capsys.readouterr().out

    def test_experiment3_csv_format(self, tmp_path, capsys):
        code = main(["experiment", "--which", "3", "--seeds", "0", "--fractions", "100", "0",
                     "--models", "svm_linear", "--format", "csv", "--out", str(tmp_path), *SMALL])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("method,model,real_pct")
        assert len(lines) == 3

    def test_which_required(self, tmp_path):
        assert main(["experiment", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_input_needs_external(self, cohort_dir, tmp_path):
        code = main(["experiment", "--which", "1", "--input", str(cohort_dir / "cohort.csv"),
                     "--out", str(tmp_path)])
        assert code == EXIT_CONFIG

    def test_csv_inputs(self, cohort_dir, tmp_path):
        code = main(["experiment", "--which", "1", "--seeds", "0", "--models", "svm_linear",
                     "--input", str(cohort_dir / "cohort.csv"), "--external", str(cohort_dir / "external.csv"),
                     "--out", str(tmp_path)])
        assert code == EXIT_OK


class TestConfig:
    def test_flags_override_file(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nseed = 7\nthreads = 2\n\n[experiment]\nseeds = 1, 2\n")
        cfg = build_config(ini, {"seed": 9})
        assert cfg.seed == 9
        assert cfg.threads == 2
        assert cfg.seeds == (1, 2)
        assert cfg.sources == {"seed": "flag", "threads": "file", "seeds": "file"}

    def test_config_file_drives_cli(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text(f"[run]\nseed = 3\nout = {tmp_path / 'o'}\n\n[cohort]\nn_per_class = 90 40\n"
                       "external_n_per_class = 50 50\nn_features = 4\n")
        assert main(["simulate", "--config", str(ini)]) == EXIT_OK
        assert load_csv(tmp_path / "o" / "cohort.csv").n_samples == 130

    def test_unknown_option(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[run]\ncolour = blue\n")
        with pytest.raises(ConfigError):
            read_config_file(ini)

    def test_wrong_section(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[generate]\nseed = 1\n")
        with pytest.raises(ConfigError):
            read_config_file(ini)

    def test_bad_value_exit_code(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[run]\nthreads = many\n")
        assert main(["simulate", "--config", str(ini), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_empty_seeds(self):
        with pytest.raises(ConfigError):
            build_config(None, {"seeds": ()})
