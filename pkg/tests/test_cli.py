import json

import numpy as np
import pytest
import yaml
from pydantic import ValidationError

import gpcert.cli as cli
from gpcert.config import ExperimentConfig, asymptotics_defaults, load_config, synthetic_defaults
from gpcert.experiments import ExperimentResult, read_csv, run_asymptotics, trace_columns


def small_synthetic(out, **extra):
    cfg = synthetic_defaults(
        kernel={"signal_variance": 1.0, "lengthscales": [1.5, 1.5], "fit": False},
        training={"lower": [0.0, -3.0], "upper": [3.0, 3.0], "counts": [4, 4]},
        integrator={"dt": 0.01, "t_end": 1.0},
        bound_grid_points=12,
        output_dir=str(out),
        **extra,
    )
    return cfg.model_dump(mode="json", by_alias=True)


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if name.endswith(".json") else yaml.safe_dump(data))
    return str(path)


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"experiment": "synthetic", "typo_key": 1})

    def test_nested_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"gains": {"k_c": 1.0, "lambda": 1.0, "kd": 2}})

    @pytest.mark.parametrize("field,value", [("delta", 0.0), ("delta", 1.0), ("delta_l", -0.1), ("tau", 0.0), ("tau", float("inf"))])
    def test_bad_scalars(self, field, value):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({field: value})

    def test_bad_box_and_counts(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"domain": {"lower": [1.0], "upper": [0.0]}})
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"training": {"lower": [0.0], "upper": [1.0], "counts": [0]}})

    def test_lambda_alias(self):
        cfg = ExperimentConfig.model_validate({"gains": {"k_c": 2.0, "lambda": 0.5}})
        assert cfg.gains.lam == 0.5

    def test_digest_ignores_output_dir(self, tmp_path):
        a = ExperimentConfig.model_validate(small_synthetic(tmp_path / "a"))
        b = ExperimentConfig.model_validate(small_synthetic(tmp_path / "b"))
        assert a.digest() == b.digest()
        assert a.digest() != synthetic_defaults(seed=1).digest()

    def test_yaml_and_json_agree(self, tmp_path):
        data = small_synthetic(tmp_path)
        assert load_config(write_config(tmp_path, data)) == load_config(write_config(tmp_path, data, "cfg.json"))

    def test_non_mapping_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ValueError):
            load_config(path)


class TestExitCodes:
    def test_ok_and_files(self, tmp_path, capsys):
        out = tmp_path / "run"
        cfg = write_config(tmp_path, small_synthetic(out))
        code = cli.main(["simulate", "--config", cfg, "--no-plots"])
        assert code in (0, 1)
        names = {p.name for p in out.iterdir()}
        assert {"certificate.json", "trace.csv", "bound_grid.csv", "summary.json", "training_data.csv"} <= names
        assert not any(n.endswith(".svg") for n in names)

    def test_check_failure_is_one(self, monkeypatch, capsys):
        fake = ExperimentResult("fake", None, checks={"tracking_contained": False, "other": True})
        monkeypatch.setattr(cli, "run_synthetic", lambda cfg, out, plots_enabled=True: fake)
        assert cli.main(["repro-5.1"]) == 1
        assert "error: check failed: tracking_contained" in capsys.readouterr().err

    def test_stage_failure_is_three(self, tmp_path, capsys):
        bad = tmp_path / "data.csv"
        bad.write_text("a,b\n1,2\n")
        data = small_synthetic(tmp_path / "o", data_csv=str(bad))
        code = cli.main(["fit", "--config", write_config(tmp_path, data)])
        assert code == 3
        assert "stage 'data' failed" in capsys.readouterr().err

    def test_config_failure_is_three(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("experiment: synthetic\nunknown: 1\n")
        assert cli.main(["certify", "--config", str(path)]) == 3
        assert "stage 'config' failed" in capsys.readouterr().err

    def test_missing_config(self, capsys):
        assert cli.main(["certify"]) == 3

    def test_argument_error_is_two(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["repro-5.1", "--config", "x.yaml"])
        assert info.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["--version"])
        assert info.value.code == 0
        assert "gpcert" in capsys.readouterr().out


class TestSubcommands:
    def test_fit(self, tmp_path, capsys):
        data = small_synthetic(tmp_path / "o")
        data["kernel"]["fit"] = True
        data["kernel"]["n_starts"] = 2
        assert cli.main(["fit", "--config", write_config(tmp_path, data)]) == 0
        payload = json.loads((tmp_path / "o" / "kernel.json").read_text())
        assert payload["n_train"] == 16
        assert payload["manifest"]["config_hash"] == load_config(tmp_path / "cfg.yaml").digest()
        assert "log_marginal_likelihood" in payload

    def test_certify_runs_bound_check(self, tmp_path, capsys):
        cfg = write_config(tmp_path, small_synthetic(tmp_path / "o"))
        assert cli.main(["certify", "--config", cfg]) == 0
        manifest, header, rows = read_csv(tmp_path / "o" / "bound_grid.csv")
        assert rows.shape == (144, len(header))
        assert manifest["schema"]
        assert "beta=" in capsys.readouterr().out

    def test_lipschitz(self, tmp_path, capsys):
        cfg = write_config(tmp_path, small_synthetic(tmp_path / "o"))
        assert cli.main(["lipschitz", "--config", cfg]) == 0
        payload = json.loads((tmp_path / "o" / "lipschitz.json").read_text())
        assert payload["lipschitz"]["value"] > 0

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = write_config(tmp_path, small_synthetic(tmp_path / "o"))
        cli.main(["certify", "--config", cfg, "--seed", "5", "--out", str(tmp_path / "s5")])
        cert = json.loads((tmp_path / "s5" / "certificate.json").read_text())
        assert cert["manifest"]["seed"] == 5
        assert cert["manifest"]["config_hash"] != load_config(cfg).digest()


class TestArtifacts:
    @pytest.fixture(scope="class")
    @staticmethod
    def two_runs(tmp_path_factory):
        base = tmp_path_factory.mktemp("det")
        cfg = write_config(base, small_synthetic(base / "x"))
        for name in ("a", "b"):
            cli.main(["simulate", "--config", cfg, "--out", str(base / name)])
        return base / "a", base / "b"

    def test_byte_identical(self, two_runs):
        a, b = two_runs
        for name in ("trace.csv", "bound_grid.csv", "training_data.csv", "certificate.json", "lipschitz.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_every_file_has_manifest(self, two_runs):
        a, _ = two_runs
        for path in a.iterdir():
            text = path.read_text()
            if path.suffix == ".json":
                assert "config_hash" in json.loads(text)["manifest"], path.name
            elif path.suffix == ".csv":
                assert text.startswith("# manifest: "), path.name
            elif path.suffix == ".svg":
                assert text.startswith("<!-- manifest: "), path.name

    def test_trace_schema(self, two_runs):
        manifest, header, rows = read_csv(two_runs[0] / "trace.csv")
        assert header == trace_columns(2, 1)
        assert header[:3] == ["t", "x_1", "x_2"]
        assert manifest["schema"] == "gpcert.trace/v1"
        np.testing.assert_allclose(rows[:, 0], np.linspace(0, 1, 101), atol=1e-12)


def test_empty_schedule_writes_nothing(tmp_path):
    data = asymptotics_defaults().model_dump(mode="json", by_alias=True)
    data["asymptotics"]["schedule"] = []
    out = tmp_path / "asym"
    with pytest.raises(ValueError):
        run_asymptotics(ExperimentConfig.model_validate(data), out)
    assert not out.exists() or not any(out.iterdir())
