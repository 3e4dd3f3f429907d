import json
from pathlib import Path

import numpy as np
import pytest

from lvmzoo.cli import main
from lvmzoo.errors import DataError
from lvmzoo.numerics import RngStream
from lvmzoo.zoo import FA, PPCA, dump_spec, sample_lvm
from lvmzoo.zoo.io import atomic_write, csv_text, read_csv, write_csv, write_sample

REPO = Path(__file__).resolve().parents[1]
RUNS = sorted((REPO / "configs" / "runs").glob("*.json"))


def _files(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(Path(directory).rglob("*")) if p.is_file()}


@pytest.fixture
def in_repo(monkeypatch):
    monkeypatch.chdir(REPO)


def _write_spec(tmp_path, spec, name="spec.json"):
    path = tmp_path / name
    dump_spec(spec, path)
    return str(path)


class TestCsv:
    def test_round_trip_exact(self, tmp_path, rng):
        X = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-8, 8, (50, 3))
        write_csv(tmp_path / "x.csv", X, ["a", "b", "c"])
        np.testing.assert_array_equal(read_csv(tmp_path / "x.csv").observations, X)

    def test_sample_round_trip(self, tmp_path):
        spec = FA(W=[[1.0], [0.5], [0.2]], sigma2=[1.0, 0.5, 0.1])
        batch = sample_lvm(spec, 200, RngStream(3))
        obs, lat, side = write_sample(batch, tmp_path, spec)
        np.testing.assert_allclose(read_csv(obs).observations, batch.observations, rtol=0, atol=1e-12)
        np.testing.assert_allclose(read_csv(lat).observations, batch.latents, rtol=0, atol=1e-12)
        meta = json.loads(side.read_text())
        assert meta["seed"] == 3 and meta["fingerprint"] == spec.fingerprint() and meta["model"] == "fa"

    def test_headerless(self, tmp_path):
        (tmp_path / "d.csv").write_text("1,2\n3,4\n")
        np.testing.assert_array_equal(read_csv(tmp_path / "d.csv").observations, [[1, 2], [3, 4]])

    @pytest.mark.parametrize("text, row, column", [
        ("a,b\n1,2\n3,x\n", 3, 2),
        ("a,b\n1,2\n3\n", 3, None),
        ("1,nan\n", 1, 2),
    ])
    def test_error_location(self, tmp_path, text, row, column):
        (tmp_path / "d.csv").write_text(text)
        with pytest.raises(DataError) as info:
            read_csv(tmp_path / "d.csv")
        assert info.value.row == row and info.value.column == column
        assert str(info.value).startswith(f"row {row}")

    @pytest.mark.parametrize("text", ["", "\n\n", "a,b\n"])
    def test_empty(self, tmp_path, text):
        (tmp_path / "d.csv").write_text(text)
        with pytest.raises(DataError):
            read_csv(tmp_path / "d.csv")

    def test_header_width_checked(self):
        with pytest.raises(ValueError):
            csv_text(np.zeros((2, 2)), ["a"])

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        atomic_write(tmp_path / "sub" / "f.txt", "hello")
        assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]


class TestSimulate:
    def test_fa(self, tmp_path, in_repo):
        args = ["simulate", "--spec", "configs/specs/fa.json", "--n", "1000", "--seed", "7"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        first = _files(tmp_path / "a")
        assert first == _files(tmp_path / "b")
        assert len(first["observations.csv"].decode().splitlines()) == 1001

    def test_tobit_zeros(self, tmp_path, in_repo):
        assert main(["simulate", "--spec", "configs/specs/tobit.json", "--n", "500", "--seed", "1",
                     "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "observations.csv").read_text().splitlines()
        assert lines[0] == "y"
        assert "0" in lines[1:]

    def test_dlgm_layer_dims(self, tmp_path, in_repo):
        assert main(["simulate", "--spec", "configs/specs/dlgm_two_layer.json", "--n", "10", "--seed", "1",
                     "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "sample.json").read_text())
        assert meta["meta"]["layer_dims"] == [3, 2] and meta["latent_dim"] == 5

    def test_invalid_spec(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"model": "fa", "W": [[1.0], [1.0]], "sigma2": [1.0, -1.0]}))
        assert main(["simulate", "--spec", str(path), "--n", "5", "--seed", "1", "--out", str(tmp_path)]) == 2
        assert "sigma2" in capsys.readouterr().err

    def test_missing_flags(self, capsys):
        assert main(["simulate", "--n", "5"]) == 2
        assert "--spec" in capsys.readouterr().err

    def test_no_command(self):
        assert main([]) == 2


class TestFit:
    def test_ppca_end_to_end(self, tmp_path):
        spec = PPCA(W=[[2.0, 0.0], [0.0, 1.5], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], sigma2=0.4)
        spec_path = _write_spec(tmp_path, spec)
        assert main(["simulate", "--spec", spec_path, "--n", "20000", "--seed", "2", "--out", str(tmp_path / "s")]) == 0
        assert main(["fit", "--data", str(tmp_path / "s" / "observations.csv"), "--model", "ppca",
                     "--latent-dim", "2", "--out", str(tmp_path / "f")]) == 0
        fit = json.loads((tmp_path / "f" / "fit.json").read_text())
        assert abs(fit["params"]["sigma2"] - 0.4) / 0.4 < 0.05
        assert fit["spec"]["model"] == "ppca"

    def test_cca_groups_from_sidecar(self, tmp_path, in_repo):
        assert main(["simulate", "--spec", "configs/specs/cca_one_factor.json", "--n", "2000", "--seed", "3",
                     "--out", str(tmp_path)]) == 0
        assert main(["fit", "--data", str(tmp_path / "observations.csv"), "--model", "cca", "--latent-dim", "1",
                     "--out", str(tmp_path)]) == 0
        fit = json.loads((tmp_path / "fit.json").read_text())
        assert fit["diagnostics"]["cross_covariance_rank"] == 1

    def test_dirichlet_prior_flag(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("y\n1\n1\n2\n")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "dirichlet_categorical",
                     "--prior", "1,1,1"]) == 0
        out = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(out["params"]["predictive"], [0.5, 1 / 3, 1 / 6])

    def test_dirichlet_count_rows(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("c1,c2,c3\n1,0,0\n1,1,0\n")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "dirichlet_categorical"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["params"]["posterior"] == [3.0, 2.0, 1.0]

    def test_dirichlet_prior_width_mismatch(self, tmp_path):
        (tmp_path / "d.csv").write_text("1,0\n0,1\n")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "dirichlet_categorical",
                     "--prior", "1,1,1"]) == 2

    def test_non_numeric_cell(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("y1,y2\n1,2\n3,oops\n")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "fa", "--latent-dim", "1"]) == 2
        assert "row 3, column 2" in capsys.readouterr().err

    def test_empty_file(self, tmp_path):
        (tmp_path / "d.csv").write_text("")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "fa", "--latent-dim", "1"]) == 2

    def test_unsupported_model(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("1,2\n3,4\n")
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "lisrel"]) == 2
        err = capsys.readouterr().err
        assert "supported pairs" in err and "ppca-mle" in err

    def test_numerical_failure_exit_code(self, tmp_path, capsys, rng):
        x = rng.standard_normal((200, 1))
        write_csv(tmp_path / "d.csv", np.hstack([x, x, rng.standard_normal((200, 2))]), ["a", "b", "c", "d"])
        assert main(["fit", "--data", str(tmp_path / "d.csv"), "--model", "cca", "--latent-dim", "1",
                     "--groups", "2,2"]) == 1
        assert "regularize" in capsys.readouterr().err


class TestReports:
    def test_implied_moments(self, tmp_path, capsys):
        path = _write_spec(tmp_path, FA(W=[[1.0], [1.0]], sigma2=[1.0, 1.0]))
        assert main(["implied-moments", "--spec", path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["covariance"] == [[2.0, 1.0], [1.0, 2.0]]

    def test_check_reduction_ppca_fa(self, tmp_path, in_repo):
        out = tmp_path / "r.json"
        assert main(["check-reduction", "--from", "configs/specs/ppca.json", "--to", "configs/specs/fa_isotropic.json",
                     "--output", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["holds"] and report["max_deviation"] == 0.0

    def test_check_reduction_full_noise(self, tmp_path, in_repo, capsys):
        assert main(["check-reduction", "--from", "configs/specs/cca_full.json",
                     "--to", "configs/specs/fa_for_cca_full.json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert not report["holds"] and "noise not diagonal" in report["failures"]


class TestReplicate:
    def test_single_rep_equals_single_run(self, tmp_path, in_repo):
        assert main(["replicate", "--spec", "configs/specs/airy.json", "--estimator", "airy-anova", "--reps", "1",
                     "--seed", "4", "--n", "500", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "replicate.json").read_text())
        run = report["replications"][0]
        assert report["mean"] == {k: v for k, v in run.items() if k != "seed"}
        assert all(v == 0.0 for v in report["standard_error"].values())

    def test_workers_do_not_change_output(self, tmp_path, in_repo):
        base = ["replicate", "--spec", "configs/specs/fa.json", "--estimator", "fa-em", "--reps", "4", "--seed", "1",
                "--n", "500"]
        assert main(base + ["--out", str(tmp_path / "a")]) == 0
        assert main(base + ["--workers", "3", "--out", str(tmp_path / "b")]) == 0
        assert _files(tmp_path / "a") == _files(tmp_path / "b")

    def test_estimator_model_mismatch(self, in_repo, capsys):
        assert main(["replicate", "--spec", "configs/specs/airy.json", "--estimator", "fa-em", "--reps", "2",
                     "--seed", "1", "--n", "100"]) == 2
        assert "supported pairs" in capsys.readouterr().err

    def test_zero_reps(self, in_repo):
        assert main(["replicate", "--spec", "configs/specs/airy.json", "--estimator", "airy-anova", "--reps", "0",
                     "--seed", "1", "--n", "100"]) == 2


class TestConfig:
    def test_flags_override_config(self, tmp_path, in_repo):
        assert main(["--config", "configs/runs/simulate_fa.json", "--out", str(tmp_path), "--n", "20"]) == 0
        assert len((tmp_path / "observations.csv").read_text().splitlines()) == 21

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"command": "implied-moments", "spec": "x.json", "colour": "red"}))
        assert main(["--config", str(cfg)]) == 2
        assert "colour" in capsys.readouterr().err

    def test_config_paths_relative_to_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["--config", str(REPO / "configs" / "runs" / "reduction_ppca_fa.json"),
                     "--output", "r.json"]) == 0
        assert json.loads((tmp_path / "r.json").read_text())["holds"]

    def test_bad_json(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{")
        assert main(["--config", str(cfg)]) == 2

    @pytest.mark.parametrize("config", RUNS, ids=lambda p: p.stem)
    def test_run_configs_are_deterministic(self, tmp_path, config):
        data = json.loads(config.read_text())
        extra = ["--reps", "3"] if data["command"] == "replicate" else []
        if "out" in data:
            a, b = ["--out", str(tmp_path / "a")], ["--out", str(tmp_path / "b")]
        else:
            a, b = ["--output", str(tmp_path / "a" / "r.json")], ["--output", str(tmp_path / "b" / "r.json")]
        assert main(["--config", str(config)] + extra + a) == 0
        assert main(["--config", str(config)] + extra + b) == 0
        first = _files(tmp_path / "a")
        assert first and first == _files(tmp_path / "b")
