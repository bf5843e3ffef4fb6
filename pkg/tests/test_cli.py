import json

import numpy as np
import pytest

from hessball import PowerSystemSpec, SystemSpec
from hessball.cli import ConfigError, load_config, main, run_scenario

MULT_TERMS = [[[0.1, 0.0, 0.5], [0.1, 0.0, 3.0]]] * 2


def write_config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def uniqueness_config(tmp_path, **overrides):
    data = {
        "scenario": "uniqueness",
        "N": 2,
        "k": [1, 1],
        "gamma": [0.5, 0.5],
        "M": 301,
        "starts": 3,
        "points": 16,
        "seed": 4,
    }
    data.update(overrides)
    return write_config(tmp_path, "uniq.json", data)


class TestLoadConfig:
    def test_power_system(self, tmp_path):
        cfg = load_config(uniqueness_config(tmp_path))
        assert isinstance(cfg.spec, PowerSystemSpec)
        assert cfg.M == 301 and cfg.starts == 3 and cfg.seed == 4

    def test_terms_system(self, tmp_path):
        path = write_config(
            tmp_path,
            "t.json",
            {"scenario": "existence", "N": 2, "k": [1, 1], "terms": MULT_TERMS},
        )
        cfg = load_config(path)
        assert isinstance(cfg.spec, SystemSpec)
        assert cfg.spec.f[0].terms == ((0.1, 0.0, 0.5), (0.1, 0.0, 3.0))

    def test_unknown_keys_ignored(self, tmp_path):
        cfg = load_config(uniqueness_config(tmp_path, comment="hello"))
        assert cfg.scenario == "uniqueness"

    def test_lambda_table(self, tmp_path):
        path = write_config(
            tmp_path,
            "l.json",
            {
                "scenario": "eigenvalue",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "lambda": [[33.4, 1.0], [1.0, 33.4]],
            },
        )
        assert load_config(path).lambdas == ((33.4, 1.0), (1.0, 33.4))

    @pytest.mark.parametrize(
        "broken",
        [
            {},
            {"scenario": "levitation", "N": 2, "k": [1, 1], "gamma": [1, 1]},
            {"scenario": "existence", "N": 2, "k": [1, 1]},
            {
                "scenario": "existence",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "terms": MULT_TERMS,
            },
            {"scenario": "existence", "k": [1, 1], "gamma": [1, 1]},
            {"scenario": "existence", "N": 2, "k": [1, 1], "gamma": [1, 1], "M": 5},
            {
                "scenario": "existence",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "tol": -1.0,
            },
            {
                "scenario": "existence",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "starts": 0,
            },
            {
                "scenario": "existence",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "lambda": [["many", 1.0]],
            },
        ],
        ids=[
            "no-scenario",
            "unknown-scenario",
            "no-system",
            "gamma-and-terms",
            "missing-N",
            "tiny-grid",
            "bad-tol",
            "no-starts",
            "bad-lambda",
        ],
    )
    def test_rejected_configs(self, tmp_path, broken):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, "bad.json", broken))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "nope.json"))


class TestExitCodes:
    def test_uniqueness_succeeds(self, tmp_path):
        code = main(
            ["run", uniqueness_config(tmp_path), "--out", str(tmp_path / "out"), "--quiet"]
        )
        assert code == 0
        report = (tmp_path / "out" / "report.jsonl").read_text().splitlines()
        first = json.loads(report[0])
        assert first["kind"] == "run_config"
        kinds = {json.loads(line)["kind"] for line in report}
        assert "multi_start_agreement" in kinds
        assert "sublinearity" in kinds
        assert (tmp_path / "out" / "solution_1.csv").exists()

    def test_nonexistence_succeeds(self, tmp_path):
        path = write_config(
            tmp_path,
            "n.json",
            {
                "scenario": "nonexistence",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "M": 301,
                "points": 16,
                "seed": 4,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 0

    def test_nonexistence_needs_critical_ratio(self, tmp_path):
        path = write_config(
            tmp_path,
            "n.json",
            {
                "scenario": "nonexistence",
                "N": 2,
                "k": [1, 1],
                "gamma": [0.5, 0.5],
                "M": 301,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 3

    def test_uniqueness_needs_sublinear_ratio(self, tmp_path):
        path = uniqueness_config(tmp_path, gamma=[1, 1])
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 3

    def test_multiplicity_succeeds(self, tmp_path):
        path = write_config(
            tmp_path,
            "m.json",
            {
                "scenario": "multiplicity",
                "N": 2,
                "k": [1, 1],
                "terms": MULT_TERMS,
                "M": 301,
                "r0": 1.0,
                "r_min": 1e-4,
                "r_max": 1e4,
                "points": 48,
            },
        )
        out = tmp_path / "out"
        assert main(["run", path, "--out", str(out), "--quiet"]) == 0
        # the two verified roots land in separate CSVs
        assert (out / "solution_1.csv").exists()
        assert (out / "solution_2.csv").exists()

    def test_multiplicity_needs_an_anchor(self, tmp_path):
        path = write_config(
            tmp_path,
            "m.json",
            {
                "scenario": "multiplicity",
                "N": 2,
                "k": [1, 1],
                "terms": MULT_TERMS,
                "M": 301,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 2

    def test_multiplicity_unmet_threshold(self, tmp_path):
        path = write_config(
            tmp_path,
            "m.json",
            {
                "scenario": "multiplicity",
                "N": 2,
                "k": [1, 1],
                "terms": MULT_TERMS,
                "M": 301,
                "r0": 1e-4,
                "r_min": 1e-4,
                "r_max": 1e4,
                "points": 48,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 3

    def test_eigenvalue_succeeds(self, tmp_path):
        path = write_config(
            tmp_path,
            "e.json",
            {
                "scenario": "eigenvalue",
                "N": 2,
                "k": [1, 1],
                "gamma": [1, 1],
                "M": 301,
                "starts": 2,
                "lambda": [[33.4452, 1.0]],
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 0

    def test_eigenvalue_needs_critical_ratio(self, tmp_path):
        path = write_config(
            tmp_path,
            "e.json",
            {
                "scenario": "eigenvalue",
                "N": 2,
                "k": [1, 1],
                "gamma": [2, 2],
                "M": 301,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 3

    def test_bounds_succeeds(self, tmp_path):
        path = write_config(
            tmp_path,
            "b.json",
            {
                "scenario": "bounds",
                "N": 3,
                "k": [2, 1],
                "gamma": [1.0, 1.5],
                "M": 301,
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "out"), "--quiet"]) == 0

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.json")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_grid_override_is_validated(self, tmp_path):
        path = uniqueness_config(tmp_path)
        code = main(["run", path, "--out", str(tmp_path / "out"), "--grid", "5"])
        assert code == 2

    def test_no_arguments_is_a_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestVerifyScenario:
    def _solved_csv(self, tmp_path):
        out = tmp_path / "solve_out"
        main(["run", uniqueness_config(tmp_path), "--out", str(out), "--quiet"])
        return out / "solution_1.csv"

    def test_round_trip(self, tmp_path):
        csv = self._solved_csv(tmp_path)
        path = write_config(
            tmp_path,
            "v.json",
            {
                "scenario": "verify",
                "N": 2,
                "k": [1, 1],
                "gamma": [0.5, 0.5],
                "solution_csv": str(csv),
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "vout"), "--quiet"]) == 0

    def test_corrupted_profile_fails(self, tmp_path):
        csv = self._solved_csv(tmp_path)
        data = np.loadtxt(csv, delimiter=",", skiprows=1)
        data[150, 1] += 0.05
        tampered = tmp_path / "tampered.csv"
        np.savetxt(
            tampered, data, fmt="%.17g", delimiter=",", header="t,v_1,v_2", comments=""
        )
        path = write_config(
            tmp_path,
            "v.json",
            {
                "scenario": "verify",
                "N": 2,
                "k": [1, 1],
                "gamma": [0.5, 0.5],
                "solution_csv": str(tampered),
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "vout"), "--quiet"]) == 4

    def test_column_count_checked(self, tmp_path):
        csv = self._solved_csv(tmp_path)
        path = write_config(
            tmp_path,
            "v.json",
            {
                "scenario": "verify",
                "N": 3,
                "k": [1, 1, 1],
                "gamma": [0.5, 0.5, 0.5],
                "solution_csv": str(csv),
            },
        )
        assert main(["run", path, "--out", str(tmp_path / "vout"), "--quiet"]) == 2

    def test_solution_csv_required(self, tmp_path):
        path = write_config(
            tmp_path,
            "v.json",
            {"scenario": "verify", "N": 2, "k": [1, 1], "gamma": [0.5, 0.5]},
        )
        assert main(["run", path, "--out", str(tmp_path / "vout"), "--quiet"]) == 2


class TestReportOutput:
    def test_runs_are_deterministic(self, tmp_path):
        path = uniqueness_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", path, "--out", str(out1), "--quiet"]) == 0
        assert main(["run", path, "--out", str(out2), "--quiet"]) == 0
        assert (out1 / "report.jsonl").read_bytes() == (out2 / "report.jsonl").read_bytes()
        assert (out1 / "solution_1.csv").read_bytes() == (
            out2 / "solution_1.csv"
        ).read_bytes()

    def test_quiet_suppresses_progress(self, tmp_path, capsys):
        main(["run", uniqueness_config(tmp_path), "--out", str(tmp_path / "o"), "--quiet"])
        assert capsys.readouterr().out == ""

    def test_progress_lines_name_each_check(self, tmp_path, capsys):
        main(["run", uniqueness_config(tmp_path), "--out", str(tmp_path / "o")])
        lines = capsys.readouterr().out.splitlines()
        assert any(line.startswith("multi_start_agreement: pass") for line in lines)
        assert any(line.startswith("report:") for line in lines)

    def test_run_scenario_api(self, tmp_path):
        cfg = load_config(uniqueness_config(tmp_path))
        code = run_scenario(cfg, out_dir=tmp_path / "api_out", quiet=True)
        assert code == 0
        lines = (tmp_path / "api_out" / "report.jsonl").read_text().splitlines()
        for line in lines:
            rec = json.loads(line)
            assert set(rec) == {"kind", "scenario", "M", "values", "tolerances", "pass"}
