import csv
from pathlib import Path

import pytest
import yaml

from ghzcast.bitvec import BitVector
from ghzcast.cli import (
    EXIT_ABORT,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_USAGE,
    ScenarioError,
    load_scenario_file,
    main,
    resolve_scenario_path,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def write_scenario(tmp_path: Path, text: str, name: str = "case.yaml") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadScenario:
    def test_full_document(self, tmp_path):
        path = write_scenario(
            tmp_path,
            """
            n: 3
            pivs: ["010", "101"]
            d: 9
            noise_p: 0.05
            threshold_fraction: 0.25
            seed: 13
            trials: 250
            eve:
              strategy: measure_resend
              basis_policy: random_basis
              k: 2
              targets: [0, 1]
            """,
        )
        scenario, trials = load_scenario_file(path)
        assert scenario.n == 3
        assert scenario.secrets == (
            BitVector.from_text("010"),
            BitVector.from_text("101"),
        )
        assert scenario.resolved_d == 9
        assert scenario.noise_p == 0.05
        assert scenario.threshold_fraction == 0.25
        assert scenario.seed == 13
        assert trials == 250
        assert scenario.eve.tag == "measure_resend"
        assert scenario.eve.k == 2
        assert scenario.eve.targets == (0, 1)

    def test_minimal_document_defaults(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"]\n')
        scenario, trials = load_scenario_file(path)
        assert scenario.resolved_d == 2
        assert scenario.noise_p == 0.0
        assert scenario.threshold_fraction == 0.125
        assert trials == 1000
        assert not scenario.eve.active

    def test_unknown_key(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"]\nshots: 5\n')
        with pytest.raises(ScenarioError, match="shots"):
            load_scenario_file(path)

    def test_unquoted_bit_string_is_rejected(self, tmp_path):
        # YAML reads a bare 010 as the octal integer 8
        path = write_scenario(tmp_path, "n: 2\npivs: [010]\n")
        with pytest.raises(ScenarioError, match="quoted bit string"):
            load_scenario_file(path)

    def test_non_binary_text(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["10a"]\n')
        with pytest.raises(ScenarioError, match="pivs\\[0\\]"):
            load_scenario_file(path)

    def test_missing_required_keys(self, tmp_path):
        with pytest.raises(ScenarioError, match="required"):
            load_scenario_file(write_scenario(tmp_path, "n: 2\n"))
        with pytest.raises(ScenarioError, match="required"):
            load_scenario_file(write_scenario(tmp_path, 'pivs: ["1"]\n'))

    def test_wrong_secret_count(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 4\npivs: ["1", "0"]\n')
        with pytest.raises(ScenarioError, match="secret"):
            load_scenario_file(path)

    def test_non_mapping_document(self, tmp_path):
        path = write_scenario(tmp_path, "- 1\n- 2\n")
        with pytest.raises(ScenarioError, match="mapping"):
            load_scenario_file(path)

    def test_yaml_syntax_error_reports_line(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"\n')
        with pytest.raises(ScenarioError, match="line"):
            load_scenario_file(path)

    def test_bad_trials(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"]\ntrials: 0\n')
        with pytest.raises(ScenarioError, match="trials"):
            load_scenario_file(path)

    def test_bad_eve_key(self, tmp_path):
        path = write_scenario(
            tmp_path, 'n: 2\npivs: ["11"]\neve: {strategy: measure_resend, kk: 2}\n'
        )
        with pytest.raises(ScenarioError, match="kk"):
            load_scenario_file(path)

    def test_unknown_strategy(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"]\neve: {strategy: sneaky}\n')
        with pytest.raises(ScenarioError, match="sneaky"):
            load_scenario_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario_file(tmp_path / "nope.yaml")


class TestPathResolution:
    def test_absolute_path_passes_through(self, tmp_path):
        path = write_scenario(tmp_path, 'n: 2\npivs: ["11"]\n')
        assert resolve_scenario_path(str(path)) == path

    def test_env_dir_fallback(self, tmp_path, monkeypatch):
        write_scenario(tmp_path, 'n: 2\npivs: ["11"]\n', name="host.yaml")
        monkeypatch.setenv("GHZCAST_SCENARIO_DIR", str(tmp_path))
        assert resolve_scenario_path("host.yaml") == tmp_path / "host.yaml"

    def test_existing_relative_path_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GHZCAST_SCENARIO_DIR", str(tmp_path))
        local = SCENARIO_DIR / "three_party.yaml"
        assert resolve_scenario_path(str(local)) == local


class TestRunCommand:
    def test_honest_run_report(self, capsys):
        code = main(["run", str(SCENARIO_DIR / "three_party.yaml")])
        assert code == EXIT_OK
        report = yaml.safe_load(capsys.readouterr().out)
        assert report["scenario"]["n"] == 3
        assert report["scenario"]["pivs"] == ["010", "101"]
        assert report["stages"][-1] == "recovery"
        assert report["validation"]["verdict"] == "pass"
        assert report["status"] == "ok"
        assert report["recovery"]["agent_0"]["recovered"] == "010"
        assert report["recovery"]["agent_1"]["recovered"] == "101"
        assert len(report["stream"]["decoy_positions"]) == 6
        assert report["message_counts"]["exchange"] == 4

    def test_report_is_deterministic(self, capsys):
        main(["run", str(SCENARIO_DIR / "three_party.yaml")])
        first = capsys.readouterr().out
        main(["run", str(SCENARIO_DIR / "three_party.yaml")])
        assert capsys.readouterr().out == first

    def test_seed_override_changes_report(self, capsys):
        main(["run", str(SCENARIO_DIR / "three_party.yaml")])
        base = yaml.safe_load(capsys.readouterr().out)
        main(["run", str(SCENARIO_DIR / "three_party.yaml"), "--seed", "99"])
        overridden = yaml.safe_load(capsys.readouterr().out)
        assert base["scenario"]["seed"] == 7
        assert overridden["scenario"]["seed"] == 99
        assert overridden["status"] == "ok"

    def test_interception_aborts(self, capsys):
        code = main(["run", str(SCENARIO_DIR / "measure_resend.yaml")])
        assert code == EXIT_ABORT
        report = yaml.safe_load(capsys.readouterr().out)
        assert report["validation"]["verdict"] == "fail"
        assert report["status"] == "aborted"
        assert report["stages"][-1] == "validation"
        assert "recovery" not in report

    def test_unchecked_replacement_corrupts_recovery(self, tmp_path, capsys):
        # without decoys the replacement attack goes unnoticed but the
        # delivered registers no longer fold onto the payload
        path = write_scenario(
            tmp_path,
            """
            n: 3
            pivs: ["010", "101"]
            d: 0
            seed: 5
            eve:
              strategy: intercept_replace
              k: 2
              targets: [0, 1]
            """,
        )
        code = main(["run", str(path)])
        assert code == EXIT_MISMATCH
        report = yaml.safe_load(capsys.readouterr().out)
        assert report["status"] == "recovery_mismatch"
        matches = [entry["match"] for entry in report["recovery"].values()]
        assert not all(matches)

    def test_missing_scenario_is_usage_error(self, capsys):
        code = main(["run", "/does/not/exist.yaml"])
        assert code == EXIT_USAGE
        assert "cannot read" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_no_arguments(self, capsys):
        assert main([]) == EXIT_USAGE


class TestExperimentCommand:
    def test_stats_document(self, capsys):
        code = main(
            [
                "experiment",
                str(SCENARIO_DIR / "three_party.yaml"),
                "--trials",
                "40",
            ]
        )
        assert code == EXIT_OK
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["trials"] == 40
        assert doc["abort"]["count"] == 0
        assert doc["decoy_checks"]["errors"] == 0
        assert doc["eve_guessing"]["bits"] == 240
        assert doc["secrecy_violations"] == 0

    def test_csv_output(self, tmp_path, capsys):
        out = tmp_path / "rows.csv"
        code = main(
            [
                "experiment",
                str(SCENARIO_DIR / "three_party.yaml"),
                "--trials",
                "25",
                "--output",
                str(out),
            ]
        )
        assert code == EXIT_OK
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 25
        assert set(rows[0]) == {
            "trial",
            "errors",
            "decoy_checks",
            "verdict",
            "eve_bit_accuracy",
        }
        assert all(r["verdict"] == "pass" for r in rows)


class TestDistributionCommand:
    def test_small_joint_distribution(self, tmp_path, capsys):
        path = write_scenario(tmp_path, 'n: 3\npivs: ["0", "1"]\nseed: 2\n')
        out = tmp_path / "dist.csv"
        code = main(["distribution", str(path), "--output", str(out)])
        assert code == EXIT_OK
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["oracle"] == "joint"
        assert doc["outcomes"] == 16
        assert doc["probability"]["min"] == pytest.approx(1 / 16)
        assert doc["probability"]["max"] == pytest.approx(1 / 16)
        assert len(doc["first_rows"]) == 5
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 16
        assert set(rows[0]) == {"outcome", "probability"}
        assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0)

    def test_medium_config_uses_factorized_oracle(self, tmp_path, capsys):
        # 24 qubits is past the joint cap, tuple-wise assembly still fits
        path = write_scenario(tmp_path, 'n: 4\npivs: ["10", "01", "11"]\n')
        code = main(["distribution", str(path)])
        assert code == EXIT_OK
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["oracle"] == "factorized"
        assert doc["outcomes"] == 1 << 18
        assert doc["probability"]["max"] == pytest.approx(2**-18)

    def test_oversize_config_suggests_sampling(self, capsys):
        code = main(["distribution", str(SCENARIO_DIR / "noisy_channel.yaml")])
        assert code == EXIT_USAGE
        assert "analytic sampling" in capsys.readouterr().err


def test_oracle_check_passes(capsys):
    assert main(["oracle-check"]) == EXIT_OK
    doc = yaml.safe_load(capsys.readouterr().out)
    assert doc["failures"] == 0
    assert all(check["status"] == "pass" for check in doc["checks"])
