"""Exit codes, payload shapes, and reproducibility of the command line."""
import json
import subprocess
import sys

import pytest

from chaincert.cli import main


def run_json(args, tmp_path, name="out.json"):
    path = tmp_path / name
    code = main([*args, "--out", str(path)])
    return code, json.loads(path.read_text(encoding="utf-8"))


class TestVerifyDiscrete:
    def test_passes_on_small_lattice(self, tmp_path):
        code, payload = run_json(
            ["verify-discrete", "--sizes", "3", "--laws", "5", "--pairs", "2"],
            tmp_path,
        )
        assert code == 0
        assert payload["check"] == "cocycle-chain-rule"
        assert payload["passed"] is True
        assert payload["structures"]["3"]["ok"] is True
        assert payload["report"]["passed"] is True

    def test_corrupt_functional_fails(self, tmp_path):
        code, payload = run_json(
            ["verify-discrete", "--sizes", "3", "--laws", "5", "--pairs", "2",
             "--corrupt"],
            tmp_path,
        )
        assert code == 1
        assert payload["passed"] is False

    def test_bad_sizes_are_rejected(self, tmp_path):
        assert main(["verify-discrete", "--sizes", "1"]) == 2
        assert main(["verify-discrete", "--sizes", "three"]) == 2


class TestVerifyGaussian:
    def test_passes(self, tmp_path):
        code, payload = run_json(
            ["verify-gaussian", "--trials", "10", "--max-dim", "3"],
            tmp_path,
        )
        assert code == 0
        assert payload["passed"] is True
        assert payload["structure"]["ok"] is True

    def test_density_rule_mismatch_fails(self, tmp_path):
        code, payload = run_json(
            ["verify-gaussian", "--trials", "5", "--max-dim", "2",
             "--abc", "1,1,0", "--budget", "20000"],
            tmp_path,
        )
        assert code == 1
        assert payload["mixed_density_rule"]["passed"] is False
        assert payload["passed"] is False

    def test_density_rule_half_b_passes(self, tmp_path):
        code, payload = run_json(
            ["verify-gaussian", "--trials", "5", "--max-dim", "2",
             "--abc", "0.5,1,0", "--budget", "20000"],
            tmp_path,
        )
        assert code == 0
        assert payload["mixed_density_rule"]["passed"] is True

    def test_abc_needs_three_numbers(self):
        assert main(["verify-gaussian", "--trials", "2", "--abc", "1,1"]) == 2


class TestMixtureIdentity:
    def test_passes(self, tmp_path):
        code, payload = run_json(
            ["mixture-identity", "--count", "3", "--budget", "8000",
             "--seed", "42"],
            tmp_path,
        )
        assert code == 0
        assert payload["check"] == "two-route-mixture"
        assert payload["two_route"]["passed"] is True
        assert payload["integrated"]["passed"] is True

    def test_single_component_suite(self, tmp_path):
        code, payload = run_json(
            ["mixture-identity", "--count", "3", "--kmax", "1",
             "--budget", "5000"],
            tmp_path,
        )
        assert code == 0
        assert payload["two_route"]["max_residual"] <= 1e-9

    def test_budget_floor(self):
        assert main(["mixture-identity", "--count", "2", "--budget", "10"]) == 2

    def test_malformed_abc(self):
        assert main(["mixture-identity", "--abc", "a,b,c"]) == 2


class TestKdeConverge:
    def test_slopes_emitted_and_pass(self, tmp_path):
        code, payload = run_json(
            ["kde-converge", "--ns", "50,120,280,800,2000", "--budget", "4000"],
            tmp_path,
        )
        assert code == 0
        assert payload["check"] == "kde-slope"
        assert len(payload["slopes"]) == 3
        assert all(s["passed"] for s in payload["slopes"])
        assert payload["bandwidth"]["h_to_zero"] is True
        assert len(payload["rows"]) == 5

    def test_const_bandwidth_skips_slopes(self, tmp_path):
        code, payload = run_json(
            ["kde-converge", "--ns", "50,120,280,800", "--budget", "2000",
             "--bandwidth", "const:0.5"],
            tmp_path,
        )
        assert code == 0
        assert payload["slopes"] == []
        assert payload["slopes_skipped"] == "bandwidth does not shrink"
        assert payload["passed"] is True

    def test_short_schedule_skips_slopes(self, tmp_path):
        code, payload = run_json(
            ["kde-converge", "--ns", "50,200", "--budget", "2000"],
            tmp_path,
        )
        assert code == 0
        assert payload["slopes_skipped"] == "fewer than 4 distinct bandwidths"

    def test_malformed_inputs(self):
        assert main(["kde-converge", "--ns", "ten,twenty"]) == 2
        assert main(["kde-converge", "--bandwidth", "banana"]) == 2
        assert main(["kde-converge", "--ns", "1,100,200,400"]) == 2


class TestSolveNullspace:
    def test_small_lattice(self, tmp_path):
        code, payload = run_json(
            ["solve-nullspace", "--set-size", "3", "--denominator", "3"],
            tmp_path,
        )
        assert code == 0
        assert payload["check"] == "nullspace-entropy"
        assert payload["report"]["dimension"] == 2
        assert payload["report"]["entropy_residual"] <= 1e-9

    def test_cap_exhaustion(self):
        assert main(["solve-nullspace", "--set-size", "4", "--denominator", "4",
                     "--cap", "5"]) == 3


class TestOutputPlumbing:
    def test_stdout_default(self, capsys):
        code = main(["kde-converge", "--ns", "50,200", "--budget", "1000"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["check"] == "kde-slope"

    def test_dash_means_stdout(self, capsys):
        code = main(["solve-nullspace", "--set-size", "3", "--denominator", "2",
                     "--out", "-"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["check"] == "nullspace-entropy"

    def test_csv_format(self, tmp_path):
        path = tmp_path / "rows.csv"
        code = main(["kde-converge", "--ns", "50,120,280,800", "--budget",
                     "2000", "--out", str(path), "--format", "csv"])
        assert code == 0
        lines = path.read_text(encoding="utf-8").splitlines()
        assert "n" in lines[0].split(",")
        assert len(lines) == 5

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_console_entry_point(self, tmp_path):
        path = tmp_path / "cli.json"
        proc = subprocess.run(
            [sys.executable, "-m", "chaincert", "solve-nullspace",
             "--set-size", "3", "--denominator", "2", "--out", str(path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(path.read_text(encoding="utf-8"))["passed"] is True


class TestReproducibility:
    CASES = {
        "discrete": ["verify-discrete", "--sizes", "3", "--laws", "4",
                     "--pairs", "2"],
        "gaussian": ["verify-gaussian", "--trials", "5", "--max-dim", "3"],
        "mixture": ["mixture-identity", "--count", "2", "--budget", "5000"],
        "kde": ["kde-converge", "--ns", "50,120,280,800", "--budget", "2000"],
        "nullspace": ["solve-nullspace", "--set-size", "3", "--denominator", "3"],
    }

    @pytest.mark.parametrize("label", sorted(CASES))
    def test_byte_identical_reruns(self, label, tmp_path):
        args = self.CASES[label]
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        assert main([*args, "--out", str(first)]) == 0
        assert main([*args, "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
