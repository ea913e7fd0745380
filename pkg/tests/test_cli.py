"""Command line front end: flags, reports, exit codes, reproducibility."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from thetanorm.cli import main
from thetanorm.torus import tau_from_json


def run_cli(args):
    return main(list(args))


class TestSampleTau:
    def test_writes_valid_tau(self, tmp_path):
        out = tmp_path / "tau.json"
        assert run_cli(["sample-tau", "--g", "2", "--seed", "42", "--out", str(out)]) == 0
        obj = json.loads(out.read_text())
        tau = tau_from_json(obj)
        assert tau.g == 2
        assert np.abs(tau.tau - tau.tau.T).max() < 1e-12

    def test_deterministic_files(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        run_cli(["sample-tau", "--g", "2", "--seed", "42", "--out", str(a)])
        run_cli(["sample-tau", "--g", "2", "--seed", "42", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_g_exits_one(self, tmp_path):
        assert run_cli(["sample-tau", "--g", "0", "--out", str(tmp_path / "x.json")]) == 1

    def test_usage_error_exits_one(self, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli(["sample-tau"])  # missing --g
        assert err.value.code == 1


class TestCheck:
    def test_degree_two_not_normal(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(
            ["check", "--g", "1", "--type", "2", "--seed", "1", "--r", "2",
             "--out", str(out)]
        )
        assert code == 0  # a negative verdict is still a verdict
        report = json.loads(out.read_text())
        assert report["bound"] == {"lhs": 2, "rhs": 2, "holds": False}
        assert report["two_normal"] is False
        assert report["rank"] == {
            "value": 3,
            "expected": 4,
            "margin": report["rank"]["margin"],
            "stable": True,
        }
        assert report["dim_I2"] == 0
        assert report["genericity_assumed"] is True
        assert report["model"] == "standard"

    def test_type_1_9_normal(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(
            ["check", "--g", "2", "--type", "1,9", "--seed", "11", "--r", "2,3",
             "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["bound"]["holds"] is True
        assert report["two_normal"] is True
        assert report["r_normal"] == {"2": True, "3": True}
        assert report["dim_I2"] == 9
        assert report["rank"]["value"] == 36
        assert len(report["blocks"]) == 9
        assert all(b["rank"] == 4 and b["expected"] == 4 for b in report["blocks"])
        assert report["kummer_span"] == [True] * 9

    def test_type_2_4_negative_control(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli(
            ["check", "--g", "2", "--type", "2,4", "--seed", "5", "--r", "2",
             "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["two_normal"] is False
        assert report["rank"]["value"] < 32

    def test_tau_file_input(self, tmp_path):
        tau_path = tmp_path / "tau.json"
        run_cli(["sample-tau", "--g", "1", "--seed", "3", "--out", str(tau_path)])
        out = tmp_path / "report.json"
        code = run_cli(
            ["check", "--g", "1", "--type", "3", "--tau", str(tau_path),
             "--seed", "9", "--r", "2", "--out", str(out)]
        )
        assert code == 0
        assert json.loads(out.read_text())["two_normal"] is True

    def test_malformed_tau_file(self, tmp_path):
        bad = tmp_path / "tau.json"
        bad.write_text('{"g": 2, "re": [[0, 0], [0, 0]]\n')
        code = run_cli(
            ["check", "--g", "2", "--type", "1,9", "--tau", str(bad), "--out",
             str(tmp_path / "r.json")]
        )
        assert code == 1

    def test_type_length_mismatch(self, tmp_path):
        code = run_cli(
            ["check", "--g", "2", "--type", "3", "--out", str(tmp_path / "r.json")]
        )
        assert code == 1

    def test_json_stream_to_stdout(self, capsys):
        code = run_cli(["check", "--g", "1", "--type", "3", "--seed", "2",
                        "--r", "2", "--json", "-"])
        assert code == 0
        out = capsys.readouterr().out
        payload = out[: out.rindex("}") + 1]
        start = payload.index("{")
        report = json.loads(payload[start:])
        assert report["two_normal"] is True


class TestSpan:
    def test_order3_spans_level2(self, tmp_path):
        out = tmp_path / "span.json"
        code = run_cli(
            ["span", "--g", "1", "--level", "2", "--subgroup", "1/3",
             "--seed", "1", "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["spanning"] is True
        assert report["subgroup_order"] == 3
        assert report["bound"] == {"order": 3, "threshold": 2, "in_hypothesis": True}

    def test_order2_out_of_hypothesis(self, tmp_path):
        out = tmp_path / "span.json"
        code = run_cli(
            ["span", "--g", "1", "--level", "2", "--subgroup", "1/2",
             "--seed", "1", "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["bound"]["in_hypothesis"] is False

    def test_dual_subgroup_mode(self, tmp_path):
        out = tmp_path / "span.json"
        code = run_cli(
            ["span", "--g", "2", "--type", "1,9", "--subgroup-dual",
             "--seed", "11", "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["mode"] == "dual"
        assert len(report["blocks"]) == 9
        assert all(b["spanning"] for b in report["blocks"])

    def test_non_rational_generator_rejected(self, tmp_path):
        code = run_cli(
            ["span", "--g", "1", "--level", "2", "--subgroup", "0.333",
             "--out", str(tmp_path / "s.json")]
        )
        assert code == 1

    def test_missing_subgroup_rejected(self, tmp_path):
        code = run_cli(["span", "--g", "1", "--out", str(tmp_path / "s.json")])
        assert code == 1


class TestReproducibility:
    def test_reports_byte_identical_across_processes(self, tmp_path):
        paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
        for path in paths:
            proc = subprocess.run(
                [sys.executable, "-m", "thetanorm.cli", "check", "--g", "1",
                 "--type", "4", "--seed", "7", "--r", "2,3", "--out", str(path)],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
        assert paths[0].read_bytes() == paths[1].read_bytes()
