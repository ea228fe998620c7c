"""
Tests for the command-line runner: manifests, CSV schemas, exit codes,
figures and byte-level reproducibility.
"""

import json

import numpy as np
import pytest

from dkglab.cli import main


def _run(tmp_path, *argv):
    return main([*argv, "--outdir", str(tmp_path), "--label", "t"])


class TestVerifyAlgebra:
    def test_default_passes(self, tmp_path):
        code = _run(tmp_path, "verify-algebra", "--samples", "20000")
        assert code == 0
        run = tmp_path / "verify-algebra" / "t"
        manifest = json.loads((run / "manifest.json").read_text())
        assert manifest["command"] == "verify-algebra"
        header = (run / "algebra.csv").read_text().splitlines()[0]
        assert header == "check,samples,max_violation,tolerance,passed"
        assert (run / "algebra.png").exists()

    def test_broken_rep_fails(self, tmp_path):
        assert _run(tmp_path, "verify-algebra", "--rep", "beta-identity") == 1


class TestSharpness:
    def test_boundary_point_passes(self, tmp_path):
        code = _run(tmp_path, "sharpness", "--family", "R3", "--s", "0.5",
                    "--r", "1.5", "--L", "8,16,32")
        assert code == 0
        run = tmp_path / "sharpness" / "t"
        header = (run / "scaling.csv").read_text().splitlines()[0]
        assert header == "family,s,r,L,lhs,rhs,ratio,fitted_slope,predicted_slope,pass"
        assert (run / "scaling.png").exists()

    def test_reproducible_bytes(self, tmp_path):
        _run(tmp_path / "a", "sharpness", "--family", "S", "--s", "0.0", "--r", "0.5",
             "--L", "8,16,32")
        _run(tmp_path / "b", "sharpness", "--family", "S", "--s", "0.0", "--r", "0.5",
             "--L", "8,16,32")
        a = (tmp_path / "a" / "sharpness" / "t" / "scaling.csv").read_bytes()
        b = (tmp_path / "b" / "sharpness" / "t" / "scaling.csv").read_bytes()
        assert a == b


class TestStrichartz:
    def test_scale_mode(self, tmp_path):
        code = _run(tmp_path, "strichartz", "--mode", "scale", "--scales", "2,4",
                    "--n-time", "12")
        assert code == 0

    def test_violate_mode(self, tmp_path):
        code = _run(tmp_path, "strichartz", "--mode", "violate", "--q", "4",
                    "--s1", "-0.125", "--s2", "-0.125", "--s3", "1.0",
                    "--scales", "2,4,8", "--n-time", "12")
        assert code == 0

    def test_square_mode(self, tmp_path):
        code = _run(tmp_path, "strichartz", "--mode", "square", "--lam", "16",
                    "--mus", "2,4,16", "--q", "8", "--n-time", "12")
        assert code == 0

    def test_endpoint_recorded_not_judged(self, tmp_path, capsys):
        code = _run(tmp_path, "strichartz", "--mode", "scale", "--q", "4",
                    "--s1", "0.125", "--s2", "0.125", "--s3", "0.5",
                    "--scales", "2,4", "--n-time", "8")
        assert code == 0
        assert "recorded, not judged" in capsys.readouterr().out


class TestHHScan:
    def test_small_scan(self, tmp_path):
        code = _run(tmp_path, "hh-scan", "--lambdas", "4,8,16,32,64")
        assert code == 0
        run = tmp_path / "hh-scan" / "t"
        header = (run / "hh_scan.csv").read_text().splitlines()[0]
        assert header == "lam,ratio_same,ratio_opposite"


class TestSolve:
    def test_smooth_run(self, tmp_path):
        code = _run(tmp_path, "solve", "--n", "48", "--box", "12", "--dt", "0.05",
                    "--T", "0.2")
        assert code == 0
        run = tmp_path / "solve" / "t"
        lines = (run / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "time,charge,psi_hs,phi_hr,phi_t_hrm1"
        assert len(lines) == 2 + round(0.2 / 0.05)
        assert (run / "final_state.dkgs").exists()
        assert (run / "trajectory.png").exists()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning", "ignore::UserWarning")
    def test_manifest_written_before_compute(self, tmp_path):
        # a run that aborts numerically still leaves a manifest
        code = _run(tmp_path, "solve", "--n", "8", "--box", "1e-6", "--dt", "1e6",
                    "--T", "2e6", "--amp", "1e12")
        assert code in (1, 3)
        assert (tmp_path / "solve" / "t" / "manifest.json").exists()


class TestPicard:
    def test_contraction_run(self, tmp_path, capsys):
        code = _run(tmp_path, "picard", "--n", "12", "--dt", "0.05", "--T", "0.2",
                    "--depth", "5", "--outside")
        assert code == 0
        out = capsys.readouterr().out
        assert "report only, outside point" in out
        run = tmp_path / "picard" / "t"
        header = (run / "picard.csv").read_text().splitlines()[0]
        assert header == "point,s,r,j,d_psi,ratio"


class TestZheng:
    def test_direction_table(self, tmp_path):
        code = _run(tmp_path, "zheng", "--sigmas", "0.5,0.9", "--base-n", "16",
                    "--refinements", "1")
        run = tmp_path / "zheng" / "t"
        assert (run / "zheng.csv").exists()
        assert (run / "zheng.png").exists()
        assert code in (0, 1)  # direction verdicts at toy resolution may be indeterminate


class TestRegion:
    @pytest.mark.parametrize(
        "s,r,expected",
        [(0.0, 0.5, "inside"), (-0.2, 0.3, "outside"), (0.5, 1.0, "inside")],
    )
    def test_examples(self, tmp_path, capsys, s, r, expected):
        code = _run(tmp_path, "region", "--s", str(s), "--r", str(r))
        assert code == 0
        out = capsys.readouterr().out
        assert expected in out


class TestConfigFile:
    def test_config_defaults_and_cli_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("s = 0.0\nr = 0.75\n")
        code = main(["region", "--config", str(cfg), "--outdir", str(tmp_path),
                     "--label", "t"])
        assert code == 0
        row = (tmp_path / "region" / "t" / "region.csv").read_text().splitlines()[1]
        assert row.startswith("0.0,0.75,boundary")

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nonsense_key = 3\n")
        with pytest.raises(SystemExit) as exc:
            main(["region", "--s", "0", "--r", "0.5", "--config", str(cfg)])
        assert exc.value.code == 2
