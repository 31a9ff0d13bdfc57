"""Command line interface tests: outputs, manifests, config merge, exit codes."""

import hashlib
import json

import pytest
from click.testing import CliRunner

from cvot import cli, recon


@pytest.fixture()
def runner():
    return CliRunner()


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


class TestRate:
    def test_point_report(self, runner, tmp_path):
        out = tmp_path / "rate-report"
        res = runner.invoke(cli.main, ["rate", "--out", str(out)])
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert payload["ell"] == 44367          # benchmark operating point
        assert payload["rate"] == payload["ell"] / 2e5
        assert {"lam", "alpha", "n", "mu"} <= set(payload)
        assert json.loads((out / "rate.json").read_text()) == payload
        man = read_manifest(out)
        assert man["command"] == "rate"
        assert man["seed"] == 202400            # built-in default seed
        assert "out" not in man["params"]
        digest = hashlib.sha256((out / "rate.json").read_bytes()).hexdigest()
        assert man["outputs"]["rate.json"] == digest

    def test_code_rate_disclosure(self, runner):
        res = runner.invoke(cli.main, ["rate", "--code-rate", "0.94"])
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        # 4.36 bits/symbol disclosed is less than the synthetic 0.942-efficiency
        # figure, so the secure length can only grow
        assert payload["ell"] >= 44367

    def test_beta_and_code_rate_conflict(self, runner):
        res = runner.invoke(cli.main,
                            ["rate", "--beta", "0.9", "--code-rate", "0.94"])
        assert res.exit_code == 2

    def test_invalid_correlation(self, runner):
        res = runner.invoke(cli.main, ["rate", "--rho", "1.5"])
        assert res.exit_code == 2

    def test_infeasible_budget(self, runner):
        # 4 eps_cut at the default point is ~4.8e-10, so this budget cannot
        # cover the truncation smoothing and the point must be rejected
        res = runner.invoke(cli.main, ["rate", "--eps-a", "4e-10"])
        assert res.exit_code == 3

    def test_env_seed_lands_in_manifest(self, runner, tmp_path):
        out = tmp_path / "seeded"
        res = runner.invoke(cli.main, ["rate", "--out", str(out)],
                            env={"CVOT_SEED": "777"})
        assert res.exit_code == 0, res.output
        assert read_manifest(out)["seed"] == 777


class TestConfigMerge:
    def test_config_fills_defaults(self, runner, tmp_path):
        # delta from the file must reach the scheme: 0.2 clashes with the
        # default half-range 51.2, which only fits delta = 0.1 at 10 bits
        cfg = tmp_path / "point.cfg"
        cfg.write_text("delta = 0.2\n")
        res = runner.invoke(cli.main, ["rate", "--config", str(cfg)])
        assert res.exit_code == 2

    def test_explicit_flag_beats_config(self, runner, tmp_path):
        cfg = tmp_path / "point.cfg"
        cfg.write_text("delta = 0.2\n")
        res = runner.invoke(cli.main,
                            ["rate", "--config", str(cfg), "--delta", "0.1"])
        assert res.exit_code == 0, res.output
        assert json.loads(res.output)["ell"] == 44367

    def test_unknown_key_rejected(self, runner, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("detla = 0.1\n")
        res = runner.invoke(cli.main, ["rate", "--config", str(cfg)])
        assert res.exit_code == 2
        assert "unknown config keys" in res.output


class TestRegion:
    def test_tiny_sweep(self, runner, tmp_path):
        out = tmp_path / "region"
        res = runner.invoke(cli.main, ["region", "--mu-max", "0.06",
                                       "--mu-steps", "2", "--nus", "0.001",
                                       "--no-thresholds", "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "region.csv").read_text().splitlines()
        assert lines[0] == "nu,mu,rate,ell"
        assert len(lines) == 3
        rates = [float(line.split(",")[2]) for line in lines[1:]]
        assert rates[0] > rates[1] > 0.0        # loss can only hurt
        assert (out / "region.png").stat().st_size > 0
        man = read_manifest(out)
        assert set(man["outputs"]) == {"region.csv", "region.png"}


class TestBounds:
    def test_small_sweep(self, runner, tmp_path):
        out = tmp_path / "bounds"
        res = runner.invoke(cli.main, ["bounds", "--steps", "3", "--n", "1e6",
                                       "--delta-min", "0.1", "--delta-max", "0.5",
                                       "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "bounds.csv").read_text().splitlines()
        assert lines[0] == "delta,lambda_arbitrary,lambda_iid,lambda_gaussian"
        assert len(lines) == 4
        for line in lines[1:]:
            vals = [float(v) for v in line.split(",")]
            assert all(v >= 0.0 for v in vals)
        man = read_manifest(out)
        for name, digest in man["outputs"].items():
            actual = hashlib.sha256((out / name).read_bytes()).hexdigest()
            assert actual == digest


class TestProtocol:
    def test_full_session(self, runner, tmp_path):
        out = tmp_path / "proto"
        res = runner.invoke(cli.main, ["protocol", "--runs", "1", "--t", "1",
                                       "--seed", "5", "--out", str(out)])
        assert res.exit_code == 0, res.output
        summary = json.loads(res.output)
        assert summary["matched"] == 1
        lines = (out / "runs.csv").read_text().splitlines()
        row = lines[1].split(",")
        assert row[2] == row[3] == "done"
        assert int(row[8]) == 1                 # s_match column
        # the first queue run records its traffic: one frame per message
        tr = (out / "transcript.csv").read_text().splitlines()
        assert len(tr) == 5
        assert [line.split(",")[1] for line in tr[1:]] == ["send", "recv",
                                                           "send", "send"]
        assert read_manifest(out)["seed"] == 5

    def test_abort_exit_code(self, runner, tmp_path):
        out = tmp_path / "proto-abort"
        res = runner.invoke(cli.main, ["protocol", "--runs", "1", "--t", "0",
                                       "--n-pulses", "2400",
                                       "--n-symbols", "1000", "--seed", "5",
                                       "--out", str(out)])
        assert res.exit_code == 4
        assert "AbortNoKey" in (out / "runs.csv").read_text()


class TestReconBench:
    def test_two_frames(self, runner, tmp_path):
        out = tmp_path / "bench"
        res = runner.invoke(cli.main, ["recon-bench", "--frames", "2",
                                       "--n", "1200", "--seed", "19",
                                       "--out", str(out)])
        assert res.exit_code == 0, res.output
        payload = json.loads(res.output)
        assert payload["fer"] == 0.0
        assert payload["leakage_per_symbol"] == recon.leakage_per_symbol(0.94)
        lines = (out / "bench.csv").read_text().splitlines()
        assert len(lines) == 3
        assert all(line.split(",")[1] == "1" for line in lines[1:])


def test_version(runner):
    res = runner.invoke(cli.main, ["--version"])
    assert res.exit_code == 0
    assert "cvot" in res.output
