"""End-to-end tests of the command-line interface."""

import subprocess
import sys

import numpy as np
import pytest

from betamix import beta_exact_finite, FiniteChainSpec
from betamix.cli import main
from betamix.experiment import CSV_HEADER, load_config


TWO_STATE_CSV = "0.9,0.1\n0.2,0.8\n"


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def chain_file(tmp_path):
    f = tmp_path / "chain.csv"
    f.write_text(TWO_STATE_CSV)
    return f


class TestGenerate:
    def test_writes_requested_observations(self, tmp_path):
        out = tmp_path / "p.txt"
        rc = run_cli(
            "generate", "--model", "ar1", "--phi", "0.5", "--sigma", "1",
            "--n", "1000", "--seed", "7", "--out", str(out),
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        assert len(data) == 1000
        assert lines[0].startswith("# model=ar1")

    def test_invalid_phi_exits_2(self, tmp_path):
        rc = run_cli(
            "generate", "--model", "ar1", "--phi", "1.2",
            "--n", "100", "--seed", "1", "--out", str(tmp_path / "x.txt"),
        )
        assert rc == 2

    def test_deterministic(self, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        for out in (a, b):
            assert run_cli(
                "generate", "--model", "ar1", "--phi", "0.4",
                "--n", "500", "--seed", "3", "--out", str(out),
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_finite_chain_needs_matrix(self, tmp_path):
        rc = run_cli(
            "generate", "--model", "finite-chain",
            "--n", "100", "--seed", "1", "--out", str(tmp_path / "x.txt"),
        )
        assert rc == 2

    def test_finite_chain_generation(self, tmp_path, chain_file):
        out = tmp_path / "sym.txt"
        rc = run_cli(
            "generate", "--model", "finite-chain", "--matrix", str(chain_file),
            "--n", "200", "--seed", "5", "--out", str(out),
        )
        assert rc == 0
        data = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert set(data) <= {"0", "1"}


class TestEstimate:
    def test_kde_row_format(self, tmp_path, capsys):
        out = tmp_path / "p.txt"
        run_cli("generate", "--model", "ar1", "--phi", "0.5", "--n", "4000",
                "--seed", "9", "--out", str(out))
        rc = run_cli("estimate", "--path", str(out), "--estimator", "kde-scott",
                     "--m", "1", "--k", "12")
        assert rc == 0
        fields = capsys.readouterr().out.strip().split(",")
        estimator, m, k, n_pairs, beta_hat, raw = fields
        assert estimator == "kde-scott" and m == "1" and k == "12"
        assert int(n_pairs) > 0
        assert 0.0 <= float(beta_hat) <= 1.0
        assert float(raw) == pytest.approx(float(beta_hat), abs=1e-9)

    def test_finite_estimator_on_constant_path(self, tmp_path, capsys):
        f = tmp_path / "const.txt"
        f.write_text("\n".join(["0"] * 100) + "\n")
        rc = run_cli("estimate", "--path", str(f), "--estimator", "finite",
                     "--m", "1", "--k", "3", "--alphabet-size", "2")
        assert rc == 0
        fields = capsys.readouterr().out.strip().split(",")
        assert float(fields[4]) == 0.0

    def test_lag_above_skip_exits_2(self, tmp_path):
        f = tmp_path / "const.txt"
        f.write_text("\n".join(["0", "1"] * 50) + "\n")
        rc = run_cli("estimate", "--path", str(f), "--estimator", "finite",
                     "--m", "9", "--k", "5")
        assert rc == 2

    def test_kde_on_symbol_path_exits_2(self, tmp_path):
        f = tmp_path / "sym.txt"
        f.write_text("\n".join(["0", "1"] * 50) + "\n")
        rc = run_cli("estimate", "--path", str(f), "--estimator", "kde-scott",
                     "--m", "1", "--k", "2")
        assert rc == 2

    def test_acf_estimator(self, tmp_path, capsys):
        out = tmp_path / "p.txt"
        run_cli("generate", "--model", "ar1", "--phi", "0.5", "--n", "20000",
                "--seed", "13", "--out", str(out))
        rc = run_cli("estimate", "--path", str(out), "--estimator", "acf", "--m", "1")
        assert rc == 0
        fields = capsys.readouterr().out.strip().split(",")
        assert fields[0] == "acf"
        assert abs(float(fields[4]) - 0.1846) < 0.05

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("estimate", "--path", "nope.txt")
        assert exc.value.code == 2

    def test_golden_pipeline_value(self, tmp_path, capsys):
        # frozen output of the deterministic generate->estimate pipeline at
        # n=2^15, seed 42; the value was checked against the quadrature
        # ground truth 0.18461 before freezing
        out = tmp_path / "p.txt"
        run_cli("generate", "--model", "ar1", "--phi", "0.5", "--sigma", "1",
                "--n", "32768", "--seed", "42", "--out", str(out))
        rc = run_cli("estimate", "--path", str(out), "--estimator", "kde-scott", "--m", "1")
        assert rc == 0
        line = capsys.readouterr().out.strip()
        assert line == "kde-scott,1,126,128,0.18176702480815793,0.18176702480815793"


class TestOracle:
    def test_ar1_beta(self, capsys):
        assert run_cli("oracle", "ar1-beta", "--phi", "0.5", "--m", "1") == 0
        value = float(capsys.readouterr().out.strip())
        assert value == pytest.approx(0.1846, abs=1e-3)

    def test_chain_beta(self, capsys, chain_file):
        assert run_cli("oracle", "chain-beta", "--matrix", str(chain_file), "--m", "2") == 0
        value = float(capsys.readouterr().out.strip())
        assert value == pytest.approx((4.0 / 9.0) * 0.49, abs=1e-6)

    def test_jansson_zero(self, capsys):
        assert run_cli("oracle", "jansson", "--rho", "0") == 0
        assert capsys.readouterr().out.strip() == "0,0"


class TestExperiment:
    CONFIG = """
model = ar1
model.phi = 0.5
model.sigma = 1.0
sizes = 1024, 2048
lags = 1
replicates = 2
seed = 99
estimators = kde-scott, acf
"""

    def test_row_count_and_format(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(self.CONFIG)
        out = tmp_path / "rows.csv"
        rc = run_cli("experiment", "--config", str(cfg), "--out", str(out))
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 2 * 2 * 1 * 2  # estimators * sizes * lags * reps
        # rows sorted by (estimator, n, m, rep)
        keys = [tuple(l.split(",")[1:5]) for l in lines[1:]]
        parsed = [(e, int(n), int(m), int(r)) for e, n, m, r in keys]
        assert parsed == sorted(parsed)

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(self.CONFIG)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run_cli("experiment", "--config", str(cfg), "--out", str(a)) == 0
        assert run_cli("experiment", "--config", str(cfg), "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_beta_true_matches_oracle_command(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(self.CONFIG)
        out = tmp_path / "rows.csv"
        run_cli("experiment", "--config", str(cfg), "--out", str(out))
        capsys.readouterr()
        run_cli("oracle", "ar1-beta", "--phi", "0.5", "--m", "1")
        oracle_value = float(capsys.readouterr().out.strip())
        for line in out.read_text().splitlines()[1:]:
            beta_true = float(line.split(",")[7])
            assert abs(beta_true - oracle_value) < 1e-9

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(self.CONFIG + "bogus = 1\n")
        rc = run_cli("experiment", "--config", str(cfg), "--out", str(tmp_path / "x.csv"))
        assert rc == 2

    def test_finite_chain_config(self, tmp_path, chain_file):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "model = finite-chain\n"
            f"model.matrix = {chain_file.name}\n"
            "sizes = 2000\n"
            "lags = 1, 2\n"
            "replicates = 2\n"
            "seed = 5\n"
            "estimators = finite\n"
            "estimator.finite.k = 12\n"
        )
        out = tmp_path / "rows.csv"
        assert run_cli("experiment", "--config", str(cfg), "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 4
        chain = FiniteChainSpec.from_transition(np.array([[0.9, 0.1], [0.2, 0.8]]))
        for line in lines[1:]:
            parts = line.split(",")
            assert abs(float(parts[7]) - beta_exact_finite(chain, int(parts[3]))) < 1e-9

    def test_estimator_model_mismatch_fails_with_context(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "model = ar1\nmodel.phi = 0.5\nsizes = 1024\nlags = 1\n"
            "replicates = 1\nseed = 1\nestimators = finite\n"
        )
        out = tmp_path / "x.csv"
        rc = run_cli("experiment", "--config", str(cfg), "--out", str(out))
        assert rc == 2
        assert not out.exists()


class TestConfigParsing:
    def test_smoke_config_loads(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "model = ar1\nmodel.phi = 0.5\nsizes = 1024\nlags = 1\n"
            "replicates = 1\nseed = 0\nestimators = kde-k0\n"
        )
        config = load_config(cfg)
        assert config.estimators == ("kde-k0",)

    def test_descending_sizes_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "model = ar1\nmodel.phi = 0.5\nsizes = 2048, 1024\nlags = 1\n"
            "replicates = 1\nseed = 0\nestimators = acf\n"
        )
        with pytest.raises(Exception):
            load_config(cfg)


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "betamix.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for sub in ("generate", "estimate", "oracle", "experiment"):
        assert sub in proc.stdout
