"""CLI subcommands, exit codes, and end-to-end artifacts."""

import pytest

from tncompress.cli import main

TRAIN_CFG = """\
arch = mlp
lambda = 0.005
steps = 200
seed = 0
data_seed = 5
"""

DATA_CFG = "data_seed = 5\n"


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    (ws / "train.cfg").write_text(TRAIN_CFG)
    (ws / "data.cfg").write_text(DATA_CFG)
    rc = main(["train", "--config", str(ws / "train.cfg"),
               "--out", str(ws / "dense.stnz"),
               "--log", str(ws / "log.csv")])
    assert rc == 0
    return ws


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train"])                 # missing required options
        assert exc.value.code == 1
        with pytest.raises(SystemExit) as exc:
            main(["unknown-command"])
        assert exc.value.code == 1

    def test_compress_requires_exactly_one_target(self, workspace):
        with pytest.raises(SystemExit) as exc:
            main(["compress", "--model", str(workspace / "dense.stnz"),
                  "--out", str(workspace / "x.stnz")])
        assert exc.value.code == 1

    def test_missing_model_file_is_two(self, workspace, capsys):
        rc = main(["eval", "--model", str(workspace / "missing.stnz"),
                   "--data", str(workspace / "data.cfg")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_bad_config_key_is_two(self, workspace, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("data_seed = 1\nmomentum = 0.9\n")
        rc = main(["train", "--config", str(bad),
                   "--out", str(tmp_path / "m.stnz")])
        assert rc == 2
        assert "momentum" in capsys.readouterr().err

    def test_corrupt_model_is_two(self, workspace, tmp_path, capsys):
        corrupt = tmp_path / "corrupt.stnz"
        corrupt.write_bytes(b"NOTM" + b"\x00" * 16)
        rc = main(["report", "--model", str(corrupt)])
        assert rc == 2

    def test_unattainable_budget_is_two(self, workspace, capsys):
        rc = main(["compress", "--model", str(workspace / "dense.stnz"),
                   "--budget", "10000", "--out", "/dev/null"])
        assert rc == 2
        assert "unattainable" in capsys.readouterr().err


class TestPipeline:
    def test_train_wrote_model_and_log(self, workspace):
        assert (workspace / "dense.stnz").read_bytes()[:4] == b"STNZ"
        lines = (workspace / "log.csv").read_text().strip().splitlines()
        assert len(lines) == 201   # header + one row per step

    def test_eval_dense(self, workspace, capsys):
        rc = main(["eval", "--model", str(workspace / "dense.stnz"),
                   "--data", str(workspace / "data.cfg")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "accuracy=" in out and "loss=" in out

    def test_compress_eval_and_report(self, workspace, capsys):
        rc = main(["compress", "--model", str(workspace / "dense.stnz"),
                   "--budget", "2.0",
                   "--out", str(workspace / "half.stnz"),
                   "--report", str(workspace / "report.csv")])
        assert rc == 0
        assert "total ratio=" in capsys.readouterr().out
        header = (workspace / "report.csv").read_text().splitlines()[0]
        assert header.startswith("layer,kind,dense_params,tn_params,ratio")

        rc = main(["eval", "--model", str(workspace / "half.stnz"),
                   "--data", str(workspace / "data.cfg")])
        assert rc == 0

        rc = main(["report", "--model", str(workspace / "half.stnz")])
        assert rc == 0
        assert "total params" in capsys.readouterr().out

    def test_determinism_byte_identical(self, workspace, tmp_path):
        rc = main(["train", "--config", str(workspace / "train.cfg"),
                   "--out", str(tmp_path / "again.stnz")])
        assert rc == 0
        assert ((tmp_path / "again.stnz").read_bytes()
                == (workspace / "dense.stnz").read_bytes())

    def test_tradeoff_single_kappa(self, workspace, capsys):
        rc = main(["tradeoff", "--model", str(workspace / "dense.stnz"),
                   "--kappas", "1.0",
                   "--out", str(workspace / "curve.csv")])
        assert rc == 0
        lines = (workspace / "curve.csv").read_text().strip().splitlines()
        assert len(lines) == 2
        assert lines[0] == "kappa,total_ratio,ratio_l0,ratio_l1,accuracy"

    def test_tradeoff_ratio_monotone(self, workspace):
        rc = main(["tradeoff", "--model", str(workspace / "dense.stnz"),
                   "--kappas", "1.0,0.9,0.7,0.5",
                   "--out", str(workspace / "curve4.csv")])
        assert rc == 0
        rows = (workspace / "curve4.csv").read_text().strip().splitlines()[1:]
        ratios = [float(r.split(",")[1]) for r in rows]
        assert ratios == sorted(ratios)   # non-decreasing as kappa falls

    def test_tradeoff_bad_kappas_is_usage_error(self, workspace, capsys):
        rc = main(["tradeoff", "--model", str(workspace / "dense.stnz"),
                   "--kappas", "a,b", "--out", "/dev/null"])
        assert rc == 1


def test_verify_oracle_suite(capsys):
    rc = main(["verify", "--suite", "oracle"])
    assert rc == 0
    assert "PASS" in capsys.readouterr().out
