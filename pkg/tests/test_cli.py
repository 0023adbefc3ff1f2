import json

import pytest

from selfheal.cli import main


def test_oracle_report(capsys):
    assert main(["oracle-report", "--n", "14116"]) == 0
    out = capsys.readouterr().out
    assert "5940" in out and "0.437500" in out


def test_run_and_baseline(tmp_path, capsys):
    out = tmp_path / "r"
    rc = main(["run", "--n", "256", "--f", "1/16", "--sends", "100", "--seeds", "1", "--baseline",
               "--out", str(out), "--window", "10", "--no-plots"])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["grid"]["f_values"] == [0.0625]
    assert "factor" in capsys.readouterr().out
    rc = main(["baseline", "--n", "256", "--sends", "10", "--out", str(tmp_path / "b"), "--no-plots"])
    assert rc == 0


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"n_values": [256], "f_values": [0.0], "seeds": [4], "num_sends": 30}))
    assert main(["run", "--config", str(cfg), "--sends", "12", "--out", str(tmp_path / "o"), "--no-plots"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["grid"]["num_sends"] == 12


def test_bad_config_exits_2(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["run", "--n", "256", "--seeds", "1", "1", "--out", str(tmp_path)])
    assert e.value.code == 2


def test_accept_subset(tmp_path, capsys):
    assert main(["accept", "--only", "6", "8", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "acceptance.txt").read_text()
    assert text.count("[PASS]") == 2
    assert "2/2 criteria passed" in capsys.readouterr().out
