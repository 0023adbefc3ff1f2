import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfheal.adversary import ConfigError
from selfheal.experiments.figures import emit_figures, sliding_mean
from selfheal.experiments.grid import ExperimentGrid, run_grid


def small_grid(out, **kw):
    base = dict(n_values=(512,), f_values=(0.0, 1 / 8), seeds=(1, 2), num_sends=600,
                baseline=True, baseline_sends=50, out_dir=str(out), window=100)
    base.update(kw)
    return ExperimentGrid(**base)


@pytest.mark.parametrize(
    "kw", [dict(seeds=()), dict(seeds=(1, 1)), dict(n_values=()), dict(f_values=(0.5,)),
           dict(baseline=False, self_healing=False), dict(window=0)],
)
def test_grid_validation(tmp_path, kw):
    with pytest.raises(ConfigError):
        small_grid(tmp_path, **kw)


def test_grid_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentGrid.from_dict({"n_values": [64], "f_values": [0], "seeds": [1], "colour": 2})


@pytest.fixture(scope="module")
def grid_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("grid")
    result = run_grid(small_grid(out))
    emit_figures(result, out)
    return out, result


def test_grid_outputs(grid_run):
    out, result = grid_run
    assert not result.failures
    assert len(result.trials) == 8
    summary = json.loads((out / "summary.json").read_text())
    rows = {r["f"]: r for r in summary["aggregates"]}
    assert rows[0.125]["reduction_factor"] > 0
    assert rows[0.0]["selfheal_corruptions"] == 0
    assert summary["grid"]["seeds"] == [1, 2]
    assert len(list((out / "trials").glob("*.csv"))) == 8


def test_figure_files(grid_run):
    out, _ = grid_run
    fig = out / "figures"
    zero = np.loadtxt(fig / "selfheal_n512_f0_corruption_curve.csv", delimiter=",", skiprows=1)
    assert (zero[:, 1] == 0).all()
    flat = np.loadtxt(fig / "baseline_n512_f0.125_msgs_curve.csv", delimiter=",", skiprows=1)
    assert np.ptp(flat[:, 1]) == 0
    assert (fig / "selfheal_n512_f0.125_msgs_curve.png").stat().st_size > 0


def test_rerun_is_byte_identical(grid_run, tmp_path):
    out, _ = grid_run
    again = run_grid(small_grid(tmp_path))
    emit_figures(again, tmp_path, render=False)
    for f in sorted((out / "trials").glob("*.csv")) + sorted((out / "figures").glob("*.csv")):
        twin = tmp_path / f.relative_to(out)
        assert twin.read_bytes() == f.read_bytes(), f.name
    a = json.loads((tmp_path / "summary.json").read_text())
    b = json.loads((out / "summary.json").read_text())
    assert a["grid"].pop("out_dir") != b["grid"].pop("out_dir")
    assert a == b


def test_corruption_curve_falls():
    result = run_grid(ExperimentGrid(n_values=(1024,), f_values=(1 / 8,), seeds=(1, 2, 3), num_sends=3000))
    series = result.series(1024, 1 / 8, False)
    flags = np.mean([m.corrupted for m in series], axis=0)
    blocks = flags.reshape(6, -1).mean(axis=1)
    assert (np.diff(blocks) <= 1e-12).all(), blocks


def test_failed_trial_is_recorded(tmp_path, monkeypatch):
    import selfheal.experiments.grid as grid_mod

    real = grid_mod.run_trial

    def flaky(config):
        if config.seed == 2:
            raise RuntimeError("boom")
        return real(config)

    monkeypatch.setattr(grid_mod, "run_trial", flaky)
    result = run_grid(ExperimentGrid(n_values=(256,), f_values=(0.0,), seeds=(1, 2), num_sends=20))
    assert len(result.trials) == 1
    assert "RuntimeError: boom" in next(iter(result.failures.values()))


@settings(max_examples=40, deadline=None)
@given(values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), window=st.integers(1, 20))
def test_sliding_mean_matches_naive(values, window):
    got = sliding_mean(np.array(values), window)
    for i in range(len(values)):
        chunk = values[max(0, i - window + 1): i + 1]
        assert got[i] == pytest.approx(sum(chunk) / len(chunk), rel=1e-9, abs=1e-6)
