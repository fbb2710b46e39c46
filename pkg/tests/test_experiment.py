import numpy as np
import pytest

from polysmooth.config import parse_config
from polysmooth.experiment import read_summary, run_experiment, run_seed, write_reports

from .test_config import BUNDLED, LINEAR
from polysmooth.config import load_config


def small_vdp(runs=4, steps=40, **changes):
    return load_config(BUNDLED).replace(runs=runs, steps=steps, **changes)


def test_run_seed_pure_and_distinct():
    assert run_seed(1, 0) == run_seed(1, 0)
    assert len({run_seed(1, r) for r in range(100)}) == 100
    assert run_seed(1, 0) != run_seed(2, 0)


def test_linear_single_step_strategies_agree():
    c = parse_config(LINEAR).replace(runs=1, steps=1)
    rep = run_experiment(c, workers=1)
    ref = rep.smoother_rmse["gi"]
    for m in rep.methods:
        np.testing.assert_allclose(rep.filter_rmse[m], rep.filter_rmse["gi"], atol=1e-10)
        np.testing.assert_allclose(rep.smoother_rmse[m], ref, atol=1e-10)


def test_report_shapes_and_invariants():
    rep = run_experiment(small_vdp(), workers=1)
    for m in rep.methods:
        assert rep.filter_rmse[m].shape == (40, 3)
        assert np.all(rep.filter_rmse[m] >= 0)
        np.testing.assert_array_equal(rep.filter_rmse[m][-1], rep.smoother_rmse[m][-1])
        np.testing.assert_allclose(rep.filter_average[m], rep.filter_rmse[m].mean(axis=0))
        assert rep.diverged[m] == 0
    assert rep.filter_ret["ekf"] == 1.0
    assert rep.smoother_ret["gi"] > rep.filter_ret["gi"]


def test_ret_absent_without_baseline():
    rep = run_experiment(small_vdp(runs=1, steps=5, strategies=("gi",)), workers=1)
    assert np.isnan(rep.filter_ret["gi"])


def test_parallel_matches_serial():
    c = small_vdp(runs=6, steps=30)
    a = run_experiment(c, workers=1)
    b = run_experiment(c, workers=3)
    for m in a.methods:
        np.testing.assert_array_equal(a.filter_rmse[m], b.filter_rmse[m])
        np.testing.assert_array_equal(a.smoother_rmse[m], b.smoother_rmse[m])


def test_divergence_counted(monkeypatch):
    import polysmooth.experiment as ex

    monkeypatch.setattr(ex, "DIVERGENCE_EIGENVALUE", 0.0)
    rep = run_experiment(small_vdp(runs=2, steps=5, strategies=("ekf", "gi")), workers=1)
    assert rep.diverged == {"ekf": 2, "gi": 2}
    assert np.isnan(rep.filter_average["gi"]).all()


class TestWriteReports:
    def test_files_and_round_trip(self, tmp_path):
        rep = run_experiment(small_vdp(runs=2, steps=10), workers=1)
        paths = write_reports(rep, tmp_path)
        assert sorted(p.name for p in paths) == ["config_echo", "rmse_filter.csv", "rmse_smoother.csv", "summary.csv"]
        rows = (tmp_path / "rmse_filter.csv").read_text().splitlines()
        assert rows[0] == "step,method,state_index,rmse"
        assert len(rows) == 1 + 4 * 10 * 3
        summary = read_summary(tmp_path / "summary.csv")
        for m in rep.methods:
            avg, ret, div = summary[(m, "smoother")]
            np.testing.assert_array_equal(avg, rep.smoother_average[m])
            assert ret == rep.smoother_ret[m]
            assert div == 0
        echoed = parse_config((tmp_path / "config_echo").read_text())
        assert echoed.runs == 2 and echoed.steps == 10

    def test_empty_strategy_list(self, tmp_path):
        rep = run_experiment(small_vdp(runs=1, steps=3, strategies=()), workers=1)
        write_reports(rep, tmp_path)
        assert (tmp_path / "summary.csv").read_bytes() == b"method,kind,state1,state2,state3,ret,diverged\r\n"

    def test_smoother_below_filter_except_final(self, tmp_path):
        rep = run_experiment(small_vdp(runs=20, steps=60, strategies=("gi", "ekf")), workers=1)
        write_reports(rep, tmp_path)
        data = {}
        for kind in ("filter", "smoother"):
            for line in (tmp_path / f"rmse_{kind}.csv").read_text().splitlines()[1:]:
                k, m, i, v = line.split(",")
                data[(kind, m, int(k), int(i))] = float(v)
        for m in ("gi", "ekf"):
            for i in (1, 2, 3):
                assert data[("filter", m, 60, i)] == data[("smoother", m, 60, i)]
                f = np.mean([data[("filter", m, k, i)] for k in range(1, 60)])
                s = np.mean([data[("smoother", m, k, i)] for k in range(1, 60)])
                assert s < f

    def test_unwritable(self, tmp_path):
        from polysmooth.exceptions import PolysmoothError

        blocker = tmp_path / "file"
        blocker.write_text("")
        rep = run_experiment(small_vdp(runs=1, steps=2, strategies=("ekf",)), workers=1)
        with pytest.raises(PolysmoothError, match="file"):
            write_reports(rep, blocker / "sub")
