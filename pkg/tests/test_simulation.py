import json
import math

import numpy as np
import pytest

from dpsim.cli import main as cli_main
from dpsim.config import default_scenario
from dpsim.simulate import (SimulationAbort, compare_runs, metrics_from_trace,
                            run_simulation)
from dpsim.traces import TRACE_COLUMNS, read_trace_csv, write_trace_csv


def small_cfg(**overrides):
    """512-node grid, short horizon; fast enough for per-test runs."""
    cfg = default_scenario()
    cfg.points_per_dim = 2
    cfg.duration = 40.0
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestRunSimulation:
    def test_equilibrium_run_stays_put(self):
        cfg = small_cfg(controller_type="pid",
                        constant_delta=np.zeros(3),
                        initial_pose=np.zeros(3))
        trace, metrics = run_simulation(cfg)
        assert metrics.convergence_time == 0.0
        np.testing.assert_allclose(trace.pose, np.zeros_like(trace.pose), atol=1e-9)
        np.testing.assert_allclose(trace.tau, np.zeros_like(trace.tau), atol=1e-9)

    def test_trace_shape_and_grid(self):
        cfg = small_cfg(decimation=10)
        trace, _ = run_simulation(cfg)
        assert len(trace) == 40 / (0.1 * 10) + 1
        assert (np.diff(trace.t) > 0).all()
        np.testing.assert_allclose(np.diff(trace.t), 1.0, rtol=1e-12)

    def test_determinism_in_memory_and_on_disk(self, tmp_path):
        results = []
        for _ in range(2):
            cfg = small_cfg(disturbance_type="markov")
            results.append(run_simulation(cfg))
        (trace_a, _), (trace_b, _) = results
        np.testing.assert_array_equal(trace_a.columns(), trace_b.columns())
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trace_csv(pa, trace_a)
        write_trace_csv(pb, trace_b)
        assert pa.read_bytes() == pb.read_bytes()

    def test_decimation_leaves_metrics_unchanged(self):
        _, m_full = run_simulation(small_cfg(decimation=1))
        _, m_dec = run_simulation(small_cfg(decimation=10))
        assert m_full.convergence_time == m_dec.convergence_time
        assert m_full.steady_rms_pos == m_dec.steady_rms_pos
        assert m_full.steady_rms_psi == m_dec.steady_rms_psi
        np.testing.assert_array_equal(m_full.peak_tau, m_dec.peak_tau)
        assert m_full.weight_sup == m_dec.weight_sup

    def test_metrics_from_trace_matches_run(self):
        cfg = small_cfg(controller_type="pid")
        trace, metrics = run_simulation(cfg)
        recomputed = metrics_from_trace(trace)
        assert recomputed.convergence_time == metrics.convergence_time
        assert recomputed.steady_rms_pos == pytest.approx(metrics.steady_rms_pos, rel=1e-6)
        assert recomputed.steady_rms_psi == pytest.approx(metrics.steady_rms_psi, rel=1e-6)

    def test_blowup_aborts_with_last_finite_sample(self):
        # dt far beyond the RK4 stability limit of the stiff yaw axis
        cfg = small_cfg(controller_type="pid", dt=50.0, duration=20000.0)
        with pytest.raises(SimulationAbort) as excinfo:
            run_simulation(cfg)
        abort = excinfo.value
        assert abort.t_failed > abort.t_last
        assert np.isfinite(abort.pose).all()
        assert "last finite sample" in str(abort)

    def test_unstable_adaptation_law_is_selectable(self):
        stable, _ = run_simulation(small_cfg())
        unstable, _ = run_simulation(small_cfg(adaptation_law="unstable"))
        # leak sign flips: stable decays the initial weight norms, the
        # flipped variant grows them exponentially (fastest where gamma*sigma
        # is largest)
        assert stable.theta_norms[-1].max() < stable.theta_norms[0].max()
        assert (unstable.theta_norms[-1] > unstable.theta_norms[0]).all()
        assert unstable.theta_norms[-1].max() > 1000 * unstable.theta_norms[0].max()

    def test_nn_fixed_keeps_weights(self):
        trace, _ = run_simulation(small_cfg(controller_type="nn-fixed"))
        np.testing.assert_allclose(trace.theta_norms[-1], trace.theta_norms[0],
                                   rtol=1e-12)

    def test_saturation_respected(self):
        cfg = small_cfg(controller_type="pid", tau_max=np.array([1e4, 1e4, 1e5]))
        trace, metrics = run_simulation(cfg)
        assert (np.abs(trace.tau) <= np.array([1e4, 1e4, 1e5]) + 1e-9).all()
        assert (metrics.peak_tau <= np.array([1e4, 1e4, 1e5]) + 1e-9).all()

    def test_bounded_signals_smoke(self):
        trace, metrics = run_simulation(small_cfg(duration=120.0))
        assert np.isfinite(trace.columns()).all()
        pos_err = np.hypot(trace.pose[:, 0], trace.pose[:, 1])
        assert pos_err.max() < 10.0 * pos_err[0]
        assert metrics.weight_sup < 10.0 * trace.theta_norms[0].max()

    def test_convergence_time_dt_halving(self):
        # strengthened gains give an actually converging loop; halving dt
        # must not move the convergence time by more than 5%
        def conv(dt):
            cfg = small_cfg(duration=150.0, dt=dt,
                            k1=np.diag([0.06, 0.06, 0.5]),
                            k2=np.diag([1.0e6, 1.6e6, 7.5e8]))
            _, metrics = run_simulation(cfg)
            return metrics.convergence_time

        c_coarse, c_fine = conv(0.1), conv(0.05)
        assert math.isfinite(c_coarse)
        assert abs(c_coarse - c_fine) / c_coarse < 0.05


class TestTraceCsv:
    def test_roundtrip(self, tmp_path):
        trace, _ = run_simulation(small_cfg(decimation=10))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        loaded = read_trace_csv(path)
        # values survive the 9-significant-digit format
        np.testing.assert_allclose(loaded.columns(), trace.columns(),
                                   rtol=1e-8, atol=1e-300)
        assert loaded.meta["controller"] == "adaptive-nn"
        assert loaded.meta["weight_seed"] == "1"
        assert loaded.meta["target_pose_rad"] == "0 0 0"

    def test_reload_is_exact_for_rewritten_file(self, tmp_path):
        trace, _ = run_simulation(small_cfg(decimation=20))
        first = tmp_path / "first.csv"
        second = tmp_path / "second.csv"
        write_trace_csv(first, trace)
        write_trace_csv(second, read_trace_csv(first))
        assert first.read_bytes() == second.read_bytes()

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\r\n1,2,3\r\n")
        with pytest.raises(ValueError, match="header"):
            read_trace_csv(path)


class TestCompare:
    def test_identical_traces_unit_ratios(self):
        trace, _ = run_simulation(small_cfg(controller_type="pid"))
        report = compare_runs([trace, trace])
        np.testing.assert_allclose(report.rms_pos_ratio, np.ones((2, 2)), rtol=1e-12)
        assert "pid" in report.format()

    def test_grid_mismatch(self):
        trace_a, _ = run_simulation(small_cfg(controller_type="pid"))
        trace_b, _ = run_simulation(small_cfg(controller_type="pid", duration=20.0))
        with pytest.raises(ValueError, match="time grids"):
            compare_runs([trace_a, trace_b])

    def test_single_trace_rejected(self):
        trace, _ = run_simulation(small_cfg(controller_type="pid"))
        with pytest.raises(ValueError, match="two traces"):
            compare_runs([trace])


class TestCli:
    def test_run_pid_defaults_prints_finite_convergence(self, capsys):
        code = cli_main(["run", "--controller", "pid", "--disturbance", "constant"])
        out = capsys.readouterr().out
        assert code == 0
        assert "convergence_time_s=" in out
        conv = float(out.split("convergence_time_s=")[1].split()[0])
        assert math.isfinite(conv)

    def test_run_writes_trace_and_weights(self, tmp_path, capsys):
        trace_path = tmp_path / "run.csv"
        weights_path = tmp_path / "weights.csv"
        code = cli_main(["run", "--grid", "2", "--duration", "20", "--out",
                         str(trace_path), "--weights-out", str(weights_path),
                         "--decimate", "10"])
        assert code == 0
        loaded = read_trace_csv(trace_path)
        assert len(loaded) == 21
        assert weights_path.read_text().startswith("node_index,")

    def test_run_missing_config(self, tmp_path, capsys):
        code = cli_main(["run", "--config", str(tmp_path / "nope.json")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert cli_main(["run", "--warp-drive"]) == 1

    def test_unknown_subcommand(self, capsys):
        assert cli_main(["fly"]) == 1

    def test_validate(self, tmp_path, capsys):
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"simulation": {"duration": 10.0}}))
        assert cli_main(["validate", "--config", str(good)]) == 0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"simulation": {"dt": -1}}))
        assert cli_main(["validate", "--config", str(bad)]) == 1

    def test_runtime_abort_exit_code(self, tmp_path):
        cfg = tmp_path / "blowup.json"
        cfg.write_text(json.dumps({
            "controller": {"type": "pid"},
            "simulation": {"dt": 50.0, "duration": 20000.0},
        }))
        assert cli_main(["run", "--config", str(cfg)]) == 2

    def test_figures_emits_six_traces(self, tmp_path, capsys):
        outdir = tmp_path / "panels"
        code = cli_main(["figures", "--outdir", str(outdir), "--grid", "2",
                         "--duration", "20"])
        assert code == 0
        files = sorted(p.name for p in outdir.glob("*.csv"))
        assert files == ["adaptive_nn_constant.csv", "adaptive_nn_markov.csv",
                         "nn_fixed_constant.csv", "nn_fixed_markov.csv",
                         "pid_constant.csv", "pid_markov.csv"]
        for path in outdir.glob("*.csv"):
            loaded = read_trace_csv(path)
            assert loaded.columns().shape[1] == len(TRACE_COLUMNS)

    def test_compare_command(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert cli_main(["run", "--controller", "pid", "--duration", "20",
                         "--out", str(a)]) == 0
        assert cli_main(["run", "--controller", "pid", "--duration", "20",
                         "--seed", "5", "--disturbance", "markov",
                         "--out", str(b)]) == 0
        report_path = tmp_path / "report.txt"
        code = cli_main(["compare", str(a), str(b), "--out", str(report_path),
                         "--window", "10"])
        assert code == 0
        assert "steady_rms_pos ratios" in report_path.read_text()

    def test_seed_override_changes_markov_draws(self, tmp_path):
        outs = []
        for seed in (3, 4):
            path = tmp_path / f"s{seed}.csv"
            assert cli_main(["run", "--controller", "pid", "--disturbance", "markov",
                             "--duration", "20", "--seed", str(seed),
                             "--out", str(path)]) == 0
            outs.append(read_trace_csv(path).delta)
        assert not np.array_equal(outs[0], outs[1])
