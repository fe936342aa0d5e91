"""Verification reports and CSV/JSON export."""

import json

import numpy as np
import pytest

from res_sim.analysis import (BoundReport, detect_convergence, emit_csv,
                              error_norm_series, read_csv_columns,
                              sr_log_bound_report, verify_demand, verify_eiss,
                              verify_mass_balance, write_report)
from res_sim.scenario import RunRecord


def empty_record(m_u=2, m_r=1, n=3, n_r=1):
    m = m_u + m_r
    z = lambda *shape: np.zeros(shape)
    return RunRecord(t=z(0), y_u=z(0, m_u), y_r=z(0, m_r), r_u=z(0, m_u),
                     r_r=z(0, m_r), sigma=z(0, m), nu=z(0, m), Q=z(0, n),
                     D=z(0, n_r), mean_u=z(0), mean_sr=z(0), cum_events=z(0),
                     h0_u=z(0), h0_ut=z(0), max_abs_ut=z(0), max_abs_logr=z(0),
                     mass_residual=z(0), cg_iters=np.zeros(0, dtype=int),
                     meta={"name": "empty", "r_star": 0.99, "bc_kind": "neumann",
                           "beta": 1e-3, "volume": 100.0, "dt_c": 1e-3,
                           "extent": (10.0, 10.0), "W": None})


def toy_record(n_steps=4, beta=0.5, volume=4.0, dt_c=0.5):
    """Hand-built no-flux record satisfying the mean balance exactly."""
    t = np.arange(n_steps + 1) * dt_c
    Q = np.tile(np.array([1.0, -0.5]), (n_steps + 1, 1))
    mean_u = np.zeros(n_steps + 1)
    for k in range(n_steps):
        mean_u[k + 1] = mean_u[k] + dt_c * Q[k].sum() / (beta * volume)
    z = lambda *shape: np.zeros(shape)
    m_u, m_r, m = 1, 1, 2
    return RunRecord(t=t, y_u=z(n_steps + 1, m_u), y_r=z(n_steps + 1, m_r),
                     r_u=z(n_steps + 1, m_u), r_r=z(n_steps + 1, m_r),
                     sigma=z(n_steps + 1, m), nu=z(n_steps + 1, m),
                     Q=Q, D=z(n_steps + 1, 0), mean_u=mean_u,
                     mean_sr=np.full(n_steps + 1, 0.99),
                     cum_events=0.99 * t, h0_u=np.abs(mean_u) * 2.0,
                     h0_ut=z(n_steps + 1), max_abs_ut=z(n_steps + 1),
                     max_abs_logr=z(n_steps + 1),
                     mass_residual=z(n_steps + 1),
                     cg_iters=np.zeros(n_steps + 1, dtype=int),
                     meta={"name": "toy", "r_star": 0.99, "bc_kind": "neumann",
                           "beta": beta, "volume": volume, "dt_c": dt_c,
                           "extent": (2.0, 2.0), "n_wells": 2,
                           "well_volumes": [1.0, 1.0], "c_hy_min": 5.0,
                           "u0_h0": 0.0, "u0_mean": 0.0, "dt": dt_c,
                           "t_end": t[-1], "seed": 0, "W": None,
                           "gains": {"k2": 1e-4}})


class TestErrorNorm:
    def test_zero_error(self):
        rec = toy_record()
        np.testing.assert_array_equal(error_norm_series(rec), np.zeros(5))

    def test_euclidean_identity(self):
        rec = toy_record()
        rec.sigma[2] = [3.0, 4.0]
        assert error_norm_series(rec)[2] == pytest.approx(5.0)

    def test_empty_record_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            error_norm_series(empty_record())


class TestDetectConvergence:
    def test_all_zero_series(self):
        assert detect_convergence(np.zeros(100), 1e-6, hold=0.5, dt=0.1) == 0.0

    def test_monotone_increasing_never(self):
        series = np.linspace(1.0, 2.0, 50)
        assert detect_convergence(series, 0.5, hold=0.2, dt=0.1) is None

    def test_first_qualifying_window(self):
        series = np.array([1.0, 1.0, 0.1, 0.1, 0.1, 0.1])
        assert detect_convergence(series, 0.5, hold=0.2, dt=0.1) == pytest.approx(0.2)

    def test_transient_dip_skipped(self):
        series = np.array([1.0, 0.1, 1.0, 0.1, 0.1, 0.1, 0.1])
        assert detect_convergence(series, 0.5, hold=0.2, dt=0.1) == pytest.approx(0.3)

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_in_threshold(self, seed):
        rng = np.random.default_rng(seed)
        series = np.abs(rng.normal(0, 1, 200)) * np.exp(-np.arange(200) / 30.0)
        lo = detect_convergence(series, 0.05, hold=1.0, dt=0.1)
        hi = detect_convergence(series, 0.5, hold=1.0, dt=0.1)
        if lo is not None:
            assert hi is not None and hi <= lo


class TestClosedLoopConvergence:
    def test_scenario1_error_norm_settles(self, scenario1):
        config, record = scenario1
        enorm = error_norm_series(record)
        scale = max(abs(s.target) for s in config.pressure_refs)
        t_conv = detect_convergence(enorm, 1e-3 * scale, hold=5.0,
                                    dt=config.schedule.dt_c)
        assert t_conv is not None and t_conv < 5.0
        settled = record.t >= t_conv
        assert enorm[settled].max() < 1e-3 * scale


class TestMassBalanceReport:
    def test_consistent_record_passes(self):
        report = verify_mass_balance(toy_record())
        assert report.applicable and report.passed
        assert report.measured <= 1e-12

    def test_injected_bookkeeping_error_fails(self):
        rec = toy_record()
        rec.mean_u[3] += 1e-6
        report = verify_mass_balance(rec)
        assert report.applicable and not report.passed

    def test_dirichlet_not_applicable(self):
        rec = toy_record()
        rec.meta["bc_kind"] = "dirichlet"
        report = verify_mass_balance(rec)
        assert not report.applicable
        assert "not applicable" in report.note

    def test_scenario_run_passes(self, scenario1):
        _, record = scenario1
        report = verify_mass_balance(record)
        assert report.passed


class TestEissReports:
    def test_zero_input_run_within_bounds(self):
        rec = toy_record()
        rec.Q[:] = 0.0
        rec.mean_u[:] = 0.0
        rec.h0_u[:] = 0.0
        reports = verify_eiss(rec)
        assert all(r.passed for r in reports)

    def test_declared_bound_below_measured_flags(self):
        rec = toy_record()
        reports = verify_eiss(rec, declared_l_q=1e-6)
        assert any("inconsistent" in r.note for r in reports)
        assert not all(r.passed for r in reports)

    def test_inputs_recorded_for_audit(self):
        reports = verify_eiss(toy_record())
        for r in reports:
            for key in ("poincare_epsilon", "k_over_eta_min", "V_T_star",
                        "L_Q", "L_Qdot"):
                assert key in r.inputs

    def test_log_rate_bound_report(self, scenario1):
        config, record = scenario1
        report = sr_log_bound_report(record, config.sr)
        assert report.passed
        assert report.bound > report.measured


class TestEmitCsv:
    def test_empty_record_headers_only(self, tmp_path):
        files = emit_csv(empty_record(), tmp_path)
        for f in files:
            lines = f.read_text().splitlines()
            assert len(lines) == 1 and "," in lines[0]

    def test_deterministic_re_emission(self, tmp_path):
        rec = toy_record()
        rec.sigma[1] = [0.1, -0.2]
        emit_csv(rec, tmp_path / "a")
        emit_csv(rec, tmp_path / "b")
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_round_trip_exact(self, tmp_path):
        rec = toy_record()
        rec.sigma[:] = np.pi * np.arange(10).reshape(5, 2) / 7.0
        files = emit_csv(rec, tmp_path)
        outputs = read_csv_columns(tmp_path / "outputs.csv")
        np.testing.assert_array_equal(outputs["t_yr"], rec.t)
        enorm = read_csv_columns(tmp_path / "error_norm.csv")["error_norm"]
        np.testing.assert_array_equal(enorm, np.linalg.norm(rec.sigma, axis=1))
        events = read_csv_columns(tmp_path / "events_cumulative.csv")
        np.testing.assert_array_equal(events["events_controlled"], rec.cum_events)

    def test_baseline_column(self, tmp_path):
        rec = toy_record()
        base = toy_record()
        base.cum_events = base.cum_events * 2.0
        emit_csv(rec, tmp_path, baseline=base)
        cols = read_csv_columns(tmp_path / "events_cumulative.csv")
        np.testing.assert_array_equal(cols["events_uncontrolled"],
                                      base.cum_events)


class TestReportJson:
    def test_stable_keys_and_values(self, tmp_path):
        rec = toy_record()
        path = write_report(rec, tmp_path,
                            reports=[BoundReport("x", 1.0, 2.0, passed=True)])
        data = json.loads(path.read_text())
        for key in ("scenario", "schedule", "demand_max_residual",
                    "mass_balance_max_rel_residual", "events_controlled_final",
                    "bound_reports", "chattering_bound_nu", "poincare_epsilon"):
            assert key in data
        assert data["bound_reports"][0]["name"] == "x"

    def test_demand_report_not_applicable_without_demand(self):
        report = verify_demand(toy_record())
        assert not report.applicable
