"""Scenario loading, reference/demand signals and the closed-loop engine."""

import dataclasses
from pathlib import Path

import numpy as np
import pytest

from res_sim.scenario import (ConfigError, DemandSeries, ReferenceSpec,
                              Schedule, build_demand_source, demand_at,
                              load_demand_csv, load_scenario, reference_at,
                              run)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


class TestReferences:
    def test_constant_holds_target(self):
        spec = ReferenceSpec("constant", target=0.99)
        for t in (0.0, 3.0, 31.0):
            assert reference_at(spec, 0.5, t) == 0.99

    def test_sigmoid_pinned_start(self):
        spec = ReferenceSpec("sigmoid", target=-2.0, t_mid=7.5, tau=1.8)
        assert reference_at(spec, 0.0, 0.0) == 0.0
        assert reference_at(spec, -0.3, 0.0) == -0.3

    def test_sigmoid_asymptote(self):
        spec = ReferenceSpec("sigmoid", target=-2.0, t_mid=7.5, tau=1.8)
        assert reference_at(spec, 0.0, 1e3) == pytest.approx(-2.0, abs=1e-12)

    def test_sigmoid_monotone_with_bounded_rate(self):
        spec = ReferenceSpec("sigmoid", target=-2.0, t_mid=7.5, tau=1.8)
        t = np.linspace(0, 31, 2000)
        r = np.array([reference_at(spec, 0.0, tk) for tk in t])
        assert np.all(np.diff(r) <= 1e-12)
        rate = np.abs(np.diff(r)) / np.diff(t)[0]
        assert rate.max() < abs(spec.target) / spec.tau

    def test_bad_tau_rejected(self):
        with pytest.raises(ValueError, match="tau"):
            ReferenceSpec("sigmoid", target=1.0, tau=0.0)


class TestDemand:
    def _series(self):
        return DemandSeries(times=np.array([0.0, 1.0, 2.0]),
                            values=np.array([1.0, 2.0, 4.0]))

    def test_piecewise_constant_hold(self):
        s = self._series()
        assert s.value_at(0.0) == 1.0
        assert s.value_at(0.99) == 1.0
        assert s.value_at(1.0) == 2.0
        assert s.value_at(100.0) == 4.0      # last value held
        assert s.value_at(-1.0) == 1.0       # first value held

    def test_single_extraction_row(self):
        src = build_demand_source([{"wells": "all", "scale": -1.0}], 4,
                                  self._series(), seed=1)
        np.testing.assert_allclose(demand_at(src, 0.5), [-1.0])
        assert src.W.shape == (1, 4)
        assert np.all((src.W >= 0.8) & (src.W <= 1.2))

    def test_two_row_injection_ratio(self):
        rows = [{"wells": [0, 1], "scale": -1.0},
                {"wells": [2, 3], "scale": 1.36}]
        src = build_demand_source(rows, 4, self._series(), seed=1)
        np.testing.assert_allclose(demand_at(src, 1.5), [-2.0, 2.72])
        assert np.all(src.W[0, 2:] == 0.0)
        assert np.all(src.W[1, :2] == 0.0)

    def test_zero_history_gives_zero_demand(self):
        series = DemandSeries(times=np.array([0.0, 1.0]), values=np.zeros(2))
        src = build_demand_source([{"wells": "all", "scale": -1.0}], 3,
                                  series, seed=0)
        np.testing.assert_array_equal(demand_at(src, 0.5), [0.0])

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError, match="empty series"):
            DemandSeries(times=np.zeros(0), values=np.zeros(0))

    def test_seeded_weights_reproducible(self):
        rows = [{"wells": "all", "scale": -1.0}]
        a = build_demand_source(rows, 5, self._series(), seed=42)
        b = build_demand_source(rows, 5, self._series(), seed=42)
        np.testing.assert_array_equal(a.W, b.W)

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "demand.csv"
        path.write_text("t_years,value\n0.0,1.5\n0.5,2.5\n")
        series = load_demand_csv(path)
        assert series.value_at(0.6) == 2.5

    def test_csv_bad_header_rejected(self, tmp_path):
        path = tmp_path / "demand.csv"
        path.write_text("time,rate\n0.0,1.5\n")
        with pytest.raises(ConfigError, match="t_years,value"):
            load_demand_csv(path)


class TestSchedule:
    def test_dt_c_must_be_multiple(self):
        with pytest.raises(ValueError, match="integer multiple"):
            Schedule(t_end=1.0, dt=3e-3, dt_c=5e-3)

    def test_dt_positive(self):
        with pytest.raises(ValueError, match="dt must be positive"):
            Schedule(t_end=1.0, dt=0.0, dt_c=1e-3)


class TestLoadScenario:
    def test_shipped_scenario1(self):
        config = load_scenario(SCENARIOS / "scenario1.toml")
        assert config.wells.n == 29
        assert config.regions.m_u == 5 and config.regions.m_r == 1
        assert all(ok for ok, _ in config.assumptions.values())
        assert config.demand.n_rows == 1

    def test_shipped_scenario2_demand_rows(self):
        config = load_scenario(SCENARIOS / "scenario2.toml")
        assert config.demand.n_rows == 2
        np.testing.assert_allclose(config.demand.scales, [-1.0, 1.36])

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_scenario(SCENARIOS / "nope.toml")

    def test_parse_error_carries_location(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[grid\n")
        with pytest.raises(ConfigError, match="line"):
            load_scenario(bad)

    def test_overlapping_regions_name_a4(self, tmp_path):
        toml = MINI_TOML.replace('rect = [4, 4, 5, 5]', 'rect = [2, 2, 3, 3]')
        path = _write_mini(tmp_path, toml)
        with pytest.raises(ConfigError, match="A4"):
            load_scenario(path)

    def test_too_many_constraints(self, tmp_path):
        extra = ('\n[[demand.rows]]\nwells = [0]\nscale = 1.0\n'
                 '\n[[demand.rows]]\nwells = [1]\nscale = 1.0\n')
        path = _write_mini(tmp_path, MINI_TOML + extra)
        with pytest.raises(ConfigError, match="too many constraints"):
            load_scenario(path)

    def test_dt_override_zero_rejected(self):
        with pytest.raises(ConfigError, match="dt must be positive"):
            load_scenario(SCENARIOS / "scenario1.toml", overrides={"dt": 0.0})


MINI_TOML = """
[grid]
extent_km = [6.0, 6.0]
resolution = [6, 6]

[diffusion]
beta_per_mpa = 5.7e-4
c_hy_km2_per_hr = 4.4e-2

[sr]
gamma1_max_per_mpa = 4.7
gamma2_per_event = 1.08e-2
r_star_events_per_yr = 0.99

[wells]
cells = [[2, 2], [4, 4], [1, 4]]

[[regions.pressure]]
name = "u1"
rect = [2, 2, 3, 3]

[[regions.sr]]
name = "R1"
rect = [4, 4, 5, 5]

[controller]
l = 1.0e-2
k_bar2 = 1.0e4
gamma_r_estimate = 2.0

[[references.pressure]]
kind = "sigmoid"
target_mpa = -0.5
t_mid_yr = 0.3
tau_yr = 0.1

[[references.sr]]
kind = "constant"
target_events_per_yr = 0.99

[demand]
csv = "demand.csv"
seed = 3

[[demand.rows]]
wells = "all"
scale = -1.0

[schedule]
t_end_yr = 1.0
dt_yr = 2.0e-3
seed = 5
"""


def _write_mini(tmp_path, toml_text) -> Path:
    (tmp_path / "demand.csv").write_text(
        "t_years,value\n" + "".join(f"{k / 12.0},0.002\n" for k in range(12)))
    path = tmp_path / "mini.toml"
    path.write_text(toml_text)
    return path


class TestRunLoop:
    def test_open_loop_equilibrium(self, short_demo):
        config = dataclasses.replace(short_demo, demand=None)
        record = run(config, feedback=False)
        np.testing.assert_array_equal(record.Q, np.zeros_like(record.Q))
        np.testing.assert_allclose(record.y_u - record.y_u[0], 0.0, atol=1e-12)
        np.testing.assert_allclose(record.sigma[:, -1], 0.0, atol=1e-15)
        assert record.mean_u[0] == record.mean_u[-1]

    def test_zero_input_mean_sr_stays_at_background(self, short_demo):
        config = dataclasses.replace(short_demo, demand=None)
        record = run(config, feedback=False)
        np.testing.assert_allclose(record.mean_sr, 0.99, atol=1e-9)
        np.testing.assert_allclose(record.mean_u, record.mean_u[0], atol=1e-15)

    def test_determinism_bitwise(self, short_demo):
        rec_a = run(short_demo)
        rec_b = run(short_demo)
        for name in ("y_u", "y_r", "sigma", "nu", "Q", "mean_u", "mean_sr",
                     "cum_events", "h0_u", "h0_ut"):
            np.testing.assert_array_equal(getattr(rec_a, name),
                                          getattr(rec_b, name))

    def test_record_shapes_uniform(self, short_demo):
        record = run(short_demo)
        n = record.n_samples
        assert n == short_demo.schedule.n_periods + 1
        for name in ("y_u", "y_r", "r_u", "r_r", "sigma", "nu", "Q", "D",
                     "mean_u", "mean_sr", "cum_events", "mass_residual",
                     "cg_iters", "h0_u", "h0_ut", "max_abs_ut", "max_abs_logr"):
            assert getattr(record, name).shape[0] == n

    def test_sigma_starts_at_zero(self, short_demo):
        # constant references equal the target, so the initial rate error is
        # the exp(log(R*)) round-trip: zero to machine precision
        record = run(short_demo)
        np.testing.assert_allclose(record.sigma[0], np.zeros(3), atol=1e-15)

    def test_abort_on_saturation(self, short_demo):
        from res_sim.scenario import SimulationAbort
        schedule = dataclasses.replace(short_demo.schedule, q_bound=1e-9)
        config = dataclasses.replace(short_demo, schedule=schedule)
        with pytest.raises(SimulationAbort, match="step"):
            run(config)

    def test_cumulative_events_match_trapezoid(self, short_demo):
        from res_sim.seismicity import cumulative_events
        record = run(short_demo)
        total = cumulative_events(record.mean_sr, short_demo.schedule.dt_c)
        assert record.cum_events[-1] == pytest.approx(total, rel=1e-12)
