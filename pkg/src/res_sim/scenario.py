"""Scenario configuration, reference/demand signals, and the closed-loop run.

A scenario is declared in a TOML file with sections [grid], [wells],
[regions], [diffusion], [sr], [controller], [references], [demand] and
[schedule]; CSV side files supply the demand history (header
``t_years,value``, monotone time, held piecewise constant between samples)
and optionally the normalized spatial density d(x) for gamma1 (rows
``cell_id,value``).

The run loop advances one control period dt_c at a time:

    1. measure the regional outputs and evaluate the references,
    2. form the error vector,
    3. update the super-twisting law and allocate well rates (held for the
       whole period, zero-order hold),
    4. sub-step the pressure diffusion at dt, feeding each sub-step's
       backward-difference rate to the seismicity update,
    5. record the sample.

Everything is deterministic for a fixed configuration and seed: the demand
weight matrix is drawn from a seeded generator at load time and stored in
the record.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import controller as ctrl
from .diffusion import (HOURS_PER_YEAR, DiffusionParams, DiffusionSolver,
                        SolverError, h0_norm, initial_pressure_state, mean_over)
from .domain_mesh import DomainGrid, RegionSet, WellSet, build_grid, check_assumption_a4
from .seismicity import SrParams, initial_sr_state, sr_field, step_sr


class ConfigError(ValueError):
    """Scenario file cannot be parsed or fails validation.

    When a declared modelling assumption is violated, `assumption` names it
    ("A1" ... "A4", or "demand" for the input-count/rank requirements).
    """

    def __init__(self, message: str, assumption: str | None = None):
        super().__init__(message)
        self.assumption = assumption


class SimulationAbort(RuntimeError):
    """Closed-loop run aborted; carries the failing period index and time."""

    def __init__(self, message: str, step: int, time: float):
        super().__init__(f"aborted at step {step} (t = {time:.6g} yr): {message}")
        self.step = step
        self.time = time


# ---------------------------------------------------------------------------
# reference signals


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference trajectory: constant, or a sigmoid pinned at the start value.

    The sigmoid is shifted and rescaled so r(0) equals the measured initial
    output exactly (no artificial initial error) and r(t) -> target as
    t -> infinity; it is smooth with bounded first and second derivatives.
    """

    kind: str
    target: float
    t_mid: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "sigmoid"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if not np.isfinite(self.target):
            raise ValueError("reference target must be finite")
        if self.kind == "sigmoid" and self.tau <= 0:
            raise ValueError("sigmoid tau must be positive")


def reference_at(spec: ReferenceSpec, y0: float, t: float) -> float:
    """Evaluate a reference at time t, given the pinned start value y0."""
    if spec.kind == "constant":
        return spec.target
    g = 1.0 / (1.0 + np.exp(-(t - spec.t_mid) / spec.tau))
    g0 = 1.0 / (1.0 + np.exp(spec.t_mid / spec.tau))
    return y0 + (spec.target - y0) * (g - g0) / (1.0 - g0)


# ---------------------------------------------------------------------------
# demand signal


@dataclass(frozen=True)
class DemandSeries:
    """Sampled scalar history f(t), held piecewise constant between samples."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.size == 0:
            raise ValueError("empty series")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("demand series times must be strictly increasing")

    def value_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        idx = min(max(idx, 0), self.times.size - 1)
        return float(self.values[idx])


def load_demand_csv(path) -> DemandSeries:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t_years", "value"]:
            raise ConfigError(f"{path}: expected CSV header 't_years,value'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if not rows:
        raise ConfigError(f"{path}: empty series")
    t, v = zip(*rows)
    return DemandSeries(times=np.asarray(t), values=np.asarray(v))


@dataclass(frozen=True)
class DemandSource:
    """Demand constraint: weight matrix W (n_r x n) and D(t) = scales * f(t)."""

    W: np.ndarray
    scales: np.ndarray
    series: DemandSeries

    @property
    def n_rows(self) -> int:
        return self.W.shape[0]


def demand_at(source: DemandSource, t: float) -> np.ndarray:
    """Demand vector at time t (piecewise-constant history times row scales)."""
    return source.scales * source.series.value_at(t)


def build_demand_source(rows: list[dict], n_wells: int, series: DemandSeries,
                        seed: int) -> DemandSource:
    """Assemble W from per-row well lists; weights are uniform draws in
    [0.8, 1.2] from a seeded generator unless given explicitly."""
    rng = np.random.default_rng(seed)
    W = np.zeros((len(rows), n_wells))
    scales = np.zeros(len(rows))
    for r, row in enumerate(rows):
        wells = row.get("wells", "all")
        if wells == "all":
            idx = np.arange(n_wells)
        else:
            idx = np.asarray(wells, dtype=int)
            if idx.size == 0 or idx.min() < 0 or idx.max() >= n_wells:
                raise ConfigError(f"demand row {r}: well indices out of range")
        if "weights" in row:
            w = np.asarray(row["weights"], dtype=float)
            if w.shape != idx.shape:
                raise ConfigError(f"demand row {r}: weights length mismatch")
        else:
            w = rng.uniform(0.8, 1.2, size=idx.size)
        W[r, idx] = w
        scales[r] = float(row.get("scale", 1.0))
    return DemandSource(W=W, scales=scales, series=series)


# ---------------------------------------------------------------------------
# scenario configuration


@dataclass(frozen=True)
class Schedule:
    t_end: float
    dt: float
    dt_c: float
    q_bound: float | None = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dt_c < self.dt:
            raise ValueError("control period dt_c must be >= dt")
        ratio = self.dt_c / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_c must be an integer multiple of dt")
        if self.q_bound is not None and self.q_bound <= 0:
            raise ValueError("input bound must be positive")

    @property
    def n_sub(self) -> int:
        return int(round(self.dt_c / self.dt))

    @property
    def n_periods(self) -> int:
        return int(round(self.t_end / self.dt_c))


@dataclass
class ScenarioConfig:
    name: str
    grid: DomainGrid
    wells: WellSet
    regions: RegionSet
    diffusion: DiffusionParams
    sr: SrParams
    gains: ctrl.GstaGains
    output_map: ctrl.OutputMap
    B0: np.ndarray
    demand: DemandSource | None
    pressure_refs: list[ReferenceSpec]
    sr_refs: list[ReferenceSpec]
    schedule: Schedule
    seed: int
    assumptions: dict = field(default_factory=dict)
    beta0: float = 0.0
    source_path: str = ""


def _mask_from_spec(spec, nx: int, ny: int, lx: float, ly: float) -> np.ndarray | None:
    if spec is None:
        return None
    kind = spec.get("kind", "full")
    if kind == "full":
        return None
    if kind == "ellipse":
        cx, cy = spec["center_km"]
        rx, ry = spec["radii_km"]
        dx, dy = lx / nx, ly / ny
        i = (np.arange(nx) + 0.5) * dx
        j = (np.arange(ny) + 0.5) * dy
        xx, yy = np.meshgrid(i, j)
        return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    raise ConfigError(f"unknown mask kind {kind!r}")


def load_density_csv(path, grid: DomainGrid) -> np.ndarray:
    """Read a (cell_id, value) density table and normalize to unit maximum."""
    path = Path(path)
    d = np.zeros(grid.n_active)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["cell_id", "value"]:
            raise ConfigError(f"{path}: expected CSV header 'cell_id,value'")
        for row in reader:
            if not row:
                continue
            cid, val = int(row[0]), float(row[1])
            d[grid.compact_index(cid)[0]] = val
    if d.max() <= 0:
        raise ConfigError(f"{path}: density must have a positive maximum")
    return d / d.max()


def _region_cells(spec: dict, grid: DomainGrid, regions: RegionSet) -> np.ndarray:
    if spec.get("remainder"):
        return regions.unclaimed_cells()
    if "cells" in spec:
        return np.asarray(spec["cells"], dtype=np.int64)
    if "rect" in spec:
        i0, j0, i1, j1 = spec["rect"]
        ids = []
        for j in range(j0, j1 + 1):
            for i in range(i0, i1 + 1):
                cid = grid.cell_id(i, j)
                if 0 <= i < grid.nx and 0 <= j < grid.ny and grid.active_mask[j, i]:
                    ids.append(cid)
        if not ids:
            raise ConfigError(f"region rect {spec['rect']} covers no active cells")
        return np.asarray(ids, dtype=np.int64)
    raise ConfigError("region spec needs 'rect', 'cells' or 'remainder'")


def load_scenario(path, overrides: dict | None = None,
                  strict: bool = True) -> ScenarioConfig:
    """Load and validate a scenario file.

    overrides may replace "dt", "t_end", "seed" or "bc" before validation.
    With strict=True (default) any failed assumption raises ConfigError
    naming it; with strict=False the config is returned with the report in
    `.assumptions` whenever it can be built at all.
    """
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: parse error: {e}")

    overrides = overrides or {}
    base = path.parent

    try:
        return _build_scenario(raw, base, path, overrides, strict)
    except ConfigError:
        raise
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{path}: missing or malformed field: {e}")


def _build_scenario(raw: dict, base: Path, path: Path, overrides: dict,
                    strict: bool) -> ScenarioConfig:
    name = raw.get("meta", {}).get("name", path.stem)
    assumptions: dict[str, tuple[bool, str]] = {}

    g = raw["grid"]
    nx, ny = (int(v) for v in g["resolution"])
    lx, ly = (float(v) for v in g["extent_km"])
    if "grid" in overrides:
        nx, ny = overrides["grid"]
    mask = _mask_from_spec(g.get("mask"), nx, ny, lx, ly)
    try:
        grid = build_grid((lx, ly), (nx, ny), mask)
    except ValueError as e:
        raise ConfigError(f"[grid]: {e}")

    wells = WellSet(grid)
    for entry in raw["wells"]["cells"]:
        i, j = int(entry[0]), int(entry[1])
        try:
            wells.add_well([grid.cell_id(i, j)])
        except ValueError as e:
            raise ConfigError(f"[wells]: cell ({i}, {j}): {e}")

    regions = RegionSet(grid)
    try:
        for spec in raw.get("regions", {}).get("pressure", []):
            regions.define_region(_region_cells(spec, grid, regions), "pressure",
                                  spec.get("name"))
        for spec in raw.get("regions", {}).get("sr", []):
            regions.define_region(_region_cells(spec, grid, regions), "sr",
                                  spec.get("name"))
    except ValueError as e:
        msg = str(e)
        raise ConfigError(f"[regions]: {msg}",
                          assumption="A4" if "A4" in msg else None)

    d = raw["diffusion"]
    beta = float(d["beta_per_mpa"])
    if "c_hy_km2_per_yr" in d:
        c_hy = float(d["c_hy_km2_per_yr"])
    else:
        c_hy = float(d["c_hy_km2_per_hr"]) * HOURS_PER_YEAR
    bc = overrides.get("bc", d.get("bc", "neumann"))
    try:
        diffusion = DiffusionParams(beta=beta, c_hy=c_hy, bc_kind=bc,
                                    theta=float(d.get("theta", 1.0)))
    except ValueError as e:
        raise ConfigError(f"[diffusion]: {e}", assumption="A3")

    s = raw["sr"]
    gamma1_max = float(s["gamma1_max_per_mpa"])
    if "density_csv" in s:
        density = load_density_csv(base / s["density_csv"], grid)
        density = np.maximum(density, 1e-4)
    else:
        density = np.ones(grid.n_active)
    gamma1 = gamma1_max * density
    g1_bounds = tuple(s.get("gamma1_bounds", (float(gamma1.min()), gamma1_max)))
    gamma2 = float(s["gamma2_per_event"])
    g2_bounds = tuple(s.get("gamma2_bounds", (gamma2 / 10.0, gamma2 * 10.0)))
    r_star = float(s["r_star_events_per_yr"])
    r_bounds = tuple(s.get("r_star_bounds", (r_star / 2.0, r_star * 2.0)))
    try:
        sr = SrParams(gamma1=gamma1, gamma2=gamma2, r_star=r_star,
                      gamma1_bounds=g1_bounds, gamma2_bounds=g2_bounds,
                      r_star_bounds=r_bounds)
        assumptions["A3"] = (True, "plant parameters positive and inside "
                                   "declared brackets")
    except ValueError as e:
        # cannot build a meaningful config from out-of-bracket parameters,
        # so this fails even in report-only mode
        raise ConfigError(f"[sr]: {e}", assumption="A3")

    c = raw["controller"]
    try:
        gains = ctrl.design_gains(
            k_bar2=float(c["k_bar2"]), l=float(c["l"]), b=float(c.get("b", 1.0)),
            delta_b=float(c.get("delta_b", 0.0)), margin=float(c.get("margin", 2.22)),
            alpha1=float(c.get("alpha1", 0.3)), alpha2=float(c.get("alpha2", 80.0)))
    except ValueError as e:
        raise ConfigError(f"[controller]: {e}")

    sr_well_volumes = [w.volume for w in wells.wells
                       for reg in regions.sr
                       if np.isin(w.cells, reg.cells, assume_unique=True).all()]
    min_sr_well_vol = min(sr_well_volumes) if sr_well_volumes else grid.cell_area
    if "beta0" in c and "gamma1_0_rstar_0" in c:
        beta0 = float(c["beta0"])
        g10_r0 = float(c["gamma1_0_rstar_0"])
    else:
        beta0, g10_r0 = ctrl.select_nominals(
            beta=beta, gamma1_max=gamma1_max,
            gamma_r=float(c.get("gamma_r_estimate", 10.0)),
            min_well_volume=min_sr_well_vol,
            safety=float(c.get("nominal_safety", 1.2)))

    omap = ctrl.OutputMap(pressure_regions=tuple(regions.pressure),
                          sr_regions=tuple(regions.sr),
                          gamma1_0_rstar_0=g10_r0)
    B0 = ctrl.build_B0(omap, wells, beta0)

    refs = raw["references"]
    pressure_refs = [_reference_spec(entry, "pressure")
                     for entry in refs.get("pressure", [])]
    sr_refs = [_reference_spec(entry, "sr") for entry in refs.get("sr", [])]
    if len(pressure_refs) != regions.m_u or len(sr_refs) != regions.m_r:
        raise ConfigError("[references]: need one reference per output region")
    assumptions["A2"] = (True, "references are constants or pinned sigmoids "
                               "with bounded derivatives")

    demand = None
    if "demand" in raw:
        dm = raw["demand"]
        series = load_demand_csv(base / dm["csv"])
        demand = build_demand_source(dm.get("rows", []), wells.n, series,
                                     seed=int(dm.get("seed", 0)))

    sched_raw = raw["schedule"]
    try:
        schedule = Schedule(
            t_end=float(overrides.get("t_end", sched_raw["t_end_yr"])),
            dt=float(overrides.get("dt", sched_raw["dt_yr"])),
            dt_c=float(overrides.get("dt_c",
                                     c.get("dt_c_yr",
                                           overrides.get("dt", sched_raw["dt_yr"])))),
            q_bound=sched_raw.get("q_bound"))
    except ValueError as e:
        raise ConfigError(f"[schedule]: {e}")
    seed = int(overrides.get("seed", sched_raw.get("seed", 0)))

    if schedule.q_bound is not None:
        assumptions["A1"] = (True, f"input norm bound {schedule.q_bound} declared")
    else:
        assumptions["A1"] = (True, "no saturation bound configured; inputs "
                                   "bounded by the continuous control law")

    a4 = check_assumption_a4(regions, wells)
    assumptions["A4"] = (a4.passed, str(a4))
    if strict and not a4.passed:
        raise ConfigError(f"assumption A4 violated:\n{a4}", assumption="A4")

    try:
        ctrl.make_controller_state(B0, demand.W if demand is not None else None)
        assumptions["demand"] = (True, "allocation matrices well conditioned")
    except ValueError as e:
        assumptions["demand"] = (False, str(e))
        if strict:
            raise ConfigError(str(e), assumption="demand")

    return ScenarioConfig(name=name, grid=grid, wells=wells, regions=regions,
                          diffusion=diffusion, sr=sr, gains=gains,
                          output_map=omap, B0=B0, demand=demand,
                          pressure_refs=pressure_refs, sr_refs=sr_refs,
                          schedule=schedule, seed=seed, assumptions=assumptions,
                          beta0=beta0, source_path=str(path))


def _reference_spec(entry: dict, kind_label: str) -> ReferenceSpec:
    kind = entry.get("kind", "constant")
    if kind_label == "pressure":
        target = float(entry["target_mpa"])
    else:
        target = float(entry["target_events_per_yr"])
    try:
        return ReferenceSpec(kind=kind, target=target,
                             t_mid=float(entry.get("t_mid_yr", 0.0)),
                             tau=float(entry.get("tau_yr", 1.0)))
    except ValueError as e:
        raise ConfigError(f"[references]: {e}", assumption="A2")


# ---------------------------------------------------------------------------
# closed-loop run


@dataclass
class RunRecord:
    """Uniformly sampled closed-loop history at the control period dt_c.

    Row k describes the state at t[k]; Q[k] and D[k] are the input and
    demand held over [t[k], t[k+1]).  The final row repeats the last applied
    input so all series share one length.  Diagnostics in row k (mass
    residual, CG iterations) describe the advance out of sample k.
    """

    t: np.ndarray
    y_u: np.ndarray
    y_r: np.ndarray
    r_u: np.ndarray
    r_r: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    Q: np.ndarray
    D: np.ndarray
    mean_u: np.ndarray
    mean_sr: np.ndarray
    cum_events: np.ndarray
    h0_u: np.ndarray
    h0_ut: np.ndarray
    max_abs_ut: np.ndarray
    max_abs_logr: np.ndarray
    mass_residual: np.ndarray
    cg_iters: np.ndarray
    meta: dict

    @property
    def n_samples(self) -> int:
        return self.t.size


def run(config: ScenarioConfig, feedback: bool = True) -> RunRecord:
    """Execute the closed loop and return the sampled record.

    feedback=False zeroes the tracking law (the demand particular term, if
    any, still acts): the uncontrolled baseline of the same scenario.
    """
    grid, wells = config.grid, config.wells
    sched = config.schedule
    omap = config.output_map
    gains = config.gains
    solver = DiffusionSolver(grid, config.diffusion, wells)
    neumann = config.diffusion.bc_kind == "neumann"

    p_state = initial_pressure_state(grid)
    s_state = initial_sr_state(grid, params=config.sr)
    c_state = ctrl.make_controller_state(
        config.B0, config.demand.W if config.demand is not None else None)

    n_periods, n_sub = sched.n_periods, sched.n_sub
    n_samples = n_periods + 1
    m_u, m_r, m, n = omap.m_u, omap.m_r, omap.m, wells.n
    n_r = config.demand.n_rows if config.demand is not None else 0

    rec = RunRecord(
        t=np.arange(n_samples) * sched.dt_c,
        y_u=np.zeros((n_samples, m_u)), y_r=np.zeros((n_samples, m_r)),
        r_u=np.zeros((n_samples, m_u)), r_r=np.zeros((n_samples, m_r)),
        sigma=np.zeros((n_samples, m)), nu=np.zeros((n_samples, m)),
        Q=np.zeros((n_samples, n)), D=np.zeros((n_samples, n_r)),
        mean_u=np.zeros(n_samples), mean_sr=np.zeros(n_samples),
        cum_events=np.zeros(n_samples), h0_u=np.zeros(n_samples),
        h0_ut=np.zeros(n_samples), max_abs_ut=np.zeros(n_samples),
        max_abs_logr=np.zeros(n_samples),
        mass_residual=np.zeros(n_samples), cg_iters=np.zeros(n_samples, dtype=int),
        meta={},
    )

    r_field = sr_field(s_state)
    y_u0, y_r0 = ctrl.compute_outputs(p_state.u, r_field, omap)

    def sample_plant(k):
        r_now = sr_field(s_state)
        rec.mean_u[k] = mean_over(p_state.u, grid)
        rec.mean_sr[k] = mean_over(r_now, grid)
        rec.h0_u[k] = h0_norm(p_state.u, grid)
        rec.h0_ut[k] = h0_norm(p_state.u_t, grid)
        rec.max_abs_ut[k] = float(np.max(np.abs(p_state.u_t)))
        rec.max_abs_logr[k] = float(np.max(np.abs(s_state.log_r)))
        return r_now

    for k in range(n_samples):
        t = rec.t[k]
        r_now = sample_plant(k)
        y_u, y_r = ctrl.compute_outputs(p_state.u, r_now, omap)
        r_u = np.array([reference_at(spec, y_u0[i], t)
                        for i, spec in enumerate(config.pressure_refs)])
        r_r = np.array([reference_at(spec, y_r0[i], t)
                        for i, spec in enumerate(config.sr_refs)])
        sigma = ctrl.compute_error(y_u, y_r, r_u, r_r, omap)
        c_state = ctrl.with_error(c_state, sigma)

        rec.y_u[k], rec.y_r[k] = y_u, y_r
        rec.r_u[k], rec.r_r[k] = r_u, r_r
        rec.sigma[k] = sigma
        rec.nu[k] = c_state.nu

        if k == n_periods:
            if n_periods > 0:
                rec.Q[k] = rec.Q[k - 1]
                rec.D[k] = rec.D[k - 1]
            break

        if feedback:
            v, c_state = ctrl.gsta_step(c_state, gains, sched.dt_c)
        else:
            v = np.zeros(m)
        if config.demand is not None:
            d_vec = demand_at(config.demand, t)
            q_vec = ctrl.allocate(v, c_state, d_vec)
            rec.D[k] = d_vec
        else:
            q_vec = ctrl.allocate(v, c_state)
        rec.Q[k] = q_vec

        worst_residual = 0.0
        worst_iters = 0
        try:
            for _ in range(n_sub):
                p_state, info = solver.step(p_state, q_vec, sched.dt,
                                            q_bound=sched.q_bound)
                s_state = step_sr(s_state, config.sr, p_state.u_t, sched.dt)
                if neumann:
                    worst_residual = max(worst_residual, info["mass_residual"])
                worst_iters = max(worst_iters, info["cg_iters"])
        except (ValueError, SolverError) as e:
            raise SimulationAbort(str(e), step=k, time=float(t))
        rec.mass_residual[k] = worst_residual if neumann else np.nan
        rec.cg_iters[k] = worst_iters

    # cumulative events from the sampled domain-mean rate (trapezoid)
    if n_samples > 1:
        increments = 0.5 * (rec.mean_sr[:-1] + rec.mean_sr[1:]) * sched.dt_c
        rec.cum_events[1:] = np.cumsum(increments)

    rec.meta = {
        "name": config.name,
        "feedback": feedback,
        "beta": config.diffusion.beta,
        "beta0": config.beta0,
        "volume": grid.volume,
        "extent": grid.extent,
        "cell_area": grid.cell_area,
        "n_wells": n,
        "well_volumes": [w.volume for w in wells.wells],
        "c_hy_min": float(np.min(solver.c_field)),
        "bc_kind": config.diffusion.bc_kind,
        "dt": sched.dt,
        "dt_c": sched.dt_c,
        "t_end": sched.t_end,
        "q_bound": sched.q_bound,
        "seed": config.seed,
        "gamma1_0_rstar_0": omap.gamma1_0_rstar_0,
        "r_star": float(np.mean(np.asarray(config.sr.r_star))),
        "gains": {"k1": gains.k1, "k2": gains.k2, "b": gains.b,
                  "alpha1": gains.alpha1, "alpha2": gains.alpha2},
        "W": config.demand.W.copy() if config.demand is not None else None,
        "y_u0": y_u0, "y_r0": y_r0,
        "pressure_targets": [s.target for s in config.pressure_refs],
        "sr_targets": [s.target for s in config.sr_refs],
        "u0_h0": rec.h0_u[0] if n_samples else 0.0,
        "u0_mean": rec.mean_u[0] if n_samples else 0.0,
    }
    return rec
