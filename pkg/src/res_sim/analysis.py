"""Post-run verification of provable properties, and figure-ready CSV export.

Hard checks (machine-precision contracts of the discretization):
  * mean-pressure balance under no-flux boundaries,
  * exact demand satisfaction W Q = D.

Informational checks (worst-case estimates, conservative by construction):
  * decay-plus-input bounds on ||u|| and ||u_t|| built from the measured
    input magnitudes, the domain constant of the rectangle
    Poincare-Wirtinger estimate (max(Lx, Ly) / pi), and the declared
    parameter brackets,
  * the worst-case |ln R| implied by the measured pressure-rate maximum.

All emitted CSVs use shortest round-trip float formatting, so parsing them
reproduces the in-memory series exactly and re-emitting a record is
byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .scenario import RunRecord

MASS_BALANCE_RTOL = 1e-12
DEMAND_RTOL = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """One verified quantity: measured extreme vs. its theoretical bound.

    `inputs` records every constant that entered the bound so the check can
    be audited.  `passed` is None for not-applicable reports.
    """

    name: str
    measured: float
    bound: float
    inputs: dict = dc_field(default_factory=dict)
    passed: bool | None = None
    applicable: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "inputs": {k: (v if not isinstance(v, np.generic) else v.item())
                       for k, v in self.inputs.items()},
            "passed": self.passed,
            "applicable": self.applicable,
            "note": self.note,
        }


def error_norm_series(record: RunRecord) -> np.ndarray:
    """Euclidean norm of the stacked error at every sample."""
    if record.n_samples == 0:
        raise ValueError("empty record")
    return np.linalg.norm(record.sigma, axis=1)


def detect_convergence(series, threshold: float, hold: float,
                       dt: float) -> float | None:
    """Earliest time t such that the series stays below threshold on [t, t + hold].

    The window must fit inside the sampled span.  Monotone in threshold: a
    larger threshold never yields a later time.  Returns None if no window
    qualifies.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    series = np.asarray(series, dtype=float)
    window = int(math.ceil(hold / dt)) + 1
    if window > series.size:
        return None
    below = series < threshold
    # run-length of consecutive below-threshold samples starting at k
    run = np.zeros(series.size + 1, dtype=int)
    for k in range(series.size - 1, -1, -1):
        run[k] = run[k + 1] + 1 if below[k] else 0
    for k in range(series.size - window + 1):
        if run[k] >= window:
            return k * dt
    return None


def demand_residual(record: RunRecord) -> float:
    """max over samples of ||W Q - D||, or 0.0 when no demand is configured."""
    w = record.meta.get("W")
    if w is None or record.D.shape[1] == 0:
        return 0.0
    resid = record.Q @ np.asarray(w).T - record.D
    return float(np.max(np.linalg.norm(resid, axis=1)))


def verify_demand(record: RunRecord) -> BoundReport:
    w = record.meta.get("W")
    if w is None:
        return BoundReport(name="demand_exactness", measured=0.0, bound=0.0,
                           applicable=False, note="no demand constraint configured")
    measured = demand_residual(record)
    d_inf = float(np.max(np.abs(record.D))) if record.D.size else 0.0
    bound = DEMAND_RTOL * max(1.0, d_inf)
    return BoundReport(name="demand_exactness", measured=measured, bound=bound,
                       inputs={"demand_sup_norm": d_inf, "rtol": DEMAND_RTOL},
                       passed=measured <= bound)


def verify_mass_balance(record: RunRecord) -> BoundReport:
    """Per-period mean-pressure balance, recomputed from the recorded series.

    Under no-flux boundaries every period must satisfy
    mean_u[k+1] - mean_u[k] = dt_c * sum(Q_k) / (beta * V) to within
    1e-12 relative.  Not applicable to zero-boundary-value runs.
    """
    meta = record.meta
    if meta.get("bc_kind") != "neumann":
        return BoundReport(name="mean_pressure_balance", measured=float("nan"),
                           bound=MASS_BALANCE_RTOL, applicable=False,
                           note="not applicable: boundaries are not no-flux")
    if record.n_samples < 2:
        return BoundReport(name="mean_pressure_balance", measured=0.0,
                           bound=MASS_BALANCE_RTOL, passed=True,
                           note="fewer than two samples")
    beta, volume, dt_c = meta["beta"], meta["volume"], meta["dt_c"]
    gain = dt_c * np.sum(record.Q[:-1], axis=1) / (beta * volume)
    resid = np.abs(np.diff(record.mean_u) - gain)
    scale = np.maximum(1.0, np.abs(record.mean_u[:-1]))
    measured = float(np.max(resid / scale))
    return BoundReport(name="mean_pressure_balance", measured=measured,
                       bound=MASS_BALANCE_RTOL,
                       inputs={"beta": beta, "volume": volume, "dt_c": dt_c},
                       passed=measured <= MASS_BALANCE_RTOL)


def _poincare_epsilon(extent) -> float:
    """Rectangle estimate of the Poincare-Wirtinger constant: max side / pi."""
    return max(extent) / math.pi


def verify_eiss(record: RunRecord, declared_l_q: float | None = None,
                declared_l_qdot: float | None = None) -> list[BoundReport]:
    """Decay-plus-input bounds on the pressure norms, from measured inputs.

    The input magnitudes L_Q = max ||Q(t)|| and L_Qdot = max ||dQ/dt||
    (difference quotient of the zero-order-held input) are measured from the
    record unless declared values are given; a declared value below the
    measurement flags the report as inconsistent.  With
    s = (1/sqrt(V_T*)) = sum_i (1/sqrt(V_i*) - 1/sqrt(V)) and
    r = (k/eta)_min = beta * c_hy_min:

        ||u(t)||   <= ||u(0)|| + 2 sqrt(V) |mean u(0)|
                      + (eps/r * s + t/(beta sqrt(V))) * sqrt(n) * L_Q
        ||u_t(t)|| <= eps/r * s * sqrt(n) * L_Qdot + sqrt(n)/(beta sqrt(V)) * L_Q

    Conservative: failure indicates a real violation, not tightness.
    """
    meta = record.meta
    if record.n_samples < 2:
        raise ValueError("record too short")
    beta, volume = meta["beta"], meta["volume"]
    n = meta["n_wells"]
    eps = _poincare_epsilon(meta["extent"])
    k_over_eta_min = beta * meta["c_hy_min"]
    inv_sqrt_vt = float(sum(1.0 / math.sqrt(v) - 1.0 / math.sqrt(volume)
                            for v in meta["well_volumes"]))
    vt_star = 1.0 / inv_sqrt_vt ** 2 if inv_sqrt_vt > 0 else float("inf")

    measured_l_q = float(np.max(np.linalg.norm(record.Q, axis=1)))
    dq = np.diff(record.Q[:-1], axis=0)      # final row repeats the last input
    measured_l_qdot = (float(np.max(np.linalg.norm(dq, axis=1))) / meta["dt_c"]
                       if dq.shape[0] else 0.0)

    notes = []
    l_q = measured_l_q
    if declared_l_q is not None:
        if declared_l_q < measured_l_q:
            notes.append(f"declared L_Q = {declared_l_q:.6g} below measured "
                         f"{measured_l_q:.6g}: inconsistent inputs")
        else:
            l_q = declared_l_q
    l_qdot = measured_l_qdot
    if declared_l_qdot is not None:
        if declared_l_qdot < measured_l_qdot:
            notes.append(f"declared L_Qdot = {declared_l_qdot:.6g} below measured "
                         f"{measured_l_qdot:.6g}: inconsistent inputs")
        else:
            l_qdot = declared_l_qdot

    common = {
        "poincare_epsilon": eps,
        "k_over_eta_min": k_over_eta_min,
        "V_T_star": vt_star,
        "L_Q": l_q,
        "L_Qdot": l_qdot,
        "n_inputs": n,
        "volume": volume,
    }
    decay_factor = eps / k_over_eta_min * inv_sqrt_vt * math.sqrt(n)
    inconsistent = bool(notes)

    u_bound_t = (meta["u0_h0"] + 2.0 * math.sqrt(volume) * abs(meta["u0_mean"])
                 + decay_factor * l_q
                 + record.t * math.sqrt(n) * l_q / (beta * math.sqrt(volume)))
    peak_idx = int(np.argmax(record.h0_u))
    u_ok = bool(np.all(record.h0_u <= u_bound_t)) and not inconsistent
    u_report = BoundReport(
        name="pressure_norm_eiss", measured=float(record.h0_u[peak_idx]),
        bound=float(u_bound_t[peak_idx]),
        inputs={**common, "u0_h0": meta["u0_h0"], "u0_mean": meta["u0_mean"],
                "at_time": float(record.t[peak_idx])},
        passed=u_ok, note="; ".join(notes) or
        "time-dependent bound checked at every sample; shown at the "
        "measured peak")

    ut_bound = (decay_factor * l_qdot
                + math.sqrt(n) * l_q / (beta * math.sqrt(volume)))
    measured_ut = float(np.max(record.h0_ut))
    ut_report = BoundReport(
        name="pressure_rate_norm_eiss", measured=measured_ut, bound=ut_bound,
        inputs=common, passed=measured_ut <= ut_bound and not inconsistent,
        note="; ".join(notes) or
        "L_Qdot estimated by differencing the held input")
    return [u_report, ut_report]


def sr_log_bound_report(record: RunRecord, params) -> BoundReport:
    """Informational worst-case on |ln R| from the measured max |u_t|."""
    from .seismicity import log_rate_bound
    c = float(np.max(record.max_abs_ut))
    h0_max = float(record.max_abs_logr[0])
    bound = log_rate_bound(params, h0_max, c)
    measured = float(np.max(record.max_abs_logr))
    return BoundReport(
        name="log_rate_bound", measured=measured, bound=bound,
        inputs={"max_abs_ut": c, "initial_max_abs_logr": h0_max,
                "gamma1_max": params.gamma1_bounds[1],
                "gamma2_min": params.gamma2_bounds[0],
                "r_star_max": params.r_star_bounds[1]},
        passed=measured <= bound,
        note="pointwise-rate bound uses the measured max |u_t| as the "
             "almost-everywhere constant")


# ---------------------------------------------------------------------------
# CSV / JSON export


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> Path:
    rows = columns[0].size if columns else 0
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for k in range(rows):
            f.write(",".join(_fmt(col[k]) for col in columns) + "\n")
    return path


def emit_csv(record: RunRecord, out_dir, baseline: RunRecord | None = None) -> list[Path]:
    """Write the figure-family CSVs; deterministic and exactly re-parseable.

    Families: outputs vs references, control inputs, demand target vs
    achieved (when a demand is configured), error norm, cumulative events
    (controlled, background rate line, and optionally an uncontrolled
    baseline run).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m_u = record.y_u.shape[1]
    m_r = record.y_r.shape[1]
    n = record.Q.shape[1]
    files = []

    header = (["t_yr"]
              + [f"y_u_{i + 1}" for i in range(m_u)]
              + [f"r_u_{i + 1}" for i in range(m_u)]
              + [f"y_R_{i + 1}" for i in range(m_r)]
              + [f"r_R_{i + 1}" for i in range(m_r)])
    cols = ([record.t]
            + [record.y_u[:, i] for i in range(m_u)]
            + [record.r_u[:, i] for i in range(m_u)]
            + [record.y_r[:, i] for i in range(m_r)]
            + [record.r_r[:, i] for i in range(m_r)])
    files.append(_write_csv(out / "outputs.csv", header, cols))

    header = ["t_yr"] + [f"Q_{i + 1}" for i in range(n)]
    cols = [record.t] + [record.Q[:, i] for i in range(n)]
    files.append(_write_csv(out / "control_inputs.csv", header, cols))

    w = record.meta.get("W")
    if w is not None and record.D.shape[1] > 0:
        achieved = record.Q @ np.asarray(w).T
        n_r = record.D.shape[1]
        header = (["t_yr"] + [f"D_{i + 1}" for i in range(n_r)]
                  + [f"WQ_{i + 1}" for i in range(n_r)])
        cols = ([record.t] + [record.D[:, i] for i in range(n_r)]
                + [achieved[:, i] for i in range(n_r)])
        files.append(_write_csv(out / "demand.csv", header, cols))

    enorm = (np.linalg.norm(record.sigma, axis=1) if record.n_samples
             else np.zeros(0))
    files.append(_write_csv(out / "error_norm.csv", ["t_yr", "error_norm"],
                            [record.t, enorm]))

    r_star = record.meta.get("r_star", 0.0)
    header = ["t_yr", "events_controlled", "events_background"]
    cols = [record.t, record.cum_events, r_star * record.t]
    if baseline is not None:
        if baseline.n_samples != record.n_samples:
            raise ValueError("baseline record length does not match")
        header.append("events_uncontrolled")
        cols.append(baseline.cum_events)
    files.append(_write_csv(out / "events_cumulative.csv", header, cols))
    return files


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Parse an emitted CSV back into named columns (exact round trip)."""
    with open(path, newline="") as f:
        header = f.readline().strip().split(",")
        data = [[] for _ in header]
        for line in f:
            for i, tok in enumerate(line.strip().split(",")):
                data[i].append(float(tok))
    return {name: np.asarray(vals) for name, vals in zip(header, data)}


def write_report(record: RunRecord, out_dir, reports: list[BoundReport] | None = None,
                 extra: dict | None = None) -> Path:
    """Single structured JSON summary with stable key names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    enorm = np.linalg.norm(record.sigma, axis=1) if record.n_samples else np.zeros(0)
    meta = record.meta
    summary = {
        "scenario": meta.get("name", ""),
        "feedback": meta.get("feedback", True),
        "schedule": {"t_end": meta.get("t_end"), "dt": meta.get("dt"),
                     "dt_c": meta.get("dt_c"), "seed": meta.get("seed")},
        "final_time": float(record.t[-1]) if record.n_samples else 0.0,
        "error_norm_final": float(enorm[-1]) if enorm.size else 0.0,
        "error_norm_max": float(np.max(enorm)) if enorm.size else 0.0,
        "demand_max_residual": demand_residual(record),
        "mass_balance_max_rel_residual": verify_mass_balance(record).measured,
        "events_controlled_final": float(record.cum_events[-1]) if record.n_samples else 0.0,
        "events_background_final": float(meta.get("r_star", 0.0) * record.t[-1])
        if record.n_samples else 0.0,
        "chattering_bound_nu": meta.get("gains", {}).get("k2", 0.0) * meta.get("dt_c", 0.0),
        "poincare_epsilon": _poincare_epsilon(meta["extent"]) if "extent" in meta else None,
        "cg_iters_max": int(np.max(record.cg_iters)) if record.n_samples else 0,
        "bound_reports": [r.to_dict() for r in (reports or [])],
    }
    if extra:
        summary.update(extra)
    path = out / "report.json"
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
