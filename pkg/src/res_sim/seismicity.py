"""Pointwise seismicity-rate dynamics driven by the pressure rate.

Each active cell carries a rate R(x,t) [events/yr] obeying the logistic-like
law

    R_t = R * ( -gamma1(x) * u_t(x,t) - gamma2 * (R - R*) ),

so extraction (u_t < 0) pushes the rate above its background value R* and
the quadratic term relaxes it back.  The state is integrated in log
coordinates h = ln R,

    h_t = -gamma1 * u_t - gamma2 * (exp(h) - R*),

with classical RK4 and sub-stepping chosen so that dt_sub * gamma2 *
max(R, R*) <= 0.1.  Working in h keeps R positive by construction
regardless of step size.

gamma1 is a spatial density d(x), normalized to unit maximum, scaled by the
declared upper bound: gamma1(x) = gamma1_max * d(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain_mesh import DomainGrid

# exp(LOG_RATE_FLOOR) is the smallest representable rate (~1e-304): flooring
# the log state here keeps R strictly positive in double precision even under
# forcing far beyond any physical regime.
LOG_RATE_FLOOR = -700.0


@dataclass(frozen=True)
class SrParams:
    """Seismicity-rate parameters with their declared uncertainty brackets.

    gamma1: per-cell field [1/MPa]; gamma2: scalar [1/events];
    r_star: scalar or per-cell background rate [events/yr].  All values must
    be strictly positive and inside the declared (min, max) bounds; the
    bounds are what downstream worst-case estimates use.
    """

    gamma1: np.ndarray
    gamma2: float
    r_star: float | np.ndarray
    gamma1_bounds: tuple[float, float]
    gamma2_bounds: tuple[float, float]
    r_star_bounds: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "gamma1", np.asarray(self.gamma1, dtype=float))
        self.validate()

    def validate(self):
        g1m, g1M = self.gamma1_bounds
        g2m, g2M = self.gamma2_bounds
        rm, rM = self.r_star_bounds
        for lo, hi, label in ((g1m, g1M, "gamma1"), (g2m, g2M, "gamma2"),
                              (rm, rM, "r_star")):
            if not 0 < lo <= hi:
                raise ValueError(f"{label} bounds must be positive and ordered")
        if np.any(self.gamma1 < g1m) or np.any(self.gamma1 > g1M):
            raise ValueError("gamma1 outside declared bounds (A3)")
        if not g2m <= self.gamma2 <= g2M:
            raise ValueError("gamma2 outside declared bounds (A3)")
        r = np.asarray(self.r_star, dtype=float)
        if np.any(r < rm) or np.any(r > rM):
            raise ValueError("r_star outside declared bounds (A3)")

    def r_star_field(self, n_cells: int) -> np.ndarray:
        r = np.asarray(self.r_star, dtype=float)
        if r.ndim == 0:
            return np.full(n_cells, float(r))
        return r


def uniform_sr_params(n_cells: int, gamma1_max: float = 4.7,
                      gamma2: float = 1.08e-2, r_star: float = 0.99,
                      density: np.ndarray | None = None) -> SrParams:
    """Convenience constructor with wide declared brackets.

    density, if given, is normalized to unit maximum and scales gamma1_max;
    a small floor keeps gamma1 strictly positive everywhere.
    """
    if density is None:
        d = np.ones(n_cells)
    else:
        d = np.asarray(density, dtype=float)
        if d.shape != (n_cells,):
            raise ValueError("density shape does not match active cells")
        if np.any(d < 0) or d.max() <= 0:
            raise ValueError("density must be non-negative with a positive maximum")
        d = d / d.max()
        d = np.maximum(d, 1e-4)
    gamma1 = gamma1_max * d
    return SrParams(
        gamma1=gamma1,
        gamma2=gamma2,
        r_star=r_star,
        gamma1_bounds=(float(gamma1.min()), float(gamma1_max)),
        gamma2_bounds=(gamma2 / 10.0, gamma2 * 10.0),
        r_star_bounds=(float(np.min(r_star)) / 2.0, float(np.max(r_star)) * 2.0),
    )


@dataclass(frozen=True)
class SrState:
    """Log seismicity rate h = ln R per active cell, and time [yr]."""

    log_r: np.ndarray
    t: float = 0.0


def initial_sr_state(grid: DomainGrid, r0=None, params: SrParams | None = None,
                     t: float = 0.0) -> SrState:
    """Start from a given rate field, or from the background rate R*."""
    if r0 is None:
        if params is None:
            raise ValueError("need either r0 or params")
        r0 = params.r_star_field(grid.n_active)
    r0 = np.asarray(r0, dtype=float)
    if r0.ndim == 0:
        r0 = np.full(grid.n_active, float(r0))
    if np.any(r0 <= 0):
        raise ValueError("seismicity rate must be positive")
    return SrState(log_r=np.log(r0), t=t)


def sr_field(state: SrState) -> np.ndarray:
    """Seismicity rate R = exp(h) per cell; positive by construction."""
    return np.exp(state.log_r)


def step_sr(state: SrState, params: SrParams, u_t: np.ndarray, dt: float) -> SrState:
    """Advance the log-rate field one step with the pressure rate held fixed."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    u_t = np.asarray(u_t, dtype=float)
    if not np.all(np.isfinite(u_t)):
        raise ValueError("pressure rate must be finite")
    h = state.log_r
    if u_t.shape != h.shape:
        raise ValueError("pressure rate shape does not match state")

    rstar = params.r_star_field(h.size)
    g1, g2 = params.gamma1, params.gamma2
    forcing = -g1 * u_t

    r_scale = max(float(np.max(np.exp(h))), float(np.max(rstar)))
    n_sub = max(1, math.ceil(dt * g2 * r_scale / 0.1))
    dt_sub = dt / n_sub

    def rate(hh):
        return forcing - g2 * (np.exp(hh) - rstar)

    with np.errstate(over="ignore"):
        for _ in range(n_sub):
            k1 = rate(h)
            k2 = rate(h + 0.5 * dt_sub * k1)
            k3 = rate(h + 0.5 * dt_sub * k2)
            k4 = rate(h + dt_sub * k3)
            h = h + (dt_sub / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            h = np.maximum(h, LOG_RATE_FLOOR)

    if not np.all(np.isfinite(h)):
        raise ValueError("seismicity-rate update produced non-finite values")
    return SrState(log_r=h, t=state.t + dt)


def cumulative_events(mean_sr_series, dt: float) -> float:
    """Trapezoidal integral of a mean seismicity-rate series [events].

    The series is sampled uniformly at spacing dt [yr] and must be
    non-negative (a negative rate violates positivity of R).
    """
    series = np.asarray(mean_sr_series, dtype=float)
    if np.any(series < 0):
        raise ValueError("seismicity rate samples must be non-negative")
    if series.size < 2:
        return 0.0
    return float(np.trapezoid(series, dx=dt))


def log_rate_bound(params: SrParams, h0_max: float, ut_max: float) -> float:
    """Worst-case |ln R| implied by the declared brackets and a rate bound.

    For |u_t| <= c almost everywhere the shifted log state decays toward a
    ball of radius gamma1_max * c / gamma2_min, giving

        |ln R| <= |ln R(0)| + 2 (R*_max + 1) + gamma1_max * c / gamma2_min.

    Conservative by construction; used for informational reports, not as a
    hard assertion.
    """
    g1M = params.gamma1_bounds[1]
    g2m = params.gamma2_bounds[0]
    rM = params.r_star_bounds[1]
    return h0_max + 2.0 * (rM + 1.0) + g1M * ut_max / g2m
