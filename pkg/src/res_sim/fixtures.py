"""Synthetic desk-scale fixtures.

Everything here is synthetic: the domain outline, well layout, spatial
density and extraction history are invented at desk scale for testing and
demonstration.  They are shaped like a produced-gas reservoir (an irregular
outline, a cluster of historically active cells, monthly extraction with
seasonal swing) but correspond to no real field geometry.
"""

from __future__ import annotations

import numpy as np

from . import controller as ctrl
from .diffusion import DiffusionParams
from .domain_mesh import DomainGrid, RegionSet, WellSet, build_grid
from .scenario import (DemandSeries, ReferenceSpec, ScenarioConfig, Schedule,
                       build_demand_source)
from .seismicity import SrParams


def gaussian_density(grid: DomainGrid, center_km, sigma_km: float,
                     floor: float = 1e-4) -> np.ndarray:
    """Normalized isotropic Gaussian blob over the active cells."""
    xy = grid.cell_centers()
    r2 = (xy[:, 0] - center_km[0]) ** 2 + (xy[:, 1] - center_km[1]) ** 2
    d = np.exp(-r2 / (2.0 * sigma_km ** 2))
    d /= d.max()
    return np.maximum(d, floor)


def monthly_extraction(t_end_yr: float, f0: float, ramp_years: float = 2.0,
                       seasonal: float = 0.18, taper_start: float | None = None,
                       taper_floor: float = 0.35) -> DemandSeries:
    """Monthly non-negative extraction history with ramp-in and seasonal swing."""
    n_months = int(round(t_end_yr * 12))
    t = np.arange(n_months) / 12.0
    ramp = np.minimum(1.0, 0.5 + 0.5 * t / ramp_years)
    season = 1.0 + seasonal * np.sin(2.0 * np.pi * (t + 0.2))
    values = f0 * ramp * season
    if taper_start is not None:
        frac = np.clip((t - taper_start) / max(t_end_yr - taper_start, 1e-9), 0.0, 1.0)
        values *= 1.0 - (1.0 - taper_floor) * frac
    return DemandSeries(times=t, values=values)


def demo_config(seed: int = 7) -> ScenarioConfig:
    """Reduced closed-loop scenario that runs in seconds.

    20x20 grid over 15x15 km with an elliptical outline, two pressure
    regions, one seismicity region covering the remainder, nine wells and a
    four-year monthly extraction demand.
    """
    extent = (15.0, 15.0)
    grid = build_grid(extent, (20, 20),
                      _ellipse_mask(extent, (20, 20), (7.5, 7.5), (6.5, 5.5)))

    wells = WellSet(grid)
    pressure_wells = {"u1": [(4, 10), (6, 12)], "u2": [(12, 5), (14, 7)]}
    sr_wells = [(10, 9), (11, 7), (8, 6), (13, 11), (7, 13)]
    for cells in pressure_wells.values():
        for i, j in cells:
            wells.add_well([grid.cell_id(i, j)])
    for i, j in sr_wells:
        wells.add_well([grid.cell_id(i, j)])

    regions = RegionSet(grid)
    for name, (i0, j0, i1, j1) in {"u1": (4, 10, 6, 12), "u2": (12, 5, 14, 7)}.items():
        ids = [grid.cell_id(i, j) for j in range(j0, j1 + 1)
               for i in range(i0, i1 + 1) if grid.active_mask[j, i]]
        regions.define_region(ids, "pressure", name)
    regions.define_region(regions.unclaimed_cells(), "sr", "R1")

    beta = 5.7e-4
    diffusion = DiffusionParams(beta=beta, c_hy=4.4e-2 * 8760.0)
    gamma1_max = 4.7
    density = gaussian_density(grid, (8.0, 6.5), 1.4)
    gamma1 = gamma1_max * density
    sr = SrParams(gamma1=gamma1, gamma2=1.08e-2, r_star=0.99,
                  gamma1_bounds=(float(gamma1.min()), gamma1_max),
                  gamma2_bounds=(1.08e-3, 1.08e-1), r_star_bounds=(0.5, 2.0))

    gains = ctrl.design_gains(k_bar2=1e4, l=4e-2, b=1.0, delta_b=0.0,
                              margin=2.22, alpha1=0.3, alpha2=80.0)
    beta0, g10_r0 = ctrl.select_nominals(beta=beta, gamma1_max=gamma1_max,
                                         gamma_r=2.0, safety=1.1,
                                         min_well_volume=grid.cell_area)
    omap = ctrl.OutputMap(pressure_regions=tuple(regions.pressure),
                          sr_regions=tuple(regions.sr),
                          gamma1_0_rstar_0=g10_r0)
    b0 = ctrl.build_B0(omap, wells, beta0)

    series = monthly_extraction(4.0, f0=0.019, ramp_years=1.0)
    demand = build_demand_source([{"wells": "all", "scale": -1.0}], wells.n,
                                 series, seed=seed)

    pressure_refs = [ReferenceSpec("sigmoid", target=-1.0, t_mid=1.2, tau=0.4),
                     ReferenceSpec("sigmoid", target=-1.1, t_mid=1.2, tau=0.4)]
    sr_refs = [ReferenceSpec("constant", target=0.99)]

    return ScenarioConfig(
        name="demo", grid=grid, wells=wells, regions=regions,
        diffusion=diffusion, sr=sr, gains=gains, output_map=omap, B0=b0,
        demand=demand, pressure_refs=pressure_refs, sr_refs=sr_refs,
        schedule=Schedule(t_end=4.0, dt=2e-3, dt_c=2e-3), seed=seed,
        assumptions={}, beta0=beta0, source_path="<demo>")


def _ellipse_mask(extent, resolution, center, radii) -> np.ndarray:
    nx, ny = resolution
    dx, dy = extent[0] / nx, extent[1] / ny
    x = (np.arange(nx) + 0.5) * dx
    y = (np.arange(ny) + 0.5) * dy
    xx, yy = np.meshgrid(x, y)
    return ((xx - center[0]) / radii[0]) ** 2 + ((yy - center[1]) / radii[1]) ** 2 <= 1.0
