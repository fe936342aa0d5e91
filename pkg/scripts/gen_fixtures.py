"""Regenerate the shipped synthetic scenario fixtures.

Writes scenarios/{scenario1,scenario2}.toml, the monthly extraction history
and the spatial density CSV.  All geometry, well placement and histories are
synthetic desk-scale stand-ins; run this script after changing any layout
constant below.  Deterministic: same inputs, byte-identical outputs.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from res_sim.domain_mesh import RegionSet, WellSet, build_grid, check_assumption_a4
from res_sim.fixtures import _ellipse_mask, gaussian_density, monthly_extraction

OUT = ROOT / "scenarios"

EXTENT = (30.0, 30.0)
RESOLUTION = (40, 40)
MASK_CENTER = (15.0, 15.0)
MASK_RADII = (13.5, 11.0)

PRESSURE_RECTS = {
    "u1": (5, 14, 8, 17),
    "u2": (13, 25, 16, 28),
    "u3": (25, 20, 28, 23),
    "u4": (13, 7, 16, 10),
    "u5": (24, 10, 27, 13),
}
PRESSURE_WELLS = [
    (5, 14), (7, 16), (8, 15),        # u1
    (13, 25), (15, 27), (16, 26),     # u2
    (25, 20), (27, 22), (28, 21),     # u3
    (13, 7), (15, 9), (16, 8),        # u4
    (24, 10), (26, 12),               # u5
]
SR_WELLS = [
    (18, 16), (19, 15), (17, 17), (20, 17), (17, 14),   # in the density cluster
    (9, 9), (9, 22), (15, 31), (22, 25), (30, 17),
    (31, 10), (22, 5), (6, 13), (12, 18), (26, 28),
]
DENSITY_CENTER = (14.0, 12.5)
DENSITY_SIGMA = 2.0

T_END = 31.0
TARGET_MEAN_DRAWDOWN = 2.5          # MPa over the full horizon
BETA = 5.7e-4

SCEN1_TARGETS = (-2.3, -2.45, -2.6, -2.35, -2.55)
SCEN2_TARGETS = (0.75, 0.85, 0.95, 0.8, 0.9)


def build_geometry():
    mask = _ellipse_mask(EXTENT, RESOLUTION, MASK_CENTER, MASK_RADII)
    grid = build_grid(EXTENT, RESOLUTION, mask)

    regions = RegionSet(grid)
    for name, (i0, j0, i1, j1) in PRESSURE_RECTS.items():
        ids = []
        for j in range(j0, j1 + 1):
            for i in range(i0, i1 + 1):
                assert grid.active_mask[j, i], f"{name} cell ({i},{j}) inactive"
                ids.append(grid.cell_id(i, j))
        regions.define_region(ids, "pressure", name)

    wells = WellSet(grid)
    rect_cells = {cid for reg in regions.pressure for cid in reg.cells.tolist()}
    for k, (i, j) in enumerate(PRESSURE_WELLS + SR_WELLS):
        assert grid.active_mask[j, i], f"well {k} at ({i},{j}) inactive"
        cid = grid.cell_id(i, j)
        if k < len(PRESSURE_WELLS):
            assert cid in rect_cells, f"pressure well {k} ({i},{j}) outside rects"
        else:
            assert cid not in rect_cells, f"sr well {k} ({i},{j}) inside a rect"
        wells.add_well([cid])
    assert len({w.cells[0] for w in wells.wells}) == wells.n, "duplicate well cells"

    regions.define_region(regions.unclaimed_cells(), "sr", "R1")
    report = check_assumption_a4(regions, wells)
    assert report.passed, report
    return grid, regions, wells


def write_density(grid):
    d = gaussian_density(grid, DENSITY_CENTER, DENSITY_SIGMA, floor=0.0)
    path = OUT / "density_synthetic.csv"
    with open(path, "w") as f:
        f.write("cell_id,value\n")
        for cid, val in zip(grid.active_ids, d):
            f.write(f"{cid},{float(val)!r}\n")
    return path, d


def write_extraction(grid):
    beta_v = BETA * grid.volume
    shape = monthly_extraction(T_END, f0=1.0, ramp_years=2.0, seasonal=0.18,
                               taper_start=22.0, taper_floor=0.35)
    integral = np.trapezoid(np.concatenate([shape.values, shape.values[-1:]]),
                            dx=1.0 / 12.0)
    f0 = TARGET_MEAN_DRAWDOWN * beta_v / integral
    path = OUT / "extraction_monthly.csv"
    with open(path, "w") as f:
        f.write("t_years,value\n")
        for t, v in zip(shape.times, shape.values):
            f.write(f"{float(t)!r},{float(f0 * v)!r}\n")
    return path, f0


def toml_common(wells_lines):
    return f"""# Synthetic desk-scale reservoir scenario.  The outline, well layout,
# spatial density and extraction history are invented fixtures: they mimic
# the shape of a produced-gas field but correspond to no real geometry.

[grid]
extent_km = [{EXTENT[0]}, {EXTENT[1]}]
resolution = [{RESOLUTION[0]}, {RESOLUTION[1]}]
mask = {{ kind = "ellipse", center_km = [{MASK_CENTER[0]}, {MASK_CENTER[1]}], radii_km = [{MASK_RADII[0]}, {MASK_RADII[1]}] }}

[diffusion]
beta_per_mpa = {BETA}
c_hy_km2_per_hr = 4.4e-2
bc = "neumann"

[sr]
gamma1_max_per_mpa = 4.7
gamma2_per_event = 1.08e-2
r_star_events_per_yr = 0.99
density_csv = "density_synthetic.csv"

[wells]
cells = [
{wells_lines}
]

{pressure_regions_toml()}
[[regions.sr]]
name = "R1"
remainder = true

[controller]
l = 4.0e-2
k_bar2 = 1.0e4
b = 1.0
delta_b = 0.0
margin = 2.22
alpha1 = 0.3
alpha2 = 80.0
gamma_r_estimate = 2.0
nominal_safety = 1.1
"""


def pressure_regions_toml():
    blocks = []
    for name, (i0, j0, i1, j1) in PRESSURE_RECTS.items():
        blocks.append(f"[[regions.pressure]]\nname = \"{name}\"\n"
                      f"rect = [{i0}, {j0}, {i1}, {j1}]\n")
    return "\n".join(blocks)


def references_toml(targets):
    blocks = []
    for tgt in targets:
        blocks.append("[[references.pressure]]\nkind = \"sigmoid\"\n"
                      f"target_mpa = {tgt}\nt_mid_yr = 7.5\ntau_yr = 1.8\n")
    blocks.append("[[references.sr]]\nkind = \"constant\"\n"
                  "target_events_per_yr = 0.99\n")
    return "\n".join(blocks)


def main():
    OUT.mkdir(exist_ok=True)
    grid, regions, wells = build_geometry()
    write_density(grid)
    write_extraction(grid)

    wells_lines = "\n".join(
        f"    [{i}, {j}]," for i, j in PRESSURE_WELLS + SR_WELLS)
    common = toml_common(wells_lines)

    n_p = len(PRESSURE_WELLS)
    n_total = n_p + len(SR_WELLS)
    scen1 = common + f"""
{references_toml(SCEN1_TARGETS)}
[demand]
csv = "extraction_monthly.csv"
seed = 20240311

[[demand.rows]]
wells = "all"
scale = -1.0

[schedule]
t_end_yr = {T_END}
dt_yr = 1.0e-3
seed = 7
"""
    scen2 = common + f"""
{references_toml(SCEN2_TARGETS)}
[demand]
csv = "extraction_monthly.csv"
seed = 20240311

[[demand.rows]]
wells = [{", ".join(str(k) for k in range(n_p))}]
scale = -1.0

[[demand.rows]]
wells = [{", ".join(str(k) for k in range(n_p, n_total))}]
scale = 1.36

[schedule]
t_end_yr = {T_END}
dt_yr = 1.0e-3
seed = 7
"""
    (OUT / "scenario1.toml").write_text(
        "[meta]\nname = \"scenario1\"\n"
        "description = \"extraction demand with pressure and "
        "seismicity-rate regulation (synthetic)\"\n\n" + scen1)
    (OUT / "scenario2.toml").write_text(
        "[meta]\nname = \"scenario2\"\n"
        "description = \"extraction plus 1.36x gas-equivalent injection "
        "for net-zero storage (synthetic)\"\n\n" + scen2)
    print(f"wrote fixtures for {grid.n_active} active cells, "
          f"V = {grid.volume:.2f} km^2, {wells.n} wells")


if __name__ == "__main__":
    main()
