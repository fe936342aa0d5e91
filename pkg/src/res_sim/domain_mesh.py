"""Discretized reservoir domain: grid, output regions and well indicator fields.

The reservoir is represented by a depth-averaged 2D structured grid with an
active-cell mask, so an irregular outline is approximated by the set of
active cells.  "Volume" throughout the package means active area times unit
thickness (km^2); the thickness is absorbed into the mixture compressibility.

Cell indexing is row-major from the lower-left corner of the bounding box:
``cell_id = j * nx + i`` for column ``i`` (x direction) and row ``j``
(y direction).  This indexing is stable and is what CSV inputs and outputs
refer to.  Scalar fields (pressure, seismicity rate, well indicators, ...)
are stored compactly as 1D numpy arrays with one value per *active* cell,
ordered by increasing cell id.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DomainGrid:
    """Uniform structured grid with an active-cell mask.

    Attributes:
        nx, ny: cell counts along x and y.
        dx, dy: cell side lengths [km].
        active_mask: boolean array of shape (ny, nx); True marks active cells.
        active_ids: sorted global ids of the active cells.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    active_mask: np.ndarray
    active_ids: np.ndarray = field(init=False)
    _id_to_active: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mask = np.asarray(self.active_mask, dtype=bool)
        object.__setattr__(self, "active_mask", mask)
        ids = np.flatnonzero(mask.reshape(-1))
        object.__setattr__(self, "active_ids", ids)
        lookup = np.full(self.nx * self.ny, -1, dtype=np.int64)
        lookup[ids] = np.arange(ids.size)
        object.__setattr__(self, "_id_to_active", lookup)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_active(self) -> int:
        return int(self.active_ids.size)

    @property
    def volume(self) -> float:
        """Total active volume V = (#active cells) * cell area [km^2]."""
        return self.n_active * self.cell_area

    @property
    def extent(self) -> tuple[float, float]:
        return self.nx * self.dx, self.ny * self.dy

    def compact_index(self, cell_ids) -> np.ndarray:
        """Map global cell ids to indices into compact field arrays.

        Raises ValueError if any id is out of range or inactive.
        """
        ids = np.atleast_1d(np.asarray(cell_ids, dtype=np.int64))
        if ids.size and (ids.min() < 0 or ids.max() >= self.nx * self.ny):
            raise ValueError("cell id out of range")
        idx = self._id_to_active[ids]
        if np.any(idx < 0):
            bad = ids[idx < 0]
            raise ValueError(f"cells {bad.tolist()} are not active")
        return idx

    def cell_id(self, i: int, j: int) -> int:
        return j * self.nx + i

    def cell_centers(self, cell_ids=None) -> np.ndarray:
        """(N, 2) array of cell-center coordinates [km]."""
        ids = self.active_ids if cell_ids is None else np.asarray(cell_ids)
        i = ids % self.nx
        j = ids // self.nx
        return np.column_stack(((i + 0.5) * self.dx, (j + 0.5) * self.dy))

    def zeros(self) -> np.ndarray:
        """A fresh all-zero scalar field (one value per active cell)."""
        return np.zeros(self.n_active)


def _is_edge_connected(mask: np.ndarray) -> bool:
    """True if the active cells form a single 4-connected component."""
    ny, nx = mask.shape
    seeds = np.argwhere(mask)
    if seeds.size == 0:
        return True
    seen = np.zeros_like(mask, dtype=bool)
    queue = deque([tuple(seeds[0])])
    seen[tuple(seeds[0])] = True
    count = 1
    while queue:
        j, i = queue.popleft()
        for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jj, ii = j + dj, i + di
            if 0 <= jj < ny and 0 <= ii < nx and mask[jj, ii] and not seen[jj, ii]:
                seen[jj, ii] = True
                count += 1
                queue.append((jj, ii))
    return count == int(mask.sum())


def build_grid(extent, resolution, mask=None) -> DomainGrid:
    """Build the discretized domain.

    Args:
        extent: (Lx, Ly) bounding-box side lengths [km].
        resolution: (nx, ny) cell counts.
        mask: per-cell boolean array of shape (ny, nx); None means all active.

    Raises:
        ValueError: fewer than 2 cells per side, "no active cells", or
            "disconnected domain" when the active set is not edge-connected.
    """
    nx, ny = int(resolution[0]), int(resolution[1])
    if nx < 2 or ny < 2:
        raise ValueError("grid resolution must be at least 2x2")
    lx, ly = float(extent[0]), float(extent[1])
    if lx <= 0 or ly <= 0:
        raise ValueError("grid extent must be positive")
    if mask is None:
        mask = np.ones((ny, nx), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (ny, nx):
        raise ValueError(f"mask shape {mask.shape} does not match resolution {(ny, nx)}")
    if not mask.any():
        raise ValueError("no active cells")
    if not _is_edge_connected(mask):
        raise ValueError("disconnected domain")
    return DomainGrid(nx=nx, ny=ny, dx=lx / nx, dy=ly / ny, active_mask=mask)


@dataclass(frozen=True)
class Region:
    """A set of active cells over which an output average is taken.

    kind is "pressure" for pressure outputs or "sr" for seismicity-rate
    outputs.  volume = |cells| * cell_area [km^2].
    """

    name: str
    kind: str
    cells: np.ndarray     # sorted global cell ids
    idx: np.ndarray       # compact indices into active-cell fields
    volume: float

    @property
    def n_cells(self) -> int:
        return int(self.cells.size)


class RegionSet:
    """Ordered collection of pairwise-disjoint output regions.

    Pressure and seismicity-rate regions must not intersect each other
    (in any combination); this is enforced at definition time.
    """

    def __init__(self, grid: DomainGrid):
        self.grid = grid
        self.pressure: list[Region] = []
        self.sr: list[Region] = []
        self._claimed = np.zeros(grid.n_active, dtype=bool)

    def define_region(self, cell_ids, kind: str, name: str | None = None) -> Region:
        """Define a new output region from global cell ids.

        Raises:
            ValueError: empty cell set, inactive cells, unknown kind, or
                overlap with an existing region ("regions must be disjoint (A4)").
        """
        if kind not in ("pressure", "sr"):
            raise ValueError(f"unknown region kind {kind!r}")
        cells = np.unique(np.asarray(cell_ids, dtype=np.int64))
        if cells.size == 0:
            raise ValueError("empty region")
        idx = self.grid.compact_index(cells)
        if np.any(self._claimed[idx]):
            raise ValueError("regions must be disjoint (A4)")
        if name is None:
            prefix = "u" if kind == "pressure" else "R"
            name = f"{prefix}{len(self.pressure if kind == 'pressure' else self.sr) + 1}"
        region = Region(name=name, kind=kind, cells=cells, idx=idx,
                        volume=cells.size * self.grid.cell_area)
        self._claimed[idx] = True
        (self.pressure if kind == "pressure" else self.sr).append(region)
        return region

    @property
    def all_regions(self) -> list[Region]:
        return self.pressure + self.sr

    @property
    def m_u(self) -> int:
        return len(self.pressure)

    @property
    def m_r(self) -> int:
        return len(self.sr)

    def unclaimed_cells(self) -> np.ndarray:
        """Global ids of active cells not in any region so far."""
        return self.grid.active_ids[~self._claimed]


def make_well_indicator(grid: DomainGrid, support_cells) -> np.ndarray:
    """Normalized indicator field of a well support.

    The field equals 1/V* on the support cells (V* the support volume) and 0
    elsewhere, so its discrete integral over the domain is exactly 1 and its
    discrete H0 norm is 1/sqrt(V*).  A one-cell support is the finest
    representable source, approximating a point injection.
    """
    cells = np.unique(np.asarray(support_cells, dtype=np.int64))
    if cells.size == 0:
        raise ValueError("empty well support")
    idx = grid.compact_index(cells)
    support_volume = cells.size * grid.cell_area
    indicator = grid.zeros()
    indicator[idx] = 1.0 / support_volume
    return indicator


@dataclass(frozen=True)
class Well:
    name: str
    cells: np.ndarray
    idx: np.ndarray
    indicator: np.ndarray
    volume: float


class WellSet:
    """The n flux inputs, each applied through a normalized indicator field."""

    def __init__(self, grid: DomainGrid):
        self.grid = grid
        self.wells: list[Well] = []

    def add_well(self, support_cells, name: str | None = None) -> Well:
        cells = np.unique(np.asarray(support_cells, dtype=np.int64))
        indicator = make_well_indicator(self.grid, cells)
        idx = self.grid.compact_index(cells)
        if name is None:
            name = f"w{len(self.wells) + 1}"
        well = Well(name=name, cells=cells, idx=idx, indicator=indicator,
                    volume=cells.size * self.grid.cell_area)
        self.wells.append(well)
        return well

    @property
    def n(self) -> int:
        return len(self.wells)

    def indicator_matrix(self) -> np.ndarray:
        """(n_active, n) matrix whose columns are the well indicator fields."""
        if not self.wells:
            return np.zeros((self.grid.n_active, 0))
        return np.column_stack([w.indicator for w in self.wells])

    def min_support_volume(self) -> float:
        return min(w.volume for w in self.wells)


@dataclass(frozen=True)
class A4Report:
    """Diagnostic report for the input/output geometry requirements.

    Passing requires: output regions pairwise disjoint, no more outputs than
    inputs (m_u + m_R <= n), at least one well support fully inside every
    region, and wells serving distinct regions having disjoint supports.
    """

    passed: bool
    m_u: int
    m_r: int
    n: int
    failures: tuple[str, ...]

    def __str__(self):
        status = "pass" if self.passed else "fail"
        lines = [f"A4 {status}: m_u={self.m_u}, m_R={self.m_r}, n={self.n}"]
        lines.extend(f"  - {f}" for f in self.failures)
        return "\n".join(lines)


def _support_inside(well: Well, region: Region) -> bool:
    return bool(np.isin(well.cells, region.cells, assume_unique=True).all())


def check_assumption_a4(regions: RegionSet, wells: WellSet) -> A4Report:
    """Check the output-region / well-placement requirements.

    Pure diagnostic: never raises, same inputs give the same report.
    """
    failures: list[str] = []
    all_regions = regions.all_regions
    m = len(all_regions)
    n = wells.n

    for a in range(m):
        for b in range(a + 1, m):
            if np.intersect1d(all_regions[a].cells, all_regions[b].cells,
                              assume_unique=True).size:
                failures.append(
                    f"regions {all_regions[a].name} and {all_regions[b].name} overlap")

    if m > n:
        failures.append(f"more outputs than inputs (m={m} > n={n})")

    region_of_well: dict[int, int] = {}
    for r_i, region in enumerate(all_regions):
        inside = [w_i for w_i, w in enumerate(wells.wells) if _support_inside(w, region)]
        if not inside:
            failures.append(f"region {region.name} contains no well support")
        for w_i in inside:
            region_of_well[w_i] = r_i

    well_items = sorted(region_of_well.items())
    for a in range(len(well_items)):
        for b in range(a + 1, len(well_items)):
            wa, ra = well_items[a]
            wb, rb = well_items[b]
            if ra != rb and np.intersect1d(wells.wells[wa].cells, wells.wells[wb].cells,
                                           assume_unique=True).size:
                failures.append(
                    f"wells {wells.wells[wa].name} and {wells.wells[wb].name} serve "
                    "distinct regions but share support cells")

    return A4Report(passed=not failures, m_u=regions.m_u, m_r=regions.m_r, n=n,
                    failures=tuple(failures))
