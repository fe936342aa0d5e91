"""Pressure-change diffusion on the active-cell grid.

Model: beta * u_t = div( (k/eta) grad u ) + sum_i B_i(x) Q_i(t), with zero
normal flux (undrained) boundaries by default, or an optional mode holding
the outline at zero pressure change.  Written with the hydraulic diffusivity
c_hy = k / (beta * eta), each cell of area A obeys

    A * du/dt = sum_faces T_f (u_nbr - u) + (1/beta) * sum_i Q_i * B_i * A,

where T_f = c_face * (face length) / (center distance) and c_face is the
harmonic mean of the two cell diffusivities.  Time integration is an
implicit theta-scheme (backward Euler by default, Crank-Nicolson with
theta = 0.5), solved by Jacobi-preconditioned conjugate gradients.

Under no-flux boundaries the interior fluxes cancel in the discrete sum, so
the mean pressure obeys exactly

    mean(u)_new = mean(u)_old + dt * sum(Q) / (beta * V).

To keep that identity at machine precision independently of the iterative
solver tolerance, the no-flux update solves for the zero-mean fluctuation
p = u - mean(u) and advances the mean analytically.  The reported rate u_t
is the backward difference (u_new - u_old) / dt actually used downstream by
the seismicity-rate coupling.

Internal units: km, yr, MPa.  Diffusivities quoted in km^2/hr are converted
on load with 8760 hr/yr.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .domain_mesh import DomainGrid, Region, WellSet

HOURS_PER_YEAR = 8760.0


class SolverError(RuntimeError):
    """Linear solve failed to converge within the iteration budget."""


@dataclass(frozen=True)
class DiffusionParams:
    """Physical parameters of the pressure equation.

    beta: mixture compressibility [1/MPa].
    c_hy: hydraulic diffusivity, scalar or per-active-cell field [km^2/yr].
    bc_kind: "neumann" (no-flux) or "dirichlet" (zero boundary value).
    theta: implicitness of the time scheme (1.0 backward Euler, 0.5 CN).
    """

    beta: float
    c_hy: float | np.ndarray
    bc_kind: str = "neumann"
    theta: float = 1.0
    cg_rtol: float = 1e-10

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        c = np.asarray(self.c_hy, dtype=float)
        if np.any(c <= 0):
            raise ValueError("hydraulic diffusivity must be positive everywhere")
        if self.bc_kind not in ("neumann", "dirichlet"):
            raise ValueError(f"unknown bc_kind {self.bc_kind!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


@dataclass(frozen=True)
class PressureState:
    """Pressure change u [MPa], its backward-difference rate u_t [MPa/yr], time [yr]."""

    u: np.ndarray
    u_t: np.ndarray
    t: float = 0.0


def initial_pressure_state(grid: DomainGrid, u0=None, t: float = 0.0) -> PressureState:
    u = grid.zeros() if u0 is None else np.array(u0, dtype=float)
    if u.shape != (grid.n_active,):
        raise ValueError("initial field shape does not match active cells")
    return PressureState(u=u, u_t=grid.zeros(), t=t)


def _harmonic_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def _assemble_flux_operator(grid: DomainGrid, c_field: np.ndarray,
                            dirichlet: bool) -> sp.csr_matrix:
    """Flux operator L with (L u)_c = net outflow of cell c [km^2/yr * MPa].

    Symmetric positive semidefinite; L 1 = 0 for no-flux boundaries.  In
    Dirichlet mode each boundary face couples the cell to a zero ghost value
    at half a cell spacing, making L strictly positive definite.
    """
    ny, nx = grid.active_mask.shape
    cfull = np.full(ny * nx, np.nan)
    cfull[grid.active_ids] = c_field

    rows, cols, vals = [], [], []
    diag = np.zeros(grid.n_active)

    def add_pair(ids_a, ids_b, trans):
        ia = grid.compact_index(ids_a)
        ib = grid.compact_index(ids_b)
        rows.extend((ia, ib))
        cols.extend((ib, ia))
        vals.extend((-trans, -trans))
        np.add.at(diag, ia, trans)
        np.add.at(diag, ib, trans)

    mask = grid.active_mask
    ids2d = np.arange(ny * nx).reshape(ny, nx)

    # x faces between horizontally adjacent active cells
    pair = mask[:, :-1] & mask[:, 1:]
    a = ids2d[:, :-1][pair]
    b = ids2d[:, 1:][pair]
    if a.size:
        t = _harmonic_mean(cfull[a], cfull[b]) * grid.dy / grid.dx
        add_pair(a, b, t)

    # y faces between vertically adjacent active cells
    pair = mask[:-1, :] & mask[1:, :]
    a = ids2d[:-1, :][pair]
    b = ids2d[1:, :][pair]
    if a.size:
        t = _harmonic_mean(cfull[a], cfull[b]) * grid.dx / grid.dy
        add_pair(a, b, t)

    if dirichlet:
        # boundary faces: active cell with a missing neighbor on that side
        padded = np.zeros((ny + 2, nx + 2), dtype=bool)
        padded[1:-1, 1:-1] = mask
        for dj, di, trans_per_c in (
            (0, 1, 2.0 * grid.dy / grid.dx),
            (0, -1, 2.0 * grid.dy / grid.dx),
            (1, 0, 2.0 * grid.dx / grid.dy),
            (-1, 0, 2.0 * grid.dx / grid.dy),
        ):
            nbr_missing = mask & ~padded[1 + dj:ny + 1 + dj, 1 + di:nx + 1 + di]
            ids = ids2d[nbr_missing]
            if ids.size:
                ic = grid.compact_index(ids)
                np.add.at(diag, ic, cfull[ids] * trans_per_c)

    n = grid.n_active
    mat = sp.coo_matrix(
        (np.concatenate(vals) if vals else np.empty(0),
         (np.concatenate(rows) if rows else np.empty(0, dtype=int),
          np.concatenate(cols) if cols else np.empty(0, dtype=int))),
        shape=(n, n)).tocsr()
    mat += sp.diags(diag)
    return mat.tocsr()


def _pcg(mat: sp.csr_matrix, b: np.ndarray, x0: np.ndarray, diag: np.ndarray,
         rtol: float, maxiter: int) -> tuple[np.ndarray, int]:
    """Jacobi-preconditioned conjugate gradients for an SPD system."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    x = x0.copy()
    r = b - mat @ x
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for k in range(maxiter):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x, k
        ap = mat @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= rtol * bnorm:
        return x, maxiter
    raise SolverError(f"CG did not converge in {maxiter} iterations "
                      f"(residual {np.linalg.norm(r) / bnorm:.3e})")


class DiffusionSolver:
    """Reusable stepper for one grid / parameter set / well layout.

    Building the sparse flux operator once and caching the theta-scheme
    matrix per time step size keeps long closed-loop runs cheap.
    """

    def __init__(self, grid: DomainGrid, params: DiffusionParams, wells: WellSet):
        self.grid = grid
        self.params = params
        self.wells = wells
        c = np.asarray(params.c_hy, dtype=float)
        if c.ndim == 0:
            c = np.full(grid.n_active, float(c))
        if c.shape != (grid.n_active,):
            raise ValueError("c_hy field shape does not match active cells")
        self.c_field = c
        self.flux_op = _assemble_flux_operator(grid, c, params.bc_kind == "dirichlet")
        self.source_matrix = wells.indicator_matrix() * grid.cell_area  # columns sum to 1
        self._systems: dict[float, tuple[sp.csr_matrix, np.ndarray]] = {}

    def _system(self, dt: float) -> tuple[sp.csr_matrix, np.ndarray]:
        cached = self._systems.get(dt)
        if cached is None:
            mat = (sp.eye(self.grid.n_active, format="csr") * (self.grid.cell_area / dt)
                   + self.params.theta * self.flux_op)
            mat = mat.tocsr()
            cached = (mat, mat.diagonal())
            self._systems[dt] = cached
        return cached

    def step(self, state: PressureState, Q, dt: float,
             q_bound: float | None = None) -> tuple[PressureState, dict]:
        """Advance one implicit step; returns (new state, solve diagnostics).

        Diagnostics: "cg_iters" and "mass_residual" (the absolute deviation
        of the new mean from the analytic mean balance; meaningful under
        no-flux boundaries only).
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (self.wells.n,):
            raise ValueError(f"expected {self.wells.n} well rates, got shape {Q.shape}")
        if not np.all(np.isfinite(Q)):
            raise ValueError("well rates must be finite")
        if q_bound is not None and np.linalg.norm(Q) > q_bound:
            raise ValueError(
                f"input norm {np.linalg.norm(Q):.6g} exceeds configured bound {q_bound:.6g}")
        if not np.all(np.isfinite(state.u)):
            raise ValueError("pressure field contains non-finite values")

        grid, params = self.grid, self.params
        area = grid.cell_area
        src = (self.source_matrix @ Q) / params.beta          # per-cell, times area
        mat, diag = self._system(dt)
        maxiter = 10 * grid.n_active

        if params.bc_kind == "neumann":
            u_mean = float(np.mean(state.u))
            mean_new = u_mean + dt * float(np.sum(Q)) / (params.beta * grid.volume)
            p_old = state.u - u_mean
            rhs = (area / dt) * p_old + src
            if params.theta != 1.0:
                rhs -= (1.0 - params.theta) * (self.flux_op @ p_old)
            rhs -= (area / (params.beta * grid.volume)) * float(np.sum(Q))
            rhs -= np.mean(rhs)             # exact projection onto zero-mean space
            p_new, iters = _pcg(mat, rhs, p_old, diag, params.cg_rtol, maxiter)
            p_new = p_new - np.mean(p_new)
            u_new = mean_new + p_new
            residual = abs(float(np.mean(u_new)) - mean_new)
        else:
            rhs = (area / dt) * state.u + src
            if params.theta != 1.0:
                rhs -= (1.0 - params.theta) * (self.flux_op @ state.u)
            u_new, iters = _pcg(mat, rhs, state.u, diag, params.cg_rtol, maxiter)
            residual = float("nan")

        if not np.all(np.isfinite(u_new)):
            raise SolverError("diffusion update produced non-finite values")
        new_state = PressureState(u=u_new, u_t=(u_new - state.u) / dt, t=state.t + dt)
        return new_state, {"cg_iters": iters, "mass_residual": residual}


def step_diffusion(state: PressureState, params: DiffusionParams, grid: DomainGrid,
                   wells: WellSet, Q, dt: float,
                   q_bound: float | None = None,
                   solver: DiffusionSolver | None = None) -> PressureState:
    """Single implicit diffusion step (convenience wrapper).

    Builds a solver on the fly unless one is passed in; loops should hold a
    DiffusionSolver to amortize the operator assembly.
    """
    if solver is None:
        solver = DiffusionSolver(grid, params, wells)
    new_state, _ = solver.step(state, Q, dt, q_bound=q_bound)
    return new_state


def h0_norm(field: np.ndarray, grid: DomainGrid) -> float:
    """Discrete H0 (L2 over the domain) norm: sqrt(sum field^2 * cell_area)."""
    field = np.asarray(field, dtype=float)
    return float(np.sqrt(np.sum(field * field) * grid.cell_area))


def mean_over(field: np.ndarray, grid: DomainGrid, region: Region | None = None) -> float:
    """Volume average of a field over a region, or over the whole domain.

    With uniform cells this is the plain mean of the covered values.
    """
    field = np.asarray(field, dtype=float)
    if region is None:
        if field.size == 0:
            raise ValueError("empty region")
        return float(np.mean(field))
    if region.idx.size == 0:
        raise ValueError("empty region")
    return float(np.mean(field[region.idx]))

