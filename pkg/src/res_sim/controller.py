"""Output tracking controller: regional outputs, super-twisting law, allocation.

The controlled outputs are regional averages of pressure (m_u of them) and
seismicity rate (m_R of them), stacked pressure-first into one error vector

    sigma = [ y_u - r_u ; (y_R - r_R) / (gamma1_0 * R*_0) ],

where the scalar gamma1_0 * R*_0 makes the seismicity error commensurate
with the pressure error.  The control is a MIMO generalized super-twisting
law producing a continuous virtual input

    v  = -k1 * phi1(sigma) + b * nu,      nu' = -k2 * phi2(sigma),
    phi1(s) = (alpha1 * ||s||^{-1/2} + alpha2) * s,
    phi2(s) = (alpha1/2 * ||s||^{-1/2} + alpha2) * phi1(s),

whose integral branch converges to (minus) the matched perturbation, giving
finite-time tracking under bounded uncertainty.  ||s||^{-1/2} is floored at
||s|| = 1e-12 so phi1, phi2 stay continuous and vanish at the origin; this
is the numerical realization of the differential-inclusion solution concept.

The virtual input maps to the n well rates through the right pseudoinverse
of a constant nominal matrix B0.  When a demand constraint W Q = D must hold
exactly, the feedback acts in the null space of W:

    Q = Wbar (B0 Wbar)^+ v + W^T (W W^T)^{-1} D,

with Wbar an orthonormal basis of ker(W).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .domain_mesh import Region, WellSet

SIGMA_NORM_FLOOR = 1e-12
PINV_RCOND = 1e-12


@dataclass(frozen=True)
class OutputMap:
    """Which regions form the outputs, and the seismicity-error scaling."""

    pressure_regions: tuple[Region, ...]
    sr_regions: tuple[Region, ...]
    gamma1_0_rstar_0: float

    def __post_init__(self):
        if self.gamma1_0_rstar_0 <= 0:
            raise ValueError("gamma1_0 * R*_0 must be positive")

    @property
    def m_u(self) -> int:
        return len(self.pressure_regions)

    @property
    def m_r(self) -> int:
        return len(self.sr_regions)

    @property
    def m(self) -> int:
        return self.m_u + self.m_r


def compute_outputs(u: np.ndarray, r: np.ndarray,
                    omap: OutputMap) -> tuple[np.ndarray, np.ndarray]:
    """Regional averages (y_u, y_R) of the pressure and seismicity fields."""
    y_u = np.array([float(np.mean(u[reg.idx])) for reg in omap.pressure_regions])
    y_r = np.array([float(np.mean(r[reg.idx])) for reg in omap.sr_regions])
    return y_u, y_r


def compute_error(y_u, y_r, r_u, r_r, omap: OutputMap) -> np.ndarray:
    """Stacked error vector, pressure components first."""
    y_u = np.asarray(y_u, dtype=float)
    y_r = np.asarray(y_r, dtype=float)
    r_u = np.asarray(r_u, dtype=float)
    r_r = np.asarray(r_r, dtype=float)
    if not (np.all(np.isfinite(r_u)) and np.all(np.isfinite(r_r))):
        raise ValueError("references must be finite")
    return np.concatenate([y_u - r_u, (y_r - r_r) / omap.gamma1_0_rstar_0])


def phi1(sigma: np.ndarray, alpha1: float, alpha2: float) -> np.ndarray:
    """Square-root-plus-linear injection; continuous, phi1(0) = 0."""
    sigma = np.asarray(sigma, dtype=float)
    s = max(float(np.linalg.norm(sigma)), SIGMA_NORM_FLOOR)
    return (alpha1 / math.sqrt(s) + alpha2) * sigma


def phi2(sigma: np.ndarray, alpha1: float, alpha2: float) -> np.ndarray:
    """Companion injection for the integral branch; phi2(0) = 0."""
    sigma = np.asarray(sigma, dtype=float)
    s = max(float(np.linalg.norm(sigma)), SIGMA_NORM_FLOOR)
    return (0.5 * alpha1 / math.sqrt(s) + alpha2) * phi1(sigma, alpha1, alpha2)


@dataclass(frozen=True)
class GstaGains:
    """Super-twisting gains and the scaled design parameters behind them.

    Invariants: k1 = l * k1_bar, k2 = l^2 * k2_bar, and
    k1_bar > sqrt(b * k2_bar / (1 - delta_b)) with 0 <= delta_b < 1.
    """

    k1: float
    k2: float
    b: float
    alpha1: float
    alpha2: float
    l: float
    k1_bar: float
    k2_bar: float
    delta_b: float = 0.0

    def __post_init__(self):
        if min(self.k1, self.k2, self.b, self.alpha1, self.alpha2, self.l,
               self.k1_bar, self.k2_bar) <= 0:
            raise ValueError("all gains must be positive")
        if not 0.0 <= self.delta_b < 1.0:
            raise ValueError("delta_b must lie in [0, 1)")
        if not math.isclose(self.k1, self.l * self.k1_bar, rel_tol=1e-9):
            raise ValueError("k1 must equal l * k1_bar")
        if not math.isclose(self.k2, self.l ** 2 * self.k2_bar, rel_tol=1e-9):
            raise ValueError("k2 must equal l^2 * k2_bar")
        if self.k1_bar <= math.sqrt(self.b * self.k2_bar / (1.0 - self.delta_b)):
            raise ValueError("k1_bar must exceed sqrt(b * k2_bar / (1 - delta_b))")


def design_gains(k_bar2: float, l: float, b: float = 1.0, delta_b: float = 0.0,
                 margin: float = 2.22, alpha1: float = 0.3,
                 alpha2: float = 80.0) -> GstaGains:
    """Pick gains satisfying the stability inequality with a given margin.

    k1_bar = margin * sqrt(b * k_bar2 / (1 - delta_b)), k1 = l * k1_bar,
    k2 = l^2 * k_bar2.  margin must exceed 1 so the inequality is strict.
    """
    if k_bar2 <= 0 or l <= 0 or b <= 0:
        raise ValueError("k_bar2, l and b must be positive")
    if not 0.0 <= delta_b < 1.0:
        raise ValueError("delta_b must lie in [0, 1)")
    if margin <= 1.0:
        raise ValueError("margin must exceed 1")
    k1_bar = margin * math.sqrt(b * k_bar2 / (1.0 - delta_b))
    return GstaGains(k1=l * k1_bar, k2=l ** 2 * k_bar2, b=b,
                     alpha1=alpha1, alpha2=alpha2,
                     l=l, k1_bar=k1_bar, k2_bar=k_bar2, delta_b=delta_b)


def select_nominals(beta: float, gamma1_max: float, gamma_r: float,
                    min_well_volume: float,
                    safety: float = 1.2) -> tuple[float, float]:
    """Nominal compressibility and seismicity-error scaling.

    beta0 = 0.8 * beta keeps the multiplicative model mismatch below one,
    and gamma1_0 * R*_0 = safety * gamma1_max * gamma_r / sqrt(min V*)
    (gamma_r an upper estimate of the rate norm, min V* the smallest
    seismicity-region well volume) keeps the rate-row mismatch below one.
    """
    if min(beta, gamma1_max, gamma_r, min_well_volume) <= 0:
        raise ValueError("all inputs must be positive")
    if safety <= 1.0:
        raise ValueError("safety factor must exceed 1")
    beta0 = 0.8 * beta
    g10_r0 = safety * gamma1_max * gamma_r / math.sqrt(min_well_volume)
    return beta0, g10_r0


def build_B0(omap: OutputMap, wells: WellSet, beta0: float) -> np.ndarray:
    """Constant nominal control matrix (m x n).

    Entry (i, j) is 1 / (beta0 * V_i) when well j's support lies inside
    pressure region i, -1 / (beta0 * V_i) when it lies inside seismicity
    region i, and 0 otherwise.
    """
    if beta0 <= 0:
        raise ValueError("beta0 must be positive")
    m = omap.m
    mat = np.zeros((m, wells.n))
    for i, reg in enumerate(omap.pressure_regions):
        for j, well in enumerate(wells.wells):
            if np.isin(well.cells, reg.cells, assume_unique=True).all():
                mat[i, j] = 1.0 / (beta0 * reg.volume)
    for i, reg in enumerate(omap.sr_regions, start=omap.m_u):
        for j, well in enumerate(wells.wells):
            if np.isin(well.cells, reg.cells, assume_unique=True).all():
                mat[i, j] = -1.0 / (beta0 * reg.volume)
    return mat


def _pinv(mat: np.ndarray, ref_scale: float | None = None) -> tuple[np.ndarray, int]:
    """Moore-Penrose pseudoinverse via SVD, with the numerical rank.

    ref_scale, when given, anchors the rank threshold to an external scale
    (e.g. the factors of a product) so a nearly-annihilated product is
    detected as rank deficient rather than rescued by its own tiny norm.
    """
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0:
        return mat.T.copy(), 0
    tol = PINV_RCOND * (s[0] if ref_scale is None else ref_scale)
    keep = s > tol
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vt.T * s_inv) @ u.T, int(keep.sum())


@dataclass(frozen=True)
class ControllerState:
    """Error and integral state plus the constant allocation matrices.

    sigma: current error (m); nu: integral state (m); B0/B0_pinv: nominal
    matrix and its right pseudoinverse; W/W_bar/W_pinv_right: demand matrix,
    orthonormal null-space basis, and right pseudoinverse (None without a
    demand constraint); B0Wbar_pinv: pseudoinverse of B0 @ W_bar.
    """

    sigma: np.ndarray
    nu: np.ndarray
    B0: np.ndarray
    B0_pinv: np.ndarray
    W: np.ndarray | None = None
    W_bar: np.ndarray | None = None
    W_pinv_right: np.ndarray | None = None
    B0Wbar_pinv: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.B0.shape[0]

    @property
    def n(self) -> int:
        return self.B0.shape[1]


def make_controller_state(B0: np.ndarray, W: np.ndarray | None = None,
                          sigma0: np.ndarray | None = None) -> ControllerState:
    """Precompute the allocation matrices and start with zero integral state.

    Raises:
        ValueError: B0 without full row rank (no right pseudoinverse), a
            rank-deficient W, too many constraints (n_r + m > n), or a
            demand null space that cannot realize the outputs
            ("demand constraints incompatible with outputs").
    """
    B0 = np.asarray(B0, dtype=float)
    m, n = B0.shape
    B0_pinv, rank = _pinv(B0)
    if rank < m or not np.allclose(B0 @ B0_pinv, np.eye(m), atol=1e-10):
        raise ValueError("B0 has no right pseudoinverse; check region/well layout (A4)")

    w = w_bar = w_pinv = b0wbar_pinv = None
    if W is not None:
        w = np.asarray(W, dtype=float)
        n_r = w.shape[0]
        if w.shape[1] != n:
            raise ValueError("W column count must match the number of wells")
        if n_r + m > n:
            raise ValueError(f"too many constraints (n_r + m = {n_r + m} > n = {n})")
        u_svd, s_svd, vt = np.linalg.svd(w, full_matrices=True)
        if s_svd.size < n_r or s_svd[n_r - 1] <= PINV_RCOND * s_svd[0]:
            raise ValueError("demand matrix W must have full row rank")
        w_bar = vt[n_r:].T                     # orthonormal basis of ker(W)
        w_pinv = w.T @ np.linalg.inv(w @ w.T)
        b0wbar = B0 @ w_bar
        b0_scale = float(np.linalg.svd(B0, compute_uv=False)[0])
        b0wbar_pinv, rank2 = _pinv(b0wbar, ref_scale=b0_scale)
        if rank2 < m:
            raise ValueError("demand constraints incompatible with outputs")

    sigma = np.zeros(m) if sigma0 is None else np.asarray(sigma0, dtype=float)
    return ControllerState(sigma=sigma, nu=np.zeros(m), B0=B0, B0_pinv=B0_pinv,
                           W=w, W_bar=w_bar, W_pinv_right=w_pinv,
                           B0Wbar_pinv=b0wbar_pinv)


def with_error(state: ControllerState, sigma: np.ndarray) -> ControllerState:
    return replace(state, sigma=np.asarray(sigma, dtype=float))


def gsta_step(state: ControllerState, gains: GstaGains,
              dt: float) -> tuple[np.ndarray, ControllerState]:
    """One control update: virtual input from the current error, then the
    explicit-Euler advance of the integral state.

    Per-update movement of the integral branch is bounded by
    k2 * max||phi2|| * dt, which bounds the discretization chatter.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p1 = phi1(state.sigma, gains.alpha1, gains.alpha2)
    p2 = phi2(state.sigma, gains.alpha1, gains.alpha2)
    v = -gains.k1 * p1 + gains.b * state.nu
    nu_new = state.nu - dt * gains.k2 * p2
    return v, replace(state, nu=nu_new)


def allocate(v: np.ndarray, state: ControllerState,
             D: np.ndarray | None = None) -> np.ndarray:
    """Map the virtual input to well rates, honoring the demand exactly.

    Without a demand: Q = B0^+ v.  With one: the feedback acts in ker(W) and
    the particular term W^T (W W^T)^{-1} D satisfies W Q = D identically.
    """
    v = np.asarray(v, dtype=float)
    if D is None:
        return state.B0_pinv @ v
    if state.W is None:
        raise ValueError("controller state was built without a demand matrix")
    D = np.atleast_1d(np.asarray(D, dtype=float))
    return state.W_bar @ (state.B0Wbar_pinv @ v) + state.W_pinv_right @ D
