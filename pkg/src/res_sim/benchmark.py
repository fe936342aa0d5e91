"""Low-dimensional benchmark plant for exercising the super-twisting law.

The closed loop of the error dynamics under the controller has the form

    sigma' = Psi1(sigma) + Psi2(t) + (I + dB) (-k1 phi1(sigma) + b nu),
    nu'    = -k2 phi2(sigma),

with a constant multiplicative mismatch dB (||dB|| < 1), a state-bounded
term Psi1 = c * sigma, and a time-varying matched perturbation Psi2 with
bounded derivative.  For gains satisfying the design inequality the error
reaches zero in finite time, after which the integral branch reconstructs
the perturbation:

    b * nu + (I + dB)^{-1} Psi2(t)  ->  0.

This module integrates that loop with fixed-step RK4, vectorized over a
batch of initial conditions, and reports the error-norm and reconstruction
histories so both behaviors can be measured directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import SIGMA_NORM_FLOOR, GstaGains


@dataclass(frozen=True)
class BenchmarkResult:
    """Trajectories of one batched benchmark integration.

    t: (N+1,) sample times; error_norm: (K, N+1) ||sigma||; recon_error:
    (K, N+1) ||b nu + (I+dB)^{-1} Psi2||; sigma, nu: final states (K, m).
    """

    t: np.ndarray
    error_norm: np.ndarray
    recon_error: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray


def sinusoid_perturbation(amplitude: float, frequency: float):
    """Psi2(t) = amplitude * [sin(w t), cos(w t)]: bounded derivative a*w."""

    def psi2(t: float) -> np.ndarray:
        return amplitude * np.array([np.sin(frequency * t), np.cos(frequency * t)])

    return psi2


def run_gsta_benchmark(gains: GstaGains, sigma0: np.ndarray,
                       delta_b=(0.3, -0.2), psi1_gain: float = 0.5,
                       psi2=None, t_end: float = 15.0,
                       dt: float = 1e-4) -> BenchmarkResult:
    """Integrate the benchmark loop for a batch of initial errors.

    Args:
        gains: super-twisting gains (alpha1, alpha2 included).
        sigma0: (K, m) or (m,) initial error vectors; nu starts at zero.
        delta_b: diagonal of the constant multiplicative mismatch.
        psi1_gain: coefficient of the state-proportional perturbation.
        psi2: callable t -> (m,) matched perturbation; defaults to
            0.5 * [sin(t/2), cos(t/2)].
        t_end, dt: horizon and RK4 step.
    """
    sig0 = np.atleast_2d(np.asarray(sigma0, dtype=float))
    k_batch, m = sig0.shape
    db = np.asarray(delta_b, dtype=float)
    if db.shape != (m,):
        raise ValueError("delta_b diagonal size must match the error dimension")
    if np.max(np.abs(db)) >= 1.0:
        raise ValueError("||delta_b|| must be < 1")
    if psi2 is None:
        psi2 = sinusoid_perturbation(0.5, 0.5)

    one_plus_db = 1.0 + db
    inv_one_plus_db = 1.0 / one_plus_db
    k1, k2, b = gains.k1, gains.k2, gains.b
    a1, a2 = gains.alpha1, gains.alpha2

    def rhs(t, sigma, nu):
        s = np.maximum(np.linalg.norm(sigma, axis=1), SIGMA_NORM_FLOOR)
        inv_sqrt = 1.0 / np.sqrt(s)
        p1 = (a1 * inv_sqrt + a2)[:, None] * sigma
        p2 = (0.5 * a1 * inv_sqrt + a2)[:, None] * p1
        v = -k1 * p1 + b * nu
        dsig = psi1_gain * sigma + psi2(t)[None, :] + one_plus_db[None, :] * v
        dnu = -k2 * p2
        return dsig, dnu

    n_steps = int(round(t_end / dt))
    t_axis = np.arange(n_steps + 1) * dt
    enorm = np.empty((k_batch, n_steps + 1))
    recon = np.empty((k_batch, n_steps + 1))

    sigma = sig0.copy()
    nu = np.zeros_like(sigma)

    def record(i, t):
        enorm[:, i] = np.linalg.norm(sigma, axis=1)
        target = inv_one_plus_db * psi2(t)
        recon[:, i] = np.linalg.norm(b * nu + target[None, :], axis=1)

    record(0, 0.0)
    for i in range(n_steps):
        t = i * dt
        ds1, dn1 = rhs(t, sigma, nu)
        ds2, dn2 = rhs(t + 0.5 * dt, sigma + 0.5 * dt * ds1, nu + 0.5 * dt * dn1)
        ds3, dn3 = rhs(t + 0.5 * dt, sigma + 0.5 * dt * ds2, nu + 0.5 * dt * dn2)
        ds4, dn4 = rhs(t + dt, sigma + dt * ds3, nu + dt * dn3)
        sigma = sigma + (dt / 6.0) * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4)
        nu = nu + (dt / 6.0) * (dn1 + 2.0 * dn2 + 2.0 * dn3 + dn4)
        record(i + 1, t + dt)

    return BenchmarkResult(t=t_axis, error_norm=enorm, recon_error=recon,
                           sigma=sigma, nu=nu)


def last_crossing_time(t: np.ndarray, series: np.ndarray,
                       threshold: float) -> float | None:
    """Earliest time after which the series stays strictly below threshold.

    Returns None if the final sample is not below threshold; 0.0 if every
    sample is.
    """
    above = series >= threshold
    if above[-1]:
        return None
    if not above.any():
        return 0.0
    return float(t[int(np.flatnonzero(above)[-1]) + 1])
