"""Exact-filter oracle for scalar linear models, with correlated gain.

For dX = a X dt + sigma dW + rho dV, dY = h X dt + dV the conditional
law is Gaussian and its mean/variance follow

    dm = a m dt + (P h + rho)(dY - h m dt),
    dP/dt = 2 a P + sigma^2 + rho^2 - (P h + rho)^2,

which reduces to the classical continuous-time Kalman filter when
rho = 0.  This is the smallest exact oracle that still exercises the
correlated-noise gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearModel:
    a: float
    sigma: float
    rho: float
    h: float
    m0: float
    P0: float

    def __post_init__(self):
        if self.P0 < 0:
            raise ValueError("initial variance P0 must be nonnegative")

    def steady_state_variance(self) -> float:
        """Nonnegative root of 2 a P + sigma^2 + rho^2 - (P h + rho)^2 = 0."""
        h, rho = self.h, self.rho
        A = h * h
        B = 2.0 * (h * rho - self.a)
        C = -self.sigma ** 2
        if A == 0:
            if B == 0:
                raise ValueError("no steady state: degenerate Riccati")
            return max(0.0, -C / B)
        disc = B * B - 4 * A * C
        return (-B + np.sqrt(disc)) / (2 * A)


def kalman_bucy(model: LinearModel, y_path, delta: float):
    """Euler discretization of the exact filter along a sampled path.

    y_path: (nsteps+1,) observation values at uniform spacing delta, or
    (npaths, nsteps+1) for a batch (the variance path is deterministic
    and shared).  Returns (means, variances) with means shaped like
    y_path and variances (nsteps+1,).  Raises if the variance goes
    negative, which signals too coarse a step.
    """
    y = np.asarray(y_path, dtype=float)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[None, :]
    dY = np.diff(y, axis=1)
    nsteps = dY.shape[1]
    means = np.empty_like(y)
    variances = np.empty(nsteps + 1)
    m = np.full(y.shape[0], model.m0, dtype=float)
    P = float(model.P0)
    means[:, 0], variances[0] = m, P
    for j in range(nsteps):
        gain = P * model.h + model.rho
        m = m + model.a * m * delta + gain * (dY[:, j] - model.h * m * delta)
        P = P + (2 * model.a * P + model.sigma ** 2 + model.rho ** 2 - gain ** 2) * delta
        if P < 0:
            raise ValueError(f"variance went negative at step {j + 1}; refine delta")
        means[:, j + 1], variances[j + 1] = m, P
    return (means[0], variances) if squeeze else (means, variances)


@dataclass(frozen=True)
class ComparisonSummary:
    rmse: float
    max_abs: float
    errors: np.ndarray   # per-time signed differences


def compare_on_path(estimates, oracle, times=None, oracle_times=None) -> ComparisonSummary:
    """Elementwise error summary of two aligned estimate series."""
    a = np.asarray(estimates, dtype=float)
    b = np.asarray(oracle, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"series shapes differ: {a.shape} vs {b.shape}")
    if times is not None and oracle_times is not None:
        ta, tb = np.asarray(times, dtype=float), np.asarray(oracle_times, dtype=float)
        if ta.shape != tb.shape or np.max(np.abs(ta - tb)) > 1e-9:
            raise ValueError("time grids are not aligned")
    err = a - b
    return ComparisonSummary(rmse=float(np.sqrt(np.mean(err * err))),
                             max_abs=float(np.max(np.abs(err))) if err.size else 0.0,
                             errors=err)
