"""Simulation of the signal/observation pair under the physical measure.

The pair follows

    dX = b(X) dt + sigma(X) dW + rho(X) dV,
    dY = h(X) dt + dV,        Y(0) = 0,

with independent Wiener processes W and V; reusing the V increments in
both equations is what realizes the noise correlation.  Paths are
generated by Euler-Maruyama on a fine step and reported on a coarser
observation step.  Reproducibility comes from numpy seed sequences
keyed by (seed, path index); no specific generator family is promised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .galerkin import FilterModel


@dataclass(frozen=True)
class SimulationConfig:
    model: FilterModel
    T: float
    delta_sim: float
    seed: int
    delta_obs: float

    def __post_init__(self):
        if not 0 < self.delta_sim <= self.delta_obs <= self.T:
            raise ValueError("need 0 < delta_sim <= delta_obs <= T")
        ratio = self.delta_obs / self.delta_sim
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("delta_obs must be an integer multiple of delta_sim")

    @property
    def steps_per_obs(self) -> int:
        return int(round(self.delta_obs / self.delta_sim))

    @property
    def n_obs(self) -> int:
        n = self.T / self.delta_obs
        if abs(n - round(n)) > 1e-9:
            raise ValueError("T must be an integer multiple of delta_obs")
        return int(round(n))


def sample_initial(p0, count: int, seed: int, support=(-10.0, 10.0),
                   grid_points: int = 4001) -> np.ndarray:
    """Inverse-CDF draws from a one-dimensional density.

    The density is tabulated at cell midpoints of a uniform grid over
    `support` (so compact supports aligned with cell edges are preserved
    exactly), normalized by its total mass, and inverted by linear
    interpolation.  Raises if the density goes negative or carries no
    mass on the grid.
    """
    if count == 0:
        return np.empty(0)
    x = np.linspace(support[0], support[1], grid_points)
    mids = 0.5 * (x[:-1] + x[1:])
    pdf = np.broadcast_to(np.asarray(p0(mids) if callable(p0) else p0, dtype=float), mids.shape)
    if np.any(pdf < -1e-12):
        raise ValueError("p0 takes negative values; not a density")
    pdf = np.maximum(pdf, 0.0)
    cdf = np.concatenate([[0.0], np.cumsum(pdf * np.diff(x))])
    if cdf[-1] <= 0:
        raise ValueError("p0 has no mass on the sampling grid")
    cdf /= cdf[-1]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    u = rng.random(count)
    return np.interp(u, cdf, x)


def _path_rngs(seed: int, npaths: int):
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(npaths)]


def simulate_paths(config: SimulationConfig, npaths: int, x0=None):
    """Euler-Maruyama for a batch of independent paths.

    Returns (times, X, Y) with X of shape (npaths, n_obs+1, d) and Y of
    shape (npaths, n_obs+1, r), both reported at the observation step.
    x0 overrides the initial states ((npaths, d) or (npaths,) for d = 1);
    by default they are drawn from p0 (d = 1 only).
    """
    model = config.model
    d, d1, r = model.d, model.d1, model.r
    if x0 is None:
        if d != 1:
            raise ValueError("built-in initial sampling is 1-d; pass x0 for d > 1")
        x0 = sample_initial(model.p0, npaths, seed=config.seed ^ 0x5EED)
    X = np.atleast_2d(np.asarray(x0, dtype=float).reshape(npaths, d)).copy()
    Y = np.zeros((npaths, r))
    nobs, per = config.n_obs, config.steps_per_obs
    dt, sq = config.delta_sim, math.sqrt(config.delta_sim)
    rngs = _path_rngs(config.seed, npaths)
    dW = np.empty((npaths, nobs * per, d1))
    dV = np.empty((npaths, nobs * per, r))
    for p, rng in enumerate(rngs):
        dW[p] = rng.normal(scale=sq, size=(nobs * per, d1))
        dV[p] = rng.normal(scale=sq, size=(nobs * per, r))

    Xout = np.empty((npaths, nobs + 1, d))
    Yout = np.empty((npaths, nobs + 1, r))
    Xout[:, 0], Yout[:, 0] = X, Y
    step = 0
    for i in range(nobs):
        for _ in range(per):
            bX = model.drift_at(X)
            sX = model.sigma_at(X)
            rX = model.rho_at(X)
            hX = model.h_at(X)
            Y = Y + hX * dt + dV[:, step]
            X = (X + bX * dt
                 + np.einsum("pij,pj->pi", sX, dW[:, step])
                 + np.einsum("pij,pj->pi", rX, dV[:, step]))
            if not np.all(np.isfinite(X)):
                raise FloatingPointError(f"state blew up in simulation step {step + 1}")
            step += 1
        Xout[:, i + 1], Yout[:, i + 1] = X, Y
    times = np.arange(nobs + 1) * config.delta_obs
    return times, Xout, Yout


def simulate(config: SimulationConfig, x0=None):
    """Single path; see simulate_paths.  Returns (times, X (n+1, d), Y (n+1, r))."""
    times, X, Y = simulate_paths(config, 1, x0=None if x0 is None else np.atleast_1d(x0))
    return times, X[0], Y[0]


def write_truth(path, times, x) -> None:
    """Truth file: 'delta_obs=', 'd=', then one 't x_1 .. x_d' line per sample."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 1 and np.asarray(times).size != 1:
        x = x.T
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    with open(path, "w", newline="\n") as fh:
        fh.write(f"delta_obs={dt:.17g}\n")
        fh.write(f"d={x.shape[1]}\n")
        for t, row in zip(np.asarray(times, dtype=float), x):
            fh.write(f"{t:.17g} " + " ".join(f"{v:.17g}" for v in row) + "\n")
