"""The correlated case: signal noise shared with the observation channel.

When the signal is partly driven by the same Brownian motion as the
observations, the stochastic part of the density evolution picks up a
first-order (unbounded) operator and most schemes get harder.  Here the
offline/online split is unchanged: only the projected noise matrices
pick up a derivative term.  We check the recursion against the exact
correlated-gain filter and show how spatial resolution K buys accuracy.
"""

import numpy as np

from chaosfilter.config import ExperimentConfig
from chaosfilter.experiments import (build_pipeline, chaos_estimates, galerkin_oracle_estimates,
                                     make_table, oracle_estimates, simulate_full)

params = dict(a=-1.0, sigma=1.0, rho=0.5, h=1.0)

for K in (8, 16):
    cfg = ExperimentConfig(model_name="correlated-ou", model_params=params,
                           K=K, N=2, n=4, delta=0.01, T=1.0, seed=99, paths=25).validate()
    pipe = build_pipeline(cfg)
    table = make_table(pipe)
    times, _, Y = simulate_full(cfg, pipe, cfg.paths)
    stride = int(round(cfg.resolved_delta_obs() / cfg.resolved_delta_sim()))
    _, est = chaos_estimates(pipe, table, times, Y, stride)
    kb = oracle_estimates(pipe, times, Y, stride)
    fine = galerkin_oracle_estimates(pipe.system, pipe.p_init, pipe.f_coeffs, pipe.one_coeffs,
                                     Y, cfg.resolved_delta_sim(),
                                     int(round(cfg.delta / cfg.resolved_delta_sim())))
    rmse_rec = np.sqrt(np.mean((est - kb)[:, 1:] ** 2))
    rmse_fine = np.sqrt(np.mean((fine - kb)[:, 1:] ** 2))
    print(f"K = {K:2d}: recursion vs exact filter RMSE {rmse_rec:.4f}   "
          f"fine-grid projection vs exact {rmse_fine:.4f}")

print("\nBoth errors drop as K doubles: at K = 8 the spatial truncation dominates,")
print("at K = 16 the recursion is within a hair of its own projected reference.")
