"""Replica-symmetric theory next to finite-size GAMP.

Solves the RS saddle point for ridge-regularized linear regression and
for sparse LASSO, then compares the predicted GDF and extra-sample error
with averages over finite GAMP runs. The de Almeida-Thouless line flags
where the RS solution stops being locally stable.
"""
import numpy as np

from gampgap import Penalty, gamp_run, gap_gamp, rs_errors, rs_solve, at_unstable
from gampgap.datagen import empirical_extra_error, gen_predictors, gen_truth_and_data

N, SEEDS = 200, 6


def finite(alpha, pen, rho):
    M = int(round(alpha * N))
    gdf, ext = [], []
    for seed in range(SEEDS):
        F = gen_predictors("iid", M, N, seed)
        data, truth = gen_truth_and_data(F, "gaussian", rho, 1.0, 1.0, seed)
        st = gamp_run(data, "gaussian", pen)
        gdf.append(gap_gamp(st, data, "gaussian").gdf)
        ext.append(empirical_extra_error(st.x_hat, truth, "gaussian", N))
    return np.mean(gdf), np.mean(ext)


for label, pen, rho in [("ridge lambda2=0.1", Penalty(0.0, 0.1), 1.0),
                        ("lasso lambda1=1.0", Penalty(1.0, 0.0), 0.3)]:
    print(f"\n{label}")
    print(f"{'alpha':>6} {'rs gdf':>8} {'gamp gdf':>9} {'rs err':>8} {'emp err':>8} {'AT lhs':>7}")
    for alpha in (0.5, 1.0, 2.0, 4.0):
        order = rs_solve("gaussian", pen, alpha, rho=rho)
        th = rs_errors(order)
        _, lhs = at_unstable(order, "gaussian", pen, alpha)
        g, e = finite(alpha, pen, rho)
        print(f"{alpha:6.2f} {th['gdf']:8.4f} {g:9.4f} {th['err_extra']:8.4f} {e:8.4f} {lhs:7.3f}")

# the ridgeless limit has gdf = 1/alpha above the interpolation point
order = rs_solve("gaussian", Penalty(), 2.0)
print("\nridgeless alpha=2: gdf =", round(rs_errors(order)["gdf"], 6), " AT lhs =",
      at_unstable(order, "gaussian", Penalty(), 2.0)[1])
