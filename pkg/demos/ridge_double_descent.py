"""Ridge double descent: exact LOOCV against the GAMP gap estimates.

Holding M = 200 fixed and growing N through the interpolation point
M = N, the leave-one-out error of near-ridgeless regression blows up.
The GAMP-based delta-LOOCV estimate follows that peak. WAIC and the
functional variance do not, because they only measure a posterior
spread, which stays small.

Run:  python demos/ridge_double_descent.py
"""
import numpy as np

from gampgap import Penalty, gamp_run, gap_gamp, ridge_hat, press_loocv
from gampgap.datagen import gen_predictors, gen_truth_and_data

M, LAM2, SEEDS = 200, 0.01, 8

print(f"{'N':>5} {'alpha':>6} {'PRESS':>8} {'LOOCV-hat':>10} {'WAIC':>8} {'gdf':>6}")
for N in (100, 150, 180, 200, 220, 260, 400):
    press, loo, waic, gdf = [], [], [], []
    for seed in range(SEEDS):
        F = gen_predictors("iid", M, N, seed)
        data, _ = gen_truth_and_data(F, "gaussian", rho=1.0, sigma_x=1.0, sigma=1.0, seed=seed)
        hat = ridge_hat(data, LAM2)
        press.append(hat.press)
        rep = gap_gamp(gamp_run(data, "gaussian", Penalty(0.0, LAM2)), data, "gaussian")
        loo.append(rep.err_loocv_hat)
        waic.append(rep.waic)
        gdf.append(rep.gdf)
    print(f"{N:5d} {M / N:6.2f} {np.mean(press):8.3f} {np.mean(loo):10.3f} "
          f"{np.mean(waic):8.3f} {np.mean(gdf):6.3f}")

# press_loocv is the same number from a bare hat diagonal
data, _ = gen_truth_and_data(gen_predictors("iid", 50, 20, 0), "gaussian", 1.0, 1.0, 1.0, 0)
hat = ridge_hat(data, 1.0)
print("\nPRESS from the helper and from ridge_hat:",
      press_loocv(data.y, hat.y_hat, hat.h_diag), hat.press)
