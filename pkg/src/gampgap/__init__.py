"""Generalization-gap estimators for penalized GLMs via GAMP."""
from .likelihoods import LikelihoodFamily, a_value, a_derivs, cumulant_gap
from .penalties import Penalty, prox_en, penalty_hessian_diag
from .gamp import Dataset, GampOptions, GampState, gamp_run, solve_theta_star, g_out_pair, stability_margin
from .gap_estimators import (
    GapReport, CavityQuantities, training_error, gdf_gamp, sure, fv_gamp, cavity_from_state,
    delta_loocv_hat, gap_gamp, gap_from_estimate, tic_aic, series_radius_ok,
)
from .exact_cv import HatSummary, ridge_hat, press_loocv, brute_loocv
from .cd_solver import cd_fit_gaussian, cd_fit_glm
from .replica import ReplicaOrder, rs_solve, rs_errors, at_unstable
from .datagen import GroundTruth, gen_predictors, gen_truth_and_data, empirical_extra_error

__version__ = "0.1.0"
