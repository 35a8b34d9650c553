"""Exact leave-one-out cross-validation.

Linear (ridge) estimators get the PRESS shortcut through leverages H_mumu;
anything else is refit M times.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .cd_solver import CDOptions, cd_fit_gaussian, cd_fit_glm
from .errors import ConvergenceError, DegenerateLeverageError, DivergenceError, RefitError
from .gamp import Dataset, GampOptions, gamp_run
from .likelihoods import LikelihoodFamily, as_family, pointwise_loss
from .parallel import max_workers
from .penalties import Penalty

LEVERAGE_CAP = 1.0 - 1e-8


@dataclass
class HatSummary:
    h_diag: np.ndarray
    df: float
    press: float
    y_hat: np.ndarray
    x_hat: np.ndarray


def ridge_solution(data: Dataset, lambda2: float):
    """Closed-form ridge estimate (F'F/N + lambda2 I)^{-1} F'y / sqrt(N)."""
    N = data.N
    A = data.F.T @ data.F / N + lambda2 * np.eye(N)
    try:
        cf = linalg.cho_factor(A)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular ridge normal matrix: {exc}") from exc
    return linalg.cho_solve(cf, data.F.T @ data.y / np.sqrt(N)), cf


def press_loocv(y, y_hat, h_diag) -> float:
    """PRESS: (1/2M) sum ((y - y_hat) / (1 - H_mumu))^2."""
    y, y_hat, h = (np.asarray(v, dtype=float) for v in (y, y_hat, h_diag))
    bad = np.flatnonzero(h >= 1.0)
    if bad.size:
        raise DegenerateLeverageError(f"leverage H[{bad[0]}] = {h[bad[0]]} >= 1", index=int(bad[0]))
    r = (y - y_hat) / (1.0 - h)
    return float(0.5 * np.mean(r**2))


def ridge_hat(data: Dataset, lambda2: float) -> HatSummary:
    """Leverages, fitted values and PRESS for ridge regression.

    The diagonal of H = (1/N) F (F'F/N + lambda2 I)^{-1} F' is formed row by
    row without materializing H.
    """
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    x_hat, cf = ridge_solution(data, lambda2)
    N = data.N
    B = linalg.cho_solve(cf, data.F.T)
    h = np.einsum("ij,ji->i", data.F, B) / N
    y_hat = data.F @ x_hat / np.sqrt(N)
    if lambda2 == 0.0 and h.size and h.max() > LEVERAGE_CAP:
        mu = int(np.argmax(h))
        raise DegenerateLeverageError(f"leverage H[{mu}] = {h[mu]} too close to 1 at lambda2=0", index=mu)
    press = press_loocv(data.y, y_hat, h)
    return HatSummary(h_diag=h, df=float(h.sum() / data.M), press=press, y_hat=y_hat, x_hat=x_hat)


def fit(data: Dataset, family, pen: Penalty, solver: str = "cd", x0=None,
        cd_opts: Optional[CDOptions] = None, gamp_opts: Optional[GampOptions] = None):
    """Fit with the named solver and return x_hat."""
    fam = as_family(family)
    if solver == "cd":
        if fam is LikelihoodFamily.GAUSSIAN:
            return cd_fit_gaussian(data, pen, cd_opts, x0=x0)
        return cd_fit_glm(data, fam, pen, cd_opts, x0=x0)
    if solver == "gamp":
        state = gamp_run(data, fam, pen, gamp_opts, x0=x0)
        if not state.converged:
            raise ConvergenceError(f"GAMP did not converge in {state.iter} iterations", last=state.x_hat)
        return state.x_hat
    if solver == "direct":
        if fam is not LikelihoodFamily.GAUSSIAN or pen.lambda1 != 0.0:
            raise ValueError("direct solver handles gaussian ridge only")
        return ridge_solution(data, pen.lambda2)[0]
    raise ValueError(f"unknown solver {solver!r}")


def brute_loocv(data: Dataset, family, pen: Penalty, solver: str = "cd", x_full=None,
                skip_failures: bool = False, n_jobs: Optional[int] = None, **fit_kw):
    """Leave-one-out error by M explicit refits.

    Each refit is warm-started from the full-data estimate. The loss is
    -ln f(y_mu | f_mu x_hat(D minus mu) / sqrt(N)).

    Returns
    -------
    err_loocv : float
        Mean over successful refits.
    per_mu : ndarray
        Per-observation losses (NaN for skipped failures).
    """
    fam = as_family(family)
    M, N = data.M, data.N
    if x_full is None and M > 1:
        x_full = fit(data, fam, pen, solver, **fit_kw)

    def one(mu):
        sub = data.drop(mu)
        try:
            if sub.M == 0:
                x = np.zeros(N)
            else:
                x = fit(sub, fam, pen, solver, x0=x_full, **fit_kw)
        except (ConvergenceError, DivergenceError, np.linalg.LinAlgError, ValueError) as exc:
            if skip_failures:
                return np.nan
            raise RefitError(f"refit without observation {mu} failed: {exc}", index=mu) from exc
        theta = data.F[mu] @ x / np.sqrt(N)
        return float(pointwise_loss(fam, data.y[mu], theta))

    workers = max_workers(n_jobs)
    if workers > 1 and M > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_mu = np.array(list(ex.map(one, range(M))))
    else:
        per_mu = np.array([one(mu) for mu in range(M)])
    return float(np.nanmean(per_mu)), per_mu
