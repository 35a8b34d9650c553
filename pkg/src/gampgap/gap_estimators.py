"""Prediction-error and generalization-gap estimators.

Three routes produce the same report:

* ``gap_gamp``: per-observation variances read off a converged GAMP state.
* ``gap_from_estimate``: the same variances rebuilt from the penalized
  Hessian at any stationary point, so no GAMP run is needed.
* ``gap_from_estimate(..., use_cavity_variance=True)``: the Hessian route
  with an explicit leave-one-out variance for each observation. This
  matters for designs with correlated or rank-deficient predictors.
"""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularCavityError, UnsupportedDiagnosticError
from .gamp import Dataset, GampState, stability_margin
from .likelihoods import (
    LikelihoodFamily,
    a_derivs,
    a_prime,
    a_second,
    a_third,
    as_family,
    cumulant_gap,
    pointwise_loss,
)
from .penalties import Penalty

TAYLOR_SWITCH = 1e-8
CAVITY_FLOOR = 1e-10
RADIUS_SLACK = 1e-9


@dataclass
class CavityQuantities:
    theta_cav: np.ndarray
    s_theta_cav: np.ndarray
    chi_theta: np.ndarray
    chi_theta_cav: np.ndarray
    d: np.ndarray


@dataclass
class GapReport:
    err_train: float
    gdf: float
    sure: float
    fv: float
    waic: float
    cfv: float
    fchi: float
    delta_loocv_hat: float
    err_loocv_hat: float
    radius_ok: Optional[bool]
    stability_margin: float
    route: str = "gamp"
    degenerate: bool = False
    undefined: bool = False

    def as_dict(self):
        return asdict(self)


def training_error(theta_hat, y, family) -> float:
    """-(1/M) sum_mu [theta y - a(theta) + b(y)]."""
    return float(np.mean(pointwise_loss(family, y, theta_hat)))


def chi_theta(s_theta, theta_hat, family):
    """chi_theta = s_theta / (1 + s_theta a''(theta_hat)), the response dtheta/dy."""
    s_theta = np.asarray(s_theta, dtype=float)
    return s_theta / (1.0 + s_theta * np.asarray(a_second(family, theta_hat)))


def gdf_gamp(state: GampState, family) -> float:
    return float(np.mean(chi_theta(state.s_theta, state.theta_hat, family)))


def sure(err_train: float, gdf: float, sigma2: float) -> float:
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return 2.0 * sigma2 * err_train + 2.0 * sigma2 * gdf


def fv_gamp(state: GampState, y, family) -> float:
    """Functional variance (1/M) sum g^2 chi_theta."""
    chi = chi_theta(state.s_theta, state.theta_hat, family)
    return float(np.mean(state.g**2 * chi))


def _d_coefficient(fam, theta, theta_cav):
    diff = theta - theta_cav
    a1, a2 = a_derivs(fam, theta)
    a1c = np.asarray(a_prime(fam, theta_cav))
    small = np.abs(diff) < TAYLOR_SWITCH
    safe = np.where(small, 1.0, diff)
    d = (np.asarray(a1) - a1c) / safe - np.asarray(a2)
    if np.any(small):
        d = np.where(small, -0.5 * np.asarray(a_third(fam, theta)) * diff, d)
    return d


def cavity_quantities(theta_hat, y, family, s_theta, quad_form=None,
                      use_cavity_variance: bool = False) -> CavityQuantities:
    """Leave-one-out parameters and responses without refitting.

    Parameters
    ----------
    theta_hat, y, s_theta : arrays of length M
    quad_form : array of length M, optional
        (1/N) f_mu chi f_mu' from the inverse penalized Hessian. Used as the
        observation response in the cavity-variance branch; falls back to
        chi_theta when absent.
    use_cavity_variance : bool
        Replace s_theta by the leave-one-out variance c / (1 - a'' c),
        evaluated in two passes.
    """
    fam = as_family(family)
    theta_hat = np.asarray(theta_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    s_theta = np.asarray(s_theta, dtype=float)
    chi = chi_theta(s_theta, theta_hat, fam)
    resid = y - np.asarray(a_prime(fam, theta_hat))
    theta_cav = theta_hat - s_theta * resid
    base = chi
    S = s_theta
    if use_cavity_variance:
        base = chi if quad_form is None else np.asarray(quad_form, dtype=float)
        denom = 1.0 - np.asarray(a_second(fam, theta_cav)) * base
        bad = np.flatnonzero(denom <= CAVITY_FLOOR)
        if bad.size:
            raise SingularCavityError(
                f"cavity variance is singular at observation {bad[0]} (1 - a'' chi = {denom[bad[0]]:.3g})",
                index=int(bad[0]),
            )
        S = base / denom
        theta_cav = theta_hat - S * resid
    d = _d_coefficient(fam, theta_hat, theta_cav)
    chi_cav = base / (1.0 + d * base)
    return CavityQuantities(theta_cav=theta_cav, s_theta_cav=S, chi_theta=chi,
                            chi_theta_cav=chi_cav, d=d)


def cavity_from_state(state: GampState, y, family, use_cavity_variance: bool = False) -> CavityQuantities:
    return cavity_quantities(state.theta_hat, y, family, state.s_theta,
                             use_cavity_variance=use_cavity_variance)


def delta_loocv_hat(cav: CavityQuantities, y, family):
    """Return (cfv, fchi, delta) for the LOOCV gap.

    cfv = (1/M) sum r^2 chi_cav and fchi = -(1/M) sum C(theta_cav, chi_cav r),
    with r = y - a'(theta_cav) and C the Bregman remainder of a.
    """
    fam = as_family(family)
    y = np.asarray(y, dtype=float)
    r = y - np.asarray(a_prime(fam, cav.theta_cav))
    cfv = float(np.mean(r**2 * cav.chi_theta_cav))
    try:
        cg = cumulant_gap(fam, cav.theta_cav, cav.chi_theta_cav * r)
    except DomainError as exc:
        raise DomainError(f"cumulant term leaves the domain at observation {exc.index}", index=exc.index) from exc
    fchi = -float(np.mean(cg))
    return cfv, fchi, cfv + fchi


def _radius_ratio(s_theta, eta=1.0):
    s_theta = np.asarray(s_theta, dtype=float)
    if s_theta.size == 0:
        return 0.0
    return float(eta * np.max(s_theta / (1.0 + s_theta)))


def series_radius_ok(state, eta: float = 1.0, family="gaussian"):
    """Convergence check for the series behind WAIC (gaussian only).

    ``state`` may be a GampState or an array of s_theta values.
    Returns (ok, worst_ratio).
    """
    if as_family(family) is not LikelihoodFamily.GAUSSIAN:
        raise UnsupportedDiagnosticError("the series-radius diagnostic is defined for the gaussian family only")
    s_theta = state.s_theta if isinstance(state, GampState) else state
    ratio = _radius_ratio(s_theta, eta)
    return ratio < 1.0 - RADIUS_SLACK, ratio


def _assemble(fam, y, theta_hat, s_theta, s, dg, g, alpha, sigma2, route,
              quad_form=None, use_cavity_variance=False):
    err = training_error(theta_hat, y, fam)
    chi = chi_theta(s_theta, theta_hat, fam)
    gdf = float(np.mean(chi))
    fv = float(np.mean(g**2 * chi))
    undefined = False
    try:
        cav = cavity_quantities(theta_hat, y, fam, s_theta, quad_form, use_cavity_variance)
        cfv, fchi, delta = delta_loocv_hat(cav, y, fam)
    except DomainError:
        cfv = fchi = delta = float("nan")
        undefined = True
    radius = None
    if fam is LikelihoodFamily.GAUSSIAN:
        radius = _radius_ratio(s_theta) < 1.0 - RADIUS_SLACK
    margin = float(alpha * np.mean(s**2) * np.mean(dg**2)) if s.size and dg.size else 0.0
    return GapReport(
        err_train=err, gdf=gdf, sure=sure(err, gdf, sigma2), fv=fv, waic=err + fv,
        cfv=cfv, fchi=fchi, delta_loocv_hat=delta, err_loocv_hat=err + delta,
        radius_ok=radius, stability_margin=margin, route=route, undefined=undefined,
    )


def gap_gamp(state: GampState, data: Dataset, family, pen: Optional[Penalty] = None,
             sigma2: float = 1.0, use_cavity_variance: bool = False) -> GapReport:
    """Gap report from a converged GAMP state."""
    fam = as_family(family)
    rep = _assemble(fam, data.y, state.theta_hat, state.s_theta, state.s, state.dg, state.g,
                    data.alpha, sigma2, "gamp", use_cavity_variance=use_cavity_variance)
    rep.stability_margin = stability_margin(state, data.alpha)
    return rep


@dataclass
class HessianQuantities:
    theta_hat: np.ndarray
    s: np.ndarray
    s_theta: np.ndarray
    quad_form: np.ndarray
    support: np.ndarray


def hessian_quantities(x_hat, data: Dataset, family, pen: Penalty) -> HessianQuantities:
    """Variances from the inverse penalized Hessian on the support of x_hat.

    chi = ((1/N) F_L' D F_L + lambda2 I)^{-1}, s_i = chi_ii on the support L
    (zero elsewhere), s_theta = (1/N) F^2 s and quad_form = (1/N) f_mu chi f_mu'.
    """
    fam = as_family(family)
    x_hat = np.asarray(x_hat, dtype=float)
    F = data.F
    N = data.N
    theta = F @ x_hat / np.sqrt(N)
    support = np.flatnonzero(x_hat != 0)
    s = np.zeros(N)
    if support.size == 0:
        zeros = np.zeros(data.M)
        return HessianQuantities(theta, s, zeros, zeros.copy(), support)
    FL = F[:, support]
    D = np.asarray(a_second(fam, theta))
    J = FL.T @ (D[:, None] * FL) / N + pen.lambda2 * np.eye(support.size)
    try:
        cf = linalg.cho_factor(J)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"penalized Hessian is singular on the support: {exc}") from exc
    chi = linalg.cho_solve(cf, np.eye(support.size))
    s[support] = np.diag(chi)
    s_theta = (F * F) @ s / N
    quad = np.einsum("ij,jk,ik->i", FL, chi, FL) / N
    return HessianQuantities(theta, s, s_theta, quad, support)


def gap_from_estimate(x_hat, data: Dataset, family, pen: Penalty,
                      use_cavity_variance: bool = False, sigma2: float = 1.0) -> GapReport:
    """Gap report from any stationary point, without running GAMP."""
    fam = as_family(family)
    hq = hessian_quantities(x_hat, data, fam, pen)
    route = "cavity" if use_cavity_variance else "hessian"
    y = data.y
    if hq.support.size == 0:
        err = training_error(hq.theta_hat, y, fam)
        radius = True if fam is LikelihoodFamily.GAUSSIAN else None
        return GapReport(err_train=err, gdf=0.0, sure=sure(err, 0.0, sigma2), fv=0.0, waic=err,
                         cfv=0.0, fchi=0.0, delta_loocv_hat=0.0, err_loocv_hat=err,
                         radius_ok=radius, stability_margin=0.0, route=route, degenerate=True)
    a1, a2 = a_derivs(fam, hq.theta_hat)
    g = y - np.asarray(a1)
    dg = -np.asarray(a2) / (1.0 + hq.s_theta * np.asarray(a2))
    return _assemble(fam, y, hq.theta_hat, hq.s_theta, hq.s, dg, g, data.alpha, sigma2, route,
                     quad_form=hq.quad_form, use_cavity_variance=use_cavity_variance)


def tic_aic(x_hat, data: Dataset, family, pen: Penalty):
    """TIC and AIC bias terms, each divided by M.

    tic_gap = Tr(I J^{-1}) / M with I the outer product of per-observation
    scores and J the penalized Hessian, both on the support of x_hat.
    """
    fam = as_family(family)
    hq = hessian_quantities(x_hat, data, fam, pen)
    k = int(np.count_nonzero(x_hat))
    if hq.support.size == 0:
        return 0.0, 0.0
    r = data.y - np.asarray(a_prime(fam, hq.theta_hat))
    return float(np.mean(r**2 * hq.quad_form)), k / data.M
