"""Replica-symmetric saddle point for i.i.d. gaussian predictors.

The estimator's typical behaviour is described by three order parameters:
the self-overlap Q, the overlap with the truth m and the rescaled
susceptibility chi. The conjugates (Theta_hat, chi_hat, mu_hat) come from
the likelihood side. The effective scalar problem on the coefficient side is

    x* = soft(sqrt(chi_hat) z + mu_hat x0, lambda1) / (Theta_hat + lambda2).

Expectations on the coefficient side are integrals over the smooth region
|h| > lambda1 (Gauss-Legendre on a truncated tail). The logistic
observation side is a one-dimensional integral over the estimator field
(composite Gauss-Legendre against the normal density), with the label
probability done analytically.
"""
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, expit, ndtr

from .gamp import solve_theta_star
from .likelihoods import LikelihoodFamily, a_value, as_family
from .penalties import Penalty

RIDGELESS_LAMBDA = 1e-10
RIDGELESS_MAX = 1e-8
_SQ2PI = np.sqrt(2.0 * np.pi)


@dataclass
class ReplicaOptions:
    max_iter: int = 20_000
    tol: float = 1e-10
    damping: float = 0.5
    n_nodes: int = 61
    tail_width: float = 14.0


@dataclass
class ReplicaOrder:
    Q: float
    m: float
    chi: float
    theta_hat: float
    chi_hat: float
    mu_hat: float
    rho_hat: float
    sigma_T2: float
    converged: bool
    iterations: int
    alpha: float = float("nan")
    rho: float = 1.0
    sigma_x: float = 1.0
    sigma: float = 1.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    family: str = "gaussian"
    n_nodes: int = 61


@dataclass
class Conjugates:
    theta_hat: float
    chi_hat: float
    mu_hat: float


_W_MAX = 10.0  # N(0,1) mass beyond this is below 1e-22
_PANEL = 2.0   # panel width in units of the estimator field sqrt(Q) w


class _Rules:
    def __init__(self, n, width):
        t, w = leggauss(n)
        self.tail_u = 0.5 * width * (t + 1.0)
        self.tail_w = 0.5 * width * w
        self.panel_t, self.panel_w = leggauss(max(8, n // 4))

    def gauss_rule(self, Q):
        """Composite Gauss-Legendre rule for E over w ~ N(0, 1).

        Panels have a fixed width in sqrt(Q) w, so the features of the
        integrand stay resolved when Q is large (near-separable data).
        """
        panels = int(np.ceil(2 * _W_MAX * max(1.0, np.sqrt(max(Q, 0.0))) / _PANEL))
        edges = np.linspace(-_W_MAX, _W_MAX, panels + 1)
        a, b = edges[:-1, None], edges[1:, None]
        half = 0.5 * (b - a)
        w = (half * self.panel_t + 0.5 * (a + b)).ravel()
        W = (half * self.panel_w).ravel() * np.exp(-0.5 * w * w) / _SQ2PI
        return w, W


def _tail_moments(s, lam1, rules):
    """For h ~ N(0, s^2) return P(|h| > lam1), E[(|h| - lam1)_+^2], E[h soft(h, lam1)]."""
    if s <= 0:
        return (1.0 if lam1 == 0 else 0.0), 0.0, 0.0
    c = lam1 / s
    u = c + rules.tail_u
    phi = np.exp(-0.5 * u * u) / _SQ2PI
    w = 2.0 * rules.tail_w * phi
    excess = s * u - lam1
    return float(w.sum()), float(w @ excess**2), float(w @ (s * u * excess))


def coefficient_side(conj: Conjugates, rho, sigma_x, lambda1, lambda2, rules):
    """Return (Q, m, chi, rho_hat) given the conjugate parameters."""
    A = conj.theta_hat + lambda2
    s0 = np.sqrt(max(conj.chi_hat, 0.0))
    s1 = np.sqrt(max(conj.chi_hat, 0.0) + conj.mu_hat**2 * sigma_x**2)
    P0, E0, _ = _tail_moments(s0, lambda1, rules)
    P1, E1, Eh1 = _tail_moments(s1, lambda1, rules)
    Q = ((1.0 - rho) * E0 + rho * E1) / A**2
    m = rho * conj.mu_hat * sigma_x**2 / s1**2 * Eh1 / A if s1 > 0 else 0.0
    rho_hat = (1.0 - rho) * P0 + rho * P1
    return Q, m, rho_hat / A, rho_hat


def en_closed_form(conj: Conjugates, rho, sigma_x, lambda1, lambda2):
    """Closed-form elastic-net order parameters (erfc expressions).

    Used to cross-check the quadrature. Q uses
    E[(|h| - l1)_+^2] = s^2 (1 + 2 T^2) erfc(T) - (2 s^2 T / sqrt(pi)) e^{-T^2}
    with T = l1 / (sqrt(2) s), and m carries sigma_x^2.
    """
    A = conj.theta_hat + lambda2
    out_Q, out_rho = 0.0, 0.0
    for weight, var in ((1.0 - rho, conj.chi_hat), (rho, conj.chi_hat + conj.mu_hat**2 * sigma_x**2)):
        s = np.sqrt(var)
        T = lambda1 / (np.sqrt(2.0) * s)
        out_Q += weight * (s**2 * (1 + 2 * T**2) * erfc(T) - 2 * s**2 * T / np.sqrt(np.pi) * np.exp(-T**2))
        out_rho += weight * erfc(T)
    s1 = np.sqrt(conj.chi_hat + conj.mu_hat**2 * sigma_x**2)
    m = rho * sigma_x**2 * conj.mu_hat / A * erfc(lambda1 / (np.sqrt(2.0) * s1))
    return out_Q / A**2, m, out_rho / A, out_rho


def _logistic_nodes(Q, m, chi, sT2, rules):
    w, W = rules.gauss_rule(Q)
    omega = np.sqrt(max(Q, 0.0)) * w
    r = m / np.sqrt(Q) if Q > 0 else 0.0
    s_c = np.sqrt(max(sT2 - r * r, 1e-300))
    p1 = ndtr(r * w / s_c)
    out = {"w": w, "W": W, "omega": omega, "p1": p1, "p0": 1.0 - p1, "r": r, "s_c": s_c}
    for y in (0, 1):
        u = solve_theta_star(np.full_like(omega, float(y)), omega, chi, "logistic")
        p = expit(u)
        out[f"a2_{y}"] = p * (1.0 - p)
        out[f"g_{y}"] = y - p
    return out


def observation_side(family, Q, m, chi, alpha, sT2, rules) -> Conjugates:
    fam = as_family(family)
    if fam is LikelihoodFamily.GAUSSIAN:
        th = alpha / (1.0 + chi)
        return Conjugates(th, alpha * (Q - 2 * m + sT2) / (1.0 + chi) ** 2, th)
    if fam is LikelihoodFamily.LOGISTIC:
        nd = _logistic_nodes(Q, m, chi, sT2, rules)
        W, p1, p0 = nd["W"], nd["p1"], nd["p0"]
        a21, a20 = nd["a2_1"], nd["a2_0"]
        theta_hat = alpha * W @ (p1 * a21 / (1 + chi * a21) + p0 * a20 / (1 + chi * a20))
        chi_hat = alpha * W @ (p1 * nd["g_1"] ** 2 + p0 * nd["g_0"] ** 2)
        dens = np.exp(-0.5 * (nd["r"] * nd["w"] / nd["s_c"]) ** 2) / (_SQ2PI * nd["s_c"])
        mu_hat = alpha * W @ ((nd["g_1"] - nd["g_0"]) * dens)
        return Conjugates(float(theta_hat), float(chi_hat), float(mu_hat))
    raise ValueError("the replica solver supports the gaussian and logistic families")


def rs_solve(family, pen: Penalty, alpha: float, rho: float = 1.0, sigma_x: float = 1.0,
             sigma: float = 1.0, opts: Optional[ReplicaOptions] = None) -> ReplicaOrder:
    """Damped fixed-point iteration of the RS saddle-point equations."""
    fam = as_family(family)
    opts = opts or ReplicaOptions()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if fam not in (LikelihoodFamily.GAUSSIAN, LikelihoodFamily.LOGISTIC):
        raise ValueError("the replica solver supports the gaussian and logistic families")
    lam1, lam2 = pen.lambda1, pen.lambda2
    if lam1 == 0.0 and lam2 == 0.0:
        lam2 = RIDGELESS_LAMBDA
    rules = _Rules(opts.n_nodes, opts.tail_width)
    sT2 = rho * sigma_x**2 + sigma**2
    Q, m, chi = rho * sigma_x**2, 0.5 * rho * sigma_x**2, 1.0
    delta = opts.damping
    converged = False
    warned = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        conj = observation_side(fam, Q, m, chi, alpha, sT2, rules)
        Qn, mn, chin, _ = coefficient_side(conj, rho, sigma_x, lam1, lam2, rules)
        Qd = delta * Qn + (1 - delta) * Q
        md = delta * mn + (1 - delta) * m
        chid = delta * chin + (1 - delta) * chi
        if md * md > Qd * sT2:
            md = np.sign(md) * np.sqrt(Qd * sT2) * (1 - 1e-12)
            if not warned:
                warnings.warn("overlap m exceeded sqrt(Q sigma_T^2); projected back", stacklevel=2)
                warned = True
        change = max(abs(Qd - Q), abs(md - m), abs(chid - chi))
        Q, m, chi = Qd, md, chid
        if not np.isfinite(change):
            break
        if change < opts.tol:
            converged = True
            break
    conj = observation_side(fam, Q, m, chi, alpha, sT2, rules)
    _, _, _, rho_hat = coefficient_side(conj, rho, sigma_x, lam1, lam2, rules)
    return ReplicaOrder(
        Q=float(Q), m=float(m), chi=float(chi), theta_hat=conj.theta_hat, chi_hat=conj.chi_hat,
        mu_hat=conj.mu_hat, rho_hat=float(rho_hat), sigma_T2=float(sT2), converged=converged,
        iterations=it, alpha=float(alpha), rho=float(rho), sigma_x=float(sigma_x), sigma=float(sigma),
        lambda1=float(lam1), lambda2=float(lam2), family=fam.value, n_nodes=opts.n_nodes,
    )


def rs_errors(order: ReplicaOrder, family=None) -> dict:
    """Theoretical extra-sample error, in-sample gap, GDF and FV."""
    fam = as_family(family if family is not None else order.family)
    Q, m, chi, sT2 = order.Q, order.m, order.chi, order.sigma_T2
    if fam is LikelihoodFamily.GAUSSIAN:
        gdf = chi / (1.0 + chi)
        fv = (Q - 2 * m + sT2) / (1.0 + chi) ** 2 * gdf
        return {"err_extra": 0.5 * (Q - 2 * m + sT2), "gap_in": gdf, "gdf": gdf, "fv": fv}
    if fam is LikelihoodFamily.LOGISTIC:
        rules = _Rules(order.n_nodes, ReplicaOptions().tail_width)
        nd = _logistic_nodes(Q, m, chi, sT2, rules)
        W, p1, p0 = nd["W"], nd["p1"], nd["p0"]
        k1 = chi / (1 + chi * nd["a2_1"])
        k0 = chi / (1 + chi * nd["a2_0"])
        gdf = float(W @ (p1 * k1 + p0 * k0))
        fv = float(W @ (p1 * nd["g_1"] ** 2 * k1 + p0 * nd["g_0"] ** 2 * k0))
        err = -m / np.sqrt(2 * np.pi * sT2) + float(W @ a_value(fam, nd["omega"]))
        return {"err_extra": float(err), "gap_in": gdf, "gdf": gdf, "fv": fv}
    raise ValueError("rs_errors supports the gaussian and logistic families")


def _is_ridgeless(fam, pen: Penalty) -> bool:
    return fam is LikelihoodFamily.GAUSSIAN and pen.lambda1 == 0.0 and pen.lambda2 <= RIDGELESS_MAX


def at_unstable(order: ReplicaOrder, family, pen: Penalty, alpha: float):
    """de Almeida-Thouless test; returns (unstable, lhs) with unstable = lhs > 1.

    The general form is alpha E[(dx*/dh)^2] E[(a''/(1 + chi a''))^2], which for
    the gaussian likelihood is (alpha / rho_hat) (chi / (1 + chi))^2. In the
    ridgeless limit the analytic branch chi = 1/(alpha - 1), i.e. gdf = 1/alpha,
    is used at every alpha, giving lhs = 1/alpha.
    """
    fam = as_family(family)
    if _is_ridgeless(fam, pen):
        lhs = 1.0 / alpha
        return lhs > 1.0, lhs
    lam2 = pen.lambda2 if (pen.lambda1 > 0 or pen.lambda2 > 0) else RIDGELESS_LAMBDA
    coef = order.rho_hat / (order.theta_hat + lam2) ** 2
    if fam is LikelihoodFamily.GAUSSIAN:
        obs = 1.0 / (1.0 + order.chi) ** 2
    elif fam is LikelihoodFamily.LOGISTIC:
        rules = _Rules(order.n_nodes, ReplicaOptions().tail_width)
        nd = _logistic_nodes(order.Q, order.m, order.chi, order.sigma_T2, rules)
        t1 = (nd["a2_1"] / (1 + order.chi * nd["a2_1"])) ** 2
        t0 = (nd["a2_0"] / (1 + order.chi * nd["a2_0"])) ** 2
        obs = float(nd["W"] @ (nd["p1"] * t1 + nd["p0"] * t0))
    else:
        raise ValueError("at_unstable supports the gaussian and logistic families")
    lhs = float(alpha * coef * obs)
    return lhs > 1.0, lhs


def with_nodes(opts: Optional[ReplicaOptions], n_nodes: int) -> ReplicaOptions:
    return replace(opts or ReplicaOptions(), n_nodes=n_nodes)
