"""GAMP for penalized GLM regression at the MAP (zero-temperature) limit.

The model parameter is theta = F x / sqrt(N); the estimate maximizes

    sum_mu ln f(y_mu | theta_mu) - sum_i h(x_i)

with an elastic-net h. All variances below are the rescaled (beta -> inf)
quantities, so they stay O(1).
"""
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DivergenceError, DomainError
from .likelihoods import LikelihoodFamily, _d1, _d2, as_family, check_domain
from .penalties import Penalty, prox_en


@dataclass
class Dataset:
    """Responses y (length M) and predictors F (M x N)."""

    y: np.ndarray
    F: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.F = np.asarray(self.F, dtype=float)
        if self.F.ndim != 2:
            raise ValueError("F must be a 2-D array")
        if self.F.shape[0] != self.y.shape[0]:
            raise ValueError(f"y has {self.y.size} entries but F has {self.F.shape[0]} rows")
        if self.check:
            if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.F))):
                raise ValueError("dataset contains NaN or Inf")
            if self.M > 0:
                col = (self.F**2).sum(axis=0) / self.M
                if np.any(np.abs(col - 1.0) > 0.2):
                    warnings.warn(
                        "predictor columns are not standardized (sum_mu F^2 deviates from M by >20%)",
                        stacklevel=2,
                    )

    @property
    def M(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F.shape[1]

    @property
    def alpha(self) -> float:
        return self.M / self.N

    def drop(self, mu: int) -> "Dataset":
        keep = np.arange(self.M) != mu
        return Dataset(self.y[keep], self.F[keep], check=False)


@dataclass
class GampOptions:
    max_iter: int = 1000
    tol: float = 1e-8
    damping: float = 0.7
    seed: Optional[int] = None
    init_scale: float = 0.1


@dataclass
class GampState:
    x_hat: np.ndarray
    s: np.ndarray
    theta_hat: np.ndarray  # theta*, equals F x_hat / sqrt(N) at a fixed point
    theta_cav: np.ndarray  # Onsager-corrected mean, theta_hat - s_theta * g
    s_theta: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    Sigma: np.ndarray
    m: np.ndarray
    iter: int
    converged: bool


_NEWTON_MAX = 100
_RESID_TOL = 1e-12


def _bracket(fam, y, cav, s):
    if fam is LikelihoodFamily.LOGISTIC:
        return cav + s * (y - 1.0), cav + s * y
    if fam is LikelihoodFamily.POISSON:
        # theta* lies between cav and log(y); for y = 0 it sits below cav
        with np.errstate(divide="ignore"):
            ly = np.log(y)
        pos = y > 0
        lo = np.where(pos, np.minimum(cav, ly), cav - s * np.exp(np.minimum(cav, 700.0)))
        hi = np.where(pos, np.maximum(cav, ly), cav)
        return lo, hi
    # exponential: residual y + 1/theta on theta < 0
    c = cav + s * y
    eps = np.minimum(1.0, s / (np.abs(c) + 2.0))
    hi = np.where(c < 0, c, -eps)
    lo = np.minimum(c, -eps) - s - 1.0
    return lo, hi


def solve_theta_star(y, theta_cav, s_theta, family):
    """Solve (theta - theta_cav) / s_theta = y - a'(theta) for theta.

    Gaussian has a closed form; other families use Newton steps kept
    inside a shrinking bracket (bisection when Newton leaves it).
    """
    fam = as_family(family)
    y, cav, s = np.broadcast_arrays(
        np.asarray(y, dtype=float), np.asarray(theta_cav, dtype=float), np.asarray(s_theta, dtype=float)
    )
    scalar = y.ndim == 0
    y, cav, s = np.atleast_1d(y), np.atleast_1d(cav), np.atleast_1d(s)
    if np.any(s <= 0):
        raise ValueError("solve_theta_star requires s_theta > 0")
    if fam is LikelihoodFamily.GAUSSIAN:
        th = (s * y + cav) / (1.0 + s)
        return float(th[0]) if scalar else th

    lo, hi = _bracket(fam, y, cav, s)
    th = np.clip(cav, lo, hi)
    if fam is LikelihoodFamily.EXPONENTIAL:
        th = np.where(th >= hi, 0.5 * (lo + hi), th)
    done = np.zeros(th.shape, dtype=bool)
    prev_step = hi - lo
    for _ in range(_NEWTON_MAX):
        phi = th - cav - s * (y - _d1(fam, th))
        done = np.abs(phi) < _RESID_TOL * np.maximum(1.0, np.abs(th))
        done |= (hi - lo) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(th))
        if np.all(done):
            break
        pos = phi > 0
        hi = np.where(pos, th, hi)
        lo = np.where(pos, lo, th)
        dphi = 1.0 + s * _d2(fam, th)
        newton = th - phi / dphi
        # Newton only while it stays in the bracket and halves the step,
        # otherwise it can oscillate across a sigmoid knee
        use = (newton > lo) & (newton < hi) & (np.abs(newton - th) < 0.5 * prev_step)
        nxt = np.where(use, newton, 0.5 * (lo + hi))
        prev_step = np.where(done, prev_step, np.abs(nxt - th))
        th = np.where(done, th, nxt)
    else:
        if not np.all(done):
            raise ConvergenceError("theta* solve did not converge in 100 iterations", last=th)
    check_domain(fam, th)
    return float(th[0]) if scalar else th


def g_out_pair(y, theta_cav, s_theta, family):
    """Rescaled output score and its derivative.

    Returns
    -------
    g : y - a'(theta*)
    dg : -a''(theta*) / (1 + s_theta a''(theta*))
    theta_star
    """
    fam = as_family(family)
    y, cav, s = np.broadcast_arrays(
        np.asarray(y, dtype=float), np.asarray(theta_cav, dtype=float), np.asarray(s_theta, dtype=float)
    )
    scalar = y.ndim == 0
    y, cav, s = np.atleast_1d(y), np.atleast_1d(cav), np.atleast_1d(s)
    th = cav.copy()
    pos = s > 0
    if np.any(pos):
        th[pos] = solve_theta_star(y[pos], cav[pos], s[pos], fam)
    check_domain(fam, th)
    d2 = _d2(fam, th)
    g = y - _d1(fam, th)
    dg = -d2 / (1.0 + s * d2)
    if scalar:
        return float(g[0]), float(dg[0]), float(th[0])
    return g, dg, th


def gamp_run(data: Dataset, family, pen: Penalty, opts: Optional[GampOptions] = None,
             x0=None) -> GampState:
    """Iterate GAMP to a fixed point.

    ``x0`` optionally warm-starts the coefficient estimate; otherwise x is
    initialized at zero (or small seeded noise when ``opts.seed`` is set).
    """
    fam = as_family(family)
    opts = opts or GampOptions()
    pen.validate_for(data.M, data.N)
    y, F = data.y, data.F
    M, N = F.shape
    sqN = np.sqrt(N)
    F2 = F * F
    delta = opts.damping

    if x0 is not None:
        x = np.array(x0, dtype=float)
    elif opts.seed is not None:
        x = opts.init_scale * np.random.default_rng(opts.seed).standard_normal(N)
    else:
        x = np.zeros(N)
    s = np.ones(N)
    g_prev = np.zeros(M)

    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        try:
            s_theta = F2 @ s / N
            theta_cav = F @ x / sqN - g_prev * s_theta
            g, dg, _ = g_out_pair(y, theta_cav, s_theta, fam)
            prec = -(F2.T @ dg) / N
            Sigma = 1.0 / prec
            m = x + Sigma * (F.T @ g) / sqN
            x_new, s_new = prox_en(m, Sigma, pen)
        except (FloatingPointError, ZeroDivisionError, DomainError, ValueError) as exc:
            raise DivergenceError(f"GAMP broke down at iteration {it}: {exc}", iteration=it, last=x) from exc
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new)) and np.all(np.isfinite(g))):
            raise DivergenceError(f"non-finite GAMP iterate at iteration {it}", iteration=it, last=x)
        x_raw, s_raw = x_new, s_new
        x_new = delta * x_new + (1.0 - delta) * x
        s_new = delta * s_new + (1.0 - delta) * s
        change = np.max(np.abs(x_new - x)) if N else 0.0
        x, s, g_prev = x_new, s_new, g
        if change < opts.tol:
            converged = True
            # damping never sets a coordinate exactly to zero; the raw prox
            # output is exactly sparse and within tol/damping of x
            x, s = x_raw, s_raw
            break

    # one output-side pass so every field refers to the returned x, s
    s_theta = F2 @ s / N
    theta_cav = F @ x / sqN - g_prev * s_theta
    g, dg, theta_star = g_out_pair(y, theta_cav, s_theta, fam)
    Sigma = -1.0 / ((F2.T @ dg) / N)
    m = x + Sigma * (F.T @ g) / sqN
    if not np.all(np.isfinite(theta_star)):
        raise DivergenceError("non-finite GAMP state after final pass", iteration=it, last=x)
    return GampState(
        x_hat=x, s=s, theta_hat=theta_star, theta_cav=theta_cav, s_theta=s_theta,
        g=g, dg=dg, Sigma=Sigma, m=m, iter=it, converged=converged,
    )


def stability_margin(state: GampState, alpha: float) -> float:
    """alpha * mean(s^2) * mean(dg^2); a value above 1 flags local instability."""
    return float(alpha * np.mean(state.s**2) * np.mean(state.dg**2))
