"""Coordinate descent and proximal-Newton reference solvers.

These are independent of GAMP and serve as ground truth for fits and
leave-one-out refits.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError
from .gamp import Dataset
from .likelihoods import LikelihoodFamily, a_value, a_derivs, as_family
from .penalties import Penalty


@dataclass
class CDOptions:
    tol: float = 1e-10
    max_sweeps: int = 10_000
    outer_tol: float = 1e-8
    max_outer: int = 100
    max_halvings: int = 20
    max_norm: float = 1e8


def objective(x, data: Dataset, family, pen: Penalty) -> float:
    """Negative penalized log-likelihood sum_mu [a(theta) - y theta - b(y)] + sum_i h(x_i)."""
    fam = as_family(family)
    x = np.asarray(x, dtype=float)
    theta = data.F @ x / np.sqrt(data.N)
    if fam is LikelihoodFamily.GAUSSIAN:
        loss = 0.5 * np.sum((data.y - theta) ** 2)
    else:
        loss = np.sum(np.asarray(a_value(fam, theta)) - data.y * theta)
    return float(loss + pen.value(x))


def kkt_residual(x, data: Dataset, family, pen: Penalty) -> float:
    """Largest violation of the elastic-net stationarity conditions."""
    fam = as_family(family)
    x = np.asarray(x, dtype=float)
    theta = data.F @ x / np.sqrt(data.N)
    mean, _ = a_derivs(fam, theta)
    grad = -(data.F.T @ (data.y - mean)) / np.sqrt(data.N) + pen.lambda2 * x
    on = x != 0
    r_on = np.abs(grad[on] + pen.lambda1 * np.sign(x[on]))
    r_off = np.maximum(np.abs(grad[~on]) - pen.lambda1, 0.0)
    return float(max(r_on.max(initial=0.0), r_off.max(initial=0.0)))


def _cd_quadratic(G, c, lam1, lam2, x0, tol, max_sweeps):
    """Minimize x'Gx/2 - c'x + lam1 |x|_1 + lam2 |x|^2 / 2 by cyclic CD.

    Full sweeps alternate with sweeps restricted to the current support,
    both in ascending index order.
    """
    N = c.shape[0]
    x = np.array(x0, dtype=float)
    Gx = G @ x
    diag = np.diag(G).copy()
    denom = diag + lam2
    if np.any(denom <= 0):
        raise ConvergenceError("coordinate with zero curvature and no ridge term", last=x)
    Gcols = np.ascontiguousarray(G.T)

    def sweep(idx):
        big = 0.0
        for i in idx:
            xi = x[i]
            b = c[i] - Gx[i] + diag[i] * xi
            ab = abs(b)
            new = (b - lam1 * (1.0 if b > 0 else -1.0)) / denom[i] if ab > lam1 else 0.0
            d = new - xi
            if d != 0.0:
                x[i] = new
                Gx[:] += Gcols[i] * d
                ad = abs(d)
                if ad > big:
                    big = ad
        return big

    full = np.arange(N)
    sweeps = 0
    while sweeps < max_sweeps:
        big = sweep(full)
        sweeps += 1
        if big < tol:
            return x, sweeps
        active = np.flatnonzero(x)
        while sweeps < max_sweeps:
            big = sweep(active)
            sweeps += 1
            if big < tol:
                break
    raise ConvergenceError(f"coordinate descent did not converge in {max_sweeps} sweeps", last=x)


def cd_fit_gaussian(data: Dataset, pen: Penalty, opts: Optional[CDOptions] = None, x0=None):
    """Cyclic coordinate descent for the gaussian elastic net.

    Each update is x_i = soft(b_i, lambda1) / ((1/N) sum_mu F_mu_i^2 + lambda2)
    with b_i = (1/sqrt N) sum_mu (y_mu - theta_mu^{-i}) F_mu_i.
    """
    opts = opts or CDOptions()
    pen.validate_for(data.M, data.N)
    N = data.N
    if data.M == 0:
        return np.zeros(N)
    G = data.F.T @ data.F / N
    c = data.F.T @ data.y / np.sqrt(N)
    start = np.zeros(N) if x0 is None else x0
    x, _ = _cd_quadratic(G, c, pen.lambda1, pen.lambda2, start, opts.tol, opts.max_sweeps)
    return x


def cd_fit_glm(data: Dataset, family, pen: Penalty, opts: Optional[CDOptions] = None, x0=None,
               callback=None):
    """Proximal-Newton fit for a general GLM with elastic-net penalty.

    Each outer step builds W = (1/N) F' D F and R = (1/sqrt N) F'(y - a'(theta))
    at the current theta, minimizes the penalized quadratic model, and then
    halves the step until the objective does not increase.
    ``callback(x, objective)`` is called after every accepted outer step.
    """
    fam = as_family(family)
    if fam is LikelihoodFamily.GAUSSIAN:
        return cd_fit_gaussian(data, pen, opts, x0=x0)
    opts = opts or CDOptions()
    pen.validate_for(data.M, data.N)
    F, y = data.F, data.y
    N = data.N
    sqN = np.sqrt(N)
    if data.M == 0:
        return np.zeros(N)
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=float)

    def obj(z):
        try:
            return objective(z, data, fam, pen)
        except DomainError:
            return np.inf

    f = obj(x)
    if not np.isfinite(f):
        raise ConvergenceError("starting point outside the likelihood domain", last=f)
    eye = np.eye(N)
    for _ in range(opts.max_outer):
        theta = F @ x / sqN
        mean, var = a_derivs(fam, theta)
        W = F.T @ (var[:, None] * F) / N
        R = F.T @ (y - mean) / sqN
        target = W @ x + R
        if pen.lambda1 == 0.0:
            try:
                x_new = np.linalg.solve(W + pen.lambda2 * eye, target)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(f"singular Newton system: {exc}", last=f) from exc
        else:
            x_new, _ = _cd_quadratic(W, target, pen.lambda1, pen.lambda2, x, opts.tol, opts.max_sweeps)
        step = x_new - x
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            cand = x + t * step
            fc = obj(cand)
            if fc <= f + 1e-12 * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            raise ConvergenceError("line search failed to decrease the objective", last=f)
        x, f = cand, fc
        if callback is not None:
            callback(x, f)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > opts.max_norm:
            raise ConvergenceError("coefficient norm diverges (is the data separable?)", last=f)
        if np.max(np.abs(t * step), initial=0.0) < opts.outer_tol:
            return x
    raise ConvergenceError(f"proximal Newton did not converge in {opts.max_outer} steps", last=f)
