"""Natural-exponential-family likelihoods.

Each family is described by its log-partition function a(theta), so that

    ln f(y | theta) = theta * y - a(theta) + b(y),

with a'(theta) the conditional mean and a''(theta) the conditional variance.
All functions accept scalars or arrays and broadcast.
"""
from enum import Enum

import numpy as np
from scipy.special import expit

from .errors import DomainError

EXP_DOMAIN_EPS = 1e-12


class LikelihoodFamily(str, Enum):
    GAUSSIAN = "gaussian"
    LOGISTIC = "logistic"
    POISSON = "poisson"
    EXPONENTIAL = "exponential"


def as_family(family) -> LikelihoodFamily:
    """Accept a family enum member or its string name."""
    if isinstance(family, LikelihoodFamily):
        return family
    try:
        return LikelihoodFamily(str(family).lower())
    except ValueError:
        names = ", ".join(f.value for f in LikelihoodFamily)
        raise ValueError(f"unknown family {family!r}; expected one of {names}") from None


def check_domain(family, theta):
    fam = as_family(family)
    if fam is LikelihoodFamily.EXPONENTIAL:
        bad = np.flatnonzero(np.atleast_1d(np.asarray(theta) >= -EXP_DOMAIN_EPS))
        if bad.size:
            raise DomainError(
                f"exponential family requires theta < 0 (violated at index {bad[0]})",
                index=int(bad[0]),
            )


def _ret(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _a(fam, th):
    if fam is LikelihoodFamily.GAUSSIAN:
        return 0.5 * th * th
    if fam is LikelihoodFamily.LOGISTIC:
        return np.maximum(th, 0.0) + np.log1p(np.exp(-np.abs(th)))
    if fam is LikelihoodFamily.POISSON:
        return np.exp(th)
    return -np.log(-th)


def _d1(fam, th):
    if fam is LikelihoodFamily.GAUSSIAN:
        return th
    if fam is LikelihoodFamily.LOGISTIC:
        return expit(th)
    if fam is LikelihoodFamily.POISSON:
        return np.exp(th)
    return -1.0 / th


def _d2(fam, th):
    if fam is LikelihoodFamily.GAUSSIAN:
        return np.ones_like(th)
    if fam is LikelihoodFamily.LOGISTIC:
        p = expit(th)
        return p * (1.0 - p)
    if fam is LikelihoodFamily.POISSON:
        return np.exp(th)
    return 1.0 / (th * th)


def a_value(family, theta):
    """Log-partition a(theta)."""
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    check_domain(fam, th)
    return _ret(_a(fam, th))


def a_derivs(family, theta):
    """Return (a'(theta), a''(theta))."""
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    check_domain(fam, th)
    return _ret(_d1(fam, th)), _ret(_d2(fam, th))


def a_prime(family, theta):
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    check_domain(fam, th)
    return _ret(_d1(fam, th))


def a_second(family, theta):
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    check_domain(fam, th)
    return _ret(_d2(fam, th))


def a_third(family, theta, h=1e-5):
    """Third derivative of a by central difference of a''."""
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    if fam is LikelihoodFamily.GAUSSIAN:
        return _ret(np.zeros_like(th))
    step = h * np.maximum(1.0, np.abs(th))
    if fam is LikelihoodFamily.EXPONENTIAL:
        step = np.minimum(step, 0.5 * np.abs(th))
    check_domain(fam, th + step)
    return _ret((_d2(fam, th + step) - _d2(fam, th - step)) / (2.0 * step))


def cumulant_gap(family, theta, t):
    """Bregman remainder a(theta + t) - a(theta) - a'(theta) t.

    This is the cumulant generating function of y | theta minus its
    linear term, and is nonnegative by convexity of a.
    """
    fam = as_family(family)
    th = np.asarray(theta, dtype=float)
    tt = np.asarray(t, dtype=float)
    if fam is LikelihoodFamily.GAUSSIAN:
        return _ret(0.5 * tt * tt * np.ones_like(th))
    check_domain(fam, th)
    check_domain(fam, th + tt)
    return _ret(_a(fam, th + tt) - _a(fam, th) - _d1(fam, th) * tt)


def b_value(family, y):
    """Base-measure term b(y) under the package's reporting convention.

    Only the gaussian family keeps b(y) = -y^2/2, so that training error is
    half the mean squared residual. Poisson drops -ln y!, which is constant
    across models and cancels in every gap.
    """
    fam = as_family(family)
    y = np.asarray(y, dtype=float)
    if fam is LikelihoodFamily.GAUSSIAN:
        return _ret(-0.5 * y * y)
    return _ret(np.zeros_like(y))


def pointwise_loss(family, y, theta):
    """-ln f(y | theta) = a(theta) - y theta - b(y), elementwise."""
    fam = as_family(family)
    y = np.asarray(y, dtype=float)
    th = np.asarray(theta, dtype=float)
    if fam is LikelihoodFamily.GAUSSIAN:
        return _ret(0.5 * (y - th) ** 2)
    return _ret(np.asarray(a_value(fam, th)) - y * th - np.asarray(b_value(fam, y)))
