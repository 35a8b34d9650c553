"""Elastic-net penalty h(x) = lambda1 |x| + (lambda2 / 2) x^2."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Penalty:
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)):
            raise ValueError("penalty strengths must be finite")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError(f"penalty strengths must be nonnegative, got {self}")

    @property
    def is_ridge(self) -> bool:
        return self.lambda1 == 0.0

    def validate_for(self, M: int, N: int) -> None:
        """Reject the unpenalized problem when it is degenerate (M < N)."""
        if self.lambda1 == 0.0 and self.lambda2 == 0.0 and M < N:
            raise ValueError(
                f"unpenalized fit with M={M} < N={N} has no unique MAP estimate"
            )

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.lambda1 * np.abs(x).sum() + 0.5 * self.lambda2 * (x @ x))


def soft_threshold(z, thr):
    return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)


def prox_en(m, Sigma, pen: Penalty):
    """Scalar elastic-net proximal map at zero temperature.

    Maximizes -h(x) - (x - m)^2 / (2 Sigma) coordinatewise.

    Parameters
    ----------
    m, Sigma : array_like
        Effective field and its variance (Sigma > 0).
    pen : Penalty

    Returns
    -------
    x_hat, s : ndarray or float
        The maximizer and its rescaled variance dx_hat/dm * Sigma. Both are
        zero inside the threshold |m| <= lambda1 * Sigma (closed threshold).
    """
    m = np.asarray(m, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    if np.any(Sigma <= 0):
        raise ValueError("prox_en requires Sigma > 0")
    thr = pen.lambda1 * Sigma
    # without an l1 term there is no threshold, even at m = 0
    active = (np.abs(m) > thr) | (pen.lambda1 == 0.0)
    denom = pen.lambda2 * Sigma + 1.0
    x = np.where(active, (m - np.sign(m) * thr) / denom, 0.0)
    s = np.where(active, Sigma / denom, 0.0)
    if x.ndim == 0:
        return float(x), float(s)
    return x, s


def penalty_hessian_diag(x_hat, pen: Penalty):
    """Second derivative of h at x_hat: lambda2 everywhere.

    The l1 term contributes nothing almost everywhere. Restricting to the
    support is left to the caller.
    """
    return np.full(np.shape(x_hat), float(pen.lambda2))
