"""Synthetic problems with known ground truth, plus CSV I/O for datasets.

Random streams come from numpy's Philox4x64-10 counter-based bit generator
keyed by (seed, stream): stream 0 draws predictors, stream 1 draws the
coefficients and noise. Identical (kind, M, N, seed) therefore gives
bit-identical designs on any platform running the same numpy.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import linalg

from .gamp import Dataset
from .likelihoods import LikelihoodFamily, a_value, as_family

STREAM_PREDICTORS = 0
STREAM_TRUTH = 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class GroundTruth:
    x0: np.ndarray
    theta0: np.ndarray
    sigma: float
    rho: float
    sigma_x: float

    @property
    def sigma_T2(self) -> float:
        """Variance of the noisy teacher field for a fresh i.i.d. row."""
        return float(self.x0 @ self.x0 / self.x0.size + self.sigma**2)


def correlated_cov(N: int, sigma_d: float) -> np.ndarray:
    idx = np.arange(N)
    return sigma_d ** np.abs(idx[:, None] - idx[None, :])


def gen_predictors(kind: str, M: int, N: int, seed: int, sigma_d: float = 0.5,
                   rho_F: float = 1.0) -> np.ndarray:
    """Draw an M x N predictor matrix.

    kind is "iid" (standard normal), "correlated" (rows with covariance
    sigma_d^|i-j|) or "rank_deficient" (an i.i.d. draw with a random
    fraction 1 - rho_F of its singular values removed, columns rescaled to
    sum_mu F^2 = M).
    """
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    rng = make_rng(seed, STREAM_PREDICTORS)
    Z = rng.standard_normal((M, N))
    if kind == "iid":
        return Z
    if kind == "correlated":
        if not (0.0 < sigma_d <= 1.0):
            raise ValueError("sigma_d must lie in (0, 1]")
        try:
            L = linalg.cholesky(correlated_cov(N, sigma_d), lower=True)
        except linalg.LinAlgError:
            raise ValueError(f"covariance sigma_d^|i-j| with sigma_d={sigma_d} is not positive definite") from None
        return Z @ L.T
    if kind == "rank_deficient":
        if not (0.0 < rho_F <= 1.0):
            raise ValueError("rho_F must lie in (0, 1]")
        U, d, Vt = linalg.svd(Z, full_matrices=False)
        r = d.size
        keep = int(np.floor(rho_F * r + 1e-9))
        drop = rng.permutation(r)[: r - keep]
        d = d.copy()
        d[drop] = 0.0
        F = (U * d) @ Vt
        norms = np.sqrt((F**2).sum(axis=0))
        return F * (np.sqrt(M) / np.where(norms > 0, norms, 1.0))
    raise ValueError(f"unknown predictor kind {kind!r}")


def gen_truth_and_data(F, family, rho: float, sigma_x: float, sigma: float, seed: int,
                       on_domain: str = "error"):
    """Bernoulli-Gaussian coefficients and responses from the chosen family.

    Exactly round(rho N) coefficients are nonzero. Gaussian responses are
    theta0 + noise, logistic ones are the indicator of theta0 + noise > 0,
    and poisson/exponential responses are sampled at theta0 directly.
    """
    fam = as_family(family)
    F = np.asarray(F, dtype=float)
    M, N = F.shape
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho must lie in [0, 1]")
    if sigma < 0 or sigma_x <= 0:
        raise ValueError("need sigma >= 0 and sigma_x > 0")
    rng = make_rng(seed, STREAM_TRUTH)
    k = int(round(rho * N))
    for _ in range(100):
        x0 = np.zeros(N)
        support = rng.choice(N, size=k, replace=False)
        x0[np.sort(support)] = sigma_x * rng.standard_normal(k)
        theta0 = F @ x0 / np.sqrt(N)
        if fam is not LikelihoodFamily.EXPONENTIAL or np.all(theta0 < 0):
            break
        if on_domain != "resample":
            raise ValueError("exponential family needs theta0 < 0 for every row")
    else:
        raise ValueError("could not draw theta0 < 0 for the exponential family in 100 attempts")

    noise = sigma * rng.standard_normal(M)
    if fam is LikelihoodFamily.GAUSSIAN:
        y = theta0 + noise
    elif fam is LikelihoodFamily.LOGISTIC:
        y = (theta0 + noise > 0).astype(float)
    elif fam is LikelihoodFamily.POISSON:
        y = rng.poisson(np.exp(theta0)).astype(float)
    else:
        y = rng.exponential(-1.0 / theta0)
    truth = GroundTruth(x0=x0, theta0=theta0, sigma=float(sigma), rho=float(rho), sigma_x=float(sigma_x))
    return Dataset(y, F, check=False), truth


def gaussian_expectation(fn, n_nodes: int = 61):
    """E[fn(w)] for w ~ N(0, 1) by Gauss-Hermite quadrature."""
    w, wt = hermegauss(n_nodes)
    return float(np.sum(wt * fn(w)) / np.sqrt(2 * np.pi))


def empirical_extra_error(x_hat, truth: GroundTruth, family, N: int, n_nodes: int = 61) -> float:
    """Expected loss on a fresh i.i.d. row, from the overlaps of x_hat with x0."""
    fam = as_family(family)
    x_hat = np.asarray(x_hat, dtype=float)
    Q = float(x_hat @ x_hat / N)
    m = float(x_hat @ truth.x0 / N)
    sT2 = truth.sigma_T2
    if fam is LikelihoodFamily.GAUSSIAN:
        return 0.5 * (Q - 2 * m + sT2)
    if fam is LikelihoodFamily.LOGISTIC:
        return -m / np.sqrt(2 * np.pi * sT2) + gaussian_expectation(
            lambda w: a_value(fam, np.sqrt(Q) * w), n_nodes)
    raise ValueError("empirical_extra_error supports the gaussian and logistic families")


def write_dataset(path, data: Dataset) -> None:
    header = ",".join(["y"] + [f"f{i}" for i in range(1, data.N + 1)])
    np.savetxt(path, np.column_stack([data.y, data.F]), delimiter=",", header=header,
               comments="", fmt="%.17g")


def read_dataset(path) -> Dataset:
    arr = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] < 2:
        raise ValueError("dataset CSV needs a y column and at least one predictor column")
    return Dataset(arr[:, 0], arr[:, 1:])


def write_truth(path, truth: GroundTruth) -> None:
    n = truth.x0.size
    cols = np.column_stack([truth.x0, np.full(n, truth.sigma), np.full(n, truth.rho), np.full(n, truth.sigma_x)])
    np.savetxt(path, cols, delimiter=",", header="x0,sigma,rho,sigma_x", comments="", fmt="%.17g")


def read_truth(path, F) -> GroundTruth:
    arr = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    x0 = arr[:, 0]
    F = np.asarray(F, dtype=float)
    return GroundTruth(x0=x0, theta0=F @ x0 / np.sqrt(F.shape[1]), sigma=float(arr[0, 1]),
                       rho=float(arr[0, 2]), sigma_x=float(arr[0, 3]))
