import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gampgap.errors import DomainError
from gampgap.likelihoods import (
    a_derivs, a_prime, a_second, a_third, a_value, as_family, cumulant_gap, pointwise_loss,
)

GRIDS = {
    "gaussian": np.linspace(-5, 5, 100),
    "logistic": np.linspace(-8, 8, 100),
    "poisson": np.linspace(-3, 3, 100),
    "exponential": np.linspace(-5, -0.2, 100),
}

# ln(1+e) - ln 2 - 1/2, from a 30-digit mpmath evaluation
LOGISTIC_GAP_0_1 = 0.12011450695827752


@pytest.mark.parametrize("family,theta,expected", [
    ("gaussian", 2.0, 2.0),
    ("logistic", 0.0, np.log(2.0)),
    ("poisson", 0.0, 1.0),
    ("exponential", -1.0, 0.0),
])
def test_a_value_examples(family, theta, expected):
    assert a_value(family, theta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("family,theta,expected", [
    ("gaussian", 0.7, (0.7, 1.0)),
    ("logistic", 0.0, (0.5, 0.25)),
    ("exponential", -2.0, (0.5, 0.25)),
    ("poisson", 0.0, (1.0, 1.0)),
])
def test_a_derivs_examples(family, theta, expected):
    assert a_derivs(family, theta) == pytest.approx(expected, abs=1e-14)


def test_cumulant_gap_logistic_oracle():
    assert cumulant_gap("logistic", 0.0, 1.0) == pytest.approx(LOGISTIC_GAP_0_1, abs=1e-12)


@pytest.mark.parametrize("family", list(GRIDS))
def test_zero_increment_gap(family):
    th = GRIDS[family]
    assert np.all(cumulant_gap(family, th, 0.0) == 0.0)


@pytest.mark.parametrize("family", list(GRIDS))
def test_finite_difference_consistency(family):
    th = GRIDS[family]
    h = 1e-5
    d1, d2 = a_derivs(family, th)
    fd1 = (a_value(family, th + h) - a_value(family, th - h)) / (2 * h)
    fd2 = (a_prime(family, th + h) - a_prime(family, th - h)) / (2 * h)
    assert np.max(np.abs(d1 - fd1)) <= 1e-6
    assert np.max(np.abs(d2 - fd2)) <= 1e-6


@pytest.mark.parametrize("family", list(GRIDS))
def test_third_derivative_finite_difference(family):
    th = GRIDS[family][::10]
    exact = {
        "gaussian": lambda t: 0 * t,
        "logistic": lambda t: (lambda p: p * (1 - p) * (1 - 2 * p))(1 / (1 + np.exp(-t))),
        "poisson": np.exp,
        "exponential": lambda t: -2.0 / t**3,
    }[family](th)
    assert np.allclose(a_third(family, th), exact, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("family", list(GRIDS))
def test_convexity(family):
    assert np.all(a_second(family, GRIDS[family]) >= 0)


@settings(max_examples=200, deadline=None)
@given(th=st.floats(-20, 20), t=st.floats(-20, 20))
def test_cumulant_gap_nonnegative(th, t):
    for fam in ("gaussian", "logistic", "poisson"):
        if fam == "poisson" and th + t > 30:
            continue
        assert cumulant_gap(fam, th, t) >= -1e-12 * max(1.0, abs(a_value(fam, th + t)))


@settings(max_examples=200, deadline=None)
@given(th=st.floats(-50, -0.05), frac=st.floats(0, 0.99))
def test_cumulant_gap_nonnegative_exponential(th, frac):
    t = -frac * th  # keeps th + t < 0
    assert cumulant_gap("exponential", th, t) >= -1e-12


@settings(max_examples=100, deadline=None)
@given(th=st.floats(-1e3, 1e3), t=st.floats(-1e3, 1e3))
def test_gaussian_gap_is_exact_quadratic(th, t):
    assert cumulant_gap("gaussian", th, t) == 0.5 * t * t


def test_logistic_is_overflow_safe():
    with np.errstate(over="raise"):
        assert a_value("logistic", 1000.0) == pytest.approx(1000.0)
        assert a_value("logistic", -1000.0) == pytest.approx(0.0, abs=1e-300)
        assert a_derivs("logistic", 800.0) == pytest.approx((1.0, 0.0))


@pytest.mark.parametrize("theta", [0.0, 1.0, -1e-13])
def test_exponential_domain(theta):
    with pytest.raises(DomainError):
        a_value("exponential", theta)
    with pytest.raises(DomainError):
        a_derivs("exponential", theta)


def test_exponential_gap_domain():
    with pytest.raises(DomainError):
        cumulant_gap("exponential", -1.0, 2.0)


def test_moments_are_mean_and_variance():
    rng = np.random.default_rng(0)
    th = 0.3
    y = rng.poisson(np.exp(th), 200_000)
    mean, var = a_derivs("poisson", th)
    assert y.mean() == pytest.approx(mean, rel=0.01)
    assert y.var() == pytest.approx(var, rel=0.02)


def test_pointwise_loss_conventions():
    assert pointwise_loss("gaussian", 1.0, 0.0) == pytest.approx(0.5)
    assert pointwise_loss("logistic", 1.0, 0.0) == pytest.approx(np.log(2))
    assert pointwise_loss("poisson", 2.0, 0.0) == pytest.approx(1.0)


def test_family_names():
    assert as_family("Logistic").value == "logistic"
    with pytest.raises(ValueError):
        as_family("probit")
