import numpy as np
import pytest
from scipy.special import erfc

from gampgap.gamp import gamp_run
from gampgap.gap_estimators import gdf_gamp, fv_gamp
from gampgap.penalties import Penalty
from gampgap.replica import (
    Conjugates, ReplicaOptions, ReplicaOrder, _Rules, at_unstable, coefficient_side, en_closed_form,
    rs_errors, rs_solve, with_nodes,
)

from conftest import make_problem, se

RIDGELESS = Penalty(0.0, 0.0)


@pytest.mark.parametrize("alpha", [2.0, 1.25, 1.5, 4.0])
def test_ridgeless_chi(alpha):
    o = rs_solve("gaussian", RIDGELESS, alpha)
    assert o.converged
    assert o.chi == pytest.approx(1 / (alpha - 1), abs=1e-6)
    assert rs_errors(o)["gdf"] == pytest.approx(1 / alpha, abs=1e-6)


def _order(Q, m, sT2=2.0):
    return ReplicaOrder(Q=Q, m=m, chi=1.0, theta_hat=1.0, chi_hat=1.0, mu_hat=1.0, rho_hat=1.0,
                        sigma_T2=sT2, converged=True, iterations=1)


def test_errors_perfect_recovery_and_null():
    # rho sigma_x^2 = 1, sigma^2 = 1
    assert rs_errors(_order(1.0, 1.0))["err_extra"] == pytest.approx(0.5)
    assert rs_errors(_order(0.0, 0.0))["err_extra"] == pytest.approx(1.0)


def test_ridgeless_alpha_two_gdf():
    assert rs_errors(rs_solve("gaussian", RIDGELESS, 2.0))["gdf"] == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("lam1", [0.3, 1.0, 2.0])
@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_lasso_gdf_is_rho_hat_over_alpha(lam1, alpha):
    o = rs_solve("gaussian", Penalty(lam1, 0.0), alpha, rho=0.3)
    assert o.converged
    assert rs_errors(o)["gdf"] == pytest.approx(o.rho_hat / alpha, abs=1e-9)
    unstable, lhs = at_unstable(o, "gaussian", Penalty(lam1, 0.0), alpha)
    assert lhs == pytest.approx(o.rho_hat / alpha, abs=1e-9)
    assert unstable == (o.rho_hat / alpha > 1)


@pytest.mark.parametrize("alpha,expected", [(0.5, 2.0), (2.0, 0.5), (0.9, 1 / 0.9), (1.1, 1 / 1.1)])
def test_ridgeless_at(alpha, expected):
    o = rs_solve("gaussian", RIDGELESS, alpha)
    unstable, lhs = at_unstable(o, "gaussian", RIDGELESS, alpha)
    assert lhs == pytest.approx(expected)
    assert unstable == (alpha < 1)


@pytest.mark.parametrize("family,pen,alpha", [
    ("gaussian", Penalty(0.0, 1.0), 0.7),
    ("gaussian", Penalty(0.5, 0.1), 1.5),
    ("gaussian", Penalty(1.0, 0.0), 0.4),
    ("logistic", Penalty(0.0, 0.5), 2.0),
    ("logistic", Penalty(0.2, 0.1), 1.0),
])
def test_order_invariants(family, pen, alpha):
    o = rs_solve(family, pen, alpha, rho=0.5, sigma_x=1.2, sigma=0.8)
    assert o.converged
    assert o.sigma_T2 == pytest.approx(0.5 * 1.44 + 0.64)
    assert o.m**2 <= o.Q * o.sigma_T2 + 1e-12
    assert o.Q >= 0 and o.chi > 0 and o.theta_hat > 0 and o.chi_hat >= 0
    assert 0 <= o.rho_hat <= 1


def test_rho_hat_is_mass_above_threshold():
    conj = Conjugates(theta_hat=0.8, chi_hat=0.6, mu_hat=0.9)
    rng = np.random.default_rng(0)
    n = 2_000_000
    x0 = np.where(rng.random(n) < 0.3, 1.1 * rng.standard_normal(n), 0.0)
    h = np.sqrt(conj.chi_hat) * rng.standard_normal(n) + conj.mu_hat * x0
    _, _, _, rho_hat = coefficient_side(conj, 0.3, 1.1, 0.7, 0.2, _Rules(61, 14.0))
    assert rho_hat == pytest.approx(np.mean(np.abs(h) > 0.7), abs=2e-3)


def _printed_Q(conj, rho, sigma_x, lam1, lam2):
    A = conj.theta_hat + lam2
    out = 0.0
    for w, var in ((1 - rho, conj.chi_hat), (rho, conj.chi_hat + conj.mu_hat**2 * sigma_x**2)):
        s = np.sqrt(var)
        T = lam1 / (np.sqrt(2) * s)
        out += w * (s**2 * (1 + 2 * T**2) * erfc(T) - 2 * s / np.sqrt(np.pi) * T)
    return out / A**2


def _printed_m(conj, rho, sigma_x, lam1, lam2):
    s1 = np.sqrt(conj.chi_hat + conj.mu_hat**2 * sigma_x**2)
    return rho * sigma_x * conj.mu_hat / (conj.theta_hat + lam2) * erfc(lam1 / (np.sqrt(2) * s1))


@pytest.mark.parametrize("lam1,lam2,rho,sigma_x", [(0.5, 0.1, 0.3, 1.0), (1.5, 0.0, 0.6, 2.0), (0.2, 1.0, 1.0, 0.5)])
def test_closed_forms_against_quadrature(lam1, lam2, rho, sigma_x):
    conj = Conjugates(theta_hat=0.9, chi_hat=0.7, mu_hat=0.8)
    Q, m, chi, rho_hat = coefficient_side(conj, rho, sigma_x, lam1, lam2, _Rules(61, 14.0))
    Qc, mc, chic, rhoc = en_closed_form(conj, rho, sigma_x, lam1, lam2)
    assert chi == pytest.approx(chic, abs=1e-6)
    assert rho_hat == pytest.approx(rhoc, abs=1e-10)
    assert Q == pytest.approx(Qc, abs=1e-10)
    assert m == pytest.approx(mc, abs=1e-10)


def test_printed_closed_forms_disagree_with_quadrature():
    # the printed Q lacks s e^{-T^2} in its second term and the printed m
    # carries sigma_x instead of sigma_x^2; both differ from quadrature
    conj = Conjugates(theta_hat=0.9, chi_hat=0.7, mu_hat=0.8)
    args = (0.5, 2.0, 1.0, 0.1)
    Q, m, _, _ = coefficient_side(conj, *args, _Rules(61, 14.0))
    assert abs(_printed_Q(conj, *args) - Q) > 1e-2
    assert abs(_printed_m(conj, *args) - m) > 1e-2
    # they coincide when there is nothing to correct
    conj0 = Conjugates(theta_hat=0.9, chi_hat=0.7, mu_hat=0.8)
    Q0, m0, _, _ = coefficient_side(conj0, 0.5, 1.0, 0.0, 0.1, _Rules(61, 14.0))
    assert _printed_Q(conj0, 0.5, 1.0, 0.0, 0.1) == pytest.approx(Q0, abs=1e-10)
    assert _printed_m(conj0, 0.5, 1.0, 0.0, 0.1) == pytest.approx(m0, abs=1e-10)


@pytest.mark.parametrize("family,pen,alpha", [
    ("gaussian", Penalty(0.0, 1.0), 2 / 3),
    ("gaussian", Penalty(0.7, 0.01), 0.5),
    ("logistic", Penalty(0.0, 0.01), 2.0),
    ("logistic", Penalty(0.3, 0.1), 1.0),
])
def test_node_doubling(family, pen, alpha):
    a = rs_solve(family, pen, alpha, rho=0.4, opts=ReplicaOptions(n_nodes=61))
    b = rs_solve(family, pen, alpha, rho=0.4, opts=with_nodes(None, 121))
    for key in ("Q", "m", "chi", "rho_hat"):
        assert abs(getattr(a, key) - getattr(b, key)) < 1e-8
    ea, eb = rs_errors(a), rs_errors(b)
    for key in ea:
        assert abs(ea[key] - eb[key]) < 1e-8
    assert abs(at_unstable(a, family, pen, alpha)[1] - at_unstable(b, family, pen, alpha)[1]) < 1e-8


def test_nonconvergence_is_flagged():
    o = rs_solve("gaussian", Penalty(0.5, 0.1), 0.8, rho=0.3, opts=ReplicaOptions(max_iter=3))
    assert not o.converged and o.iterations == 3


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rs_solve("gaussian", Penalty(0.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        rs_solve("poisson", Penalty(0.0, 1.0), 1.0)


def test_ridge_matches_gamp_average():
    pen, alpha = Penalty(0.0, 1.0), 2.0
    rs = rs_errors(rs_solve("gaussian", pen, alpha))
    gdf, fv = [], []
    for seed in range(15):
        data, _ = make_problem(200, 100, 900 + seed)
        st_ = gamp_run(data, "gaussian", pen)
        gdf.append(gdf_gamp(st_, "gaussian"))
        fv.append(fv_gamp(st_, data.y, "gaussian"))
    assert abs(np.mean(fv) - rs["fv"]) <= 3 * se(fv)
    assert np.mean(gdf) == pytest.approx(rs["gdf"], rel=0.01)


def test_logistic_matches_gamp_average():
    pen, alpha = Penalty(0.0, 0.5), 2.0
    rs = rs_errors(rs_solve("logistic", pen, alpha))
    gdf, fv = [], []
    for seed in range(15):
        data, _ = make_problem(400, 200, 950 + seed, family="logistic")
        st_ = gamp_run(data, "logistic", pen)
        gdf.append(gdf_gamp(st_, "logistic"))
        fv.append(fv_gamp(st_, data.y, "logistic"))
    assert np.mean(gdf) == pytest.approx(rs["gdf"], rel=0.01)
    assert abs(np.mean(fv) - rs["fv"]) <= 3 * se(fv) + 0.01 * rs["fv"]


def test_support_fraction_matches_rho_hat():
    pen, alpha = Penalty(1.0, 0.01), 0.5
    o = rs_solve("gaussian", pen, alpha)
    assert not at_unstable(o, "gaussian", pen, alpha)[0]
    frac = []
    for seed in range(10):
        data, _ = make_problem(200, 400, 1000 + seed)
        st_ = gamp_run(data, "gaussian", pen)
        frac.append(np.count_nonzero(st_.x_hat) / data.N)
    assert np.mean(frac) == pytest.approx(o.rho_hat, abs=0.02)
