import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import digamma

from kefokas import asymptotics as asy
from kefokas.errors import DomainError, NumericalDegeneracyError
from kefokas.validate import rational_gamma


@pytest.fixture(scope="module")
def bump():
    return asy.Reflection.gaussian_bump()


@given(st.floats(0.01, 0.95))
@settings(max_examples=40, deadline=None)
def test_nu_and_betaX_modulus(a):
    nu = asy.compute_nu(a)
    assert nu > 0
    assert abs(abs(asy.compute_betaX(a)) ** 2 - nu) < 1e-14


def test_subcritical_reflection_required():
    with pytest.raises(DomainError):
        asy.compute_nu(1.0)


def test_arg_gamma_derivative_is_digamma():
    nu, h = 0.7, 1e-5
    fd = (asy.arg_gamma_inu(nu + h) - asy.arg_gamma_inu(nu - h)) / (2 * h)
    assert abs(fd - digamma(1j * nu).real) < 1e-8


def test_delta_two_forms_agree(bump):
    k0 = -0.25
    k = np.array([0.3 + 0.2j, -1.0 + 0.5j, -2.0 - 0.1j, 0.5 + 0j, -0.2 - 1e-3j, 3 + 3j])
    a = asy.compute_delta(bump, k0, k, "cauchy")
    b = asy.compute_delta(bump, k0, k, "factored")
    assert np.max(np.abs(a - b)) < 1e-10


def test_delta_symmetry_and_normalisation(bump):
    k0 = -0.25
    k = np.array([0.4 + 0.3j, -1.5 + 0.7j, 2.0 - 1.0j])
    d = asy.compute_delta(bump, k0, k)
    dc = asy.compute_delta(bump, k0, np.conj(k))
    assert np.max(np.abs(d * np.conj(dc) - 1)) < 1e-12
    assert abs(asy.compute_delta(bump, k0, np.array([1e4j]))[0] - 1) < 1e-3


def test_delta_jump_relation(bump):
    k0 = -0.25
    k = np.linspace(-2.5, -0.3, 50)
    ratio = asy.delta_boundary(bump, k0, k, "+") / asy.delta_boundary(bump, k0, k, "-")
    assert np.max(np.abs(ratio - 1 / (1 - np.abs(bump(k)) ** 2))) < 1e-8
    right = np.linspace(-0.2, 2.0, 20)
    assert np.max(np.abs(asy.delta_boundary(bump, k0, right, "+")
                         - asy.delta_boundary(bump, k0, right, "-"))) < 1e-8


def test_delta_rejects_points_on_cut(bump):
    with pytest.raises(DomainError):
        asy.compute_delta(bump, -0.25, np.array([-1.0 + 0j]))


def test_leading_term_modulus(bump):
    par = asy.asymptotic_params(bump, 1.0)
    for t in (20.0, 200.0):
        val = asy.evaluate_asymptotic(par, bump, t, 0.25)
        assert abs(abs(val.u_a) - np.sqrt(par.nu / 2)) < 1e-15
        assert np.isfinite(val.alpha)
    assert set(val.terms) == {"constant", "arg_q", "arg_gamma", "log_t", "quadratic",
                              "stieltjes", "beta_integral", "boundary"}


def test_zero_reflection_is_degenerate():
    z = asy.Reflection.zero()
    par = asy.asymptotic_params(z, 1.0)
    val = asy.evaluate_asymptotic(par, z, 50.0, 0.25)
    assert val.degenerate and val.u_a == 0


def test_xi_range():
    with pytest.raises(DomainError):
        asy.asymptotic_params(asy.Reflection.zero(), -1.0)
    with pytest.raises(DomainError):
        asy.asymptotic_params(asy.Reflection.zero(), 3.0, xi_max=2.0)


def test_interpolant_matches_and_remainder_decays():
    def g(y):
        return rational_gamma(1j * np.asarray(y))
    f0 = asy.interpolant_f0(asy.taylor_from_samples(g),
                            asy.moments_from_samples(g, np.geomspace(50, 2000, 60)))
    assert f0.residual_zero < 1e-8 and f0.residual_inf < 1e-8
    y0, yi = np.geomspace(0.01, 0.1, 20), np.geomspace(100, 1000, 20)
    assert asy.fit_exponent(y0, g(y0) - f0(1j * y0)) >= 4.5
    assert -asy.fit_exponent(yi, g(yi) - f0(1j * yi)) >= 3.5


def test_interpolant_degeneracy_flagged():
    with pytest.raises(NumericalDegeneracyError):
        asy.interpolant_f0(np.ones(5), np.ones(3), condition_limit=10.0)


def test_modulus_decay_fit_on_model_error():
    nu = 0.5
    t = np.linspace(20, 200, 181)
    amp = np.sqrt(nu / 2) / np.sqrt(t) * (1 + 0.3 * np.log(t) / np.sqrt(t))
    fit = asy.modulus_decay_fit(t, amp * np.exp(1j * t), nu)
    assert abs(fit["exponent_log_model"] - 0.5) < 1e-10
    assert 0.2 < fit["exponent"] < 0.5
    assert fit["window"][0] == 20.0


def test_phase_drift_of_exact_phase():
    t = np.linspace(100, 200, 50)
    alpha = 0.3 * t + np.log(t)
    assert asy.phase_drift(t, np.exp(1j * alpha + 0.2j), alpha) < 1e-12
