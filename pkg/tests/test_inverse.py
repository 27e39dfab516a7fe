import warnings

import numpy as np
import pytest
from scipy.integrate import cumulative_simpson

from kefokas.data import HalfLineData, gaussian_profile
from kefokas.errors import CoverageError, ResolutionError, TruncationWarning
from kefokas.inverse import (PhaseAccumulator, build_jump, standard_jumps, reconstruct,
                             recover_u, richardson_cumulative)
from kefokas.pde import EvolutionConfig, evolve, extract_traces, traces_to_data
from kefokas.spectral import compute_spectral_set, derive_reflections


@pytest.fixture(scope="module")
def controlled_spec():
    def g(t):
        return 0.1 * t**2 * np.exp(-t)
    cfg = EvolutionConfig(beta=0.25, x_max=40.0, nx=1000, dt=0.02, t_max=3.0,
                          dirichlet=g, monitor=False)
    x = cfg.x_grid()
    t, g0, g1 = extract_traces(evolve(np.exp(-((x - 5.0) ** 2)), cfg))
    data = traces_to_data(gaussian_profile(), t, g0, g1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return derive_reflections(compute_spectral_set(
            data, np.linspace(-3, 3, 61), np.linspace(0.05, 3.0, 60)))


def zero_spec():
    x = np.linspace(0, 10, 257)
    data = HalfLineData(x, np.zeros(257), beta=0.25)
    return derive_reflections(compute_spectral_set(data, np.linspace(-5, 5, 101)))


def test_zero_spectral_data_reconstructs_zero():
    rec = reconstruct(zero_spec(), np.linspace(0, 5, 9), 1.0, 0.25)
    assert np.all(rec.snapshot.u == 0) and not rec.failed.any()


def test_real_line_merged_without_gamma():
    spec = derive_reflections(compute_spectral_set(gaussian_profile(),
                                                   np.arange(-1500, 1501) * 0.01))
    contour = build_jump(spec, 2.0, 0.0)
    assert contour.meta["merged"] and contour.names() == ["R"]


def test_jumps_cyclic_at_origin(controlled_spec):
    J = standard_jumps(controlled_spec, 0.7, 0.3, np.zeros(1))
    P = J["J4"][0] @ np.linalg.inv(J["J1"][0]) @ J["J2"][0] @ np.linalg.inv(J["J3"][0])
    assert np.max(np.abs(P - np.eye(2))) < 1e-12


def test_undecayed_jump_rejected(controlled_spec):
    with pytest.raises(CoverageError):
        build_jump(controlled_spec, 0.0, 0.0)


def test_truncation_warns_below_tail_tolerance(controlled_spec):
    with pytest.warns(TruncationWarning):
        contour = build_jump(controlled_spec, 0.0, 0.0, tail_tol=1.0)
    assert set(contour.names()) == {"R+", "R-", "iR+", "iR-"}
    assert contour.consistency_residual < 1e-10


def test_richardson_cumulative():
    x = np.linspace(0, 4, 401)
    I, err = richardson_cumulative(x, np.cos(x))
    assert np.max(np.abs(I - np.sin(x))) < 1e-9 and err < 1e-9


def test_recover_u_inverts_the_gauge():
    x = np.linspace(0, 10, 2001)
    u = np.exp(-((x - 5) ** 2)) * np.exp(0.3j * x)
    beta = 0.25
    # m = u/(2i) exp(-2i(-4 beta int |m|^2)) with |m| = |u|/2
    I = cumulative_simpson(np.abs(u) ** 2, x=x, initial=0.0) / 4
    m = u / 2j * np.exp(8j * beta * I)
    ph = PhaseAccumulator.build(x, m, 0.0)
    assert np.max(np.abs(recover_u(m, x, ph, beta).u - u)) < 1e-6


def test_phase_integral_resolution_check():
    x = np.linspace(0, 10, 9)
    with pytest.raises(ResolutionError):
        PhaseAccumulator.build(x, np.exp(-((x - 5) ** 2)), 0.0, tol=1e-10)
