import warnings

import numpy as np
import pytest

from kefokas.data import HalfLineData, gaussian_profile
from kefokas.errors import DomainError, ZeroAssumptionViolated, TruncationWarning
from kefokas.pde import EvolutionConfig, evolve, extract_traces, traces_to_data
from kefokas.spectral import (compute_spectral_set, derive_reflections,
                              global_relation_residual, reflection_via_c, scatter_x,
                              winding_number, zero_scan)


@pytest.fixture(scope="module")
def gaussian():
    return gaussian_profile()


@pytest.fixture(scope="module")
def controlled():
    """Evolution with a nonzero Dirichlet control and its traces."""
    def g(t):
        return 0.1 * t**2 * np.exp(-t)
    cfg = EvolutionConfig(beta=0.25, x_max=40.0, nx=2000, dt=0.01, t_max=3.0,
                          dirichlet=g, monitor=False)
    x = cfg.x_grid()
    ev = evolve(np.exp(-((x - 5.0) ** 2)), cfg)
    return extract_traces(ev)


PROBES = (np.array([1.5, 2.0, 2.5])[:, None]
          * np.exp(1j * np.array([np.pi / 6, np.pi / 4, np.pi / 3]))[None]).ravel()


def test_zero_profile_is_trivial():
    x = np.linspace(0, 10, 65)
    data = HalfLineData(x, np.zeros(65), beta=0.25)
    a, b = scatter_x(data, np.array([0.3, -1.0, 2j]))
    assert np.all(a == 1) and np.all(b == 0)


def test_determinant_relation(gaussian):
    k = np.linspace(-10, 10, 200)
    a, b = scatter_x(gaussian, k)
    assert np.max(np.abs(np.abs(a) ** 2 - np.abs(b) ** 2 - 1)) < 1e-10


def test_symmetry_under_reflection_of_k(gaussian):
    # a(k) -> 1 as |k| -> inf in the upper half plane
    a, _ = scatter_x(gaussian, np.array([40j]))
    assert abs(a[0] - 1) < 0.05


def test_lower_half_plane_rejected(gaussian):
    with pytest.raises(DomainError):
        scatter_x(gaussian, np.array([1 - 0.5j]))


def test_no_zeros_for_default_gaussian(gaussian):
    count, amin = zero_scan(gaussian, radius=10.0, n_side=200)
    assert count == 0 and amin > 1e-3


def test_winding_number_counts_turns():
    s = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    assert round(winding_number(np.exp(2j * s))) == 2
    assert round(winding_number(2 + np.exp(1j * s))) == 0


def test_global_relation_holds_and_detects_mismatch(gaussian, controlled):
    t, g0, g1 = controlled
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        good = global_relation_residual(traces_to_data(gaussian, t, g0, g1), PROBES)
        bad = global_relation_residual(traces_to_data(gaussian, t, 1.5 * g0, g1), PROBES)
    assert good < 1e-5
    assert bad > 50 * good


def test_probes_must_lie_in_first_quadrant(gaussian, controlled):
    t, g0, g1 = controlled
    with pytest.raises(DomainError):
        global_relation_residual(traces_to_data(gaussian, t, g0, g1), np.array([-1 + 1j]))


def test_reflection_routes_agree(gaussian, controlled):
    t, g0, g1 = controlled
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        spec = derive_reflections(compute_spectral_set(
            traces_to_data(gaussian, t, g0, g1), np.linspace(-3, 0, 31)))
    assert np.max(np.abs(reflection_via_c(spec) - spec.r_neg)) < 1e-12


def test_zero_of_a_is_reported():
    x = np.linspace(0, 10, 1025)
    # |a| >= 1 on the real axis here, so an oversized threshold must trip the check
    data = HalfLineData(x, np.exp(-((x - 5) ** 2)), beta=0.25)
    spec = compute_spectral_set(data, np.linspace(-1, 1, 5))
    with pytest.raises(ZeroAssumptionViolated):
        derive_reflections(spec, zero_threshold=10.0)
