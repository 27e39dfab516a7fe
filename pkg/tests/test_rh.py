import numpy as np
import pytest
from scipy.integrate import quad

from kefokas import rh
from kefokas.errors import ResolutionError


def unipotent(f):
    def jump(k):
        J = np.zeros((k.size, 2, 2), complex)
        J[:, 0, 0] = J[:, 1, 1] = 1.0
        J[:, 0, 1] = f(k)
        return J
    return jump


def test_cauchy_matrix_principal_value():
    nodes, weights, panels = rh.panel_rule(np.array([-1.0, 0.0]), np.array([0.0, 1.0]))
    f = np.exp(nodes.real)
    target = np.array([0.3 + 0j, 0.25 + 0.01j, 2.0 + 0j])
    got = rh.cauchy_matrix(target, panels, nodes, weights) @ f
    pv = quad(lambda s: np.exp(s), -1, 1, weight="cauchy", wvar=0.3)[0]
    assert abs(got[0] - pv / (2j * np.pi)) < 1e-12
    near = [quad(lambda s, p=p: (np.exp(s) / (s - target[1])).real if p else
                 (np.exp(s) / (s - target[1])).imag, -1, 1, limit=400, epsabs=1e-14)[0]
            for p in (1, 0)]
    assert abs(got[1] - complex(*near) / (2j * np.pi)) < 1e-11
    far = quad(lambda s: np.exp(s) / (s - 2.0), -1, 1)[0]
    assert abs(got[2] - far / (2j * np.pi)) < 1e-12


def test_unipotent_jump_solved_exactly():
    # For an upper-unipotent jump the Neumann series stops after one term,
    # so m_coeff equals the linearised value exactly.
    f = lambda k: 0.3 * np.exp(-k.real ** 2)  # noqa: E731
    contour = rh.ContourRH([rh.Segment("R", -6 + 0j, 6 + 0j, unipotent(f), False, False)])
    sol = rh.solve_rh(contour)
    exact = -0.3 * np.sqrt(np.pi) / (2j * np.pi)
    assert abs(sol.m_coeff - exact) < 1e-13
    assert abs(rh.linearized_m(contour) - exact) < 1e-13


def test_jump_condition_holds_off_nodes():
    def jump(k):
        r = 0.5 * np.exp(-k.real ** 2)
        J = np.zeros((k.size, 2, 2), complex)
        J[:, 0, 0] = 1 - np.abs(r) ** 2
        J[:, 0, 1] = np.conj(r)
        J[:, 1, 0] = -r
        J[:, 1, 1] = 1
        return J
    contour = rh.ContourRH([rh.Segment("R", -7 + 0j, 7 + 0j, jump, False, False)])
    sol = rh.solve_rh(contour)
    k = np.array([0.123, -0.77, 1.4])
    Mp = sol.evaluate(k + 1e-9j)
    Mm = sol.evaluate(k - 1e-9j)
    # orientation left to right: M_+ (above) = M_- J
    assert np.max(np.abs(Mp - Mm @ jump(k + 0j))) < 1e-7
    # Schwarz symmetry of this jump: M(k) = sigma1 conj(M(conj k)) sigma1
    z = np.array([0.4 + 0.8j])
    assert np.max(np.abs(sol.evaluate(z) - rh.schwarz_reflect(sol.evaluate(np.conj(z))))) < 1e-12


def test_graded_breaks_reach_the_junction():
    b = rh.panel_breaks(3.0, 0.5, 1e-7, 2.0, True, False)
    assert b[0] == 0 and b[1] == pytest.approx(1e-7) and b[-1] == pytest.approx(3.0)
    assert np.all(np.diff(b) <= 0.5 + 1e-12)


def test_empty_contour_is_identity():
    sol = rh.solve_rh(rh.ContourRH([]))
    assert sol.m_coeff == 0 and sol.size == 0


def test_ill_conditioned_system_flagged():
    f = lambda k: 1e14 * np.ones(k.size)  # noqa: E731
    def jump(k):
        J = np.zeros((k.size, 2, 2), complex)
        J[:, 0, 0] = J[:, 1, 1] = 1
        J[:, 0, 1] = f(k)
        J[:, 1, 0] = -f(k)
        return J
    contour = rh.ContourRH([rh.Segment("R", -1 + 0j, 1 + 0j, jump, False, False)])
    with pytest.raises(ResolutionError):
        rh.solve_rh(contour)
