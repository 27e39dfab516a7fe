"""Direct spectral transform: a, b from u0 and A, B from the boundary traces.

Conventions
-----------
x-side: ``(b(k), a(k))`` is the second column at ``x = 0`` of the solution of
``mu_x + ik[sigma3, mu] = U1 mu`` normalised to ``I`` at ``x = +inf``;
valid for ``Im k >= 0``.

t-side (``T = inf``): ``(B(k), A(k))`` is the second column at ``t = 0`` of
the solution of ``mu_t + 2ik^2[sigma3, mu] = U2 mu`` normalised to ``I`` at
the final trace sample; valid on the closure of ``D1 u D3``
(``Im k^2 >= 0``).  Truncating the traces at ``T`` yields the finite-``T``
spectral functions, for which ``Ba - Ab`` is ``O(exp(-4 Im(k^2) T))`` inside
``D1``.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import volterra
from .data import GaugePhase
from .errors import (ConfigurationError, CoverageError, DomainError,
                     ResolutionError, TruncationWarning, ZeroAssumptionViolated)

ZERO_THRESHOLD = 1e-6
DOMAIN_SLACK = 1e-12


def assemble_U1(data, phase=None):
    """Off-diagonal x-side coefficient at t = 0, shape (nx, 2, 2)."""
    if phase is None:
        phase = GaugePhase.from_data(data)
    if phase.x_phase.shape != data.u0.shape:
        raise ConfigurationError("phase and profile grids differ",
                                 nphase=phase.x_phase.size, nu=data.u0.size)
    q = data.u0 * np.exp(2j * data.beta * phase.x_phase)
    U = np.zeros(q.shape + (2, 2), dtype=complex)
    U[:, 0, 1] = q
    U[:, 1, 0] = np.conj(q)
    return U


def assemble_U2(data, phase=None):
    """t-side coefficient at x = 0 split as ``U0 + k * U1``; both (nt, 2, 2)."""
    if phase is None:
        phase = GaugePhase.from_data(data)
    if phase.t_phase.shape != data.g0.shape:
        raise ConfigurationError("phase and trace grids differ",
                                 nphase=phase.t_phase.size, ng=data.g0.size)
    g0, g1, b = data.g0, data.g1, data.beta
    em = np.exp(-2j * phase.t_phase)
    ab = np.abs(g0) ** 2
    U0 = np.zeros(g0.shape + (2, 2), dtype=complex)
    U1 = np.zeros_like(U0)
    U0[:, 0, 0] = -1j * ab
    U0[:, 1, 1] = 1j * ab
    U0[:, 0, 1] = (1j * g1 - 2 * b * ab * g0) * em
    U0[:, 1, 0] = (-1j * np.conj(g1) - 2 * b * ab * np.conj(g0)) * np.conj(em)
    U1[:, 0, 1] = 2 * g0 * em
    U1[:, 1, 0] = 2 * np.conj(g0) * np.conj(em)
    return U0, U1


def _default_levels(n_cells, wanted=2):
    lev = 0
    while lev < wanted and n_cells % 2 ** (lev + 1) == 0 and n_cells // 2 ** (lev + 1) >= 4:
        lev += 1
    return lev


def scatter_x(data, k_points, phase=None, richardson=None, tol=None):
    """Return ``(a, b)`` at ``k_points`` in the closed upper half-plane."""
    k = np.atleast_1d(np.asarray(k_points, dtype=complex))
    if np.any(k.imag < -DOMAIN_SLACK * np.maximum(1.0, np.abs(k))):
        raise DomainError("scatter_x needs Im k >= 0", worst=float(k.imag.min()))
    U = assemble_U1(data, phase)
    n_cells = data.x_samples.size - 1
    if richardson is None:
        richardson = _default_levels(n_cells)
    if not np.any(U):
        return np.ones_like(k), np.zeros_like(k)
    v, levels = volterra.solve_column(data.x_samples, lambda n: U[n], 2j * k,
                                      richardson=richardson, return_levels=True)
    _check_tolerance(levels, tol, "scatter_x")
    return v[:, 1], v[:, 0]


def scatter_t(data, k_points, phase=None, richardson=None, tol=None):
    """Return ``(A, B)`` at ``k_points`` on the closure of ``D1 u D3``."""
    if not data.has_boundary:
        raise ConfigurationError("profile carries no boundary traces")
    k = np.atleast_1d(np.asarray(k_points, dtype=complex))
    k2 = k * k
    if np.any(k2.imag < -DOMAIN_SLACK * np.maximum(1.0, np.abs(k2))):
        raise DomainError("scatter_t needs Im k^2 >= 0", worst=float(k2.imag.min()))
    tail = data.boundary_tail()
    if tail > data.decay_floor:
        warnings.warn(TruncationWarning(
            f"boundary traces not decayed at t={data.t_samples[-1]:g}: tail {tail:.3e}"))
    U0, U1 = assemble_U2(data, phase)
    n_cells = data.t_samples.size - 1
    if richardson is None:
        richardson = _default_levels(n_cells)
    if not (np.any(U0) or np.any(U1)):
        return np.ones_like(k), np.zeros_like(k)

    def coef(n):
        return U0[n][None] + k[:, None, None] * U1[n][None]

    v, levels = volterra.solve_column(data.t_samples, coef, 4j * k2,
                                      richardson=richardson, return_levels=True)
    _check_tolerance(levels, tol, "scatter_t")
    return v[:, 1], v[:, 0]


def _check_tolerance(levels, tol, who):
    if tol is None:
        return
    err = volterra.romberg_error(levels)
    worst = float(np.max(err))
    if worst > tol:
        raise ResolutionError(f"{who}: Romberg error {worst:.2e} above {tol:.1e}",
                              residual=worst)


def k_sets(n_radial=60, n_angular=9, k_min=1e-2, k_max=1e3):
    """Default evaluation set: log-radial times uniform angles in [0, pi]."""
    rho = np.geomspace(k_min, k_max, n_radial)
    ang = np.linspace(0.0, np.pi, n_angular)
    return (rho[:, None] * np.exp(1j * ang)[None, :]).ravel()


class _AxisFunction:
    """Spline interpolant of a complex function sampled on an axis parameter."""

    def __init__(self, s, values):
        order = np.argsort(s)
        s = np.asarray(s, float)[order]
        values = np.asarray(values, complex)[order]
        self.s = s
        self.values = values
        self._re = CubicSpline(s, values.real)
        self._im = CubicSpline(s, values.imag)

    def __call__(self, s):
        s = np.asarray(s, float)
        if np.any(s < self.s[0] - 1e-12) or np.any(s > self.s[-1] + 1e-12):
            raise CoverageError("spectral samples do not cover the request",
                                lo=float(np.min(s)), hi=float(np.max(s)))
        return self._re(s) + 1j * self._im(s)


@dataclass
class SpectralSet:
    """Spectral functions on the two axes.

    Real axis values live at ``k_real`` (sorted, both signs).  Imaginary axis
    values live at ``k = i*y_imag`` (``y > 0``); ``*_iup`` holds values at
    ``+iy`` and ``*_idn`` at ``-iy``.  Derived quantities are filled by
    :func:`derive_reflections`.
    """

    k_real: np.ndarray
    a_real: np.ndarray
    b_real: np.ndarray
    A_real: np.ndarray
    B_real: np.ndarray
    y_imag: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a_iup: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    b_iup: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    A_iup: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    B_iup: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    A_idn: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    B_idn: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    # derived
    r1_real: np.ndarray = None
    d_neg: np.ndarray = None
    gamma_neg: np.ndarray = None
    r_neg: np.ndarray = None
    r2_neg: np.ndarray = None
    d_iup: np.ndarray = None
    gamma_iup: np.ndarray = None

    @property
    def k_neg(self):
        return self.k_real[self.k_real <= 0]

    @property
    def derived(self):
        return self.r1_real is not None

    def _need_derived(self):
        if not self.derived:
            raise CoverageError("derive_reflections has not been run")

    def r1(self, k):
        self._need_derived()
        return self._interp("_r1f", self.k_real, self.r1_real)(np.real(k))

    def r(self, k):
        self._need_derived()
        return self._interp("_rf", self.k_neg, self.r_neg)(np.real(k))

    def gamma_neg_axis(self, k):
        self._need_derived()
        return self._interp("_gnf", self.k_neg, self.gamma_neg)(np.real(k))

    def gamma_imag(self, y):
        """Gamma(iy) for y >= 0."""
        self._need_derived()
        if self.y_imag.size == 0:
            raise CoverageError("no imaginary-axis samples")
        y_s, g_s = self.y_imag, self.gamma_iup
        kn = self.k_neg
        if y_s[0] > 0 and kn.size and kn[-1] == 0.0:
            # Gamma is continuous on the closure of D2: the corner value
            # k = 0 comes from the real-axis samples.
            y_s = np.concatenate([[0.0], y_s])
            g_s = np.concatenate([self.gamma_neg[-1:], g_s])
        return self._interp("_gif", y_s, g_s)(y)

    def _interp(self, name, s, v):
        f = self.__dict__.get(name)
        if f is None:
            f = _AxisFunction(s, v)
            self.__dict__[name] = f
        return f

    def determinant_residual(self):
        """|a conj a - |b|^2 - 1| and the same for A, B on the real axis."""
        rx = np.abs(np.abs(self.a_real) ** 2 - np.abs(self.b_real) ** 2 - 1.0)
        rt = np.abs(np.abs(self.A_real) ** 2 - np.abs(self.B_real) ** 2 - 1.0)
        return rx, rt


def compute_spectral_set(data, k_real, y_imag=(), phase=None, richardson=None):
    """Evaluate a, b, A, B where the RH pipeline needs them."""
    k_real = np.sort(np.asarray(k_real, float))
    y = np.asarray(y_imag, float)
    if np.any(y <= 0):
        raise DomainError("imaginary-axis samples need y > 0")
    if phase is None:
        phase = GaugePhase.from_data(data)
    kx = np.concatenate([k_real, 1j * y]).astype(complex)
    a, b = scatter_x(data, kx, phase, richardson)
    nr = k_real.size
    if data.has_boundary:
        kt = np.concatenate([k_real, 1j * y, -1j * y]).astype(complex)
        A, B = scatter_t(data, kt, phase, richardson)
    else:
        A = np.ones(nr + 2 * y.size, complex)
        B = np.zeros(nr + 2 * y.size, complex)
    ny = y.size
    return SpectralSet(
        k_real=k_real, a_real=a[:nr], b_real=b[:nr], A_real=A[:nr], B_real=B[:nr],
        y_imag=y, a_iup=a[nr:], b_iup=b[nr:],
        A_iup=A[nr:nr + ny], B_iup=B[nr:nr + ny],
        A_idn=A[nr + ny:], B_idn=B[nr + ny:],
    )


def derive_reflections(spec, zero_threshold=ZERO_THRESHOLD):
    """Fill d, Gamma, r1, r, r2; raise when a or d nearly vanishes."""
    kr = spec.k_real
    a, b, A, B = spec.a_real, spec.b_real, spec.A_real, spec.B_real
    _zero_check(a, "a", kr, zero_threshold)
    r1 = np.conj(b) / a
    neg = kr <= 0
    # on the real axis conj(k) = k
    d_neg = a[neg] * np.conj(A[neg]) - b[neg] * np.conj(B[neg])
    _zero_check(d_neg, "d", kr[neg], zero_threshold)
    gamma_neg = -np.conj(B[neg]) / (a[neg] * d_neg)
    r_neg = r1[neg] + gamma_neg
    r2_neg = np.conj(r_neg) / (1.0 - np.abs(r_neg) ** 2)
    out = replace(spec, r1_real=r1, d_neg=d_neg, gamma_neg=gamma_neg,
                  r_neg=r_neg, r2_neg=r2_neg)
    if spec.y_imag.size:
        _zero_check(spec.a_iup, "a", 1j * spec.y_imag, zero_threshold)
        # conj(iy) = -iy
        d_iup = (spec.a_iup * np.conj(spec.A_idn)
                 - spec.b_iup * np.conj(spec.B_idn))
        _zero_check(d_iup, "d", 1j * spec.y_imag, zero_threshold)
        out.d_iup = d_iup
        out.gamma_iup = -np.conj(spec.B_idn) / (spec.a_iup * d_iup)
    return out


def _zero_check(vals, name, where, thr):
    mags = np.abs(vals)
    if mags.size and mags.min() < thr:
        j = int(np.argmin(mags))
        raise ZeroAssumptionViolated(f"|{name}| = {mags[j]:.2e} at k = {where[j]}",
                                     function=name, k=where[j], modulus=mags[j])


def reflection_via_c(spec):
    """r on the negative axis as conj(c(conj k))/d with c = bA - aB."""
    neg = spec.k_real <= 0
    c = spec.b_real[neg] * spec.A_real[neg] - spec.a_real[neg] * spec.B_real[neg]
    return np.conj(c) / spec.d_neg


def winding_number(values):
    """Number of turns of a closed sampled curve around the origin."""
    ph = np.unwrap(np.angle(np.append(values, values[:1])))
    return (ph[-1] - ph[0]) / (2 * np.pi)


def zero_scan(data, radius=20.0, n_side=400, phase=None):
    """Argument-principle count of zeros of ``a`` in the upper half-disk box.

    The box is ``[-R, R] x [eps, R]`` traced counter-clockwise.  Returns the
    rounded winding number and the minimum ``|a|`` along the boundary.
    """
    eps = 1e-9
    s = np.linspace(0.0, 1.0, n_side, endpoint=False)
    R = radius
    bottom = -R + 2 * R * s + 1j * eps
    right = R + 1j * (eps + (R - eps) * s)
    top = R - 2 * R * s + 1j * R
    left = -R + 1j * (R - (R - eps) * s)
    path = np.concatenate([bottom, right, top, left])
    a, _ = scatter_x(data, path, phase)
    w = winding_number(a)
    return int(round(w)), float(np.min(np.abs(a)))


def global_relation_residual(data, k_probe, phase=None, richardson=None):
    """sup over the probe set of |B a - A b| (T = inf global relation)."""
    k = np.atleast_1d(np.asarray(k_probe, complex))
    if np.any(k.real <= 0) or np.any(k.imag <= 0):
        raise DomainError("probe points must lie strictly inside D1")
    a, b = scatter_x(data, k, phase, richardson)
    A, B = scatter_t(data, k, phase, richardson)
    return float(np.max(np.abs(B * a - A * b)))
