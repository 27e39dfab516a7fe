"""Scalar machinery of the long-time analysis and the leading-order formula.

Conventions
-----------
* ``S(s) = 1 - |r(s)|^2`` on the cut ``(-inf, k0]``; all logarithms are
  principal, so ``(k - k0)^{i nu}`` has its cut along ``(-inf, k0]``.
* The cut is oriented from ``k0`` toward ``-inf``; its "+" side is therefore
  the lower side.  With this orientation ``delta_+ / delta_- = 1/S`` on the
  cut, while the Cauchy integral itself runs from ``-inf`` to ``k0``.
* ``arg Gamma(i nu)`` is the imaginary part of ``loggamma(i nu)``, continuous
  on the positive imaginary axis.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from . import rh
from .errors import (DomainError, NumericalDegeneracyError, ResolutionError)

TAIL_LEVEL = 1e-10
_DERIV_STEP = 1e-3
_ORDER = 16


# --------------------------------------------------------------------------
# reflection data on the cut


@dataclass(frozen=True)
class Reflection:
    """``r(k)`` on ``[k_min, 0]`` with ``|r| < TAIL_LEVEL`` beyond ``k_min``."""

    func: object
    k_min: float
    label: str = ""

    def __call__(self, k):
        k = np.asarray(k, float)
        return np.where(k < self.k_min, 0.0, self.func(np.maximum(k, self.k_min)))

    def log_s(self, k):
        """``ln(1 - |r|^2)``."""
        rk = self(k)
        s = 1.0 - np.abs(rk) ** 2
        if np.any(s <= 0):
            raise DomainError("|r| >= 1 on the cut")
        return np.log(s)

    def dlog_s(self, k):
        """d/dk ln(1 - |r|^2) by the 5-point centred stencil."""
        h = _DERIV_STEP
        f = self.log_s
        return (f(k - 2 * h) - 8 * f(k - h) + 8 * f(k + h) - f(k + 2 * h)) / (12 * h)

    @classmethod
    def from_spectral(cls, spec, level=TAIL_LEVEL):
        """Cut where the Stieltjes measure ``d ln(1-|r|^2) = O(|r|^2)`` is below ``level``."""
        k = spec.k_neg
        r = spec.r_neg
        big = np.nonzero(np.abs(r) ** 2 >= level)[0]
        if big.size and big[0] == 0:
            raise ResolutionError("reflection has not decayed at the sampled left edge",
                                  k=float(k[0]), modulus=float(abs(r[0])))
        k_min = float(k[big[0] - 1]) if big.size else float(k[-1])
        return cls(func=spec.r, k_min=k_min, label="spectral")

    @classmethod
    def gaussian_bump(cls, height=0.5, center=-1.0, width=0.6, phase=0.3):
        """Synthetic ``r(k) = h exp(-((k-c)/w)^2 + i phase k)``."""
        def func(k):
            k = np.asarray(k, float)
            return height * np.exp(-(((k - center) / width) ** 2) + 1j * phase * k)
        span = width * np.sqrt(np.log(height / TAIL_LEVEL)) if height > TAIL_LEVEL else 0
        return cls(func=func, k_min=center - span - 1.0, label="gaussian-bump")

    @classmethod
    def zero(cls):
        return cls(func=lambda k: np.zeros_like(np.asarray(k, float), dtype=complex),
                   k_min=-1.0, label="zero")


def cut_breaks(k_min, k0, h_max=0.25, rho_min=1e-12, grading=2.0):
    """Panel breakpoints on ``[k_min, k0]``, geometric toward ``k0``."""
    if k0 <= k_min:
        return np.array([k0 - 1.0, k0])
    rel = rh.panel_breaks(k0 - k_min, h_max, rho_min, grading, True, False)
    return np.sort(k0 - rel)


def _cut_rule(refl, k0, order=_ORDER):
    brk = cut_breaks(refl.k_min, k0)
    nodes, weights, panels = rh.panel_rule(brk[:-1], brk[1:], order)
    return nodes.real, weights.real, panels


def _log_moments(z, p):
    """int_{-1}^{1} tau^n ln(z - tau) dtau, principal log, for n < p."""
    m = rh._local_moments(z, p + 1)
    lp, lm = np.log(z - 1.0), np.log(z + 1.0)
    out = np.empty((z.size, p), complex)
    for n in range(p):
        out[:, n] = (lp - (-1.0) ** (n + 1) * lm) / (n + 1) - m[:, n + 1] / (n + 1)
    return out


def _log_matrix(targets, panels, nodes, weights):
    """``L @ f ~ int f(s) ln(k - s) ds`` over real panels oriented left to right."""
    targets = np.atleast_1d(np.asarray(targets, complex))
    L = weights[None, :] * np.log(targets[:, None] - nodes[None, :])
    p = panels.order
    _, _, VTinv = rh._rule(p)
    half = (0.5 * (panels.b - panels.a)).real
    mid = (0.5 * (panels.b + panels.a)).real
    for j in range(panels.a.size):
        z = (targets - mid[j]) / half[j]
        near = (np.abs(z - 1.0) + np.abs(z + 1.0) < 3.4) & (np.abs(z - 1.0) > 1e-8)
        near = np.nonzero(near)[0]
        if near.size == 0:
            continue
        mom = _log_moments(z[near], p)
        mom = half[j] * (mom + np.log(half[j]) * _plain_moments(p)[None, :])
        sl = slice(panels.first[j], panels.first[j] + p)
        L[near, sl] = mom @ VTinv.T
    return L


def _plain_moments(p):
    n = np.arange(p)
    return (1.0 - (-1.0) ** (n + 1)) / (n + 1)


# --------------------------------------------------------------------------
# scalars


def compute_nu(q):
    """``nu = -ln(1 - |q|^2) / (2 pi)``."""
    aq = abs(complex(q))
    if aq >= 1.0:
        raise DomainError("|q| >= 1: subcritical reflection violated", modulus=aq)
    return float(-np.log1p(-aq * aq) / (2.0 * np.pi))


def arg_gamma_inu(nu):
    """Continuous ``arg Gamma(i nu)`` for ``nu > 0``."""
    return float(loggamma(1j * nu).imag)


def compute_betaX(q):
    """Leading coefficient of the model cross problem."""
    q = complex(q)
    if q == 0:
        return 0j
    nu = compute_nu(q)
    phase = -0.75 * np.pi - np.angle(q) + arg_gamma_inu(nu)
    return complex(np.sqrt(nu) * np.exp(1j * phase))


def _check_off_cut(k, k0):
    k = np.atleast_1d(np.asarray(k, complex))
    bad = (np.abs(k.imag) < 1e-14) & (k.real <= k0)
    if np.any(bad):
        raise DomainError("k lies on the cut (-inf, k0]; use delta_boundary",
                          k=complex(k[bad][0]))
    return k


def compute_chi(refl, k0, k):
    """``chi(k) = -(1/2 pi i) int_{-inf}^{k0} ln(k - s) d ln S(s)``.

    ``k = k0`` is allowed: the endpoint logarithm is integrable and the
    panels are graded geometrically toward ``k0``.
    """
    k = np.atleast_1d(np.asarray(k, complex))
    at_k0 = np.abs(k - k0) == 0
    _check_off_cut(k[~at_k0], k0)
    nodes, weights, panels = _cut_rule(refl, k0)
    f = refl.dlog_s(nodes)
    if not np.all(np.isfinite(f)):
        raise ResolutionError("non-finite Stieltjes density on the cut")
    L = _log_matrix(k, panels, nodes, weights)
    return -(L @ f) / (2j * np.pi)


def _cauchy_log_s(refl, k0, k):
    nodes, weights, panels = _cut_rule(refl, k0)
    K = rh.cauchy_matrix(k, panels, nodes.astype(complex), weights.astype(complex))
    return K @ refl.log_s(nodes)


def compute_delta(refl, k0, k, form="cauchy"):
    """``delta(k)`` off the cut by either the Cauchy or the factored form."""
    k = _check_off_cut(k, k0)
    if form == "cauchy":
        return np.exp(_cauchy_log_s(refl, k0, k))
    if form == "factored":
        nu = compute_nu(refl(np.array([k0]))[0])
        return np.exp(1j * nu * np.log(k - k0) + compute_chi(refl, k0, k))
    raise ValueError(f"unknown form {form!r}")


def delta_boundary(refl, k0, k, side, eps=1e-10):
    """Boundary value on the cut as the limit from the requested side.

    ``side='+'`` is the lower side, ``'-'`` the upper side.  Evaluated at
    distance ``eps`` with near-singular product quadrature.
    """
    k = np.atleast_1d(np.asarray(k, float))
    shift = -1j * eps if side == "+" else 1j * eps
    return compute_delta(refl, k0, k + shift, form="cauchy")


# --------------------------------------------------------------------------
# asymptotic formula


@dataclass(frozen=True)
class AsymptoticParams:
    xi: float
    k0: float
    nu: float
    chi_k0: complex
    q: complex
    boundary_phase_t: float = 0.0


def asymptotic_params(refl, xi, boundary_phase_t=0.0, xi_max=np.inf):
    if not (0.0 < xi <= xi_max):
        raise DomainError("xi outside (0, N]", xi=xi)
    k0 = -xi / 4.0
    q = complex(refl(np.array([k0]))[0])
    nu = compute_nu(q)
    chi = complex(compute_chi(refl, k0, np.array([k0 + 0j]))[0])
    return AsymptoticParams(xi=float(xi), k0=k0, nu=nu, chi_k0=chi, q=q,
                            boundary_phase_t=float(boundary_phase_t))


@dataclass
class AsymptoticValue:
    u_a: complex
    alpha: float
    degenerate: bool = False
    terms: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.u_a
        yield self.alpha

    def leading(self, t):
        return self.u_a / np.sqrt(t)


def beta_integral(refl, k0, beta, order=_ORDER):
    """``(2 beta/pi) int_0^{|k0|} ln(1 - |r(-s)|^2) ds``."""
    a = abs(k0)
    if a == 0:
        return 0.0
    n = max(1, int(np.ceil(a / 0.25)))
    brk = np.linspace(0.0, a, n + 1)
    nodes, weights, _ = rh.panel_rule(brk[:-1], brk[1:], order)
    return float(2 * beta / np.pi * np.sum(weights.real * refl.log_s(-nodes.real)))


def evaluate_asymptotic(params, refl, t, beta):
    """``(u_a, alpha)`` of the leading term ``u_a e^{...}/sqrt(t)``."""
    if t <= 0:
        raise DomainError("t must be positive", t=t)
    nu, q, k0 = params.nu, params.q, params.k0
    if q == 0:
        return AsymptoticValue(0j, float("nan"), degenerate=True)
    stieltjes = float((-2j * params.chi_k0).real)  # (1/pi) int ln(k0-s) dlnS
    terms = {
        "constant": -0.75 * np.pi,
        "arg_q": -float(np.angle(q)),
        "arg_gamma": arg_gamma_inu(nu),
        "log_t": -nu * np.log(8.0 * t),
        "quadratic": 4.0 * k0 * k0 * t,
        "stieltjes": stieltjes,
        "beta_integral": beta_integral(refl, k0, beta),
        "boundary": 2.0 * params.boundary_phase_t,
    }
    alpha = float(sum(terms.values()))
    u_a = np.sqrt(nu / 2.0) * np.exp(1j * alpha)
    return AsymptoticValue(complex(u_a), alpha, False, terms)


# --------------------------------------------------------------------------
# model cross problem


CROSS_ANGLES = (0.25 * np.pi, 0.75 * np.pi, -0.75 * np.pi, -0.25 * np.pi)


def cross_contour(q, length=9.0):
    """The model problem on the cross, every ray oriented away from 0."""
    q = complex(q)
    nu = compute_nu(q)
    s = 1.0 - abs(q) ** 2

    def make(j):
        def jump(z):
            e = np.exp(0.5j * z * z)
            p = np.exp(-2j * nu * np.log(z))
            J = np.zeros((z.size, 2, 2), complex)
            J[:, 0, 0] = J[:, 1, 1] = 1.0
            if j == 0:
                J[:, 1, 0] = -q * e * p
            elif j == 1:
                J[:, 0, 1] = -np.conj(q) / s / (e * p)
            elif j == 2:
                J[:, 1, 0] = q / s * e * p
            else:
                J[:, 0, 1] = np.conj(q) / (e * p)
            return J
        return jump

    segs = [rh.Segment(f"X{j + 1}", 0j, length * np.exp(1j * a), make(j))
            for j, a in enumerate(CROSS_ANGLES)]
    return rh.ContourRH(segs, meta={"q": q, "nu": nu})


def solve_cross(q, options=rh.RHOptions(h_max=0.6, rho_min=1e-8), length=9.0):
    """Numerical ``beta^X``: ``M = I + (i/z)[[0, -beta], [conj beta, 0]] + ...``."""
    sol = rh.solve_rh(cross_contour(q, length), options)
    return complex(1j * sol.M1[0, 1]), sol


# --------------------------------------------------------------------------
# rational interpolant


@dataclass(frozen=True)
class InterpolantF0:
    a_coeffs: np.ndarray
    residual_zero: float
    residual_inf: float
    condition: float

    def __call__(self, k):
        k = np.asarray(k, complex)
        return sum(c / (k + 1j) ** (j + 1) for j, c in enumerate(self.a_coeffs))


def _binom(a, n):
    out = 1.0
    for i in range(n):
        out *= (a - i) / (i + 1)
    return out


def interpolant_f0(taylor_zero, moments_inf, condition_limit=1e12):
    """Solve for ``f0(k) = sum_{j=1}^8 a_j (k + i)^{-j}``.

    ``taylor_zero`` holds ``p_0..p_4`` (``f0 = sum p_n k^n + O(k^5)``) and
    ``moments_inf`` holds ``Gamma_1..Gamma_3`` (``f0 = sum Gamma_j k^{-j} +
    O(k^{-4})``).
    """
    p = np.asarray(taylor_zero, complex)
    g = np.asarray(moments_inf, complex)
    if p.size != 5 or g.size != 3:
        raise ValueError("need 5 Taylor coefficients and 3 moments")
    A = np.zeros((8, 8), complex)
    # Taylor at 0: (k+i)^{-j} = i^{-j} (1 + k/i)^{-j} = sum_n binom(-j, n) i^{-j-n} k^n
    for n in range(5):
        for j in range(1, 9):
            A[n, j - 1] = _binom(-j, n) * (1j) ** (-j - n)
    # Laurent at infinity: (k+i)^{-j} = sum_m binom(-j, m) i^m k^{-j-m}
    for m in range(1, 4):
        for j in range(1, m + 1):
            A[4 + m, j - 1] = _binom(-j, m - j) * (1j) ** (m - j)
    rhs = np.concatenate([p, g])
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > condition_limit:
        raise NumericalDegeneracyError("singular interpolation system", condition=cond)
    a = np.linalg.solve(A, rhs)
    res = A @ a - rhs
    return InterpolantF0(a_coeffs=a, residual_zero=float(np.max(np.abs(res[:5]))),
                         residual_inf=float(np.max(np.abs(res[5:]))),
                         condition=float(cond))


def taylor_from_samples(func, y_max=0.4, n=40, degree=12):
    """``p_0..p_4`` of ``Gamma(k)`` at ``k = 0`` from samples on ``i R_+``.

    Fits a polynomial in ``y`` to ``Gamma(iy)`` on Chebyshev points of
    ``[0, y_max]`` and converts ``d^n/dy^n`` to ``d^n/dk^n`` via ``k = iy``.
    """
    c = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    y = 0.5 * y_max * (1 + c)
    vals = np.asarray(func(y), complex)
    cheb = np.polynomial.chebyshev.Chebyshev.fit(y, vals.real, degree, domain=[0, y_max])
    chebi = np.polynomial.chebyshev.Chebyshev.fit(y, vals.imag, degree, domain=[0, y_max])
    out = []
    fact = 1.0
    for m in range(5):
        dr = cheb.deriv(m)(0.0) if m else cheb(0.0)
        di = chebi.deriv(m)(0.0) if m else chebi(0.0)
        # d/dk = -i d/dy
        out.append((dr + 1j * di) * (-1j) ** m / fact)
        fact *= m + 1
    return np.array(out)


def moments_from_samples(func, y, n_moments=3, extra=4):
    """``Gamma_1..Gamma_3`` by least squares on large-``y`` samples of ``Gamma(iy)``."""
    y = np.asarray(y, float)
    k = 1j * y
    vals = np.asarray(func(y), complex)
    cols = n_moments + extra
    V = np.stack([k ** -(j + 1) for j in range(cols)], axis=1)
    # scale columns for conditioning
    scale = np.max(np.abs(V), axis=0)
    coef, *_ = np.linalg.lstsq(V / scale, vals, rcond=None)
    return (coef / scale)[:n_moments]


def fit_exponent(k, values):
    """Slope of ``log|values|`` against ``log|k|``."""
    x = np.log(np.abs(np.asarray(k)))
    yv = np.log(np.abs(np.asarray(values)))
    return float(np.polyfit(x, yv, 1)[0])


# --------------------------------------------------------------------------
# comparison with a time-domain oracle


def _loglog_slope(t, e):
    return float(np.polyfit(np.log(t), np.log(np.abs(e)), 1)[0])


def modulus_decay_fit(t, u, nu, span=2.0):
    """Decay of the relative modulus error ``e(t) = (sqrt(t)|u| - A)/A``.

    ``A = sqrt(nu/2)``.  Before the asymptotic regime sets in ``e`` may cross
    zero, which makes a log-log fit across the crossing meaningless.  The
    fitted window therefore starts at the last maximum of ``|e|`` (the end of
    the pre-asymptotic transient) and must span at least a factor ``span``
    in ``t``; otherwise the exponent is reported as ``nan``.  The slope over
    the full sample range and a fit of ``e ~ c ln(t) t^{-p}`` on the same
    window are reported alongside.
    """
    t = np.asarray(t, float)
    order = np.argsort(t)
    t, u = t[order], np.asarray(u, complex)[order]
    A = np.sqrt(nu / 2.0)
    e = (np.sqrt(t) * np.abs(u) - A) / A
    peak = int(np.argmax(np.abs(e)))
    window = slice(peak, None)
    tw, ew = t[window], e[window]
    ok = tw.size >= 3 and tw[-1] >= span * tw[0] and np.all(ew != 0)
    exponent = -_loglog_slope(tw, ew) if ok else float("nan")
    log_exponent = (-_loglog_slope(tw, ew / np.log(tw)) if ok and tw[0] > 1
                    else float("nan"))
    full = -_loglog_slope(t, e) if np.all(e != 0) else float("nan")
    return {"amplitude": float(A), "exponent": exponent,
            "window": [float(tw[0]), float(tw[-1])],
            "exponent_full_range": full, "exponent_log_model": log_exponent,
            "final_relative_error": float(abs(e[-1])),
            "max_relative_error": float(np.max(np.abs(e)))}


def phase_drift(t, u, alpha):
    """Spread of the unwrapped phase of ``u e^{-i alpha}`` over the samples."""
    ph = np.unwrap(np.angle(np.asarray(u, complex) * np.exp(-1j * np.asarray(alpha))))
    return float(ph.max() - ph.min())
