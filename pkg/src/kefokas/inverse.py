"""RH problem assembly on R u iR and reconstruction of u(x, t).

Every ray is oriented away from the origin; the jump stored on a ray is the
jump for that orientation:

    R_+ : J4,   iR_+ : J1^{-1},   R_- : J2,   iR_- : J3^{-1}

(the standard orientation of iR_+ and iR_- points toward the origin, hence the
inverses).  With this bookkeeping the cyclic condition at ``k = 0`` reads
``J4 J1^{-1} J2 J3^{-1} = I``, which is equivalent to ``J2 = J1 J4^{-1} J3``.
When Gamma vanishes identically (no boundary data) the two real rays carry
the same analytic jump and are merged into one segment ``[-L, L]``.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rh
from .data import cumulative_integral
from .errors import CoverageError, KEError, ResolutionError, TruncationWarning
from .pde import FieldSnapshot

JUMP_TOL = 1e-12
TAIL_TOL = 1e-8


def _tri(n, **entries):
    J = np.zeros((n, 2, 2), complex)
    J[:, 0, 0] = J[:, 1, 1] = 1.0
    for key, val in entries.items():
        J[:, int(key[1]) - 1, int(key[2]) - 1] = val
    return J


def _theta2(k, x, t):
    """``2 i theta(k) = 2i(kx + 2k^2 t)``."""
    return 2j * (k * x + 2.0 * k * k * t)


def gamma_at(spec, k):
    """Gamma on the closure of D2 restricted to the two axes."""
    k = np.atleast_1d(np.asarray(k, complex))
    out = np.empty(k.size, complex)
    real = np.abs(k.imag) <= 1e-15 * np.maximum(1.0, np.abs(k))
    imag = ~real
    if np.any(real & (k.real > 1e-15)):
        raise CoverageError("Gamma is only available on the closure of D2")
    if np.any(real):
        out[real] = spec.gamma_neg_axis(k.real[real])
    if np.any(imag):
        if np.any(k.real[imag] != 0.0) or np.any(k.imag[imag] < 0):
            raise CoverageError("Gamma requested off the axes of D2")
        out[imag] = _gamma_iaxis(spec, k.imag[imag])
    return out


def _gamma_iaxis(spec, y):
    if spec.y_imag.size == 0:
        return np.zeros(np.size(y), complex)
    return spec.gamma_imag(y)


def standard_jumps(spec, x, t, k):
    """``J1, J2, J3, J4`` of the RH problem at points ``k`` (their own formulas)."""
    k = np.atleast_1d(np.asarray(k, complex))
    n = k.size
    e = np.exp(_theta2(k, x, t))
    G = gamma_at(spec, k)
    Gc = np.conj(gamma_at(spec, np.conj(k)))
    r1 = spec.r1(k.real)
    r = spec.r(k.real) if np.all(k.real <= 0) else None
    J1 = _tri(n, m21=G * e)
    J3 = _tri(n, m12=-Gc / e)
    J4 = _tri(n, m11=1 - r1 * np.conj(r1), m12=np.conj(r1) / e, m21=-r1 * e)
    out = {"J1": J1, "J3": J3, "J4": J4}
    if r is not None:
        out["J2"] = _tri(n, m12=-np.conj(r) / e, m21=r * e, m22=1 - r * np.conj(r))
    return out


def _has_gamma(spec):
    if spec.gamma_neg is not None and np.any(np.abs(spec.gamma_neg) > 0):
        return True
    return spec.gamma_iup is not None and np.any(np.abs(spec.gamma_iup) > 0)


def _truncate(samples, size, tol, tail_tol, name):
    """Smallest length beyond which the sampled |J - I| stays below ``tol``."""
    big = np.nonzero(size >= tol)[0]
    if big.size == 0:
        return None
    edge = size[-1]
    if big[-1] == samples.size - 1:
        if edge > tail_tol:
            raise CoverageError(f"jump on {name} has not decayed at the sampled edge",
                                edge=float(samples[-1]), size=float(edge))
        warnings.warn(TruncationWarning(
            f"jump on {name} truncated at the sampled edge with |J-I| = {edge:.1e}"))
        return float(samples[-1])
    return float(min(samples[big[-1] + 1] + 0.25, samples[-1]))


def build_jump(spec, x, t, tol=JUMP_TOL, tail_tol=TAIL_TOL):
    """Assemble the contour and jumps of the RH problem at ``(x, t)``."""
    if x < 0 or t < 0:
        raise ValueError("x and t must be nonnegative")
    kr = spec.k_real
    pos, neg = kr[kr >= 0], -kr[kr <= 0][::-1]

    def real_size(kk):
        r1 = spec.r1(kk)
        return np.abs(r1) * (1 + np.abs(r1))

    def j4(k):
        k = np.asarray(k, complex)
        e = np.exp(_theta2(k, x, t))
        r1 = spec.r1(k.real)
        return _tri(k.size, m11=1 - np.abs(r1) ** 2, m12=np.conj(r1) / e, m21=-r1 * e)

    meta = {"x": x, "t": t}
    if not _has_gamma(spec):
        Lp = _truncate(pos, real_size(pos), tol, tail_tol, "R+")
        Ln = _truncate(neg, real_size(-neg), tol, tail_tol, "R-")
        L = max(Lp or 0.0, Ln or 0.0)
        segs = []
        if L > 0:
            segs.append(rh.Segment("R", -L + 0j, L + 0j, j4, False, False))
        meta["merged"] = True
        return rh.ContourRH(segs, consistency_residual=0.0, meta=meta)

    def j2(k):
        k = np.asarray(k, complex)
        e = np.exp(_theta2(k, x, t))
        r = spec.r(k.real)
        return _tri(k.size, m12=-np.conj(r) / e, m21=r * e, m22=1 - np.abs(r) ** 2)

    def j1_inv(k):
        k = np.asarray(k, complex)
        return _tri(k.size, m21=-_gamma_iaxis(spec, k.imag) * np.exp(_theta2(k, x, t)))

    def j3_inv(k):
        k = np.asarray(k, complex)
        # conj(Gamma(conj k)) with conj k = i|y| on iR_+
        g = np.conj(_gamma_iaxis(spec, -k.imag))
        return _tri(k.size, m12=g * np.exp(-_theta2(k, x, t)))

    def neg_size(kk):
        r = spec.r(-kk)
        return np.abs(r) * (1 + np.abs(r))

    segs = []
    Lp = _truncate(pos, real_size(pos), tol, tail_tol, "R+")
    if Lp:
        segs.append(rh.Segment("R+", 0j, Lp + 0j, j4))
    Ln = _truncate(neg, neg_size(neg), tol, tail_tol, "R-")
    if Ln:
        segs.append(rh.Segment("R-", 0j, -Ln + 0j, j2))
    if spec.y_imag.size:
        y = np.sort(spec.y_imag)
        size = np.abs(_gamma_iaxis(spec, y)) * np.exp(-2 * x * y)
        Li = _truncate(y, size, tol, tail_tol, "iR")
        if Li:
            segs.append(rh.Segment("iR+", 0j, 1j * Li, j1_inv))
            segs.append(rh.Segment("iR-", 0j, -1j * Li, j3_inv))
    k0 = np.zeros(1, complex)
    V = [j4(k0), j1_inv(k0), j2(k0), j3_inv(k0)]
    P = V[0][0] @ V[1][0] @ V[2][0] @ V[3][0]
    cons = float(np.max(np.abs(P - np.eye(2))))
    meta["merged"] = False
    return rh.ContourRH(segs, consistency_residual=cons, meta=meta)


# --------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True)
class PhaseAccumulator:
    """``boundary_phase`` at the reconstruction time and ``int_0^x |m|^2``."""

    boundary_phase: float
    m_x_integral: np.ndarray
    error_estimate: float = 0.0

    @classmethod
    def build(cls, x_grid, m, boundary_phase=0.0, tol=1e-7):
        I, err = richardson_cumulative(x_grid, np.abs(m) ** 2)
        if err > tol:
            raise ResolutionError("x-grid too coarse for the |m|^2 integral",
                                  estimate=err, tol=tol)
        return cls(float(boundary_phase), I, err)


def _cumtrapz(x, f):
    return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x) * (f[1:] + f[:-1]))])


def richardson_cumulative(x, f):
    """Cumulative trapezoid with one Richardson step.

    Returns the improved cumulative integral on all nodes (the correction is
    interpolated linearly to odd nodes) and an error estimate from comparing
    the improved values on the full and the halved grid.
    """
    x = np.asarray(x, float)
    f = np.asarray(f, float)
    n = x.size - 1
    if n < 4 or n % 4:
        # fall back to the fourth-order cumulative rule without an estimate
        return cumulative_integral(x, f), 0.0
    Th = _cumtrapz(x, f)
    T2 = _cumtrapz(x[::2], f[::2])
    T4 = _cumtrapz(x[::4], f[::4])
    corr = (Th[::2] - T2) / 3.0
    R_h = Th[::2] + corr
    R_2h = T2[::2] + (T2[::2] - T4) / 3.0
    err = float(np.max(np.abs(R_h[::2] - R_2h)) / 15.0)
    out = Th + np.interp(x, x[::2], corr)
    return out, err


def recover_u(m, x_grid, phases, beta, t=0.0):
    """``u = 2i m exp(2i (boundary_phase - 4 beta int_0^x |m|^2))``."""
    m = np.asarray(m, complex)
    delta = phases.boundary_phase - 4.0 * beta * phases.m_x_integral
    u = 2j * m * np.exp(2j * delta)
    return FieldSnapshot(float(t), np.asarray(x_grid, float), u)


@dataclass
class Reconstruction:
    snapshot: FieldSnapshot
    m: np.ndarray
    residual: np.ndarray
    failed: np.ndarray
    errors: list


def reconstruct(spec, x_grid, t, beta, boundary_phase=0.0, options=rh.RHOptions(),
                workers=1, tol=JUMP_TOL, phase_tol=1e-7):
    """Solve the RH problem at every ``x`` and assemble ``u(x, t)``.

    Points whose solve fails are flagged (``m = nan``) and the failure kinds
    are collected in ``errors``.
    """
    x_grid = np.asarray(x_grid, float)

    def one(x):
        try:
            sol = rh.solve_rh(build_jump(spec, x, t, tol=tol), options)
            return sol.m_coeff, sol.residual, None
        except KEError as exc:
            return np.nan, np.nan, exc.as_dict()

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            res = list(pool.map(one, x_grid))
    else:
        res = [one(x) for x in x_grid]
    m = np.array([r[0] for r in res], complex)
    residual = np.array([r[1] for r in res], float)
    failed = ~np.isfinite(m)
    errors = [r[2] for r in res if r[2] is not None]
    if np.any(failed):
        mm = np.where(failed, 0.0, m)
        phases = PhaseAccumulator(boundary_phase, cumulative_integral(x_grid, np.abs(mm) ** 2))
        snap = recover_u(mm, x_grid, phases, beta, t)
        u = snap.u.copy()
        u[failed] = np.nan
        snap = FieldSnapshot(float(t), x_grid, u, mass=float("nan"))
    else:
        phases = PhaseAccumulator.build(x_grid, m, boundary_phase, phase_tol)
        snap = recover_u(m, x_grid, phases, beta, t)
    return Reconstruction(snap, m, residual, failed, errors)
