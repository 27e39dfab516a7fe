"""Numerical Riemann-Hilbert solver on unions of straight oriented segments.

The solution is written as ``M(k) = I + C[mu (J - I)](k)`` with ``C`` the
Cauchy transform along the contour and ``mu = M_-``, the boundary value from
the right of each oriented segment.  ``mu`` solves

    mu - C_-[mu (J - I)] = I,   C_- f = -f/2 + (1/2 pi i) PV int f(s)/(s-k) ds,

which is discretised by a Nystrom method on composite Gauss-Legendre panels.
Panels are graded geometrically toward segment ends that touch a junction.
Singular and near-singular panel integrals use product-integration weights
(exact Cauchy integrals of the panel interpolant), so on-contour targets get
their principal values and targets close to a panel keep full accuracy.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import ConfigurationError, NonConvergenceError, ResolutionError

CONDITION_LIMIT = 1e12
# Targets whose local coordinate z has |z-1|+|z+1| below this use product
# weights; outside, 16-point Gauss is accurate to ~1e-16.
_NEAR_SUM = 3.4
_ON_PANEL = 1e-10


@dataclass(frozen=True)
class Segment:
    """Straight oriented segment ``start -> end`` carrying ``jump(k)``.

    ``jump`` maps a complex array of shape (n,) to (n, 2, 2).  ``grade_start``
    and ``grade_end`` request geometric panel refinement toward that end.
    """

    name: str
    start: complex
    end: complex
    jump: object
    grade_start: bool = True
    grade_end: bool = False

    @property
    def length(self):
        return abs(self.end - self.start)

    @property
    def direction(self):
        return (self.end - self.start) / self.length

    def point(self, s):
        return self.start + self.direction * np.asarray(s, float)


@dataclass
class ContourRH:
    """Segments with jump assignments plus assembly diagnostics."""

    segments: list
    consistency_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def jump(self, name, k):
        for seg in self.segments:
            if seg.name == name:
                return seg.jump(np.atleast_1d(np.asarray(k, complex)))
        raise KeyError(name)

    def names(self):
        return [s.name for s in self.segments]


@dataclass(frozen=True)
class RHOptions:
    order: int = 16
    h_max: float = 0.5
    rho_min: float = 1e-7
    grading: float = 2.0
    identity_tol: float = 1e-14
    residual_tol: float = 1e-10
    condition_limit: float = CONDITION_LIMIT


@dataclass
class RHSolution:
    nodes: np.ndarray
    weights: np.ndarray
    mu_minus: np.ndarray
    jump_minus_identity: np.ndarray
    m_coeff: complex
    M1: np.ndarray
    residual: float
    condition: float
    panels: tuple = ()

    @property
    def size(self):
        return self.nodes.size

    def evaluate(self, k):
        """``M(k)`` at points off the contour, shape (n, 2, 2)."""
        k = np.atleast_1d(np.asarray(k, complex))
        n = self.nodes.size
        out = np.broadcast_to(np.eye(2, dtype=complex), (k.size, 2, 2)).copy()
        if n == 0:
            return out
        K = cauchy_matrix(k, self.panels, self.nodes, self.weights)
        f = np.einsum("nij,njk->nik", self.mu_minus, self.jump_minus_identity)
        out += np.einsum("mn,nij->mij", K, f)
        return out


# --------------------------------------------------------------------------
# discretisation

_RULES = {}


def _rule(p):
    """Gauss-Legendre rule on [-1, 1] and the inverse transposed Vandermonde."""
    if p not in _RULES:
        t, w = leggauss(p)
        V = np.vander(t, p, increasing=True)
        _RULES[p] = (t, w, np.linalg.inv(V.T))
    return _RULES[p]


def panel_breaks(length, h_max, rho_min, grading, grade_start, grade_end):
    """Breakpoints in ``[0, length]``, geometric toward the graded ends."""
    if length <= 0:
        raise ConfigurationError("segment of non-positive length")

    def geometric(limit):
        pts = [0.0]
        s = rho_min
        while s < min(h_max, limit):
            pts.append(s)
            s *= grading
        return pts

    head = geometric(length / 2 if grade_end else length) if grade_start else [0.0]
    tail = geometric(length / 2 if grade_start else length) if grade_end else [0.0]
    a, b = head[-1], length - tail[-1]
    if b <= a:
        b = a
    n_mid = max(1, int(np.ceil((b - a) / h_max))) if b > a else 0
    mid = list(np.linspace(a, b, n_mid + 1)[1:]) if n_mid else []
    brk = head + mid + [length - s for s in reversed(tail[:-1])]
    brk = np.unique(np.array(brk))
    return brk


@dataclass
class Panels:
    a: np.ndarray  # complex endpoints, one per panel
    b: np.ndarray
    first: np.ndarray  # index of the first node of each panel
    order: int


def panel_rule(a, b, order=16):
    """Nodes, complex weights and :class:`Panels` for straight panels a -> b."""
    a = np.atleast_1d(np.asarray(a, complex))
    b = np.atleast_1d(np.asarray(b, complex))
    t, w, _ = _rule(order)
    half = 0.5 * (b - a)
    nodes = (half[:, None] * t[None, :] + (0.5 * (a + b))[:, None]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights, Panels(a, b, np.arange(a.size) * order, order)


def discretise(contour, options=RHOptions()):
    """Nodes, complex weights, jumps and panel table for a contour."""
    t, w, _ = _rule(options.order)
    nodes, weights, jumps, pa, pb = [], [], [], [], []
    for seg in contour.segments:
        brk = panel_breaks(seg.length, options.h_max, options.rho_min,
                           options.grading, seg.grade_start, seg.grade_end)
        lo, hi = brk[:-1], brk[1:]
        s = (0.5 * (hi - lo))[:, None] * t[None, :] + (0.5 * (hi + lo))[:, None]
        k = seg.point(s.ravel())
        J = seg.jump(k)
        W = J - np.eye(2)
        if np.max(np.abs(W)) < options.identity_tol:
            continue
        nodes.append(k)
        weights.append((seg.direction * (0.5 * (hi - lo))[:, None] * w[None, :]).ravel())
        jumps.append(W)
        pa.append(seg.point(lo))
        pb.append(seg.point(hi))
    if not nodes:
        empty = np.zeros(0, complex)
        return empty, empty, np.zeros((0, 2, 2), complex), Panels(
            empty, empty, np.zeros(0, int), options.order)
    nodes = np.concatenate(nodes)
    pa, pb = np.concatenate(pa), np.concatenate(pb)
    panels = Panels(pa, pb, np.arange(pa.size) * options.order, options.order)
    return nodes, np.concatenate(weights), np.concatenate(jumps), panels


def _local_moments(z, p):
    """int_{-1}^{1} tau^n / (tau - z) dtau for n < p; PV when z is on (-1, 1)."""
    z = np.asarray(z, complex)
    on = (np.abs(z.imag) < _ON_PANEL) & (np.abs(z.real) < 1.0)
    m0 = np.log((1.0 - z) / (-1.0 - z))
    zr = z.real[on]
    m0[on] = np.log((1.0 - zr) / (1.0 + zr))
    m = np.empty((z.size, p), complex)
    m[:, 0] = m0
    for n in range(p - 1):
        m[:, n + 1] = z * m[:, n] + (1.0 - (-1.0) ** (n + 1)) / (n + 1)
    return m


def cauchy_matrix(targets, panels, nodes, weights):
    """``K`` with ``K @ f ~ (1/2 pi i) int f(s)/(s - k) ds`` (PV on-contour)."""
    targets = np.atleast_1d(np.asarray(targets, complex))
    diff = nodes[None, :] - targets[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = weights[None, :] / diff
    p = panels.order
    _, _, VTinv = _rule(p)
    half = 0.5 * (panels.b - panels.a)
    mid = 0.5 * (panels.b + panels.a)
    for j in range(panels.a.size):
        z = (targets - mid[j]) / half[j]
        near = np.nonzero(np.abs(z - 1.0) + np.abs(z + 1.0) < _NEAR_SUM)[0]
        if near.size == 0:
            continue
        mom = _local_moments(z[near], p)
        sl = slice(panels.first[j], panels.first[j] + p)
        K[near, sl] = mom @ VTinv.T
    return K / (2j * np.pi)


# --------------------------------------------------------------------------
# solver


def _condition(lu_piv, anorm):
    lu, piv = lu_piv
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    return np.inf if rcond == 0 else 1.0 / rcond


def solve_rh(contour, options=RHOptions()):
    """Solve the RH problem; returns :class:`RHSolution`.

    Raises :class:`ResolutionError` when the Nystrom matrix is too
    ill-conditioned and :class:`NonConvergenceError` when the discrete
    residual exceeds ``options.residual_tol``.
    """
    nodes, weights, W, panels = discretise(contour, options)
    n = nodes.size
    if n == 0:
        return RHSolution(nodes, weights, np.zeros((0, 2, 2), complex), W, 0j,
                          np.zeros((2, 2), complex), 0.0, 1.0, panels)
    K = cauchy_matrix(nodes, panels, nodes, weights)
    K[np.arange(n), np.arange(n)] -= 0.5
    # unknown ordering: component c of row-vector mu at node i -> c*n + i
    A = np.eye(2 * n, dtype=complex)
    for a in range(2):
        for c in range(2):
            A[c * n:(c + 1) * n, a * n:(a + 1) * n] -= K * W[None, :, a, c]
    rhs = np.zeros((2 * n, 2), complex)
    rhs[:n, 0] = 1.0
    rhs[n:, 1] = 1.0
    anorm = np.max(np.sum(np.abs(A), axis=0))
    lu_piv = lu_factor(A, check_finite=False)
    cond = _condition(lu_piv, anorm)
    if not np.isfinite(cond) or cond > options.condition_limit:
        raise ResolutionError("collocation matrix ill-conditioned",
                              condition=float(cond), nodes=int(n))
    sol = lu_solve(lu_piv, rhs, check_finite=False)
    residual = float(np.max(np.abs(A @ sol - rhs)))
    if not residual <= options.residual_tol:
        raise NonConvergenceError("collocation residual above tolerance",
                                  residual=residual, tol=options.residual_tol)
    mu = np.empty((n, 2, 2), complex)
    for r in range(2):
        mu[:, r, 0] = sol[:n, r]
        mu[:, r, 1] = sol[n:, r]
    f = np.einsum("nij,njk->nik", mu, W)
    M1 = -np.einsum("n,nij->ij", weights, f) / (2j * np.pi)
    return RHSolution(nodes=nodes, weights=weights, mu_minus=mu,
                      jump_minus_identity=W, m_coeff=complex(M1[0, 1]), M1=M1,
                      residual=residual, condition=float(cond), panels=panels)


def linearized_m(contour, options=RHOptions()):
    """One-iterate approximation ``-(1/2 pi i) int (J - I)_{12} ds``."""
    nodes, weights, W, _ = discretise(contour, options)
    if nodes.size == 0:
        return 0j
    return complex(-np.sum(weights * W[:, 0, 1]) / (2j * np.pi))


def schwarz_reflect(M):
    """Swap-conjugate map ``M -> sigma1 conj(M) sigma1``."""
    return np.conj(M)[..., ::-1, ::-1]
