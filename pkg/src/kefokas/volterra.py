"""Product-trapezoid solver for the column Volterra equations.

Both the x- and the t-direction problems reduce to a 2-vector ``v(s)`` on a
grid ``s_0 < ... < s_N`` with ``v(s_N) = (0, 1)`` and

    v1(s) = -int_s^S exp(lam (s' - s)) (U v)_1(s') ds'
    v2(s) = 1 - int_s^S (U v)_2(s') ds'

where ``lam`` carries the spectral parameter (``2ik`` in x, ``4ik^2`` in t).
On each cell ``(U v)`` is replaced by its linear interpolant and the
exponential is integrated exactly, which keeps the scheme accurate when
``|lam| h`` is not small.  The scheme is symmetric, so its error expands in
even powers of ``h`` and Romberg extrapolation over subsampled grids applies.
"""

import numpy as np

from .errors import ConfigurationError, ResolutionError

_SERIES_RADIUS = 0.5
_SERIES_TERMS = 24


def exp_linear_weights(z, h):
    """Weights ``w0, w1`` with int_0^h e^{z s/h} F(s) ds ~ w0 F(0) + w1 F(h).

    Exact when ``F`` is linear.  ``z = lam * h`` may be an array.
    """
    z = np.asarray(z, dtype=complex)
    w0 = np.empty_like(z)
    w1 = np.empty_like(z)
    small = np.abs(z) < _SERIES_RADIUS
    if np.any(small):
        zs = z[small]
        s0 = np.zeros_like(zs)
        s1 = np.zeros_like(zs)
        term = np.ones_like(zs)
        fact = 2.0
        for m in range(_SERIES_TERMS):
            # term = z^m, fact = (m + 2)!
            s0 += term / fact
            s1 += (m + 1) * term / fact
            term = term * zs
            fact *= m + 3
        w0[small] = s0
        w1[small] = s1
    big = ~small
    if np.any(big):
        zb = z[big]
        ez = np.exp(zb)
        w0[big] = (ez - 1.0 - zb) / zb**2
        w1[big] = (ez * (zb - 1.0) + 1.0) / zb**2
    return h * w0, h * w1


def _sweep(grid, idx, coef, lam):
    """One backward sweep on the sub-grid ``grid[idx]``; returns v at idx[0]."""
    nk = lam.shape[0]
    v1 = np.zeros(nk, dtype=complex)
    v2 = np.ones(nk, dtype=complex)
    U = _as_stack(coef(idx[-1]), nk)
    for j in range(len(idx) - 2, -1, -1):
        n = idx[j]
        h = grid[idx[j + 1]] - grid[n]
        w0, w1 = exp_linear_weights(lam * h, h)
        F1 = U[:, 0, 0] * v1 + U[:, 0, 1] * v2
        F2 = U[:, 1, 0] * v1 + U[:, 1, 1] * v2
        r1 = np.exp(lam * h) * v1 - w1 * F1
        r2 = v2 - 0.5 * h * F2
        U = _as_stack(coef(n), nk)
        # (I + diag(w0, h/2) U) v = r
        m11 = 1.0 + w0 * U[:, 0, 0]
        m12 = w0 * U[:, 0, 1]
        m21 = 0.5 * h * U[:, 1, 0]
        m22 = 1.0 + 0.5 * h * U[:, 1, 1]
        det = m11 * m22 - m12 * m21
        v1 = (m22 * r1 - m12 * r2) / det
        v2 = (m11 * r2 - m21 * r1) / det
    return np.stack([v1, v2], axis=-1)


def _as_stack(U, nk):
    U = np.asarray(U, dtype=complex)
    if U.ndim == 2:
        return np.broadcast_to(U, (nk, 2, 2))
    return U


def solve_column(grid, coef, lam, richardson=2, return_levels=False):
    """Solve the column equation and return ``v(s_0)`` with shape (nk, 2).

    Parameters
    ----------
    grid : (N+1,) increasing samples.
    coef : callable ``n -> U`` giving the 2x2 coefficient at node ``n``,
        either shape (2, 2) or (nk, 2, 2).
    lam : (nk,) complex exponents; ``Re(lam) <= 0`` is required for the
        backward sweep to be stable.
    richardson : number of Romberg levels.  ``N`` must be divisible by
        ``2**richardson``.

    The second return value (when ``return_levels``) is the Romberg table's
    first column, finest grid first.
    """
    grid = np.asarray(grid, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    N = len(grid) - 1
    if N < 1:
        raise ConfigurationError("grid needs at least two samples")
    step = 2**richardson
    if N % step:
        raise ConfigurationError(
            f"grid of {N} cells not divisible by 2**{richardson}",
            cells=N,
        )
    if N // step < 2 and richardson > 0:
        raise ResolutionError("grid too coarse for the requested Romberg depth",
                              cells=N)
    levels = []
    for j in range(richardson + 1):
        idx = np.arange(0, N + 1, 2**j)
        levels.append(_sweep(grid, idx, coef, lam))
    table = [levels]
    for m in range(1, richardson + 1):
        prev = table[-1]
        fac = 4.0**m
        table.append([prev[j] + (prev[j] - prev[j + 1]) / (fac - 1.0)
                      for j in range(len(prev) - 1)])
    best = table[-1][0]
    if return_levels:
        return best, levels
    return best


def romberg_error(levels):
    """Crude error estimate: gap between the two finest Romberg diagonals."""
    if len(levels) < 2:
        return np.full(levels[0].shape[0], np.inf)
    a, b = levels[0], levels[1]
    return np.max(np.abs(a - b), axis=-1) / 3.0
