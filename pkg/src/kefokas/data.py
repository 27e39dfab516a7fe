"""Input profiles: initial datum, boundary traces and their gauge phases."""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import ConfigurationError, KEError

DEFAULT_DECAY_FLOOR = 1e-12
CORNER_TOLERANCE = 1e-6


class InputNotFound(KEError):
    kind = "input-not-found"


class ValidationError(ConfigurationError):
    kind = "validation"


def fd_weights(nodes, x0, order):
    """Finite-difference weights on arbitrary nodes (Vandermonde solve)."""
    nodes = np.asarray(nodes, dtype=float) - x0
    n = len(nodes)
    V = np.vander(nodes, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def one_sided_derivative(grid, values, npts=5):
    """d/dx at grid[0] using the first ``npts`` samples."""
    w = fd_weights(grid[:npts], grid[0], 1)
    return np.dot(w, values[:npts])


@dataclass(frozen=True)
class HalfLineData:
    """Sampled initial profile ``u0(x)`` and boundary traces ``g0(t), g1(t)``.

    ``t_samples`` may be empty when only the x-side transform is wanted.
    """

    x_samples: np.ndarray
    u0: np.ndarray
    beta: float
    t_samples: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g0: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    g1: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    decay_floor: float = DEFAULT_DECAY_FLOOR

    def __post_init__(self):
        for name, dtype in (("x_samples", float), ("u0", complex),
                            ("t_samples", float), ("g0", complex), ("g1", complex)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def has_boundary(self):
        return self.t_samples.size > 0

    def validate(self, corner_tol=CORNER_TOLERANCE, check_decay=True):
        """Raise :class:`ValidationError` when an invariant fails."""
        x, u = self.x_samples, self.u0
        if x.ndim != 1 or x.shape != u.shape:
            raise ValidationError("x_samples and u0 must be 1-D of equal length",
                                  nx=x.size, nu=u.size)
        if x.size < 5:
            raise ValidationError("need at least 5 x samples", nx=x.size)
        _check_grid(x, "x_samples")
        if not np.all(np.isfinite(u)):
            raise ValidationError("u0 has non-finite samples")
        if self.beta == 0.0:
            raise ValidationError("beta must be nonzero")
        if check_decay and abs(u[-1]) > self.decay_floor:
            raise ValidationError("u0 has not decayed below decay_floor",
                                  tail=abs(u[-1]), decay_floor=self.decay_floor)
        if not self.has_boundary:
            return self
        t = self.t_samples
        if t.shape != self.g0.shape or t.shape != self.g1.shape:
            raise ValidationError("t_samples, g0, g1 must have equal length",
                                  nt=t.size, ng0=self.g0.size, ng1=self.g1.size)
        if t.size < 5:
            raise ValidationError("need at least 5 t samples", nt=t.size)
        _check_grid(t, "t_samples")
        scale = max(1.0, float(np.max(np.abs(u))))
        if abs(self.g0[0] - u[0]) > corner_tol * scale:
            raise ValidationError("corner incompatibility g0(0) != u0(0)",
                                  mismatch=abs(self.g0[0] - u[0]))
        du0 = one_sided_derivative(x, u)
        if abs(self.g1[0] - du0) > corner_tol * max(scale, abs(du0)):
            raise ValidationError("corner incompatibility g1(0) != u0'(0)",
                                  mismatch=abs(self.g1[0] - du0))
        return self

    def boundary_tail(self):
        """Largest trace magnitude at the final t sample."""
        if not self.has_boundary:
            return 0.0
        return float(max(abs(self.g0[-1]), abs(self.g1[-1])))

    def to_json(self):
        return {
            "beta": self.beta,
            "decay_floor": self.decay_floor,
            "x_samples": self.x_samples.tolist(),
            "u0_re": self.u0.real.tolist(),
            "u0_im": self.u0.imag.tolist(),
            "t_samples": self.t_samples.tolist(),
            "g0_re": self.g0.real.tolist(),
            "g0_im": self.g0.imag.tolist(),
            "g1_re": self.g1.real.tolist(),
            "g1_im": self.g1.imag.tolist(),
        }

    @classmethod
    def from_json(cls, doc):
        try:
            u0 = np.asarray(doc["u0_re"], float) + 1j * np.asarray(doc["u0_im"], float)
            t = np.asarray(doc.get("t_samples", []), float)
            g0 = (np.asarray(doc.get("g0_re", []), float)
                  + 1j * np.asarray(doc.get("g0_im", []), float))
            g1 = (np.asarray(doc.get("g1_re", []), float)
                  + 1j * np.asarray(doc.get("g1_im", []), float))
            return cls(x_samples=np.asarray(doc["x_samples"], float), u0=u0,
                       beta=doc["beta"], t_samples=t, g0=g0, g1=g1,
                       decay_floor=doc.get("decay_floor", DEFAULT_DECAY_FLOOR))
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise ValidationError(f"malformed profile: {exc}") from exc


def load_profile(path):
    if not os.path.exists(path):
        raise InputNotFound(f"no such profile: {path}", path=path)
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"profile is not valid JSON: {exc}") from exc
    return HalfLineData.from_json(doc)


def save_profile(data, path):
    with open(path, "w") as fh:
        json.dump(data.to_json(), fh)


def _check_grid(s, name):
    if s[0] != 0.0:
        raise ValidationError(f"{name} must start at 0", start=s[0])
    if np.any(np.diff(s) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class GaugePhase:
    """Cumulative phase integrals that gauge the Lax-pair coefficients.

    ``x_phase[n] = int_0^{x_n} |u0|^2`` and
    ``t_phase[n] = int_0^{t_n} (4 beta^2 |g0|^4 + 2 beta Im(g1 conj(g0)))``.
    """

    x_phase: np.ndarray
    t_phase: np.ndarray

    @classmethod
    def from_data(cls, data):
        xp = cumulative_integral(data.x_samples, np.abs(data.u0) ** 2)
        if data.has_boundary:
            tp = cumulative_integral(data.t_samples, boundary_density(data))
        else:
            tp = np.zeros(0)
        return cls(x_phase=xp, t_phase=tp)


def boundary_density(data):
    """Real density of the t-part of the closed one-form at x = 0."""
    g0, g1, b = data.g0, data.g1, data.beta
    # -i b (g1 conj g0 - g0 conj g1) = 2 b Im(g1 conj g0)
    return 4 * b**2 * np.abs(g0) ** 4 + 2 * b * np.imag(g1 * np.conj(g0))


def cumulative_integral(s, f):
    """Fourth-order cumulative integral starting at 0."""
    s = np.asarray(s, float)
    f = np.asarray(f, float)
    if s.size < 3:
        return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(s) * (f[1:] + f[:-1]))])
    return cumulative_simpson(f, x=s, initial=0.0)


def gaussian_profile(amplitude=1.0, width=1.0, center=5.0, x_max=20.0, n=4096,
                     beta=0.25, decay_floor=DEFAULT_DECAY_FLOOR, phase_slope=0.0):
    """Default scenario: ``A exp(-((x - c)/w)^2) e^{i phase_slope x}``.

    The default centre keeps ``u0(0)`` and ``u0'(0)`` below 1e-9 so that the
    datum is compatible with a zero Dirichlet wall.
    """
    x = np.linspace(0.0, x_max, n + 1)
    u0 = amplitude * np.exp(-(((x - center) / width) ** 2)) * np.exp(1j * phase_slope * x)
    return HalfLineData(x_samples=x, u0=u0, beta=beta, decay_floor=decay_floor)
