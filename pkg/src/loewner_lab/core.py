"""Deterministic Loewner machinery built from exact vertical-slit maps.

A chain is a sequence of steps on which the driving function is constant.  On
such a step the chordal Loewner equation

    d/dt g_t(z) = a / (g_t(z) - v)

solves in closed form, ``(g - v)**2 = (z - v)**2 + 2*a*dt``, so composing the
steps is exact and every roundtrip identity holds to rounding error.

Convention: the driving value of step ``k`` is ``V`` at the *end* of the step,
so after ``k`` steps the tip sits exactly at ``f_{t_k}(V_{t_k})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _kernels as K
from .errors import DomainError, ParameterError, RangeError

SWALLOW_FLOOR = 1e-14


@dataclass(frozen=True)
class HalfPlanePoint:
    re: float
    im: float

    def __post_init__(self):
        if not (self.im > 0 and math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"point must lie in the open upper half plane, got {self.re}+{self.im}i")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def of(cls, z) -> "HalfPlanePoint":
        if isinstance(z, HalfPlanePoint):
            return z
        z = complex(z)
        return cls(z.real, z.imag)


class DrivingStep(NamedTuple):
    dt: float
    v: float


@dataclass(frozen=True)
class SlitMapChain:
    """Loewner chain with piecewise-constant driving.

    ``v[k]`` is held on a step of capacity-time length ``dt[k]``; ``v0`` is the
    driving value at time zero.
    """

    a: float
    v: np.ndarray
    dt: np.ndarray
    v0: float = 0.0
    total_time: float = field(init=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.v, dtype=float)
        dt = np.ascontiguousarray(self.dt, dtype=float)
        if not self.a > 0:
            raise ParameterError("capacity speed a must be positive")
        if v.ndim != 1 or v.shape != dt.shape:
            raise ParameterError("v and dt must be 1-d arrays of equal length")
        if np.any(~(dt > 0)) or not np.all(np.isfinite(v)):
            raise ParameterError("every step needs dt > 0 and a finite driving value")
        v.setflags(write=False)
        dt.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "total_time", math.fsum(dt))

    @classmethod
    def from_steps(cls, a: float, steps: Iterable[DrivingStep | tuple], v0: float = 0.0) -> "SlitMapChain":
        steps = [DrivingStep(*s) for s in steps]
        return cls(a, np.array([s.v for s in steps]), np.array([s.dt for s in steps]), v0)

    @classmethod
    def from_path(cls, path) -> "SlitMapChain":
        """Chain realizing a ``DrivingPath`` (right-endpoint driving on each step)."""
        vals = np.asarray(path.values, dtype=float)
        return cls(path.a, vals[1:], np.full(vals.size - 1, path.dt), float(vals[0]))

    @property
    def steps(self) -> list[DrivingStep]:
        return [DrivingStep(float(d), float(x)) for d, x in zip(self.dt, self.v)]

    @property
    def n_steps(self) -> int:
        return int(self.v.size)

    def __len__(self):
        return self.n_steps

    def time_at(self, t_steps: int) -> float:
        return math.fsum(self.dt[:t_steps])

    def driving_at(self, t_steps: int) -> float:
        """V at the end of the first ``t_steps`` steps."""
        self._check_steps(t_steps)
        return float(self.v[t_steps - 1]) if t_steps > 0 else self.v0

    def truncate(self, t_steps: int) -> "SlitMapChain":
        self._check_steps(t_steps)
        if t_steps == 0:
            raise ParameterError("cannot truncate a chain to zero steps")
        return SlitMapChain(self.a, self.v[:t_steps], self.dt[:t_steps], self.v0)

    def _check_steps(self, t_steps: int):
        if not 0 <= t_steps <= self.n_steps:
            raise RangeError(f"t_steps={t_steps} outside [0, {self.n_steps}]")


@dataclass(frozen=True)
class FlowResult:
    value: complex
    deriv: complex
    survived: bool = True
    exit_time: float | None = None


@dataclass(frozen=True)
class TipProfile:
    y_grid: np.ndarray
    deriv_mod: np.ndarray
    v_cum: np.ndarray


@dataclass(frozen=True)
class ForwardObservables:
    """Time series of the forward-flow observables started from a fixed z."""

    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Theta: np.ndarray
    S: np.ndarray
    Upsilon: np.ndarray
    Delta: np.ndarray
    M: np.ndarray
    stopped_at: float | None = None


# ---------------------------------------------------------------- elementary maps


def _root_up(w, ref):
    s = np.sqrt(np.asarray(w, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real * np.asarray(ref).real < 0))
    return np.where(flip, -s, s)


def _scalar_or_array(x, like):
    return complex(x) if np.ndim(like) == 0 else x


def _check_step(a, dt):
    if not np.all(np.asarray(dt) > 0):
        raise ParameterError("dt must be positive")
    if not np.all(np.asarray(a) > 0):
        raise ParameterError("a must be positive")


def slit_forward(z, v: float, a: float, dt: float):
    """Exact constant-driving forward map ``v + sqrt((z - v)**2 + 2*a*dt)``.

    The root is taken in the closed upper half plane; for real inputs the
    image keeps the side of ``v`` the input was on.
    """
    _check_step(a, dt)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise DomainError("slit_forward is defined on the closed upper half plane")
    if np.any((z.imag == 0) & (z.real == np.asarray(v))):
        raise DomainError("the driving point itself has no image under the forward map")
    zv = z - v
    return _scalar_or_array(v + _root_up(zv * zv + 2.0 * a * dt, zv.real), z)


def slit_forward_deriv(z, v: float, a: float, dt: float):
    _check_step(a, dt)
    z = np.asarray(z, dtype=complex)
    zv = z - v
    g = np.asarray(slit_forward(z, v, a, dt)) - v
    return _scalar_or_array(zv / g, z)


def slit_reverse(z, u: float, a: float, dt: float):
    """Exact constant-driving reverse map ``u + sqrt((z - u)**2 - 2*a*dt)``.

    Real inputs are accepted when they lie outside the slit base
    ``|z - u| >= sqrt(2*a*dt)``; inside it the point would be swallowed.
    """
    _check_step(a, dt)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise DomainError("slit_reverse is defined on the closed upper half plane")
    zu = z - u
    c = 2.0 * a * dt
    if np.any((z.imag == 0) & (zu.real ** 2 < c)):
        raise DomainError("real input inside the slit base: branch point crossed")
    return _scalar_or_array(u + _root_up(zu * zu - c, zu.real), z)


def slit_reverse_deriv(z, u: float, a: float, dt: float):
    _check_step(a, dt)
    z = np.asarray(z, dtype=complex)
    zu = z - u
    h = np.asarray(slit_reverse(z, u, a, dt)) - u
    return _scalar_or_array(zu / h, z)


# ---------------------------------------------------------------- chain flows


def forward_flow(chain: SlitMapChain, z, floor: float = SWALLOW_FLOOR) -> FlowResult:
    """Compose the forward slit maps of ``chain`` at ``z`` (g_t(z), g_t'(z))."""
    z = HalfPlanePoint.of(z).z
    if chain.n_steps == 0:
        raise ParameterError("chain is empty")
    g, d, ok, k = K.forward_chain(z, chain.v, chain.dt, chain.a, floor)
    if ok:
        return FlowResult(complex(g), complex(d), True, None)
    return FlowResult(complex(g), complex(d), False, chain.time_at(int(k)))


def inverse_map(chain: SlitMapChain, w, t_steps: int | None = None) -> FlowResult:
    """f_t(w) = g_t^{-1}(w) and its derivative, using the first ``t_steps`` steps."""
    w = HalfPlanePoint.of(w).z
    n = chain.n_steps if t_steps is None else t_steps
    chain._check_steps(n)
    h, d = K.inverse_chain(w, chain.v, chain.dt, chain.a, n)
    return FlowResult(complex(h), complex(d), True, None)


def shifted_inverse(chain: SlitMapChain, y, t_steps: int | None = None):
    """f_hat_t(iy) and f_hat_t'(iy) for one or many heights ``y >= 0``."""
    n = chain.n_steps if t_steps is None else t_steps
    chain._check_steps(n)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("y must be nonnegative")
    ws = np.atleast_1d(chain.driving_at(n) + 1j * y).astype(complex)
    vals, ders = K.inverse_chain_many(ws, chain.v, chain.dt, chain.a, n)
    if y.ndim == 0:
        return complex(vals[0]), complex(ders[0])
    return vals, ders


def shifted_inverse_deriv(chain: SlitMapChain, y, t_steps: int | None = None):
    """|f_hat_t'(iy)| with f_hat_t(z) = f_t(z + V_t), using ``t_steps`` steps."""
    if np.any(np.asarray(y) <= 0):
        raise DomainError("y must be positive")
    _, d = shifted_inverse(chain, y, t_steps)
    return float(abs(d)) if np.ndim(y) == 0 else np.abs(d)


# Gauss-Legendre nodes on [0, 1] for the arc-length quadrature
_GL_X, _GL_W = leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _arc_length_pieces(chain, t_steps, edges):
    """Integral of |f_hat'(iu)| over each [edges[i], edges[i+1]]."""
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * _GL_X[None, :]).ravel()
    _, d = shifted_inverse(chain, nodes, t_steps)
    vals = np.abs(d).reshape(lo.size, _GL_X.size)
    return (vals @ _GL_W) * (hi - lo)


def arc_length(chain: SlitMapChain, y, t_steps: int | None = None, depth: int = 60) -> np.ndarray:
    """v_t(y) = int_0^y |f_hat_t'(iu)| du for each entry of ``y``.

    Each [0, y] is split dyadically (towards 0) and, between consecutive
    requested heights, into dyadic-sized pieces; each piece uses 12-point
    Gauss-Legendre.  The tail below y*2**-depth is dropped (for a discrete
    chain the integrand vanishes linearly at 0).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    order = np.argsort(y)
    ys = y[order]
    if ys[0] <= 0:
        raise DomainError("heights must be positive")
    edges = [ys[0] * 2.0 ** -np.arange(depth, 0, -1)]
    for lo, hi in zip(ys[:-1], ys[1:]):
        if hi > lo:
            m = max(1, int(math.ceil(math.log2(hi / lo))) * 2)
            edges.append(np.linspace(lo, hi, m + 1)[:-1])
    edges.append(ys[-1:])
    edges = np.unique(np.concatenate(edges))
    pieces = _arc_length_pieces(chain, t_steps, edges)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    idx = np.searchsorted(edges, ys)
    out = np.empty_like(y)
    out[order] = cum[idx]
    return out


def tip_profile(chain: SlitMapChain, t_steps: int, y_grid: Sequence[float]) -> TipProfile:
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or y.size == 0 or np.any(y <= 0) or np.any(y > 1) or np.any(np.diff(y) >= 0):
        raise ParameterError("y_grid must be strictly descending inside (0, 1]")
    dm = shifted_inverse_deriv(chain, y, t_steps)
    vc = arc_length(chain, y, t_steps)
    return TipProfile(y, dm, vc)


def default_y_min(chain: SlitMapChain) -> float:
    return math.sqrt(float(np.min(chain.dt))) / 8.0 if chain.n_steps else 1e-3


def trace_point(chain: SlitMapChain, t_steps: int, y_min: float | None = None) -> tuple[complex, float]:
    """Approximate gamma(t) by f_hat_t(i*y_min).

    Returns the point together with v_t(y_min), which bounds its distance to
    the true tip.
    """
    if y_min is None:
        y_min = default_y_min(chain)
    if not y_min > 0:
        raise DomainError("y_min must be positive")
    if t_steps == 0:
        return complex(chain.v0, y_min), y_min
    val, _ = shifted_inverse(chain, y_min, t_steps)
    return val, float(arc_length(chain, y_min, t_steps)[0])


def trace(chain: SlitMapChain, y: float = 0.0) -> np.ndarray:
    """Trace points at every step boundary, starting with gamma(0) = V_0.

    With ``y = 0`` these are the exact tips of the discrete chain.
    """
    tips = K.tips_all(chain.v, chain.dt, chain.a, float(y))
    return np.concatenate([[complex(chain.v0, y)], tips])


def reverse_flow_tip(path, T: float, z) -> FlowResult:
    """h_{T,T}(z) for the reverse flow driven by U_t = V_{T-t} - V_T.

    The driving of reverse step ``j`` is ``U`` at the start of that step, which
    mirrors the right-endpoint convention of the forward chain.
    """
    z = HalfPlanePoint.of(z).z
    m = _steps_for_time(path, T)
    vals = np.asarray(path.values, dtype=float)
    u = vals[m:0:-1] - vals[m]
    h, d = K.reverse_flow(z, u, np.full(m, path.dt), path.a)
    return FlowResult(complex(h), complex(d), True, None)


def _steps_for_time(path, T: float) -> int:
    m = T / path.dt
    k = int(round(m))
    if abs(m - k) > 1e-9 * max(1.0, m):
        raise RangeError(f"T={T} is not on the path grid (dt={path.dt})")
    if not 0 <= k <= len(path.values) - 1:
        raise RangeError(f"T={T} outside the path's time range")
    return k


def forward_observables(chain: SlitMapChain, z, r: float, lam: float, xi: float,
                        upsilon_stop: float = 0.0, floor: float = SWALLOW_FLOOR) -> ForwardObservables:
    """Forward-flow observables X, Y, Theta, S, Upsilon, Delta and
    M = S^{-r} Upsilon^{xi+r} Delta^{lam+r} at every step boundary."""
    z = HalfPlanePoint.of(z).z
    gs, ds = K.forward_observables_kernel(z, chain.v, chain.dt, chain.a, chain.v0, floor, float(upsilon_stop))
    n = gs.size
    drive = np.concatenate([[chain.v0], chain.v])[:n]
    zz = gs - drive
    times = np.concatenate([[0.0], np.cumsum(chain.dt)])[:n]
    X, Y = zz.real, zz.imag
    theta = np.angle(zz)
    S = Y / np.abs(zz)
    ups = Y / ds
    with np.errstate(divide="ignore", invalid="ignore"):
        M = S ** (-r) * ups ** (xi + r) * ds ** (lam + r)
    stopped = float(times[-1]) if ups[-1] <= upsilon_stop and upsilon_stop > 0 else None
    return ForwardObservables(times, X, Y, theta, S, ups, ds, M, stopped)
