"""Harmonic measure from infinity of the part of the hull near the tip.

For a circle of radius eps around the tip gamma(t), the arc ``sigma`` of the
circle that separates the tip from infinity has endpoints on the hull (or on
the real line).  Their images x_- < V_t < x_+ under g_t give

    mu(t, eps) = (x_+ - x_-) / pi.

The circle is sampled, mapped forward, and cut into arcs wherever it crosses
the hull; a crossing shows up as a jump between the images of neighbouring
samples that survives bisection.  The arc whose image interval brackets V_t
and is widest is taken as sigma.  Sampling can miss arcs thinner than the
sample spacing, so the estimate is a lower bracket for the exact interval.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .core import SWALLOW_FLOOR, SlitMapChain
from .errors import DegenerateArcError, ParameterError

MIN_ARC_SAMPLES = 8
# half-step gap ratios above this are confirmed by further bisection
_JUMP_RATIO = 0.85
_CONFIRM_DEPTH = 30
_ENDPOINT_DEPTH = 48


@dataclass(frozen=True)
class HarmonicMeasureEstimate:
    t: float
    eps_grid: tuple
    mu: tuple
    x_minus: tuple
    x_plus: tuple
    circle_samples: int
    tip: complex
    v_t: float

    def slope(self) -> float:
        """Least-squares slope of log mu against log eps."""
        le, lm = np.log(self.eps_grid), np.log(self.mu)
        return float(np.polyfit(le, lm, 1)[0])

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tip"] = [self.tip.real, self.tip.imag]
        return d


class _Mapper:
    """Forward map of circle points through the first ``n`` steps of a chain."""

    def __init__(self, chain: SlitMapChain, n: int, center: complex, eps: float):
        self.v = chain.v[:n]
        self.dt = chain.dt[:n]
        self.a = chain.a
        self.center = center
        self.eps = eps

    def point(self, theta):
        return self.center + self.eps * np.exp(1j * np.asarray(theta, dtype=float))

    def __call__(self, theta):
        """Images and a validity mask (inside H and not swallowed)."""
        z = np.atleast_1d(self.point(theta)).astype(complex)
        ok = z.imag > 0
        img = np.full(z.shape, np.nan + 0j)
        if np.any(ok):
            g, _, alive = K.forward_chain_many(z[ok], self.v, self.dt, self.a, SWALLOW_FLOOR)
            img[ok] = np.where(alive, g, np.nan)
            ok[ok] = alive
        return img, ok


def _is_jump(mapper: _Mapper, t0, t1, g0, g1) -> bool:
    """Bisect towards the larger image gap; a true jump keeps its size."""
    gap0 = abs(g1 - g0)
    for _ in range(_CONFIRM_DEPTH):
        tm = 0.5 * (t0 + t1)
        gm, ok = mapper(tm)
        if not ok[0]:
            return True
        gm = gm[0]
        if abs(gm - g0) >= abs(g1 - gm):
            t1, g1 = tm, gm
        else:
            t0, g0 = tm, gm
    return abs(g1 - g0) > 0.3 * gap0


def _endpoint(mapper: _Mapper, t_in, g_in, t_out, g_out, out_ok) -> float:
    """Real image of the arc end between an inside sample and the next one."""
    for _ in range(_ENDPOINT_DEPTH):
        tm = 0.5 * (t_in + t_out)
        gm, ok = mapper(tm)
        gm, ok = gm[0], bool(ok[0])
        same = ok and (not out_ok or abs(gm - g_in) < abs(gm - g_out))
        if same:
            t_in, g_in = tm, gm
        else:
            t_out = tm
            if ok:
                g_out = gm
    return float(g_in.real)


def _tip_arc(mapper: _Mapper, n_samples: int, v_t: float) -> tuple[float, float]:
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    img, ok = mapper(theta)
    # cut between i and i+1 (cyclically) when either is invalid or a jump is confirmed
    nxt = np.roll(np.arange(n_samples), -1)
    dtheta = 2.0 * np.pi / n_samples
    cut = ~(ok & ok[nxt])
    both = np.flatnonzero(ok & ok[nxt])
    if both.size:
        mid_img, mid_ok = mapper(theta[both] + 0.5 * dtheta)
        gap = np.abs(img[nxt[both]] - img[both])
        half = np.maximum(np.abs(mid_img - img[both]), np.abs(img[nxt[both]] - mid_img))
        suspect = ~mid_ok | (half > _JUMP_RATIO * gap)
        for i in both[suspect]:
            cut[i] = _is_jump(mapper, theta[i], theta[i] + dtheta, img[i], img[nxt[i]])
    if not np.any(cut):
        raise DegenerateArcError("the sampled circle never meets the hull")
    start = (int(np.flatnonzero(cut)[0]) + 1) % n_samples
    order = (start + np.arange(n_samples)) % n_samples
    best = None
    run: list[int] = []
    for idx in order:
        if ok[idx]:
            run.append(int(idx))
        if cut[idx]:
            if len(run) >= MIN_ARC_SAMPLES:
                best = _pick(mapper, run, theta, img, ok, dtheta, v_t, best)
            run = []
    if best is None:
        raise DegenerateArcError(f"no arc with at least {MIN_ARC_SAMPLES} samples brackets V_t")
    return best


def _pick(mapper, run, theta, img, ok, dtheta, v_t, best):
    first, last = run[0], run[-1]
    prev, nxt = (first - 1) % theta.size, (last + 1) % theta.size
    t_first = theta[first]
    t_last = t_first + dtheta * (len(run) - 1)
    xa = _endpoint(mapper, t_first, img[first], t_first - dtheta, img[prev], bool(ok[prev]))
    xb = _endpoint(mapper, t_last, img[last], t_last + dtheta, img[nxt], bool(ok[nxt]))
    lo, hi = min(xa, xb), max(xa, xb)
    if lo < v_t < hi and (best is None or hi - lo > best[1] - best[0]):
        return lo, hi
    return best


def estimate_tip_harmonic_measure(chain: SlitMapChain, t_steps: int, eps_grid,
                                  circle_samples: int = 2048) -> HarmonicMeasureEstimate:
    """mu(t, eps) for each eps, with the tip taken as the exact discrete tip
    f_hat_t(0) of the chain."""
    chain._check_steps(t_steps)
    if t_steps < 1:
        raise ParameterError("t_steps must be at least 1")
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0 or np.any(eps <= 0):
        raise ParameterError("eps_grid must hold positive radii")
    if circle_samples < 4 * MIN_ARC_SAMPLES:
        raise ParameterError(f"circle_samples must be at least {4 * MIN_ARC_SAMPLES}")
    v_t = chain.driving_at(t_steps)
    tip, _ = K.inverse_chain(complex(v_t, 0.0), chain.v, chain.dt, chain.a, t_steps)
    xm, xp, mu = [], [], []
    for e in eps:
        lo, hi = _tip_arc(_Mapper(chain, t_steps, complex(tip), float(e)), circle_samples, v_t)
        xm.append(lo)
        xp.append(hi)
        mu.append((hi - lo) / math.pi)
    return HarmonicMeasureEstimate(chain.time_at(t_steps), tuple(eps.tolist()), tuple(mu), tuple(xm),
                                   tuple(xp), int(circle_samples), complex(tip), float(v_t))


def slit_mu(height: float, eps: float) -> float:
    """mu for the vertical slit [0, i*height] and a circle about its tip."""
    if eps >= height:
        return 2.0 * eps / math.pi
    return 2.0 * math.sqrt(2.0 * height * eps - eps * eps) / math.pi
