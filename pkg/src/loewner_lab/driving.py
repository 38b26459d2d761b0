"""Driving functions: Brownian paths in the a = 2/kappa convention, test drivers,
and the modulus-of-continuity statistic Delta(t, s)."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError, RangeError

BROWNIAN_ID = "philox-brownian"


def sample_generator(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for ``(master_seed, *key)``.

    Streams for different keys never need coordination, so sample ``i`` of any
    estimator can be regenerated on any worker from the pair (seed, i).
    """
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class DrivingPath:
    """Driving function sampled at the step boundaries ``k * dt`` (V_0 = 0)."""

    dt: float
    values: np.ndarray
    kappa: float
    seed: int = 0
    generator_id: str = "deterministic"

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ParameterError("a driving path needs at least two values")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not self.kappa > 0:
            raise ParameterError("kappa must be positive")
        if vals[0] != 0.0:
            raise ParameterError("driving paths start at V_0 = 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def a(self) -> float:
        return 2.0 / self.kappa

    @property
    def n_steps(self) -> int:
        return self.values.size - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    @property
    def t_max(self) -> float:
        return self.n_steps * self.dt

    @property
    def is_brownian(self) -> bool:
        return self.generator_id.startswith(BROWNIAN_ID)

    def to_chain(self):
        from .core import SlitMapChain

        return SlitMapChain.from_path(self)

    def restrict(self, n_steps: int) -> "DrivingPath":
        if not 1 <= n_steps <= self.n_steps:
            raise RangeError(f"cannot restrict a {self.n_steps}-step path to {n_steps} steps")
        return DrivingPath(self.dt, self.values[: n_steps + 1], self.kappa, self.seed, self.generator_id)

    def coarsen(self, factor: int) -> "DrivingPath":
        """Keep every ``factor``-th value (same Brownian path, coarser grid)."""
        if factor < 1 or self.n_steps % factor:
            raise ParameterError("factor must divide the number of steps")
        return DrivingPath(self.dt * factor, self.values[::factor], self.kappa, self.seed, self.generator_id)

    # -- serialization -------------------------------------------------------

    def header(self) -> dict:
        return {"kappa": self.kappa, "dt": self.dt, "seed": self.seed, "generator_id": self.generator_id}

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        buf.write("t,v\n")
        for t, v in zip(self.times, self.values):
            buf.write(f"{float(t)!r},{float(v)!r}\n")
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "DrivingPath":
        return cls.parse_csv(Path(source).read_text())

    @classmethod
    def parse_csv(cls, text: str) -> "DrivingPath":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ParameterError("missing JSON header line")
        meta = json.loads(lines[0][1:])
        if lines[1].strip() != "t,v":
            raise ParameterError("expected a 't,v' column header")
        vals = [float(line.split(",")[1]) for line in lines[2:] if line.strip()]
        return cls(float(meta["dt"]), np.array(vals), float(meta["kappa"]), int(meta["seed"]), meta["generator_id"])


def sample_brownian(kappa: float, n_steps: int, dt: float, seed: int) -> DrivingPath:
    """Standard Brownian driving with a = 2/kappa on ``n_steps`` steps."""
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    if not dt > 0:
        raise ParameterError("dt must be positive")
    if n_steps < 1:
        raise ParameterError("n_steps must be at least 1")
    rng = sample_generator(seed)
    incr = rng.standard_normal(n_steps) * math.sqrt(dt)
    vals = np.concatenate([[0.0], np.cumsum(incr)])
    return DrivingPath(dt, vals, kappa, int(seed), BROWNIAN_ID)


def from_common_convention(values, dt: float, kappa: float, seed: int = 0,
                           generator_id: str = BROWNIAN_ID) -> DrivingPath:
    """Convert a path given as (a = 2, W_t = sqrt(kappa) B_t) into this package's
    convention (a = 2/kappa, standard B).

    The chain d/dt g = 2/(g - sqrt(kappa) B_t) at time t equals the chain
    d/ds g = (2/kappa)/(g - B'_s) at s = kappa*t with B'_s = sqrt(kappa) B_{s/kappa},
    a standard Brownian motion; the sampled values are unchanged and only the
    time step is rescaled.
    """
    return DrivingPath(dt * kappa, np.asarray(values, dtype=float), kappa, seed, generator_id)


def refine_dyadic(path: DrivingPath, levels: int) -> DrivingPath:
    """Insert Brownian-bridge midpoints ``levels`` times.

    Existing values are kept exactly; each midpoint is drawn from the bridge
    law N((left + right)/2, dt/4).
    """
    if levels < 0:
        raise ParameterError("levels must be nonnegative")
    if levels == 0:
        return path
    if not path.is_brownian:
        raise ParameterError(f"refusing to refine a non-Brownian path ({path.generator_id})")
    vals, dt = path.values, path.dt
    for lev in range(1, levels + 1):
        rng = sample_generator(path.seed, 0x5EF1, lev, vals.size)
        mids = 0.5 * (vals[:-1] + vals[1:]) + rng.standard_normal(vals.size - 1) * math.sqrt(dt / 4.0)
        out = np.empty(2 * vals.size - 1)
        out[0::2] = vals
        out[1::2] = mids
        vals, dt = out, dt / 2.0
    return DrivingPath(dt, vals, path.kappa, path.seed, f"{BROWNIAN_ID}/refine{levels}"
                       if path.generator_id == BROWNIAN_ID else f"{path.generator_id}/refine{levels}")


def deterministic_driver(kind: str, dt: float, t_max: float, kappa: float = 4.0, **params) -> DrivingPath:
    """Test drivers: ``constant`` (V = 0), ``linear`` (V = slope*t),
    ``sine`` (V = amplitude*sin(omega*t))."""
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ParameterError("t_max must be a positive multiple of dt")
    t = np.arange(n + 1) * dt
    if kind == "constant":
        vals = np.zeros(n + 1)
    elif kind == "linear":
        vals = params.get("slope", 1.0) * t
    elif kind == "sine":
        vals = params.get("amplitude", 1.0) * np.sin(params.get("omega", 2 * math.pi) * t)
    else:
        raise ParameterError(f"unknown driver kind {kind!r}")
    return DrivingPath(dt, vals, kappa, 0, f"deterministic-{kind}")


@dataclass(frozen=True)
class ContinuityStat:
    t: float
    s: float
    delta: float


def _interp(path: DrivingPath, t: float) -> float:
    return float(np.interp(t, path.times, path.values))


def modulus_delta(path: DrivingPath, t: float, s: float) -> ContinuityStat:
    """Delta(t, s) = sup_{0 <= r <= s^2} sqrt(s^-2 (V_{t+r} - V_t)^2 + 4).

    The path is read as piecewise linear between grid values, so the sup is
    attained at a grid point or at the window end.
    """
    if not s > 0:
        raise ParameterError("s must be positive")
    end = t + s * s
    if t < 0 or end > path.t_max * (1 + 1e-12):
        raise RangeError(f"window [{t}, {end}] outside [0, {path.t_max}]")
    vt = _interp(path, t)
    times = path.times
    inner = path.values[(times > t) & (times < end)]
    cand = np.concatenate([inner, [_interp(path, min(end, path.t_max)), vt]])
    dev = float(np.max(np.abs(cand - vt)))
    return ContinuityStat(t, s, math.sqrt((dev / s) ** 2 + 4.0))
