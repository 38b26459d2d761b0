"""Monte-Carlo estimators for the scaling laws of SLE derivatives.

Every estimator is a pure function of its parameters and a master seed.
Sample ``i`` draws its randomness from ``sample_generator(seed, TAG, i)``, so
results do not depend on the number of worker processes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
from scipy import stats

from . import _kernels as K
from .driving import sample_generator
from .errors import ParameterError, RangeError, ResourceError
from .fitting import SlopeFit, column_stats, loglog_slope
from .parallel import map_ranges
from .spectra import exponents_from_lambda, exponents_from_r, forward_exponents, rho_of_beta, spectrum_params

TAG_MOMENT = 101
TAG_COUNT = 102
TAG_REVERSE_MART = 103
TAG_FORWARD_MART = 104
TAG_THETA = 105
TAG_BETA_HIST = 106

COUNT_N_CAP = 7


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Report:
    def as_dict(self) -> dict:
        return _jsonable(asdict(self))


# ---------------------------------------------------------------- step grids


def capacity_steps(t_end: float, a: float, y0: float, base: float, t_start: float = 0.0,
                   cap: float | None = None) -> np.ndarray:
    """Step lengths covering [t_start, t_end] with dt = base*(y0**2 + 2*a*s).

    The reverse flow started at height y0 has Y_s**2 >= y0**2 + 2*a*s, so every
    step is at most ``base`` times the squared height of the point.  ``cap``
    bounds the individual step length.
    """
    out = []
    s = t_start
    while t_end - s > 1e-12 * max(1.0, t_end):
        d = base * (y0 * y0 + 2.0 * a * s)
        if cap is not None:
            d = min(d, cap)
        if t_end - s < 1.5 * d:
            d = t_end - s
        out.append(d)
        s += d
    return np.array(out, dtype=float)


def _stop_grid(t_grid, a, y0, base):
    """Concatenated capacity steps that land exactly on every time in ``t_grid``."""
    times = np.unique(np.asarray(t_grid, dtype=float))
    steps, stops = [], []
    s, count = 0.0, 0
    for t in times:
        seg = capacity_steps(t, a, y0, base, t_start=s) if t > s else np.empty(0)
        steps.append(seg)
        count += seg.size
        stops.append(count)
        s = t
    return np.concatenate(steps) if steps else np.empty(0), np.array(stops, dtype=np.int64), times


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class MomentEstimate(_Report):
    kappa: float
    lam: float
    t_grid: tuple
    mean: tuple
    stderr: tuple
    fitted_slope: float
    slope_stderr: float
    n_samples: int
    seed: int
    expected_slope: float
    dt: float


def _reverse_logderiv_rows(lo, hi, *, a, step_lists, seed, tag):
    out = np.empty((hi - lo, len(step_lists)))
    for i in range(lo, hi):
        rng = sample_generator(seed, tag, i)
        for m, dts in enumerate(step_lists):
            out[i - lo, m] = K.reverse_logderiv_bm(1j, rng.standard_normal(dts.size), dts, a)
    return out


def sample_log_tip_derivative(kappa: float, t_grid, n_samples: int, seed: int, dt: float = 1e-3,
                              workers: int | None = None, tag: int = TAG_MOMENT) -> np.ndarray:
    """Samples of log|h'_{t^2}(i)|, one row per sample and one column per t.

    Each (sample, t) uses its own Brownian path.  Steps are capacity adapted,
    dt_k = dt * min(1 + 2*a*s_k, t^2), so the relative step never exceeds ``dt``.
    """
    a = 2.0 / kappa
    step_lists = [capacity_steps(t * t, a, 1.0, dt, cap=dt * t * t) for t in t_grid]
    fn = partial(_reverse_logderiv_rows, a=a, step_lists=step_lists, seed=seed, tag=tag)
    return map_ranges(fn, n_samples, workers)


def estimate_moment(kappa: float, lam: float, t_grid=(2, 4, 8, 16, 32), n_samples: int = 20000,
                    master_seed: int = 0, dt: float = 1e-3, workers: int | None = None,
                    n_blocks: int = 20) -> MomentEstimate:
    """Estimate E|f_hat'_{t^2}(i)|^lam on ``t_grid`` and the log-log slope in t.

    The slope estimates -zeta(lam).  Uses the reverse flow, whose derivative at
    time T has the law of |f_hat_T'(i)|.
    """
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    try:
        pt = exponents_from_lambda(kappa, lam)
    except RangeError as exc:
        raise ParameterError(f"lambda: {exc}") from None
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(t < 2) or np.any(t > 64) or np.any(np.diff(t) <= 0):
        raise ParameterError("t_grid must be increasing inside [2, 64] with at least two points")
    if n_samples < 1000:
        raise ParameterError("n_samples must be at least 1000")
    if not 0 < dt <= 1e-2:
        raise ParameterError("dt must lie in (0, 1e-2]")
    if lam == 0:
        values = np.ones((n_samples, t.size))
    else:
        logs = sample_log_tip_derivative(kappa, t, n_samples, master_seed, dt, workers)
        values = np.exp(lam * logs)
    fit, mean, stderr = loglog_slope(t, values, n_blocks)
    if lam == 0:
        fit = SlopeFit(0.0, 0.0, 0.0, fit.n_blocks)
    return MomentEstimate(float(kappa), float(lam), tuple(t.tolist()), tuple(mean.tolist()),
                          tuple(stderr.tolist()), fit.slope, fit.slope_stderr, int(n_samples),
                          int(master_seed), -pt.zeta, float(dt))


# ---------------------------------------------------------------- dyadic counts


@dataclass(frozen=True)
class CountStatistic(_Report):
    kappa: float
    beta: float
    n: int
    s_lower: float
    count: int
    per_sample: tuple
    n_indices: int
    mean: float


@dataclass(frozen=True)
class CountScaling(_Report):
    stats: tuple
    slope: float
    slope_stderr: float
    expected_slope: float
    direction: str
    n_paths: int
    seed: int


def _count_rows(lo, hi, *, a, n_grid, n_max, resolution, coarsening, s_lower, beta, upper, seed):
    out = np.empty((hi - lo, len(n_grid)))
    dt_fine = 4.0 ** -n_max / resolution
    n_fine = 2 * 4 ** n_max * resolution
    for i in range(lo, hi):
        rng = sample_generator(seed, TAG_COUNT, i)
        vals = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n_fine))]) * math.sqrt(dt_fine)
        for m, n in enumerate(n_grid):
            stride = 4 ** (n_max - n) * resolution
            j_lo = max(1, math.ceil(s_lower * 4 ** n))
            logs = K.count_scan(vals, dt_fine, a, stride, j_lo, 2 * 4 ** n, 2.0 ** -n, float(coarsening))
            thr = n * beta * math.log(2.0)
            out[i - lo, m] = np.count_nonzero(logs >= thr) if upper else np.count_nonzero(logs <= thr)
    return out


def estimate_count_scaling(kappa: float, beta: float, n_grid=(3, 4, 5, 6), n_paths: int = 50,
                           master_seed: int = 0, s_lower: float = 1.0, direction: str = "auto",
                           resolution: int = 16, coarsening: float = 16.0, n_cap: int = COUNT_N_CAP,
                           workers: int | None = None) -> CountScaling:
    """Counts N_{n,beta} of dyadic times j*4^-n in [s, 2] with |f_hat'(i 2^-n)| >= 2^(n beta).

    One Brownian path per sample is drawn on the grid 4^-n_max / resolution and
    shared by all n.  Each derivative comes from a reverse flow whose steps are
    whole multiples of that grid, about (height**2)/coarsening long.
    ``direction`` is ``upper`` (>=), ``lower`` (<=) or ``auto`` (upper for
    beta >= beta_#).  The slope of log2 E[N] against n estimates 2 - rho(beta).
    """
    n_grid = tuple(int(n) for n in n_grid)
    if len(n_grid) < 2 or min(n_grid) < 1 or list(n_grid) != sorted(set(n_grid)):
        raise ParameterError("n_grid must be increasing positive integers (at least two)")
    if max(n_grid) > n_cap:
        raise ResourceError(f"n = {max(n_grid)} exceeds the cap {n_cap} (cost grows like 2^(4n))")
    if not 0 < s_lower < 2:
        raise ParameterError("s_lower must lie in (0, 2)")
    if n_paths < 2:
        raise ParameterError("n_paths must be at least 2")
    p = spectrum_params(kappa)
    if direction == "auto":
        direction = "upper" if beta >= p.beta_hash else "lower"
    if direction not in ("upper", "lower"):
        raise ParameterError(f"direction must be upper, lower or auto, got {direction!r}")
    n_max = max(n_grid)
    fn = partial(_count_rows, a=p.a, n_grid=n_grid, n_max=n_max, resolution=int(resolution),
                 coarsening=coarsening, s_lower=s_lower, beta=float(beta),
                 upper=direction == "upper", seed=master_seed)
    counts = map_ranges(fn, n_paths, workers)
    stats_ = []
    for m, n in enumerate(n_grid):
        col = counts[:, m].astype(np.int64)
        n_idx = 2 * 4 ** n - max(1, math.ceil(s_lower * 4 ** n)) + 1
        stats_.append(CountStatistic(float(kappa), float(beta), n, float(s_lower), int(col.sum()),
                                     tuple(col.tolist()), n_idx, math.fsum(col) / n_paths))
    if np.all(counts.mean(axis=0) > 0):
        fit, _, _ = loglog_slope(2.0 ** np.array(n_grid), counts, n_blocks=n_paths)
        slope, err = fit.slope, fit.slope_stderr
    else:
        slope, err = math.nan, math.nan
    expected = 2.0 - rho_of_beta(kappa, beta) if beta > -1 else 2.0
    return CountScaling(tuple(stats_), slope, err, expected, direction, int(n_paths), int(master_seed))


# ---------------------------------------------------------------- martingales


@dataclass(frozen=True)
class FlatnessReport(_Report):
    name: str
    params: dict
    grid: tuple
    mean: tuple
    stderr: tuple
    initial: float
    max_z: float
    n_samples: int
    seed: int
    extra: dict

    @property
    def flat(self) -> bool:
        return self.max_z <= 3.0


def _flatness(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Means, standard errors, and the largest |mean(t) - mean(t0)| over the
    standard error of the paired difference M_t - M_t0."""
    mean, stderr = column_stats(values)
    diff_mean, diff_err = column_stats(values - values[:, :1])
    z = 0.0
    for dm, de in zip(diff_mean[1:], diff_err[1:]):
        if de > 0:
            z = max(z, abs(dm) / de)
        elif dm != 0:
            z = math.inf
    return mean, stderr, z


def _reverse_mart_rows(lo, hi, *, z0, a, steps, stops, lam, zeta, r, seed):
    out = np.empty((hi - lo, stops.size))
    for i in range(lo, hi):
        rng = sample_generator(seed, TAG_REVERSE_MART, i)
        u = np.concatenate([[0.0], np.cumsum(np.sqrt(steps) * rng.standard_normal(steps.size))])
        out[i - lo] = K.reverse_martingale_at(z0, u, steps, a, lam, zeta, r, stops)
    return out


def reverse_martingale_test(kappa: float, r: float, t_grid=(0.0, 1.0, 4.0), delta: float = 1.0,
                            n_samples: int = 10000, seed: int = 0, dt: float = 1e-3,
                            workers: int | None = None) -> FlatnessReport:
    """Mean of |h_t'(z)|^lam Y_t^zeta (sin arg Z_t)^-r for the reverse flow from z = i*delta.

    The first grid time is the reference; ``max_z`` is the largest
    |mean(t) - mean(t0)| in units of the paired standard error.
    """
    try:
        pt = exponents_from_r(kappa, r)
    except RangeError as exc:
        raise ParameterError(f"r: {exc}") from None
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    if n_samples < 2:
        raise ParameterError("n_samples must be at least 2")
    a = 2.0 / kappa
    steps, stops, times = _stop_grid(t_grid, a, delta, dt)
    if times[0] < 0:
        raise ParameterError("t_grid must be nonnegative")
    fn = partial(_reverse_mart_rows, z0=1j * delta, a=a, steps=steps, stops=stops,
                 lam=pt.lam, zeta=pt.zeta, r=pt.r, seed=seed)
    vals = map_ranges(fn, n_samples, workers)
    initial = delta ** pt.zeta
    mean, stderr, z = _flatness(vals)
    return FlatnessReport("reverse", {"kappa": kappa, "r": r, "lambda": pt.lam, "zeta": pt.zeta,
                                      "delta": delta, "dt": dt},
                          tuple(times.tolist()), tuple(mean.tolist()), tuple(stderr.tolist()),
                          initial, z, int(n_samples), int(seed), {"n_steps": int(steps.size)})


def _forward_mart_rows(lo, hi, *, z, base, t_max, a, r, lam, xi, thresholds, seed, max_len):
    m = thresholds.size
    out = np.empty((hi - lo, 2 * m + 1))
    for i in range(lo, hi):
        length = 1 << 12
        while True:
            rng = sample_generator(seed, TAG_FORWARD_MART, i)
            vals, hit, complete = K.forward_martingale_kernel(z, rng.standard_normal(length), base, t_max,
                                                              a, r, lam, xi, thresholds)
            if complete or length >= max_len:
                break
            length *= 2
        out[i - lo, :m] = vals
        out[i - lo, m:2 * m] = hit
        out[i - lo, 2 * m] = complete
    return out


def forward_martingale_test(kappa: float, u: float, z=1j, s_grid=(0.0, 0.5, 1.0, 1.5, 2.0),
                            n_samples: int = 10000, seed: int = 0, t_max: float = 1.0,
                            base: float = 1e-3, workers: int | None = None) -> FlatnessReport:
    """Mean of M_{t_max ^ tau_s} for M = S^-r Upsilon^(xi+r) Delta^(lam+r) and
    tau_s the first time Upsilon <= e^(-2 a s).

    The driving is Brownian with steps base * |Z_t|**2, Z_t = g_t(z) - V_t, so
    each step moves g_t(z) by a small fraction of its distance to V_t.
    """
    if not kappa < 8:
        raise ParameterError("the forward martingale needs kappa < 8")
    fe = forward_exponents(kappa, u)
    z = complex(z)
    if not z.imag > 0:
        raise ParameterError("z must lie in the upper half plane")
    s = np.asarray(s_grid, dtype=float)
    if s.size < 1 or np.any(s < 0) or np.any(np.diff(s) <= 0):
        raise ParameterError("s_grid must be increasing and nonnegative")
    a = 2.0 / kappa
    thresholds = np.exp(-2.0 * a * s)
    fn = partial(_forward_mart_rows, z=z, base=base, t_max=t_max, a=a, r=fe.r, lam=fe.lam, xi=fe.xi,
                 thresholds=thresholds, seed=seed, max_len=1 << 24)
    rows = map_ranges(fn, n_samples, workers)
    m = s.size
    vals, hits, complete = rows[:, :m], rows[:, m:2 * m], rows[:, 2 * m]
    m0 = (z.imag / abs(z)) ** (-fe.r) * z.imag ** (fe.xi + fe.r)
    mean, stderr = column_stats(vals)
    zmax = 0.0
    for mu, se in zip(mean, stderr):
        if se > 0:
            zmax = max(zmax, abs(mu - m0) / se)
        elif mu != m0 and abs(mu - m0) > 1e-12 * abs(m0):
            zmax = math.inf
    return FlatnessReport("forward", {"kappa": kappa, "u": u, "z": [z.real, z.imag], "r": fe.r,
                                      "lambda": fe.lam, "xi": fe.xi, "t_max": t_max, "base": base},
                          tuple(s.tolist()), tuple(mean.tolist()), tuple(stderr.tolist()), m0, zmax,
                          int(n_samples), int(seed),
                          {"stopped_fraction": hits.mean(axis=0).tolist(),
                           "incomplete": int(np.count_nonzero(complete == 0))})


# ---------------------------------------------------------------- beta histogram


@dataclass(frozen=True)
class BetaHistogram(_Report):
    kappa: float
    t: float
    bin_left: tuple
    bin_right: tuple
    count: tuple
    rate: tuple
    rho: tuple
    n_samples: int
    seed: int
    driver: str


def beta_histogram(kappa: float, t: float, n_samples: int = 10000, seed: int = 0, bins=None,
                   driver: str = "brownian", dt: float = 1e-3, workers: int | None = None) -> BetaHistogram:
    """Histogram of b = log|f_hat'_{t^2}(i)|/log t with the empirical rate
    -log P(b in bin)/log t next to rho at the bin centre."""
    if not 4 <= t <= 64:
        raise ParameterError("t must lie in [4, 64]")
    p = spectrum_params(kappa)
    if bins is None:
        bins = np.linspace(max(-1.5, p.beta_minus - 0.3), p.beta_plus + 0.3, 25)
    bins = np.asarray(bins, dtype=float)
    if driver == "brownian":
        logs = sample_log_tip_derivative(kappa, [t], n_samples, seed, dt, workers, tag=TAG_BETA_HIST)[:, 0]
    elif driver == "constant":
        # U = 0: h_T(i) = i sqrt(1 + 2aT), |h_T'(i)| = (1 + 2aT)^-1/2
        logs = np.full(n_samples, -0.5 * math.log1p(2.0 * p.a * t * t))
    else:
        raise ParameterError(f"driver must be brownian or constant, got {driver!r}")
    b = logs / math.log(t)
    counts, _ = np.histogram(b, bins)
    with np.errstate(divide="ignore"):
        rate = -np.log(counts / n_samples) / math.log(t)
    centers = 0.5 * (bins[:-1] + bins[1:])
    rho = np.array([rho_of_beta(kappa, c) if c > -1 else math.nan for c in centers])
    return BetaHistogram(float(kappa), float(t), tuple(bins[:-1].tolist()), tuple(bins[1:].tolist()),
                         tuple(int(c) for c in counts), tuple(rate.tolist()), tuple(rho.tolist()),
                         int(n_samples), int(seed), driver)


# ---------------------------------------------------------------- radial SDE


@dataclass(frozen=True)
class ThetaReport(_Report):
    kappa: float
    u: float
    drift: float
    t_max: float
    dt: float
    chi2: float
    p_value: float
    bin_counts: tuple
    theta_mean: float
    checkpoint_times: tuple
    sin_r_mean: tuple
    sin_r_stderr: tuple
    guard_steps: int
    n_samples: int
    seed: int


def sin_power_cdf(theta, power: float):
    """CDF of the density proportional to sin(theta)**power on (0, pi).

    With x = (1 - cos theta)/2 the law is Beta((power+1)/2, (power+1)/2).
    """
    x = (1.0 - np.cos(theta)) / 2.0
    c = (power + 1.0) / 2.0
    return stats.beta.cdf(x, c, c)


def _theta_rows(lo, hi, *, theta0, drift, dt, n_steps, checkpoints, r, seed):
    out = np.empty((hi - lo, checkpoints.size + 2))
    for i in range(lo, hi):
        rng = sample_generator(seed, TAG_THETA, i)
        th, sr, guard = K.theta_em_kernel(theta0, drift, dt, rng.standard_normal(n_steps), checkpoints, r)
        out[i - lo, 0] = th
        out[i - lo, 1:-1] = sr
        out[i - lo, -1] = guard
    return out


def radial_theta_simulate(kappa: float, u: float, theta0: float = math.pi / 2, t_max: float = 5.0,
                          n_samples: int = 10000, seed: int = 0, dt: float = 1e-3, n_bins: int = 20,
                          n_checkpoints: int = 5, workers: int | None = None) -> ThetaReport:
    """Euler-Maruyama for d(Theta) = (1 - 2a - r) cot(Theta) dt + dW.

    The end-time histogram is compared with the invariant density
    proportional to sin^(2(1-2a-r)) by a chi-square test on bins of equal
    probability.  Also reports E[sin(Theta_t)^r] at evenly spaced times.
    """
    fe = forward_exponents(kappa, u)
    a = 2.0 / kappa
    drift = 1.0 - 2.0 * a - fe.r
    if not drift > 0.5:
        raise ParameterError(f"drift 1 - 2a - r = {drift} must exceed 1/2")
    if not 0 < theta0 < math.pi:
        raise ParameterError("theta0 must lie in (0, pi)")
    n_steps = int(round(t_max / dt))
    if n_steps < 1:
        raise ParameterError("t_max must be at least dt")
    checkpoints = np.unique(np.linspace(0, n_steps, n_checkpoints + 1).round().astype(np.int64)[1:])
    fn = partial(_theta_rows, theta0=float(theta0), drift=drift, dt=float(dt), n_steps=n_steps,
                 checkpoints=checkpoints, r=fe.r, seed=seed)
    rows = map_ranges(fn, n_samples, workers)
    theta = rows[:, 0]
    pit = sin_power_cdf(theta, 2.0 * drift)
    counts, _ = np.histogram(pit, np.linspace(0.0, 1.0, n_bins + 1))
    chi2, pval = stats.chisquare(counts)
    sm, se = column_stats(rows[:, 1:-1])
    return ThetaReport(float(kappa), float(u), drift, float(t_max), float(dt), float(chi2), float(pval),
                       tuple(int(c) for c in counts), math.fsum(theta) / theta.size,
                       tuple((checkpoints * dt).tolist()), tuple(sm.tolist()), tuple(se.tolist()),
                       int(rows[:, -1].sum()), int(n_samples), int(seed))
