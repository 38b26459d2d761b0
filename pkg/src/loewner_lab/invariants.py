"""Deterministic invariant suites: exact identities of the exponent algebra,
flow roundtrips, and the distortion inequalities on a corpus of chains.

Each suite returns an ``InvariantResult`` counting checks and violations;
``worst`` is the largest error (identities) or the largest ratio lhs/rhs
(inequalities, pass when <= 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import core, spectra
from .core import SlitMapChain
from .driving import deterministic_driver, sample_brownian, sample_generator

KAPPAS = (0.5, 2.0, 8.0 / 3.0, 4.0, 6.0, 8.0 - 1e-6)
CORPUS_KAPPAS = (0.5, 2.0, 8.0 / 3.0, 4.0, 6.0)
# rounding allowance for inequalities that can hold with equality
INEQ_SLACK = 1e-12
TAG_CORPUS = 201
TAG_ROUNDTRIP = 202


@dataclass
class InvariantResult:
    name: str
    checks: int = 0
    violations: int = 0
    worst: float = 0.0
    tol: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.checks > 0

    def add_errors(self, err, tol=None):
        """Record absolute/relative errors against ``tol``."""
        err = np.asarray(err, dtype=float).ravel()
        tol = self.tol if tol is None else tol
        self.checks += err.size
        self.violations += int(np.count_nonzero(~(err <= tol)))
        if err.size:
            self.worst = max(self.worst, float(np.max(err)))

    def add_ratios(self, lhs, rhs):
        """Record inequalities lhs <= rhs with a relative rounding slack."""
        lhs = np.asarray(lhs, dtype=float).ravel()
        rhs = np.asarray(rhs, dtype=float).ravel()
        self.checks += lhs.size
        self.violations += int(np.count_nonzero(~(lhs <= rhs * (1.0 + INEQ_SLACK))))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
        if ratio.size:
            self.worst = max(self.worst, float(np.max(ratio)))


def _rel(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    return np.abs(x - y) / np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))


# ---------------------------------------------------------------- exponent algebra


def exponent_identities(kappas=KAPPAS, n: int = 2001, tol: float = 1e-10) -> InvariantResult:
    """All closed-form identities of the spectrum algebra on dense grids.

    Errors are measured relative to max(1, |value|).  The roundtrip r(lambda(r))
    runs in extended precision: near r_c, r(lambda) has condition number
    4/(kappa (r_c - r)), which float64 cannot absorb at r_c - r = 1e-6.
    """
    res = InvariantResult("exponent_identities", tol=tol)
    for k in kappas:
        p = spectra.spectrum_params(k)
        errs = {}
        r = np.linspace(-5.0, p.r_c - 1e-6, n)
        lam = spectra.lambda_of_r(k, r)
        zeta = spectra.zeta_of_r(k, r)
        beta = spectra.beta_of_r(k, r)
        rho = spectra.rho_of_r(k, r)
        errs["rho=zeta+lambda*beta"] = _rel(rho, zeta + lam * beta)
        errs["rho(beta(r))"] = _rel(rho, spectra.rho_of_beta(k, beta))
        errs["zeta=lambda-kr/4"] = _rel(zeta, lam - k * r / 4.0)
        q = p.r_c - r
        errs["(1-2q)/(1+2q)=beta"] = _rel((1.0 - 2.0 * q) / (1.0 + 2.0 * q), beta)
        rl = np.linspace(-5.0, p.r_c - 1e-6, n, dtype=np.longdouble)
        back = spectra.r_of_lambda(np.longdouble(k), spectra.lambda_of_r(np.longdouble(k), rl))
        errs["r(lambda(r))=r"] = _rel(back, rl).astype(float)
        errs["rho(beta_pm)=2"] = _rel(spectra.rho_of_beta(k, np.array([p.beta_minus, p.beta_plus])), 2.0)
        errs["rho(beta_hash)=0"] = np.abs([spectra.rho_of_beta(k, p.beta_hash)])
        errs["d(beta_star)=d"] = _rel(spectra.dims_of_beta(k, p.beta_star)[1], p.d)
        errs["d_hat(beta_hash)=1"] = _rel(spectra.dims_of_beta(k, p.beta_hash)[0], 1.0)
        b = np.linspace(p.beta_minus, p.beta_plus, n)
        alpha = 1.0 / (1.0 - b)
        errs["F_tip(alpha)=d_{1-1/alpha}"] = _rel(spectra.f_tip(k, alpha), spectra.dims_of_beta(k, b)[1])
        errs["F_tip(alpha_pm)=0"] = np.abs(spectra.f_tip(k, np.array([p.alpha_minus, p.alpha_plus])))
        if k < 8 and math.isfinite(p.alpha_star):
            u = 0.5 + np.geomspace(1e-6, p.alpha_star - 0.5, n)
            u[-1] = p.alpha_star
            errs["2-rho_fwd(u)=F_tip(u)"] = _rel(2.0 - spectra.rho_forward(k, u), spectra.f_tip(k, u))
        errs["holder=(1-beta_+)/2"] = _rel(p.holder_exponent, (1.0 - p.beta_plus) / 2.0)
        for name, e in errs.items():
            res.add_errors(e)
            key = f"{name}"
            res.detail[key] = max(res.detail.get(key, 0.0), float(np.max(e)))
    return res


def duality(kappas=KAPPAS, n: int = 1000, h: float = 1e-5, tol: float = 1e-6) -> InvariantResult:
    """d zeta/d lambda = -beta and d rho/d beta = lambda by central differences."""
    res = InvariantResult("duality", tol=tol)
    for k in kappas:
        p = spectra.spectrum_params(k)
        lam_lo = spectra.lambda_of_r(k, -5.0)
        lam = np.linspace(lam_lo, p.lambda_c - 0.05, n + 2)[1:-1]
        dz = (spectra.zeta_of_lambda(k, lam + h) - spectra.zeta_of_lambda(k, lam - h)) / (2 * h)
        beta = spectra.beta_of_r(k, spectra.r_of_lambda(k, lam))
        e1 = np.abs(dz + beta)
        lo = max(p.beta_minus, -0.95)
        b = np.linspace(lo, min(p.beta_plus, 1.0 - 1e-3), n + 2)[1:-1]
        dr = (spectra.rho_of_beta(k, b + h) - spectra.rho_of_beta(k, b - h)) / (2 * h)
        e2 = _rel(dr, spectra.lambda_of_beta(k, b))
        res.add_errors(e1)
        res.add_errors(e2)
        res.detail[f"kappa={k:g}"] = [float(e1.max()), float(e2.max())]
    return res


# ---------------------------------------------------------------- flows


def slit_roundtrip(n: int = 100_000, seed: int = 0, tol: float = 1e-12) -> InvariantResult:
    """slit_forward(slit_reverse(z)) = z for random (z, u, a, dt).

    Domain: x, u in [-4, 4], y log-uniform in [1e-2, 10], a in [1/4, 4],
    dt log-uniform in [1e-8, 1e-2]; error |delta|/|z|.
    """
    rng = sample_generator(seed, TAG_ROUNDTRIP, 0)
    x = rng.uniform(-4, 4, n)
    y = 10.0 ** rng.uniform(-2, 1, n)
    u = rng.uniform(-4, 4, n)
    a = rng.uniform(0.25, 4.0, n)
    dt = 10.0 ** rng.uniform(-8, -2, n)
    z = x + 1j * y
    back = core.slit_forward(core.slit_reverse(z, u, a, dt), u, a, dt)
    res = InvariantResult("slit_roundtrip", tol=tol)
    res.add_errors(np.abs(back - z) / np.abs(z))
    return res


def _random_chain(i: int, seed: int, n_steps: int = 1000, t_max: float = 1.0) -> SlitMapChain:
    k = CORPUS_KAPPAS[i % len(CORPUS_KAPPAS)]
    return sample_brownian(k, n_steps, t_max / n_steps, (seed << 20) + i).to_chain()


def chain_roundtrip(n_chains: int = 100, seed: int = 0, tol: float = 1e-9) -> InvariantResult:
    """forward_flow(inverse_map(w)) = w on random chains and points."""
    res = InvariantResult("chain_roundtrip", tol=tol)
    for i in range(n_chains):
        ch = _random_chain(i, seed)
        rng = sample_generator(seed, TAG_ROUNDTRIP, 1, i)
        w = rng.uniform(-2, 2, 8) + 1j * rng.uniform(0.1, 2.0, 8)
        f, _ = K.inverse_chain_many(w, ch.v, ch.dt, ch.a, ch.n_steps)
        g, _, alive = K.forward_chain_many(f, ch.v, ch.dt, ch.a, 0.0)
        res.add_errors(np.where(alive, np.abs(g - w) / np.abs(w), np.inf))
    return res


def reverse_identity(n_chains: int = 100, seed: int = 0, tol: float = 1e-9) -> InvariantResult:
    """h_{T,T}(z) + V_T = f_hat_T(z) on discretized Brownian paths."""
    res = InvariantResult("reverse_identity", tol=tol)
    for i in range(n_chains):
        k = CORPUS_KAPPAS[i % len(CORPUS_KAPPAS)]
        path = sample_brownian(k, 1000, 1e-3, (seed << 20) + i)
        ch = path.to_chain()
        rng = sample_generator(seed, TAG_ROUNDTRIP, 2, i)
        m = int(rng.integers(1, path.n_steps + 1))
        z = complex(rng.uniform(-1, 1), rng.uniform(0.01, 2.0))
        T = m * path.dt
        rev = core.reverse_flow_tip(path, T, z)
        fwd = core.inverse_map(ch, z + path.values[m], m)
        res.add_errors(_rel(rev.value + path.values[m], fwd.value))
        res.add_errors(_rel(rev.deriv, fwd.deriv))
    return res


# ---------------------------------------------------------------- inequality corpus


def chain_corpus(n_chains: int = 1000, n_steps: int = 256, seed: int = 0) -> list[SlitMapChain]:
    """Brownian chains over the corpus kappas plus a few deterministic drivers."""
    out = []
    dt = 1.0 / n_steps
    det = [deterministic_driver("constant", dt, 1.0, 2.0),
           deterministic_driver("linear", dt, 1.0, 2.0, slope=3.0),
           deterministic_driver("sine", dt, 1.0, 4.0, amplitude=0.5, omega=7.0)]
    out.extend(p.to_chain() for p in det)
    for i in range(n_chains - len(det)):
        k = CORPUS_KAPPAS[i % len(CORPUS_KAPPAS)]
        out.append(sample_brownian(k, n_steps, dt, (seed << 24) + 7919 * i + 1).to_chain())
    return out


_Y = 2.0 ** -np.arange(0, 9, 2)  # 1, 1/4, ..., 2^-8
_X = np.array([-4.0, -2.0, -1.0, -0.25, 0.25, 1.0, 2.0, 4.0])
_R = np.array([1.25, 1.5, 2.0, 3.0, 4.0])


def _koebe_one(ch: SlitMapChain, n: int, res: dict):
    vt = ch.driving_at(n)
    y = _Y[:, None]
    pts = np.concatenate([(vt + 1j * _Y), (vt + y * (_X[None, :] + 1j)).ravel(), (vt + 1j * y * _R[None, :]).ravel()])
    h, d = K.inverse_chain_many(pts.astype(complex), ch.v, ch.dt, ch.a, n)
    ny, nx, nr = _Y.size, _X.size, _R.size
    h0, d0 = h[:ny, None], np.abs(d[:ny, None])
    hx = h[ny:ny + ny * nx].reshape(ny, nx)
    dx = np.abs(d[ny:ny + ny * nx]).reshape(ny, nx)
    hr = h[ny + ny * nx:].reshape(ny, nr)
    dr = np.abs(d[ny + ny * nx:]).reshape(ny, nr)
    c = _X ** 2 + 4.0
    res["koebe_x_deriv"].add_ratios(d0 / c ** 2, dx)
    res["koebe_x_deriv"].add_ratios(dx, c ** 2 * d0)
    res["koebe_x_growth"].add_ratios(np.abs(hx - h0), c ** 1.5 * np.abs(_X) / 2.0 * y * d0)
    res["koebe_r_deriv"].add_ratios(d0 / _R ** 3, dr)
    res["koebe_r_deriv"].add_ratios(dr, _R * d0)
    res["koebe_r_growth"].add_ratios(np.abs(hr - h0), (_R ** 2 - 1.0) / 2.0 * y * d0)
    t = ch.time_at(n)
    res["beurling_upper"].add_ratios(d0[:, 0], math.sqrt(2 * ch.a * t + 1.0) / _Y)
    return float(np.min(d0[:, 0] * math.sqrt(2 * ch.a * t + 1.0) / _Y))


_Z3 = np.array([x + 1j * y for y in (0.125, 0.25, 0.5) for x in (-1.0, 0.0, 0.5)])


def _stability_one(ch: SlitMapChain, res: InvariantResult):
    """e^{-5as/y^2} |f_t'(z)| <= |f_{t+s}'(z)| <= e^{5as/y^2} |f_t'(z)|, s <= y^2."""
    dt = float(ch.dt[0])
    for z in _Z3:
        y = z.imag
        m_max = max(1, int(y * y / dt))
        for k in (0, ch.n_steps // 4, ch.n_steps // 2):
            ms = np.unique([1, max(1, m_max // 2), m_max])
            ms = ms[k + ms <= ch.n_steps]
            if ms.size == 0:
                continue
            ns = np.concatenate([[k], k + ms]).astype(np.int64)
            _, d = K.inverse_chain_ragged(np.full(ns.size, z), ns, ch.v, ch.dt, ch.a)
            d = np.abs(d)
            s = ms * dt
            bound = np.exp(5 * ch.a * s / (y * y))
            res.add_ratios(d[1:], bound * d[0])
            res.add_ratios(d[0], bound * d[1:])


def _dyadic_one(ch: SlitMapChain, n: int, res_bracket: InvariantResult, res_vest: InvariantResult):
    """(2/3) v(2^-m) <= sum_{j>=m} 2^-j |h'(i 2^-j)| <= (8/3) v(2^-m) and v(y) >= y|h'(iy)|/2."""
    ms = np.arange(0, 9)
    js = np.arange(0, 9 + 60)
    _, d = core.shifted_inverse(ch, 2.0 ** -js, n)
    terms = 2.0 ** -js * np.abs(d)
    tail = np.cumsum(terms[::-1])[::-1][ms]
    v = core.arc_length(ch, 2.0 ** -ms, n)
    res_bracket.add_ratios(2.0 / 3.0 * v, tail)
    res_bracket.add_ratios(tail, 8.0 / 3.0 * v)
    res_vest.add_ratios(2.0 ** -ms * np.abs(d[ms]) / 2.0, v)


def inequality_suite(n_chains: int = 1000, n_steps: int = 256, seed: int = 0) -> list[InvariantResult]:
    """Koebe bounds, derivative time-stability, dyadic bracketing and the
    Beurling upper bound on a deterministic corpus of chains."""
    names = ["koebe_x_deriv", "koebe_x_growth", "koebe_r_deriv", "koebe_r_growth", "beurling_upper"]
    res = {k: InvariantResult(k) for k in names}
    stab = InvariantResult("time_stability")
    bracket = InvariantResult("dyadic_bracketing")
    vest = InvariantResult("arc_length_lower")
    c_min = math.inf
    for ch in chain_corpus(n_chains, n_steps, seed):
        for n in (ch.n_steps // 2, ch.n_steps):
            c_min = min(c_min, _koebe_one(ch, n, res))
        _stability_one(ch, stab)
        _dyadic_one(ch, ch.n_steps, bracket, vest)
    res["beurling_upper"].detail["fitted_lower_c"] = c_min
    return [*res.values(), stab, bracket, vest]
