"""Closed-form exponent algebra for the SLE tip multifractal spectrum.

Parametrizations used throughout (a = 2/kappa, standard Brownian driving):

* ``r`` (< r_c) is the master parameter; ``lambda``, ``zeta``, ``beta``,
  ``rho`` and ``q`` are functions of it.
* ``beta`` is the tip exponent, |f_hat_t'(iy)| ~ y^{-beta}.
* ``alpha = 1/(1 - beta)`` is the harmonic-measure exponent.

Most quantities are computed two ways (directly in ``beta`` and through the
``r`` parametrization) and cross-checked, since both forms are in use.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ParameterError, RangeError

_CROSS_CHECK_RTOL = 1e-9
_EPS = np.finfo(float).eps


def _check_kappa(kappa):
    if not kappa > 0 or not math.isfinite(kappa):
        raise ParameterError(f"kappa must be positive, got {kappa}")


def _agree(x, y, what, cond=1.0):
    """Cross-check two evaluations; ``cond`` scales the allowance for forms
    that lose digits to cancellation."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
    tol = _CROSS_CHECK_RTOL * scale + 64.0 * _EPS * np.asarray(cond, float)
    if np.any(np.abs(x - y) > tol):
        raise ArithmeticError(f"internal cross-check failed for {what}")


def _beta_pm(kappa):
    """(beta_-, beta_+, 1 - beta_+) in cancellation-free form.

    12 + k -+ 4 sqrt(8 + k) = (k + 4)^2 / (12 + k +- 4 sqrt(8 + k)) and
    1 - beta_+ = (k - 8)^2 / ((24 + k + 8 sqrt(8 + k)) (12 + k - 4 sqrt(8 + k))).
    """
    root = np.sqrt(8.0 + kappa)
    k4 = (kappa + 4.0) ** 2
    d_plus = k4 / (12.0 + kappa + 4.0 * root)
    beta_minus = -1.0 + kappa / (12.0 + kappa + 4.0 * root)
    w_plus = (kappa - 8.0) ** 2 / ((24.0 + kappa + 8.0 * root) * d_plus)
    return beta_minus, 1.0 - w_plus, w_plus


@dataclass(frozen=True)
class SpectrumParams:
    kappa: float
    a: float
    d: float
    r_c: float
    r_star: float
    lambda_c: float
    beta_hash: float
    beta_star: float
    beta_plus: float
    beta_minus: float
    r_plus: float
    r_minus: float
    alpha_minus: float
    alpha_star: float
    alpha_plus: float
    holder_exponent: float

    def as_dict(self) -> dict:
        return asdict(self)


def spectrum_params(kappa: float) -> SpectrumParams:
    _check_kappa(kappa)
    k = float(kappa)
    root = math.sqrt(8.0 + k)
    beta_minus, beta_plus, w_plus = (float(x) for x in _beta_pm(k))
    _agree(beta_plus, -1.0 + k / (12.0 + k - 4.0 * root), "beta_+", cond=k)
    beta_star = k / max(4.0, k - 4.0) - 1.0
    one_minus_star = 2.0 - k / 4.0 if k <= 8 else (k - 8.0) / (k - 4.0)
    return SpectrumParams(
        kappa=k,
        a=2.0 / k,
        d=min(1.0 + k / 8.0, 2.0),
        r_c=0.5 + 4.0 / k,
        r_star=min(1.0, 8.0 / k),
        lambda_c=1.0 + 3.0 * k / 32.0 + 2.0 / k,
        beta_hash=k / (k + 4.0) - 1.0,
        beta_star=beta_star,
        beta_plus=beta_plus,
        beta_minus=beta_minus,
        r_plus=4.0 / k * (-2.0 + root),
        r_minus=4.0 / k * (-2.0 - root),
        alpha_minus=1.0 / (1.0 - beta_minus),
        alpha_star=1.0 / one_minus_star if one_minus_star > 0 else math.inf,
        alpha_plus=1.0 / w_plus if w_plus > 0 else math.inf,
        holder_exponent=w_plus / 2.0,
    )


# ------------------------------------------------------------------ r-family


@dataclass(frozen=True)
class ExponentPoint:
    r: float
    lam: float
    zeta: float
    beta: float
    rho: float
    q: float

    def as_dict(self) -> dict:
        return {"r": self.r, "lambda": self.lam, "zeta": self.zeta,
                "beta": self.beta, "rho": self.rho, "q": self.q}


def lambda_of_r(kappa, r):
    return r * (1.0 + kappa / 4.0) - kappa * r * r / 8.0


def zeta_of_r(kappa, r):
    return r - kappa * r * r / 8.0


def beta_of_r(kappa, r):
    return -1.0 + kappa / (4.0 + kappa - kappa * r)


def rho_of_r(kappa, r):
    return kappa ** 2 * r * r / (8.0 * (4.0 + kappa - kappa * r))


def r_of_lambda(kappa, lam):
    """Root of lambda(r) = lam on the increasing branch r < r_c."""
    disc = (4.0 + kappa) ** 2 - 8.0 * lam * kappa
    return (4.0 + kappa - np.sqrt(disc)) / kappa


def r_of_beta(kappa, beta):
    return (4.0 + kappa - kappa / (beta + 1.0)) / kappa


def zeta_of_lambda(kappa, lam):
    return lam + (np.sqrt((4.0 + kappa) ** 2 - 8.0 * lam * kappa) - 4.0 - kappa) / 4.0


def lambda_of_beta(kappa, beta):
    return (4.0 + kappa) ** 2 / (8.0 * kappa) - kappa / (8.0 * (beta + 1.0) ** 2)


def exponents_from_r(kappa: float, r: float) -> ExponentPoint:
    _check_kappa(kappa)
    rc = 0.5 + 4.0 / kappa
    if not r < rc:
        raise RangeError(f"r = {r} must be below r_c = {rc}")
    return _point(kappa, r)


def _point(kappa, r):
    rc = 0.5 + 4.0 / kappa
    lam = lambda_of_r(kappa, r)
    zeta = zeta_of_r(kappa, r)
    beta = beta_of_r(kappa, r)
    rho = zeta + lam * beta
    _agree(rho, rho_of_r(kappa, r), "rho(r)")
    _agree(zeta, lam - kappa * r / 4.0, "zeta(r)")
    return ExponentPoint(float(r), float(lam), float(zeta), float(beta), float(rho), float(rc - r))


def exponents_from_lambda(kappa: float, lam: float) -> ExponentPoint:
    _check_kappa(kappa)
    lc = 1.0 + 3.0 * kappa / 32.0 + 2.0 / kappa
    if not lam < lc:
        raise RangeError(f"lambda = {lam} must be below lambda_c = {lc}")
    pt = exponents_from_r(kappa, float(r_of_lambda(kappa, lam)))
    _agree(pt.zeta, zeta_of_lambda(kappa, lam), "zeta(lambda)")
    return pt


def exponents_from_beta(kappa: float, beta: float) -> ExponentPoint:
    _check_kappa(kappa)
    if not -1.0 < beta <= 1.0:
        raise RangeError(f"beta = {beta} must lie in (-1, 1] for the bijective branch")
    # beta = 1 is the r = r_c endpoint of the branch
    r = 0.5 + 4.0 / kappa if beta == 1.0 else float(r_of_beta(kappa, beta))
    pt = _point(kappa, r)
    _agree(pt.lam, lambda_of_beta(kappa, beta), "lambda(beta)")
    _agree(pt.rho, rho_of_beta(kappa, beta), "rho(beta)")
    return pt


# ------------------------------------------------------------------ beta-family


def rho_of_beta(kappa: float, beta):
    """rho(beta) = kappa/(8(beta+1)) * [((kappa+4)/kappa)(beta+1) - 1]^2."""
    _check_kappa(kappa)
    b = np.asarray(beta, dtype=float)
    if np.any(b <= -1.0):
        raise DomainError("rho(beta) needs beta > -1")
    out = kappa / (8.0 * (b + 1.0)) * (((kappa + 4.0) / kappa) * (b + 1.0) - 1.0) ** 2
    return float(out) if out.ndim == 0 else out


def _two_minus_rho_factors(kappa, b):
    """(k+4)^2 (beta - beta_-) / (8 k (1 + beta)) and 1 - beta_+, so that
    2 - rho(beta) = first * ((1 - beta) - (1 - beta_+)) without cancellation."""
    beta_minus, _, w_plus = _beta_pm(kappa)
    return (kappa + 4.0) ** 2 * (b - beta_minus) / (8.0 * kappa * (1.0 + b)), w_plus


def dims_of_beta(kappa: float, beta, check_range: bool = True):
    """(d_hat_beta, d_beta) = ((2 - rho)/2, (2 - rho)/(1 - beta)).

    Evaluated in the factored form 2 - rho = c (beta - beta_-)(beta_+ - beta),
    which stays accurate near beta_+ = 1 (kappa close to 8).  At beta = 1
    (only admissible for kappa = 8) d_beta is the limit value, equal to 2.
    With ``check_range`` the exponent must lie in [beta_-, beta_+].
    """
    p = spectrum_params(kappa)
    b = np.asarray(beta, dtype=float)
    if check_range:
        tol = 1e-12
        if np.any(b < p.beta_minus - tol) or np.any(b > p.beta_plus + tol):
            raise RangeError(f"beta outside [beta_-, beta_+] = [{p.beta_minus}, {p.beta_plus}]")
    if np.any(b > 1.0) or np.any(b <= -1.0):
        raise RangeError("beta must lie in (-1, 1]")
    front, w_plus = _two_minus_rho_factors(kappa, b)
    gap = 1.0 - b
    if np.any((gap == 0) & (w_plus > 0)):
        raise RangeError("d_beta at beta = 1 needs kappa = 8")
    dhat = front * (gap - w_plus) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gap == 0, 1.0, 1.0 - w_plus / gap)
        d = front * ratio
        rho = np.asarray(rho_of_beta(kappa, b))
        naive = np.where(gap == 0, d, (2.0 - rho) / gap)
        _agree(d, naive, "d_beta", cond=(2.0 + rho) / np.where(gap == 0, 1.0, gap))
    _agree(2.0 * dhat, 2.0 - rho, "d_hat")
    if b.ndim == 0:
        return float(dhat), float(d)
    return dhat, d


def f_tip(kappa: float, alpha):
    """Tip harmonic-measure spectrum F_tip(alpha) = d_{1 - 1/alpha}.

    Uses the rearrangement
    -alpha (k-8)^2/(16k) + (64 + 32k + 3k^2)/(32k) - k/(32(2 alpha - 1))
    of alpha(1 - 4/k) + (4+k)^2/(8k) - (k/8) alpha^2/(2 alpha - 1), whose
    large terms cancel when alpha is large.
    """
    _check_kappa(kappa)
    al = np.asarray(alpha, dtype=float)
    if np.any(al <= 0.5):
        raise DomainError("F_tip needs alpha > 1/2")
    k = float(kappa)
    out = -al * (k - 8.0) ** 2 / (16.0 * k) + (64.0 + 32.0 * k + 3.0 * k * k) / (32.0 * k) \
        - k / (32.0 * (2.0 * al - 1.0))
    with np.errstate(over="ignore", invalid="ignore"):
        shown = al * (1.0 - 4.0 / k) + (4.0 + k) ** 2 / (8.0 * k) - k / 8.0 * al * al / (2.0 * al - 1.0)
    fin = np.isfinite(al)
    _agree(np.where(fin, out, 0.0), np.where(fin, shown, 0.0), "F_tip", cond=np.where(fin, al * (1.0 + k), 0.0))
    return float(out) if out.ndim == 0 else out


def f_bulk(kappa: float, alpha):
    """Conjectured almost-sure bulk spectrum (comparison only, not a theorem)."""
    _check_kappa(kappa)
    al = np.asarray(alpha, dtype=float)
    if np.any(al <= 0.5):
        raise DomainError("F_bulk needs alpha > 1/2")
    c = (4.0 + kappa) ** 2 / (8.0 * kappa)
    out = al + c - c * al * al / (2.0 * al - 1.0)
    return float(out) if out.ndim == 0 else out


F_BULK_STATUS = "conjectural"


# ------------------------------------------------------------------ forward flow exponents


@dataclass(frozen=True)
class ForwardExponents:
    u: float
    r: float
    lam: float
    xi: float
    rho: float

    def as_dict(self) -> dict:
        return {"u": self.u, "r": self.r, "lambda": self.lam, "xi": self.xi, "rho": self.rho}


def _forward_parts(kappa, u):
    a = 2.0 / kappa
    r = 0.5 - 2.0 * a - 1.0 / (4.0 * u - 2.0)
    lam = r * r / (2.0 * a) + r * (1.0 - 1.0 / (2.0 * a))
    xi = r * r / (4.0 * a)
    v = u - 0.5
    # 1/(8a) + 2a - 1 = (k - 8)^2/(16k), written without cancellation
    rho = (kappa - 8.0) ** 2 / (16.0 * kappa) * v + (0.5 - kappa / 16.0) + kappa / (64.0 * v)
    shown = (1.0 / (8.0 * a) + 2.0 * a - 1.0) * v + (0.5 - 1.0 / (8.0 * a)) + 1.0 / (32.0 * a * v)
    _agree(xi, lam / 2.0 - r / 2.0 * (1.0 - 1.0 / (2.0 * a)), "xi", cond=np.abs(lam) + np.abs(r) / a)
    _agree(rho, shown, "rho(u)", cond=v * (kappa + 1.0))
    _agree(rho, -(u - 1.0) * (lam + r) - (r + xi), "rho(u)",
           cond=np.abs(u) * (np.abs(lam) + np.abs(r)) + np.abs(r) + np.abs(xi))
    return r, lam, xi, rho


def _check_forward(kappa, u):
    _check_kappa(kappa)
    if not kappa < 8:
        raise DomainError("the forward-flow exponents need kappa < 8")
    if np.any(np.asarray(u) <= 0.5):
        raise DomainError("u must exceed 1/2")


def forward_exponents(kappa: float, u: float) -> ForwardExponents:
    """Exponents of the forward-flow local martingale
    M = S^{-r} Upsilon^{xi+r} Delta^{lambda+r} indexed by the harmonic exponent u."""
    _check_forward(kappa, u)
    r, lam, xi, rho = _forward_parts(float(kappa), float(u))
    return ForwardExponents(float(u), float(r), float(lam), float(xi), float(rho))


def rho_forward(kappa: float, u):
    """rho(u) for an array of u (same formula as ``forward_exponents``)."""
    _check_forward(kappa, u)
    rho = _forward_parts(float(kappa), np.asarray(u, dtype=float))[3]
    return float(rho) if np.ndim(rho) == 0 else rho


# ------------------------------------------------------------------ tables


ALPHA_CAP = 64.0


def alpha_grid(kappa: float, n: int = 201) -> np.ndarray:
    """Grid on [alpha_-, alpha_+] that contains alpha_* exactly.

    The right half is geometric when alpha_+ is far above alpha_* (kappa near
    8).  For kappa = 8 both are infinite and the grid stops at ALPHA_CAP.
    """
    p = spectrum_params(kappa)
    if not math.isfinite(p.alpha_star):
        return np.geomspace(p.alpha_minus, ALPHA_CAP, n)
    left = np.linspace(p.alpha_minus, p.alpha_star, n // 2 + 1)
    if p.alpha_plus > 10.0 * p.alpha_star:
        right = np.geomspace(p.alpha_star, p.alpha_plus, n - n // 2)
    else:
        right = np.linspace(p.alpha_star, p.alpha_plus, n - n // 2)
    right[-1] = p.alpha_plus
    return np.concatenate([left, right[1:]])


def spectrum_table(kappa: float, n: int = 201) -> dict:
    """Columns alpha, beta, rho, d_hat, d_beta, F_tip, F_bulk over [beta_-, beta_+]."""
    p = spectrum_params(kappa)
    alpha = alpha_grid(kappa, n)
    beta = 1.0 - 1.0 / alpha
    beta[-1] = min(beta[-1], p.beta_plus)
    beta[0] = max(beta[0], p.beta_minus)
    rho = rho_of_beta(kappa, beta)
    dhat, dbeta = dims_of_beta(kappa, beta)
    return {
        "alpha": alpha,
        "beta": beta,
        "rho": rho,
        "d_hat": dhat,
        "d_beta": dbeta,
        "F_tip": f_tip(kappa, alpha),
        "F_bulk": f_bulk(kappa, alpha),
    }


def figure1_curves(kappa_list=(2.0, 4.0, 6.0), n: int = 401) -> list[dict]:
    """(alpha, F_tip) curves of the tip spectrum, one per kappa in (0, 8]."""
    out = []
    for k in kappa_list:
        if not 0 < k <= 8:
            raise DomainError(f"kappa = {k} outside (0, 8]")
        p = spectrum_params(k)
        al = alpha_grid(k, n)
        out.append({"kappa": float(k), "alpha": al, "F_tip": f_tip(k, al),
                    "alpha_star": p.alpha_star, "max_expected": p.d})
    return out
