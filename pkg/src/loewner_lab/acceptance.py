"""The ten acceptance criteria as runnable checks.

``run_criteria`` executes a selection and returns one ``CriterionResult``
per criterion.  A criterion passes when its numerical condition holds and it
finished within its runtime budget.  Levels: ``fast`` runs the deterministic
criteria (1-4 and 10), ``full`` adds the Monte-Carlo ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import estimators as E
from . import invariants as I
from . import spectra
from .driving import deterministic_driver
from .harmonic import estimate_tip_harmonic_measure, slit_mu

FAST = (1, 2, 3, 4, 10)
FULL = tuple(range(1, 11))
LEVELS = {"fast": FAST, "full": FULL}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    limit: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.name}: {_summary(self.detail)} ({self.runtime:.1f}s / {self.limit:g}s)"


def _summary(detail: dict) -> str:
    parts = []
    for k, v in detail.items():
        if isinstance(v, float):
            parts.append(f"{k}={v:.4g}")
        elif isinstance(v, (int, str, bool)):
            parts.append(f"{k}={v}")
    return ", ".join(parts)


def _suite(results) -> tuple[bool, dict]:
    detail = {}
    ok = True
    for r in results:
        ok &= r.passed
        detail[f"{r.name}.violations"] = r.violations
        detail[f"{r.name}.worst"] = r.worst
    return ok, detail


def c1_exponent_algebra(seed: int, workers):
    r = I.exponent_identities(tol=1e-10)
    return r.passed, {"checks": r.checks, "violations": r.violations, "worst": r.worst}


def c2_duality(seed: int, workers):
    r = I.duality(h=1e-5, tol=1e-6)
    return r.passed, {"checks": r.checks, "violations": r.violations, "worst": r.worst}


def c3_flow_exactness(seed: int, workers):
    return _suite([I.slit_roundtrip(100_000, seed, 1e-12), I.chain_roundtrip(100, seed, 1e-9),
                   I.reverse_identity(100, seed, 1e-9)])


def c4_inequalities(seed: int, workers):
    res = I.inequality_suite(1000, 256, seed)
    ok = all(r.passed for r in res)
    detail = {"checks": sum(r.checks for r in res), "violations": sum(r.violations for r in res),
              "worst_ratio": max(r.worst for r in res)}
    return ok, detail


def _moment_ok(m, band):
    tol = max(band, 3.0 * m.slope_stderr)
    return abs(m.fitted_slope - m.expected_slope) <= tol, tol


def c5_moments(seed: int, workers):
    m1 = E.estimate_moment(8.0 / 3.0, 4.0 / 3.0, n_samples=20000, master_seed=seed, dt=1e-3, workers=workers)
    m2 = E.estimate_moment(2.0, 1.25, n_samples=20000, master_seed=seed, dt=1e-3, workers=workers)
    ok1, tol1 = _moment_ok(m1, 0.07)
    ok2, tol2 = _moment_ok(m2, 0.08)
    return ok1 and ok2, {"slope_k8/3": m1.fitted_slope, "expected_k8/3": m1.expected_slope, "tol_k8/3": tol1,
                         "slope_k2": m2.fitted_slope, "expected_k2": m2.expected_slope, "tol_k2": tol2}


def c6_martingales(seed: int, workers):
    rev = E.reverse_martingale_test(8.0 / 3.0, 1.0, (0.0, 1.0, 4.0), 1.0, 10000, seed, workers=workers)
    fwd = E.forward_martingale_test(2.0, 0.6, 1j, n_samples=10000, seed=seed, workers=workers)
    ok = rev.flat and fwd.flat and fwd.extra["incomplete"] == 0
    return ok, {"reverse_max_z": rev.max_z, "forward_max_z": fwd.max_z,
                "forward_incomplete": fwd.extra["incomplete"]}


def c7_counts(seed: int, workers):
    k = 2.0
    b_hash = spectra.spectrum_params(k).beta_hash
    c0 = E.estimate_count_scaling(k, 0.0, (3, 4, 5, 6), 50, seed, workers=workers)
    ch = E.estimate_count_scaling(k, b_hash, (3, 4, 5, 6), 50, seed, workers=workers)
    ok = abs(c0.slope - 1.0) <= 0.3 and abs(ch.slope - 2.0) <= 0.25
    return ok, {"slope_beta0": c0.slope, "stderr_beta0": c0.slope_stderr,
                "slope_beta_hash": ch.slope, "stderr_beta_hash": ch.slope_stderr}


def c8_harmonic(seed: int, workers):
    # constant driving with a = 1 (kappa = 2) up to t = 1/2: the slit [0, i]
    path = deterministic_driver("constant", 1.0 / 128, 0.5, 2.0)
    chain = path.to_chain()
    n = chain.n_steps
    small = estimate_tip_harmonic_measure(chain, n, np.geomspace(1e-4, 1e-2, 7))
    slope = small.slope()
    big_eps = (2.0, 4.0, 8.0)
    big = estimate_tip_harmonic_measure(chain, n, big_eps)
    ratio = [m / (2 * e / math.pi) for m, e in zip(big.mu, big_eps)]
    oracle = max(abs(m / slit_mu(1.0, e) - 1.0) for m, e in zip(small.mu, small.eps_grid))
    worst = max(abs(x - 1.0) for x in ratio)
    return abs(slope - 0.5) <= 0.1 and worst <= 0.1, {"slope": slope, "flat_ratio_dev": worst,
                                                        "oracle_dev": oracle}


def c9_theta(seed: int, workers):
    rep = E.radial_theta_simulate(2.0, 0.6, n_samples=10000, seed=seed, workers=workers)
    return rep.p_value > 0.01, {"chi2": rep.chi2, "p_value": rep.p_value}


def c10_figure1(seed: int, workers):
    ok = True
    detail = {}
    for c in spectra.figure1_curves((2.0, 4.0, 6.0)):
        k = c["kappa"]
        al, F = np.asarray(c["alpha"]), np.asarray(c["F_tip"])
        target = min(1.0 + k / 8.0, 2.0)
        i = int(np.argmax(F))
        max_err = max(abs(F[i] - target), abs(al[i] - c["alpha_star"]) / c["alpha_star"])
        ends = max(abs(F[0]), abs(F[-1]))
        slopes = np.diff(F) / np.diff(al)
        rise = np.diff(slopes)
        concave_err = float(max(0.0, rise.max() / max(1.0, np.abs(slopes).max())))
        ok &= max_err <= 1e-10 and ends <= 1e-10 and concave_err <= 1e-9
        detail[f"k{k:g}_max_err"] = float(max_err)
        detail[f"k{k:g}_ends"] = float(ends)
        detail[f"k{k:g}_concavity"] = concave_err
    return ok, detail


CRITERIA = {
    1: ("exponent algebra", c1_exponent_algebra, 1.0),
    2: ("finite-difference duality", c2_duality, 1.0),
    3: ("flow exactness", c3_flow_exactness, 30.0),
    4: ("inequality suite", c4_inequalities, 120.0),
    5: ("moment scaling", c5_moments, 600.0),
    6: ("martingale flatness", c6_martingales, 600.0),
    7: ("count scaling", c7_counts, 1800.0),
    8: ("harmonic measure", c8_harmonic, 60.0),
    9: ("radial SDE stationarity", c9_theta, 120.0),
    10: ("tip spectrum curves", c10_figure1, 10.0),
}


def run_criterion(number: int, seed: int = 0, workers: int | None = None) -> CriterionResult:
    name, fn, limit = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn(seed, workers)
    runtime = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok) and runtime <= limit, runtime, limit, detail)


def run_criteria(numbers=FULL, seed: int = 0, workers: int | None = None, echo=None) -> list[CriterionResult]:
    out = []
    for n in numbers:
        res = run_criterion(n, seed, workers)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out


def warm_up() -> None:
    """Compile the numerical kernels so runtime budgets measure the work only."""
    I.exponent_identities(kappas=(2.0,), n=11)
    I.slit_roundtrip(10)
    I.chain_roundtrip(1)
    I.reverse_identity(1)
    I.inequality_suite(4, 16)
