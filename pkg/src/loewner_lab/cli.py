"""Command-line interface.

Usage:
    loewner-lab trace --kappa 2 --steps 4096 --seed 7 --out trace.csv
    loewner-lab spectrum --kappa 6 --out fig1.csv
    loewner-lab spectrum --figure1 --out figure1.csv
    loewner-lab moments --kappa 2.6667 --lambda 1.3333 --samples 20000
    loewner-lab counts --kappa 2 --beta 0 --n-max 6 --samples 50
    loewner-lab check --level fast

Every option may also come from a JSON file given with ``--config`` (same
field names as the flags, dashes or underscores); flags win over the file.
The seed falls back to the LOEWNER_LAB_SEED environment variable, then 0.
Exit status is 0 on success, 2 on a parameter error and 3 when ``check``
finds a failing criterion.
"""

from __future__ import annotations

import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import acceptance, core, estimators, harmonic, io, spectra
from .driving import deterministic_driver, sample_brownian
from .errors import LoewnerLabError, ParameterError, ResourceError

SEED_ENV = "LOEWNER_LAB_SEED"

_COMMON = {
    "kappa": click.option("--kappa", type=float, help="SLE parameter kappa > 0."),
    "seed": click.option("--seed", type=int, help="Master seed (unsigned)."),
    "samples": click.option("--samples", type=int, help="Number of Monte-Carlo samples or paths."),
    "steps": click.option("--steps", type=int, help="Number of Loewner steps."),
    "dt": click.option("--dt", type=float, help="Time step."),
    "tmax": click.option("--tmax", type=float, help="Final time."),
    "beta": click.option("--beta", type=float, help="Derivative exponent beta."),
    "lambda": click.option("--lambda", "lam", type=float, help="Moment exponent lambda."),
    "alpha": click.option("--alpha", type=float, help="Spectrum argument alpha (also u for theta-sde)."),
    "n_max": click.option("--n-max", "n_max", type=int, help="Finest dyadic level for counts."),
    "workers": click.option("--workers", type=int, help="Worker processes (default: all CPUs)."),
}


def _options(*names):
    def deco(fn):
        fn = click.option("--out", type=click.Path(dir_okay=False), help="Output file (default: stdout).")(fn)
        fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), help="Output format (csv).")(fn)
        fn = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                          help="JSON config with the same field names as the flags.")(fn)
        for name in reversed(names):
            fn = _COMMON[name](fn)
        return fn

    return deco


class Settings:
    """Flags merged over the config file over the command defaults."""

    def __init__(self, flags: dict, defaults: dict):
        cfg = {}
        path = flags.pop("config", None)
        if path:
            try:
                raw = json.loads(Path(path).read_text())
            except (OSError, ValueError) as exc:
                raise ParameterError(f"config: cannot read {path}: {exc}") from None
            if not isinstance(raw, dict):
                raise ParameterError("config: top level must be a JSON object")
            cfg = {k.replace("-", "_"): v for k, v in raw.items()}
            if "lambda" in cfg:
                cfg["lam"] = cfg.pop("lambda")
            if "format" in cfg:
                cfg["fmt"] = cfg.pop("format")
        self.values = dict(defaults)
        for k, v in cfg.items():
            if k in flags or k in defaults:
                self.values[k] = v
        for k, v in flags.items():
            if v is not None:
                self.values[k] = v
        if self.values.get("seed") is None:
            env = os.environ.get(SEED_ENV)
            self.values["seed"] = env if env is not None else 0
        self._validate()

    def _validate(self):
        v = self.values
        try:
            v["seed"] = int(v["seed"])
        except (TypeError, ValueError):
            raise ParameterError(f"seed: expected an unsigned integer, got {v['seed']!r}") from None
        if v["seed"] < 0:
            raise ParameterError("seed: must be unsigned")
        for name in ("kappa", "dt", "tmax"):
            if v.get(name) is not None and not float(v[name]) > 0:
                raise ParameterError(f"{name}: must be positive, got {v[name]}")
        for name in ("samples", "steps", "n_max", "workers"):
            if v.get(name) is not None and int(v[name]) < 1:
                raise ParameterError(f"{name.replace('_', '-')}: must be at least 1, got {v[name]}")
        if v.get("fmt", "csv") not in ("csv", "json"):
            raise ParameterError(f"format: expected csv or json, got {v['fmt']!r}")

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def params(self, *names) -> dict:
        return {n if n != "lam" else "lambda": self.values.get(n) for n in names}


def _emit(s: Settings, params: dict, columns: dict, summary: str, extra: dict | None = None):
    """Write the result (atomically when --out is set) and print the summary line."""
    fmt = s.values.get("fmt") or "csv"
    meta = {"params": io.clean(params), "seed": s.seed, "git_describe": io.git_describe()}
    if fmt == "json":
        data = dict(columns)
        if extra:
            data.update(extra)
        text = io.dumps_json(io.envelope(params, s.seed, data))
    else:
        if extra:
            meta["summary"] = io.clean(extra)
        text = io.dumps_csv(columns, meta)
    out = s.values.get("out")
    if out:
        io.atomic_write(out, text)
        click.echo(f"{summary} -> {out}")
    else:
        click.echo(text, nl=False)
        click.echo(summary, err=True)


def _run(fn):
    """Map library errors onto exit status 2 with a diagnostic."""
    try:
        fn()
    except (ParameterError, ValueError, LoewnerLabError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Numerical laboratory for chordal Loewner chains and SLE."""


@main.command()
@_options("kappa", "seed", "steps", "dt", "tmax")
def trace(**flags):
    """Trace points (t, re, im) of an SLE path at every step boundary."""

    def go():
        given = flags.get("steps")
        s = Settings(flags, {"kappa": 2.0, "steps": 4096, "tmax": 1.0, "dt": None, "fmt": "csv"})
        steps = int(s.steps)
        if s.dt is not None and given is None:
            steps = max(1, int(round(float(s.tmax) / float(s.dt))))
        dt = float(s.tmax) / steps
        path = sample_brownian(float(s.kappa), steps, dt, s.seed)
        pts = core.trace(path.to_chain())
        params = {"kappa": s.kappa, "steps": steps, "dt": dt, "tmax": s.tmax}
        _emit(s, params, {"t": path.times, "re": pts.real, "im": pts.imag},
              f"trace: kappa={s.kappa:g} steps={steps} seed={s.seed} max_im={pts.imag.max():.6g}")

    _run(go)


@main.command()
@_options("kappa", "beta", "lambda", "alpha")
@click.option("--figure1", is_flag=True, help="Emit the tip-spectrum curves for kappa = 2, 4, 6.")
@click.option("--points", type=int, default=201, show_default=True, help="Grid size per curve.")
def spectrum(figure1, points, **flags):
    """Spectrum table over [alpha_-, alpha_+], a single exponent point, or the tip-spectrum curves for kappa = 2, 4, 6."""

    def go():
        s = Settings(flags, {"kappa": 4.0, "beta": None, "lam": None, "alpha": None, "fmt": "csv"})
        if points < 3:
            raise ParameterError("points: must be at least 3")
        if figure1:
            curves = spectra.figure1_curves((2.0, 4.0, 6.0), points)
            cols = {"kappa": np.concatenate([np.full(c["alpha"].size, c["kappa"]) for c in curves]),
                    "alpha": np.concatenate([c["alpha"] for c in curves]),
                    "F_tip": np.concatenate([c["F_tip"] for c in curves])}
            maxima = {f"{c['kappa']:g}": float(np.max(c["F_tip"])) for c in curves}
            _emit(s, {"figure1": True, "points": points}, cols,
                  "figure1: max F_tip " + " ".join(f"kappa={k}:{v:.10g}" for k, v in maxima.items()),
                  {"maxima": maxima})
            return
        k = float(s.kappa)
        p = spectra.spectrum_params(k)
        if s.lam is not None or s.beta is not None or s.alpha is not None:
            row = {}
            if s.lam is not None:
                row.update({f"{n}": v for n, v in spectra.exponents_from_lambda(k, float(s.lam)).as_dict().items()})
            if s.beta is not None:
                b = float(s.beta)
                row.update({"beta": b, "rho": spectra.rho_of_beta(k, b)})
                dh, db = spectra.dims_of_beta(k, b)
                row.update({"d_hat": dh, "d_beta": db})
            if s.alpha is not None:
                al = float(s.alpha)
                row.update({"alpha": al, "F_tip": spectra.f_tip(k, al), "F_bulk": spectra.f_bulk(k, al)})
            cols = {n: [v] for n, v in row.items()}
            _emit(s, s.params("kappa", "beta", "lam", "alpha"), cols,
                  "spectrum: " + " ".join(f"{n}={v:.10g}" for n, v in row.items()),
                  {"F_bulk_status": spectra.F_BULK_STATUS} if "F_bulk" in row else None)
            return
        table = spectra.spectrum_table(k, points)
        _emit(s, {"kappa": k, "points": points}, table,
              f"spectrum: kappa={k:g} d={p.d:.10g} max F_tip={np.max(table['F_tip']):.10g} "
              f"at alpha_*={p.alpha_star:.10g}",
              {"params": p.as_dict(), "F_bulk_status": spectra.F_BULK_STATUS})

    _run(go)


@main.command()
@_options("kappa", "lambda", "samples", "dt", "seed", "workers")
@click.option("--t-grid", default="2,4,8,16,32", show_default=True, help="Comma-separated times t.")
def moments(t_grid, **flags):
    """E|h'_{t^2}(i)|^lambda for Brownian reverse flows and the fitted log-log slope."""

    def go():
        s = Settings(flags, {"kappa": 8.0 / 3.0, "lam": 4.0 / 3.0, "samples": 20000, "dt": 1e-3,
                             "workers": None, "fmt": "csv"})
        ts = _floats(t_grid, "t-grid")
        m = estimators.estimate_moment(float(s.kappa), float(s.lam), ts, int(s.samples), s.seed,
                                       float(s.dt), s.workers)
        _emit(s, {**s.params("kappa", "lam", "samples", "dt"), "t_grid": ts},
              {"t": m.t_grid, "mean": m.mean, "stderr": m.stderr},
              f"moments: slope={m.fitted_slope:.4f} +- {m.slope_stderr:.4f} expected={m.expected_slope:.4f}",
              {"fitted_slope": m.fitted_slope, "slope_stderr": m.slope_stderr,
               "expected_slope": m.expected_slope})

    _run(go)


@main.command()
@_options("kappa", "beta", "n_max", "samples", "seed", "workers")
@click.option("--n-min", type=int, default=3, show_default=True, help="Coarsest dyadic level.")
def counts(n_min, **flags):
    """Dyadic counts N_{n,beta} and the slope of log2 E[N] against n."""

    def go():
        s = Settings(flags, {"kappa": 2.0, "beta": 0.0, "n_max": 6, "samples": 50, "workers": None,
                             "fmt": "csv"})
        if not 1 <= n_min < int(s.n_max):
            raise ParameterError("n-min: must satisfy 1 <= n-min < n-max")
        grid = tuple(range(n_min, int(s.n_max) + 1))
        try:
            c = estimators.estimate_count_scaling(float(s.kappa), float(s.beta), grid, int(s.samples), s.seed,
                                                  workers=s.workers)
        except ResourceError as exc:
            raise ParameterError(f"n-max: {exc}") from None
        _emit(s, {**s.params("kappa", "beta", "n_max", "samples"), "n_min": n_min},
              {"n": [st.n for st in c.stats], "mean_count": [st.mean for st in c.stats],
               "n_indices": [st.n_indices for st in c.stats]},
              f"counts: slope={c.slope:.4f} +- {c.slope_stderr:.4f} expected={c.expected_slope:.4f}",
              {"slope": c.slope, "slope_stderr": c.slope_stderr, "expected_slope": c.expected_slope,
               "direction": c.direction})

    _run(go)


@main.command("tip-profile")
@_options("kappa", "seed", "steps", "tmax")
@click.option("--levels", type=int, default=10, show_default=True, help="Dyadic heights 2^0 .. 2^-levels.")
def tip_profile(levels, **flags):
    """|f_hat'(iy)| and the arc length v_t(y) at dyadic heights for one SLE path."""

    def go():
        s = Settings(flags, {"kappa": 2.0, "steps": 4096, "tmax": 1.0, "fmt": "csv"})
        if levels < 1:
            raise ParameterError("levels: must be at least 1")
        steps = int(s.steps)
        path = sample_brownian(float(s.kappa), steps, float(s.tmax) / steps, s.seed)
        y = 2.0 ** -np.arange(levels + 1)
        prof = core.tip_profile(path.to_chain(), steps, y)
        with np.errstate(divide="ignore"):
            ratio = np.where(y < 1, np.log(prof.v_cum) / np.log(y), np.nan)
        _emit(s, {**s.params("kappa", "steps", "tmax"), "levels": levels},
              {"y": y, "deriv_mod": prof.deriv_mod, "v_cum": prof.v_cum, "log_v_over_log_y": ratio},
              f"tip-profile: kappa={s.kappa:g} v(2^-{levels})={prof.v_cum[-1]:.6g}")

    _run(go)


@main.command()
@_options("kappa", "seed", "steps", "tmax")
@click.option("--driver", type=click.Choice(["brownian", "constant"]), default="brownian", show_default=True)
@click.option("--eps", "eps", default="1e-4,1e-3,1e-2", show_default=True, help="Comma-separated radii.")
@click.option("--circle-samples", type=int, default=2048, show_default=True)
def hm(driver, eps, circle_samples, **flags):
    """Harmonic measure mu(t, eps) of the hull near the tip."""

    def go():
        s = Settings(flags, {"kappa": 2.0, "steps": 1024, "tmax": 1.0, "fmt": "csv"})
        steps = int(s.steps)
        dt = float(s.tmax) / steps
        if driver == "constant":
            path = deterministic_driver("constant", dt, steps * dt, float(s.kappa))
        else:
            path = sample_brownian(float(s.kappa), steps, dt, s.seed)
        est = harmonic.estimate_tip_harmonic_measure(path.to_chain(), steps, _floats(eps, "eps"), circle_samples)
        slope = est.slope() if len(est.eps_grid) > 1 else math.nan
        _emit(s, {**s.params("kappa", "steps", "tmax"), "driver": driver, "circle_samples": circle_samples},
              {"eps": est.eps_grid, "mu": est.mu, "x_minus": est.x_minus, "x_plus": est.x_plus},
              f"hm: slope={slope:.4f}", {"slope": slope, "tip": [est.tip.real, est.tip.imag]})

    _run(go)


@main.command("theta-sde")
@_options("kappa", "alpha", "samples", "dt", "tmax", "seed", "workers")
def theta_sde(**flags):
    """Radial SDE end-time histogram against its stationary density (alpha is u)."""

    def go():
        s = Settings(flags, {"kappa": 2.0, "alpha": 0.6, "samples": 10000, "dt": 1e-3, "tmax": 5.0,
                             "workers": None, "fmt": "csv"})
        rep = estimators.radial_theta_simulate(float(s.kappa), float(s.alpha), t_max=float(s.tmax),
                                               n_samples=int(s.samples), seed=s.seed, dt=float(s.dt),
                                               workers=s.workers)
        n = len(rep.bin_counts)
        _emit(s, s.params("kappa", "alpha", "samples", "dt", "tmax"),
              {"bin": np.arange(n), "count": rep.bin_counts, "expected": np.full(n, rep.n_samples / n)},
              f"theta-sde: chi2={rep.chi2:.3f} p={rep.p_value:.4f}",
              {"chi2": rep.chi2, "p_value": rep.p_value, "drift": rep.drift})

    _run(go)


@main.command()
@click.option("--level", type=click.Choice(["fast", "full"]), default="fast", show_default=True)
@click.option("--seed", type=int, help="Master seed for the sampled criteria.")
@click.option("--workers", type=int, help="Worker processes.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write a JSON report here.")
def check(level, seed, workers, out):
    """Run the acceptance criteria (fast: deterministic ones only)."""
    status = {}

    def go():
        s = Settings({"seed": seed, "workers": workers}, {"workers": None})
        acceptance.warm_up()
        res = acceptance.run_criteria(acceptance.LEVELS[level], s.seed, s.workers, echo=click.echo)
        failed = [r.number for r in res if not r.passed]
        if out:
            report = [{"number": r.number, "name": r.name, "passed": r.passed, "runtime": r.runtime,
                       "limit": r.limit, "detail": r.detail} for r in res]
            io.atomic_write(out, io.dumps_json(io.envelope({"level": level}, s.seed, report)))
        click.echo(f"check {level}: {len(res) - len(failed)}/{len(res)} passed")
        status["failed"] = failed

    _run(go)
    if status.get("failed"):
        sys.exit(3)


def _floats(text: str, field: str) -> tuple:
    try:
        vals = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise ParameterError(f"{field}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ParameterError(f"{field}: empty list")
    return vals


if __name__ == "__main__":
    main()
