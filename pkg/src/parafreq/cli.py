"""Experiment runner: ``parafreq run --experiment NAME [flags]``.

Each run writes a trace CSV (the plotting contract) and a JSON report, and
exits 0 exactly when every check passed. A JSON ``--config`` file may supply
any flag; flags given on the command line win.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .backgrounds import Kind, flat_circle, gaussian_soliton, shrinking_sphere
from .errors import ConfigError, IoError, ParafreqError
from .evolve import Amplitude, caloric_polynomial, solve_heat, solve_perturbed
from .frequency import (
    CheckReport,
    backwards_bound_check,
    cauchy_schwarz_check,
    check_monotone,
    corollary_bound_check,
    equality_case_residual,
    general_bounds_check,
    hessian_identity_residual,
    trace,
)
from .kernel import kernel_at
from .ouspec import galerkin_spectrum
from .randomize import GAUSSIAN_ORDER, random_field, random_solution
from .spectral import build_quadrature, fourier_field, legendre_field
from .tolerances import tolerance

EXPERIMENTS = (
    "monotonicity",
    "equality-case",
    "backwards-uniqueness",
    "hessian-identity",
    "perturbed-bounds",
    "corollary-bound",
    "ou-spectrum",
)
TRACE_HEADER = ("t", "tau", "I", "D", "kappa", "Ecorr", "U", "U_fd_prime")


@dataclass
class ExperimentConfig:
    experiment: str = "monotonicity"
    # background
    background: str = "gaussian"
    dim: int = 1
    t1: float | None = None
    center: tuple = ()
    length: float = 2 * math.pi
    c0: float = 4.0
    eps: float | None = None
    # solution
    degree: tuple = ()
    modes: tuple = ()
    alpha0: float = 0.0
    beta0: float = 0.0
    shape: str = "constant"
    # discretization
    window: tuple | None = None
    samples: int = 64
    order: int | None = None
    truncation: int | None = None
    # randomized suites and the spectrum
    seed: int = 0
    count: int = 10
    tau: float = 1.0
    n_max: int = 10
    # run control
    corrupt: bool = False
    parallel: bool = False
    out_dir: str = "."
    trace_csv: str | None = None
    report: str | None = None

    def validate(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if self.experiment not in EXPERIMENTS + ("all",):
            bad("experiment", f"unknown experiment {self.experiment!r}")
        if self.background not in ("gaussian", "circle", "sphere"):
            bad("background", f"unknown background {self.background!r}")
        if self.background == "gaussian" and self.dim not in (1, 2, 3):
            bad("dim", "the Gaussian soliton supports dimensions 1..3")
        if self.background == "circle" and self.dim != 1:
            bad("dim", "the circle is 1-dimensional")
        if self.samples < 8:
            bad("samples", "need at least 8 samples")
        if self.order is not None and self.order < 4:
            bad("order", "quadrature order must be at least 4")
        if self.truncation is not None and self.truncation < 1:
            bad("truncation", "truncation must be positive")
        if not self.length > 0:
            bad("length", "circle length must be positive")
        if not self.c0 > 0:
            bad("c0", "initial sphere scale must be positive")
        if self.eps is not None and not self.eps > 0:
            bad("eps", "smoothing time must be positive")
        if self.shape not in ("constant", "sin", "cos"):
            bad("shape", f"unknown amplitude shape {self.shape!r}")
        if not self.tau > 0:
            bad("tau", "tau must be positive")
        if not 0 <= self.n_max <= 20:
            bad("n_max", "Galerkin degree must lie in 0..20")
        if self.count < 1:
            bad("count", "count must be positive")
        if self.degree and min(self.degree) < 0:
            bad("degree", "degrees must be non-negative")
        if self.background == "gaussian" and self.degree and len(self.degree) != self.dim:
            bad("degree", f"need {self.dim} comma-separated degrees")
        if self.center and len(self.center) != (self.dim if self.background == "gaussian" else 1):
            bad("center", "one coordinate per dimension")
        t1 = self.resolved_t1()
        if self.window is not None:
            a, b = self.window
            if not a < b:
                bad("window", f"empty window {a}:{b}")
            if not b < t1:
                bad("window", f"window must end before t1={t1}")
            if self.background == "sphere":
                eps = self.resolved_eps()
                if not t1 - b > eps:
                    bad("window", f"window must end before t1 - eps = {t1 - eps}")
        return self

    def resolved_t1(self):
        if self.t1 is not None:
            return self.t1
        return 1.0 if self.background == "sphere" else 0.0

    def resolved_window(self):
        if self.window is not None:
            return tuple(self.window)
        t1 = self.resolved_t1()
        if self.background == "sphere":
            return (t1 - 2.0, t1 - 0.5)
        return (t1 - 2.0, t1 - 1.0)

    def resolved_eps(self):
        if self.eps is not None:
            return self.eps
        if self.window is not None:
            return 1e-3 * (self.resolved_t1() - self.window[0])
        return 1e-3 * 2.0

    def background_obj(self):
        t1 = self.resolved_t1()
        if self.background == "gaussian":
            center = self.center or (0.0,) * self.dim
            return gaussian_soliton(self.dim, t1, center)
        if self.background == "circle":
            return flat_circle(self.length, t1, self.center[0] if self.center else 0.0)
        return shrinking_sphere(self.c0, t1, self.resolved_eps())

    def echo(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}


# --------------------------------------------------------------------------
# outputs


def emit_trace(tr, path):
    """Write the trace CSV with shortest round-trip float formatting."""
    if tr is None or len(tr) == 0:
        raise IoError("refusing to write an empty trace")
    cols = [tr.times, tr.tau, tr.I, tr.D, tr.kappa, tr.Ecorr, tr.U, tr.U_fd_prime]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write trace to {path}: {exc}") from exc
    return Path(path)


def _write_json(obj, path):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc


def _error_check(name, exc):
    rep = getattr(exc, "report", None)
    d = rep.to_dict() if isinstance(rep, CheckReport) else {
        "name": name, "passed": False, "lhs": None, "rhs": None, "margin": None, "tolerance": None,
    }
    d["name"] = name
    d["passed"] = False
    d["error"] = type(exc).__name__
    d["message"] = str(exc)
    return d


def _residual_check(name, value, tol, **detail):
    return CheckReport(name, bool(value <= tol), float(value), tol, float(tol - value), tol, detail)


# --------------------------------------------------------------------------
# experiments


def _order(cfg, bg):
    if cfg.order is not None:
        return cfg.order
    return GAUSSIAN_ORDER if bg.kind is Kind.GAUSSIAN else None


def _heat_solution(cfg, bg, window, rng):
    if bg.kind is Kind.GAUSSIAN:
        if cfg.degree:
            return caloric_polynomial(bg, cfg.degree, window)
        return random_solution(bg, rng, window)
    if cfg.modes:
        if bg.kind is Kind.CIRCLE:
            return solve_heat(bg, fourier_field(bg, cfg.modes), window)
        return solve_heat(bg, legendre_field(bg, cfg.modes), window)
    return random_solution(bg, rng, window, modes=cfg.truncation or 8)


def _corrupt(tr):
    """Push U at the middle sample clearly below its predecessor."""
    U = tr.U.copy()
    i = len(U) // 2
    U[i] = U[i - 1] - 1e-3 * (1 + abs(U[0]))
    return tr.with_U(U)


def _checked(name, fn, *args, **kwargs):
    """Run a checker, recording a failure with its exception name."""
    try:
        return fn(*args, **kwargs).to_dict()
    except ParafreqError as exc:
        return _error_check(name, exc)


def _trace(cfg, sol, bg, derivatives=True):
    return trace(
        sol, cfg.samples, order=_order(cfg, bg), kernel_modes=cfg.truncation,
        derivatives=derivatives, parallel=cfg.parallel,
    )


def run_monotonicity(cfg, rng):
    bg = cfg.background_obj()
    sol = _heat_solution(cfg, bg, cfg.resolved_window(), rng)
    tr = _trace(cfg, sol, bg)
    if cfg.corrupt:
        tr = _corrupt(tr)
    checks = [_checked("monotone", check_monotone, tr), _checked("cauchy_schwarz", cauchy_schwarz_check, tr)]
    return tr, checks, {}


def run_equality_case(cfg, rng):
    if cfg.background != "gaussian":
        raise ConfigError("background: the equality case is exercised on the Gaussian soliton")
    bg = cfg.background_obj()
    degree = cfg.degree or (2,) * bg.dim
    sol = caloric_polynomial(bg, degree, cfg.resolved_window())
    tr = _trace(cfg, sol, bg)
    order = _order(cfg, bg)
    worst = 0.0
    for t in tr.times[1:-1]:
        kd = kernel_at(bg, t)
        q = build_quadrature(bg, t, order, kernel=kd)
        worst = max(worst, equality_case_residual(sol.field_at(t), kd, tr, t, q))
    checks = [_residual_check("equality_case", worst, tolerance("equality_case"), degree=list(degree)).to_dict()]
    return tr, checks, {}


def run_backwards(cfg, rng):
    bg = cfg.background_obj()
    sol = _heat_solution(cfg, bg, cfg.resolved_window(), rng)
    tr = _trace(cfg, sol, bg)
    return tr, [_checked("backwards_bound", backwards_bound_check, tr)], {}


def run_hessian(cfg, rng):
    bg = cfg.background_obj()
    a, b = cfg.resolved_window()
    order = _order(cfg, bg)
    worst = 0.0
    for i in range(cfg.count):
        t = a + (b - a) * i / max(cfg.count - 1, 1)
        u = random_field(bg, rng, t, modes=cfg.truncation or 8)
        kd = kernel_at(bg, t)
        worst = max(worst, hessian_identity_residual(u, kd, build_quadrature(bg, t, order, kernel=kd)))
    checks = [_residual_check("hessian_identity", worst, tolerance("hessian_identity"), fields=cfg.count).to_dict()]
    return None, checks, {}


def _perturbed(cfg, rng):
    if cfg.background != "circle":
        raise ConfigError("background: perturbed solutions are defined on the circle")
    bg = cfg.background_obj()
    if cfg.modes:
        u0 = fourier_field(bg, cfg.modes)
    else:
        n = cfg.truncation or 8
        u0 = fourier_field(bg, rng.normal(size=n + 1), rng.normal(size=n + 1))
    sol = solve_perturbed(
        bg, u0, Amplitude(cfg.alpha0, cfg.shape), Amplitude(cfg.beta0, cfg.shape), cfg.resolved_window()
    )
    return bg, sol


def run_perturbed_bounds(cfg, rng):
    bg, sol = _perturbed(cfg, rng)
    tr = _trace(cfg, sol, bg)
    checks = [_checked("general_bounds", general_bounds_check, tr)]
    if cfg.alpha0 == 0 and cfg.beta0 == 0:
        checks.append(_checked("monotone", check_monotone, tr))
    return tr, checks, {}


def run_corollary(cfg, rng):
    bg, sol = _perturbed(cfg, rng)
    tr = _trace(cfg, sol, bg)
    return tr, [_checked("corollary_bound", corollary_bound_check, tr)], {}


def run_ou_spectrum(cfg, rng):
    ev = galerkin_spectrum(cfg.tau, cfg.n_max)
    expected = -np.arange(cfg.n_max + 1) / (2 * cfg.tau)
    err = float(np.max(np.abs(ev - expected)))
    checks = [_residual_check("ou_spectrum", err, tolerance("ou_spectrum"), tau=cfg.tau, n_max=cfg.n_max).to_dict()]
    return None, checks, {"eigenvalues": [float(x) for x in ev]}


RUNNERS = {
    "monotonicity": run_monotonicity,
    "equality-case": run_equality_case,
    "backwards-uniqueness": run_backwards,
    "hessian-identity": run_hessian,
    "perturbed-bounds": run_perturbed_bounds,
    "corollary-bound": run_corollary,
    "ou-spectrum": run_ou_spectrum,
}

# background each experiment uses when run as part of ``all``
ALL_BACKGROUND = {
    "monotonicity": None,
    "equality-case": "gaussian",
    "backwards-uniqueness": None,
    "hessian-identity": None,
    "perturbed-bounds": "circle",
    "corollary-bound": "circle",
    "ou-spectrum": None,
}


def _run_one(cfg, name):
    rng = np.random.default_rng(cfg.seed)
    try:
        tr, checks, results = RUNNERS[name](cfg, rng)
    except ConfigError:
        raise
    except ParafreqError as exc:
        tr, checks, results = None, [_error_check(name, exc)], {}
    return tr, checks, results


def run(cfg: ExperimentConfig):
    """Run the configured experiment; returns (exit code, report dict)."""
    cfg.validate()
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc

    if cfg.experiment == "all":
        names = EXPERIMENTS
    else:
        names = (cfg.experiment,)
    all_checks, results, traces = [], {}, {}
    for name in names:
        sub = cfg
        if cfg.experiment == "all":
            bg = ALL_BACKGROUND[name]
            if bg is not None and bg != cfg.background:
                sub = dataclasses.replace(cfg, background=bg, dim=1, center=(), degree=(), modes=(), window=None)
        tr, checks, res = _run_one(sub, name)
        for c in checks:
            c.setdefault("experiment", name)
        all_checks.extend(checks)
        if res:
            results[name] = res
        if tr is not None:
            if cfg.trace_csv and cfg.experiment != "all":
                path = Path(cfg.trace_csv)
            else:
                path = out / f"{name}_trace.csv"
            emit_trace(tr, path)
            traces[name] = str(path)

    report = {
        "experiment": cfg.experiment,
        "config": cfg.echo(),
        "checks": all_checks,
        "version": __version__,
    }
    if cfg.experiment != "all" and results:
        report["results"] = results[cfg.experiment]
    elif results:
        report["results"] = results
    report_path = Path(cfg.report) if cfg.report else out / f"{cfg.experiment}_report.json"
    _write_json(report, report_path)
    code = 0 if all_checks and all(c["passed"] for c in all_checks) else 1
    return code, report


# --------------------------------------------------------------------------
# command line


def _floats(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _window(text):
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError("window: expected a:b")
    return (float(parts[0]), float(parts[1]))


_CONVERT = {
    "center": _floats,
    "degree": _ints,
    "modes": _floats,
    "window": _window,
}
_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name, value):
    if value is None:
        return None
    if name in _CONVERT:
        if isinstance(value, (list, tuple)):
            return tuple(value)
        return _CONVERT[name](value)
    default = _FIELDS[name].default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true/false")
        return value
    if isinstance(default, int) or name in ("order", "truncation"):
        if isinstance(value, bool) or float(value) != int(value):
            raise ConfigError(f"{name}: expected an integer")
        return int(value)
    if isinstance(default, float) or name in ("t1", "eps"):
        return float(value)
    return value


def build_config(file_values: dict, cli_values: dict) -> ExperimentConfig:
    values = {}
    for source in (file_values, cli_values):
        for k, v in source.items():
            name = k.replace("-", "_")
            if name not in _FIELDS:
                raise ConfigError(f"{k}: unknown configuration field")
            try:
                values[name] = _coerce(name, v)
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{name}: cannot parse {v!r}") from None
    return ExperimentConfig(**values)


@click.group()
@click.version_option(__version__)
def main():
    """Parabolic frequency experiments."""


@main.command("run", context_settings={"show_default": True})
@click.option("--experiment", type=click.Choice(EXPERIMENTS + ("all",)), default="monotonicity")
@click.option("--background", type=click.Choice(["gaussian", "circle", "sphere"]), default="gaussian")
@click.option("--dim", type=int, default=1)
@click.option("--t1", type=float, default=None, help="kernel center time [0; sphere 1]")
@click.option("--center", default=None, help="comma-separated kernel center")
@click.option("--length", type=float, default=2 * math.pi, help="circle length")
@click.option("--c0", type=float, default=4.0, help="sphere scale at t=0")
@click.option("--eps", type=float, default=None, help="sphere smoothing time [1e-3 tau(a)]")
@click.option("--degree", default=None, help="comma-separated caloric degrees per axis")
@click.option("--modes", default=None, help="comma-separated initial mode coefficients")
@click.option("--alpha0", type=float, default=0.0)
@click.option("--beta0", type=float, default=0.0)
@click.option("--shape", type=click.Choice(["constant", "sin", "cos"]), default="constant")
@click.option("--window", default=None, help="a:b")
@click.option("--samples", type=int, default=64)
@click.option("--order", type=int, default=None, help="quadrature order")
@click.option("--truncation", type=int, default=None, help="kernel / random-data mode count")
@click.option("--seed", type=int, default=0)
@click.option("--count", type=int, default=10, help="random fields for hessian-identity")
@click.option("--tau", type=float, default=1.0)
@click.option("--n-max", type=int, default=10)
@click.option("--corrupt", is_flag=True, help="negative control: lower U at one sample")
@click.option("--parallel", is_flag=True)
@click.option("--out-dir", default=".")
@click.option("--trace-csv", default=None)
@click.option("--report", default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def run_command(ctx, config_path, **kwargs):
    """Run one experiment (or all) and write a trace CSV and a JSON report."""
    file_values = {}
    if config_path:
        try:
            with open(config_path) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"config: cannot read {config_path}: {exc}")
        if not isinstance(file_values, dict):
            raise click.ClickException("config: expected a JSON object")
    cli_values = {
        k: v for k, v in kwargs.items()
        if ctx.get_parameter_source(k) is click.core.ParameterSource.COMMANDLINE
    }
    defaults = {k: v for k, v in kwargs.items() if k not in cli_values and k not in file_values}
    defaults = {k: v for k, v in defaults.items() if v is not None}
    try:
        cfg = build_config({**defaults, **file_values}, cli_values)
        code, report = run(cfg)
    except (ConfigError, IoError) as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        extra = f" ({c['error']}: {c['message']})" if "error" in c else ""
        click.echo(f"{status} {c.get('experiment', '')}/{c['name']}{extra}")
    if "results" in report:
        click.echo(json.dumps(report["results"]))
    ctx.exit(code)


if __name__ == "__main__":
    main()
