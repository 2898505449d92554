"""Command-line front end.

Subcommands: ``solve`` (trajectory of a configured system), ``check``
(hypothesis reports), ``scenario`` (named worked examples), ``fundamental``
(sampled fundamental-matrix entries), ``bounds`` (envelope-vs-norm table).

Exit codes: 0 success, 2 hypothesis failure without --force, 3
parse/schema error, 4 numerical failure.  Data goes to --output or
stdout; diagnostics go to stderr.  IDEPCAG_NUM_THREADS > 1 evaluates
trajectory samples in that many threads (output order is unaffected).
"""

from __future__ import annotations

import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from .bounds import GronwallData, gronwall1_bound, gronwall2_bound, h1_constants
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    ExpressionSyntaxError,
    GridError,
    HypothesisError,
    IdepcagError,
    NumericalError,
)
from .fundamental import FundamentalEngine
from .grid import locate
from .kernel import KernelEngine
from .oracle import PicardSolver, h2_check
from .scenarios import SCENARIO_IDS
from .transition import TransitionEngine
from .vop import Trajectory, VopSolver

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map package exceptions onto the exit-code contract."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ExpressionSyntaxError, GridError, ValueError) as err:
            _fail(EXIT_PARSE, str(err))
        except HypothesisError as err:
            _fail(EXIT_HYPOTHESIS, str(err))
        except NumericalError as err:
            _fail(EXIT_NUMERICAL, str(err))
        except IdepcagError as err:
            _fail(EXIT_NUMERICAL, str(err))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _trajectory_text(traj: Trajectory, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(traj.to_json_obj(), indent=2) + "\n"
    buf = io.StringIO()
    traj.to_csv(buf)
    return buf.getvalue()


def _num_threads() -> int:
    raw = os.environ.get("IDEPCAG_NUM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sample(solver: VopSolver, times: np.ndarray, force: bool) -> Trajectory:
    workers = _num_threads()
    if workers <= 1 or times.shape[0] < 2 * workers:
        return solver.sample_trajectory(times, force=force)
    chunks = np.array_split(times, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: solver.sample_trajectory(c, force=force), chunks))
    return Trajectory(
        times=np.concatenate([p.times for p in parts]),
        values=np.concatenate([p.values for p in parts]),
        interval_index=np.concatenate([p.interval_index for p in parts]),
        is_node=np.concatenate([p.is_node for p in parts]),
        is_left_limit=np.concatenate([p.is_left_limit for p in parts]),
    )


def _diagnostics(cfg: RunConfig, solver: VopSolver):
    h2 = h2_check(cfg.ivp)
    h3 = solver.h3_report()
    click.echo(
        f"contraction check (H2): {'pass' if h2.passed else 'FAIL'} "
        f"(nu_bar = {h2.nu_bar:.6g})",
        err=True,
    )
    click.echo(
        f"kernel invertibility (H3): {'pass' if h3.passed else 'FAIL'} "
        f"(nu+ sup = {h3.nu_plus_sup:.6g}, nu- sup = {h3.nu_minus_sup:.6g})",
        err=True,
    )
    return h2, h3


@click.group()
def main():
    """Solve linear impulsive systems with piecewise constant arguments."""


@main.command("solve")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--output", "output", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)
@click.option("--force", is_flag=True, help="solve even if the kernel hypothesis fails")
@_guarded
def cmd_solve(config_path, output, fmt, force):
    """Sample the solution trajectory of a configured system."""
    cfg = load_config(config_path)
    solver = VopSolver(cfg.ivp, cfg.numerics)
    _, h3 = _diagnostics(cfg, solver)
    if not h3.passed and not force:
        _fail(EXIT_HYPOTHESIS, "kernel invertibility hypothesis fails; use --force to override")
    traj = _sample(solver, cfg.output_times, force)
    _emit(_trajectory_text(traj, fmt or cfg.output_format), output)


@main.command("check")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@_guarded
def cmd_check(config_path, fmt):
    """Report the contraction (H2) and kernel-invertibility (H3) checks."""
    cfg = load_config(config_path)
    solver = VopSolver(cfg.ivp, cfg.numerics)
    h2 = h2_check(cfg.ivp)
    h3 = solver.h3_report()
    if fmt == "json":
        click.echo(json.dumps({"h2": h2.to_dict(), "h3": h3.to_dict()}, indent=2))
    else:
        click.echo(f"H2 contraction: {'pass' if h2.passed else 'FAIL'} (nu_bar = {h2.nu_bar:.6g})")
        click.echo(
            f"H3 kernel invertibility: {'pass' if h3.passed else 'FAIL'} "
            f"(nu+ sup = {h3.nu_plus_sup:.6g}, nu- sup = {h3.nu_minus_sup:.6g})"
        )
        if h3.failing_intervals:
            click.echo(f"failing intervals: {h3.failing_intervals}")
    if not (h2.passed and h3.passed):
        sys.exit(EXIT_HYPOTHESIS)


def _parse_params(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--params expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value
    return out


@main.command("scenario")
@click.argument("name")
@click.option("--params", "params", multiple=True, help="builder arguments as key=value")
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--compare", is_flag=True, help="report deviation from the closed form and the oracle")
@click.option("--output", "output", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@_guarded
def cmd_scenario(name, params, samples, compare, output, fmt):
    """Run a named scenario (s1-geometric, s2-impulse-product,
    s3-cooke-yorke, s4-sine)."""
    builder = SCENARIO_IDS.get(name)
    if builder is None:
        _fail(EXIT_PARSE, f"unknown scenario {name!r}; known: {sorted(SCENARIO_IDS)}")
    scenario = builder(**_parse_params(params))
    ivp = scenario.ivp
    solver = VopSolver(ivp)
    lo, hi = ivp.tau, ivp.partition.window[1]
    times = np.linspace(lo, hi, samples)
    traj = _sample(solver, times, force=False)
    _emit(_trajectory_text(traj, fmt), output)
    final = traj.values[-1]
    click.echo(
        f"final value y({_fmt(traj.times[-1])}) = "
        + "[" + ", ".join(_fmt(v) for v in final) + "]",
        err=True,
    )
    if compare:
        if scenario.closed_form is not None:
            errs = [
                np.max(np.abs(solver.solve(t) - scenario.closed_form(t)))
                for t in times
            ]
            click.echo(f"max |solve - closed_form| = {max(errs):.3e}", err=True)
        else:
            click.echo("no closed form attached to this scenario", err=True)
        try:
            oracle = PicardSolver(ivp)
            probe = times[:: max(1, len(times) // 10)]
            dev = max(float(np.max(np.abs(solver.solve(t) - oracle.solve(t)))) for t in probe)
            click.echo(f"max |solve - oracle| = {dev:.3e}", err=True)
        except IdepcagError as err:
            click.echo(f"oracle unavailable: {err}", err=True)


@main.command("fundamental")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--tau", type=float, default=None, help="initial time (default: ivp tau)")
@click.option("--times", "times_text", default=None, help="comma-separated evaluation times")
@click.option("--output", "output", type=click.Path(), default=None)
@_guarded
def cmd_fundamental(config_path, tau, times_text, output):
    """Emit sampled entries of the fundamental matrix W(t, tau) as CSV."""
    cfg = load_config(config_path)
    ivp = cfg.ivp
    tau = ivp.tau if tau is None else float(tau)
    if times_text:
        times = np.array(sorted(float(v) for v in times_text.split(",")))
    else:
        times = cfg.output_times[cfg.output_times >= tau]
    num = cfg.numerics
    tr = TransitionEngine(ivp.system.A, num.steps_per_unit, num.transition_method)
    ke = KernelEngine(tr, ivp.system.B, num.quad_order, num.cond_limit, num.inverse_residual_tol)
    fund = FundamentalEngine(ke, ivp.partition, ivp.system.impulses)
    n = ivp.n
    header = ["t"] + [f"W_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    lines = [",".join(header)]
    for t in times:
        W = fund.w_global(float(t), tau)
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in W.ravel()]))
    _emit("\n".join(lines) + "\n", output)


@main.command("bounds")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--output", "output", type=click.Path(), default=None)
@_guarded
def cmd_bounds(config_path, output):
    """Print the Gronwall envelopes next to the sampled solution norm."""
    cfg = load_config(config_path)
    ivp = cfg.ivp
    solver = VopSolver(ivp, cfg.numerics)
    h1 = h1_constants(ivp.system)
    data = GronwallData(
        eta1=h1.eta1,
        eta2=h1.eta2,
        eta=h1.lambda_k,
        partition=ivp.partition,
        tau=ivp.tau,
    )
    u0 = float(np.linalg.norm(ivp.y0))
    try:
        varrho = data.varrho()
    except IdepcagError:
        varrho = np.inf
    lines = ["t,y_norm,gronwall1,dominated1,gronwall2,dominated2"]
    for t in cfg.output_times:
        t = float(t)
        y = solver.solve(t)
        ynorm = float(np.linalg.norm(y))
        b1 = gronwall1_bound(data, u0, t).at_t
        cells = [_fmt(t), _fmt(ynorm), _fmt(b1), str(int(ynorm <= b1 * (1 + 1e-8)))]
        if varrho < 1.0:
            b2 = gronwall2_bound(data, u0, t)
            cells += [_fmt(b2), str(int(ynorm <= b2 * (1 + 1e-8)))]
        else:
            cells += ["", ""]
        lines.append(",".join(cells))
    _emit("\n".join(lines) + "\n", output)
    click.echo(f"theta_hat = {data.theta_hat():.6g}, varrho = {varrho:.6g}", err=True)


if __name__ == "__main__":
    main()
