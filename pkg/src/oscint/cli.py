"""Command line entry points: run, compare, list-scenarios.

Exit codes: 0 on success, 2 for configuration problems (with a
``file:line`` anchor when one exists), 3 for numerical failures with
the failing invariant named.  A run that completes but fails one of its
summary checks still writes its artifact directory, then exits 3.
"""

from __future__ import annotations

import os
import sys
import time

import click

from . import __version__
from ._backend import backend_name
from .errors import (ConfigError, DegenerateLevelError, GridCoverageError,
                     MollifierResolutionError, NumericalCheckError)
from .runio import (RESULTS_ENV, RunManifest, compare_runs, make_run_dir,
                    read_config, resolve_params, write_csv, write_json)
from .scenarios import SCENARIOS, run_scenario, scenario_names, scenario_schema

_NUMERICAL_ERRORS = (NumericalCheckError, DegenerateLevelError,
                     GridCoverageError, MollifierResolutionError)


def _fail_config(exc):
    loc = f" at {exc.location}" if getattr(exc, "location", None) else ""
    click.echo(f"config error{loc}: {exc}", err=True)
    sys.exit(2)


@click.group()
@click.version_option(__version__)
def main():
    """Desk-scale experiment harness for the oscillating-kernel toolkit."""


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--results-root", default=None, metavar="DIR",
              help=f"Artifact root (default: ${RESULTS_ENV} or ./results).")
def run(config, results_root):
    """Run the scenario described by an INI CONFIG file."""
    try:
        raw = read_config(config)
        try:
            schema = scenario_schema(raw.name)
        except ConfigError as exc:
            raise ConfigError(str(exc),
                              location=raw.where("name", section="scenario"))
        params = resolve_params(schema, raw)
    except ConfigError as exc:
        _fail_config(exc)
    started = time.time()
    started_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    try:
        result = run_scenario(raw.name, params, raw.seed)
    except ConfigError as exc:
        _fail_config(exc)
    except _NUMERICAL_ERRORS as exc:
        click.echo(f"numerical failure [{type(exc).__name__}]: {exc}",
                   err=True)
        sys.exit(3)
    run_dir = make_run_dir(raw.name, results_root)
    names = []
    for stem in sorted(result.tables):
        table = result.tables[stem]
        write_csv(os.path.join(run_dir, f"{stem}.csv"), table.header,
                  table.rows)
        names.append(f"{stem}.csv")
    write_json(os.path.join(run_dir, "summary.json"), result.summary())
    names.append("summary.json")
    RunManifest(
        scenario=raw.name,
        seed=raw.seed,
        params=result.params,
        version=__version__,
        backend=backend_name(),
        started_utc=started_utc,
        wall_seconds=time.time() - started,
        outputs=RunManifest.digests(run_dir, names),
    ).write(run_dir)
    for check in result.checks:
        mark = "pass" if check.passed else "FAIL"
        click.echo(f"{mark} {check.invariant}: {check.value:.6g} "
                   f"({check.gate})")
    click.echo(run_dir)
    if not result.passed:
        failing = ", ".join(c.invariant for c in result.checks
                            if not c.passed)
        click.echo(f"numerical failure: {failing}", err=True)
        sys.exit(3)


@main.command()
@click.argument("run_a", type=click.Path(exists=True, file_okay=False))
@click.argument("run_b", type=click.Path(exists=True, file_okay=False))
def compare(run_a, run_b):
    """Per-metric relative drift between two runs of one scenario."""
    try:
        rows = compare_runs(run_a, run_b)
    except ConfigError as exc:
        _fail_config(exc)
    if not rows:
        click.echo("no numeric metrics to compare")
        return
    width = max(len(r.metric) for r in rows)
    for r in rows:
        def cell(v):
            return "missing" if v is None else f"{v:.9g}"
        drift = "n/a" if r.drift is None else f"{r.drift:.3e}"
        click.echo(f"{r.metric:<{width}}  a={cell(r.value_a)}  "
                   f"b={cell(r.value_b)}  drift={drift}")


@main.command("list-scenarios")
@click.option("--params", "show_params", is_flag=True,
              help="Include each scenario's parameter schema.")
def list_scenarios(show_params):
    """Names and one-line descriptions of the available scenarios."""
    for name in scenario_names():
        click.echo(f"{name}: {SCENARIOS[name].help}")
        if show_params:
            for key in sorted(SCENARIOS[name].schema):
                spec = SCENARIOS[name].schema[key]
                default = "auto" if spec.default is None else spec.default
                click.echo(f"  {key} ({spec.kind}, default {default}) "
                           f"{spec.help}")


if __name__ == "__main__":
    main()
