"""Command-line entry points: ``driftwise run`` and ``driftwise verify``."""

from __future__ import annotations

import json
import sys

import click

from .config import RunConfig
from .errors import DriftwiseError
from .experiments import run as run_config
from .experiments import write_outputs
from .verify import run_all

_JSON_KEYS = ("stream", "model", "drift", "samplers", "study")


@click.group()
def main():
    """Streaming feature-importance experiments and self-checks."""


@main.command("run")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags override its keys.")
@click.option("--experiment", type=str, default=None,
              help="A | B | C | theory-bias | theory-variance")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--alpha", type=float, default=None)
@click.option("--sampler", type=str, default=None)
@click.option("--reservoir-size", type=int, default=None)
@click.option("--realizations", type=int, default=None)
@click.option("--interval", type=int, default=None)
@click.option("--interval-permutations", type=int, default=None)
@click.option("--stream-length", type=int, default=None)
@click.option("--shuffles", type=int, default=None)
@click.option("--loss", type=str, default=None)
@click.option("--report-every", type=int, default=None)
@click.option("--stream", type=str, default=None, help="Stream spec as JSON.")
@click.option("--model", type=str, default=None, help="Model spec as JSON.")
@click.option("--drift", type=str, default=None, help="Drift spec as JSON.")
@click.option("--samplers", type=str, default=None, help="Two sampler kinds as a JSON list.")
@click.option("--study", type=str, default=None, help="Theory-study parameters as JSON.")
def run(config_path, **flags):
    """Run one experiment and write importance.csv / study.csv, summary.json,
    and the figures into the output directory."""
    try:
        data = RunConfig.from_file(config_path).to_dict() if config_path else {}
        for key, value in flags.items():
            if value is None:
                continue
            if key in _JSON_KEYS:
                try:
                    value = json.loads(value)
                except json.JSONDecodeError as exc:
                    raise DriftwiseError(f"--{key} is not valid JSON: {exc}") from None
            data[key] = value
        config = RunConfig.from_dict(data)
        report = run_config(config)
        written = write_outputs(report, config.out)
    except DriftwiseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for path in written:
        click.echo(f"wrote {path}")


@main.command("verify")
def verify():
    """Run the analytic self-check battery; exit nonzero on any failure."""
    results = run_all()
    failed = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"[{status}] {result.name} ({result.detail})")
        failed += 0 if result.passed else 1
    click.echo(f"{len(results) - failed}/{len(results)} checks passed")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
