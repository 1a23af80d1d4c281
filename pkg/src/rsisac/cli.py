"""Command-line entry points for the experiment harness."""

from __future__ import annotations

import click

from . import harness


def _load(config_path: str, seed: int | None) -> harness.ExperimentConfig:
    config = harness.load_config(config_path)
    if seed is not None:
        config.run.master_seed = seed
    return config


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False)
)
out_option = click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
seed_option = click.option("--seed", type=int, default=None, help="Override run.master_seed")
jobs_option = click.option("--jobs", type=int, default=None, help="Worker processes")


@click.group()
def main() -> None:
    """Sensing/communication waveform design experiments."""


@main.command("run-tradeoff")
@config_option
@out_option
@seed_option
@jobs_option
def run_tradeoff_cmd(config_path, out_dir, seed, jobs) -> None:
    """Trade-off sweep over the lambda grid (terrestrial)."""
    config = _load(config_path, seed)
    paths = harness.run_tradeoff(config, out_dir, jobs=jobs)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command("run-estimation")
@config_option
@out_option
@seed_option
@jobs_option
def run_estimation_cmd(config_path, out_dir, seed, jobs) -> None:
    """Rate-constrained designs plus Monte-Carlo estimation RMSE."""
    config = _load(config_path, seed)
    paths = harness.run_estimation(config, out_dir, jobs=jobs)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command("run-satellite")
@config_option
@out_option
@seed_option
@jobs_option
def run_satellite_cmd(config_path, out_dir, seed, jobs) -> None:
    """Multibeam multicast trade-off sweep."""
    config = _load(config_path, seed)
    paths = harness.run_satellite(config, out_dir, jobs=jobs)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command("report")
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
def report_cmd(results_dir, out_dir) -> None:
    """Aggregate record CSVs into per-figure summary tables."""
    try:
        paths = harness.report(results_dir, out_dir)
    except FileNotFoundError as exc:
        raise click.ClickException(str(exc)) from None
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command("gen-channels")
@config_option
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@seed_option
@click.option("--realization", type=int, default=0)
def gen_channels_cmd(config_path, out_path, seed, realization) -> None:
    """Generate a channel set and save it in the channel file format."""
    config = _load(config_path, seed)
    path = harness.generate_channels(config, out_path, realization)
    click.echo(f"channels: {path}")


if __name__ == "__main__":
    main()
