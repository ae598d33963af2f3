#!/usr/bin/env python3
"""
bipolarqtm - bipolar wavepacket decomposition simulator
Main CLI entry point
"""

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.text import Text

from bipolarqtm import __version__ as APP_VERSION
from bipolarqtm.commands.presets_cmd import list_presets_command
from bipolarqtm.commands.run_cmd import run_command
from bipolarqtm.commands.validate_cmd import validate_command
from bipolarqtm.config import build_run_config, save_config
from bipolarqtm.errors import (
    AcceptanceError,
    BipolarError,
    ContaminationError,
    InstabilityError,
    SpliceError,
)
from bipolarqtm.utils.config import load_settings

app = typer.Typer(
    help="bipolarqtm: propagate bipolar (counter-propagating) wavepacket decompositions",
    add_completion=False,
)
console = Console()

BANNER = r"""
    __    _             __                 __
   / /_  (_)___  ____  / /___ ______ _____/ /_____ ___
  / __ \/ / __ \/ __ \/ / __ `/ ___/ __ `/ __/ __ `__ \
 / /_/ / / /_/ / /_/ / / /_/ / /  / /_/ / /_/ / / / / /
/_.___/_/ .___/\____/_/\__,_/_/   \__, /\__/_/ /_/ /_/
       /_/                          /_/
"""

BANNER_STYLE = "cyan bold"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORTED = 3
EXIT_ACCEPTANCE = 4


def version_callback(value: bool):
    """Display version information and exit"""
    if value:
        console.print(f"[{BANNER_STYLE}]bipolarqtm[/] version: [bold]{APP_VERSION}[/]")
        raise typer.Exit()


def configure_logging(verbose: bool, debug: bool) -> None:
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=debug, show_path=debug)],
        force=True,
    )


def exit_code_for(error: Exception) -> int:
    if isinstance(error, AcceptanceError):
        return EXIT_ACCEPTANCE
    if isinstance(error, (InstabilityError, ContaminationError, SpliceError)):
        return EXIT_ABORTED
    return EXIT_INVALID


def fail(error: Exception) -> None:
    """Print a run-ending error and exit with its mapped code."""
    code = exit_code_for(error)
    if isinstance(error, AcceptanceError):
        console.print("[red]Acceptance checks failed:[/]")
        for failure in error.failures:
            console.print(f"  [red]-[/] {failure}")
    elif isinstance(error, ValidationError):
        console.print(f"[red]Error:[/] invalid configuration\n{error}")
    else:
        console.print(f"[red]Error:[/] {error}")
    raise typer.Exit(code=code)


@app.callback()
def main(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose output"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress non-essential output"),
    settings: Optional[str] = typer.Option(None, "--settings", help="Path to the application settings file"),
    version: bool = typer.Option(False, "--version", callback=version_callback, help="Show version and exit"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug logging"),
):
    """
    bipolarqtm: bipolar wavepacket decomposition simulator

    Propagate psi = psi+ + psi- through scattering potentials and check the
    components for separation, localization and node-free behavior.
    """
    configure_logging(verbose, debug)
    ctx.obj = {
        "verbose": verbose,
        "quiet": quiet,
        "settings": load_settings(settings),
        "debug": debug,
        "console": console,
    }

    if not quiet and sys.stdout.isatty():
        console.print(Text(BANNER, style=BANNER_STYLE))
        console.print(f"[bold]bipolarqtm[/] [dim]v{APP_VERSION}[/] - bipolar wavepacket decomposition\n")


def _load(preset: Optional[str], config: Optional[str], overrides: List[str]):
    try:
        return build_run_config(preset, config, overrides)
    except (ValidationError, ValueError, KeyError, OSError) as e:
        if isinstance(e, KeyError):
            e = ValueError(e.args[0])
        fail(e)


@app.command()
def run(
    ctx: typer.Context,
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Built-in preset name (see list-presets)."),
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to a JSON run config."),
    overrides: List[str] = typer.Option([], "--set", help="Override a config field, e.g. --set time.t_max=100. Repeatable."),
    assert_checks: bool = typer.Option(False, "--assert", help="Evaluate the config's acceptance checks; exit 4 on failure."),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output directory."),
    oracle: Optional[str] = typer.Option(
        None, "--oracle", help="Force the split-step oracle on or off.",
        click_type=click.Choice(["on", "off"], case_sensitive=False),
    ),
    dump_config: Optional[Path] = typer.Option(
        None, "--dump-config", help="Write the fully expanded config to PATH and exit without running."
    ),
):
    """
    Run a preset or config file and write snapshots plus summary.json.
    """
    if oracle is not None:
        overrides = list(overrides) + [f"oracle.enabled={'true' if oracle.lower() == 'on' else 'false'}"]
    run_config = _load(preset, config, overrides)

    if dump_config is not None:
        save_config(run_config, dump_config)
        if not ctx.obj.get("quiet"):
            console.print(f"[green]Wrote expanded config to[/] {dump_config}")
        raise typer.Exit(code=EXIT_OK)

    try:
        run_command(ctx, run_config, output=output, assert_checks=assert_checks)
    except (BipolarError, ValueError) as e:
        fail(e)


@app.command()
def validate(
    ctx: typer.Context,
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Built-in preset name."),
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Path to a JSON run config."),
    overrides: List[str] = typer.Option([], "--set", help="Override a config field. Repeatable."),
    json_out: bool = typer.Option(False, "--json", help="Output findings as JSON."),
):
    """
    Report admissibility, edge clearance and a stability estimate without running.
    """
    run_config = _load(preset, config, overrides)
    try:
        findings = validate_command(ctx, run_config, json_out=json_out)
    except (BipolarError, ValueError) as e:
        fail(e)
    if json_out:
        typer.echo(json.dumps([f.model_dump() for f in findings], indent=2))


@app.command("list-presets")
def list_presets(
    ctx: typer.Context,
    json_out: bool = typer.Option(False, "--json", help="Output presets as JSON."),
):
    """
    List the built-in benchmark presets.
    """
    rows = list_presets_command(ctx, json_out=json_out)
    if json_out:
        typer.echo(json.dumps(rows, indent=2))


if __name__ == "__main__":
    app()
