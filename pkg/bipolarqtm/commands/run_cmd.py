"""
This module implements the 'run' command for bipolarqtm.
It builds the initial state for the configured mode, propagates it
(two concurrent runs in splice mode), optionally cross-checks against the
split-step oracle, and writes snapshot and summary files.
"""
import asyncio
import logging
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from bipolarqtm.diagnostics import branch_split, check_conditions, summarize
from bipolarqtm.errors import AcceptanceError
from bipolarqtm.initial_conditions import (
    PacketSpec,
    free_gaussian,
    gaussian_packet,
    discarded_probability,
    multisurface_initial,
    splice_initials,
    threshold_band_probability,
)
from bipolarqtm.models.report import SummaryReport
from bipolarqtm.models.run_config import RunConfig
from bipolarqtm.numerics import make_grid
from bipolarqtm.oracle import OracleRun, unipolar_propagate
from bipolarqtm.propagator import MINUS, BipolarState, Propagation, propagate
from bipolarqtm.splicing import SplicePlan, splice_all
from bipolarqtm.utils.cli_utils import resolve_output_dir
from bipolarqtm.utils.config import Settings
from bipolarqtm.utils.storage import save_json, write_field_csv, write_snapshot_series

console = Console()
logger = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    config: RunConfig
    summary: SummaryReport
    snapshots: List[BipolarState]
    runs: Dict[str, Propagation]
    oracle: Optional[OracleRun] = None
    timings: Dict[str, float] = field(default_factory=dict)
    output_dir: Optional[Path] = None


def _setting(section, name: str, fallback):
    """Config value when the document set it explicitly, else the settings default."""
    return getattr(section, name) if name in section.model_fields_set else fallback


def _propagate(initial: BipolarState, config: RunConfig, schedule, stride: int, progress, label: str) -> Propagation:
    task = progress.add_task(label, total=max(1, config.time.n_steps))

    def on_progress(step: int, n_steps: int, norm: float) -> None:
        progress.update(task, completed=step)

    return propagate(
        initial,
        config.potential.build(),
        config.time.dt,
        config.time.t_max,
        schedule,
        stepper=config.time.stepper,
        energy_shift=config.energy_shift_value(),
        diagnostics_stride=stride,
        on_progress=on_progress,
    )


async def _propagate_pair(left: BipolarState, right: BipolarState, config, schedule, stride, progress):
    return await asyncio.gather(
        asyncio.to_thread(_propagate, left, config, schedule, stride, progress, "left (V0 = V_L)"),
        asyncio.to_thread(_propagate, right, config, schedule, stride, progress, "right (V0 = V_R)"),
    )


def _extras(config: RunConfig, spec: PacketSpec, snapshots: List[BipolarState]) -> Dict[str, float]:
    final = snapshots[-1]
    minus_norms = [float(np.max(s.component_norms()[:, MINUS])) for s in snapshots]
    x = final.grid.x
    stray = final.grid.integrate(np.where(x > config.mode.x_d, np.abs(final.components[:, MINUS]) ** 2, 0.0))
    left, right = branch_split(final.totals(), final.grid, config.mode.x_d)
    extras = {
        "minus_norm_max": max(minus_norms),
        "stray_minus_right": float(np.sum(stray)),
        "total_left_of_x_d": left,
        "total_right_of_x_d": right,
    }
    if config.potential.kind == "free" and final.n_surfaces == 1:
        exact = free_gaussian(spec, x, final.t)
        extras["analytic_deviation"] = float(np.max(np.abs(final.totals()[0] - exact)))
    return extras


def execute_run(config: RunConfig, settings: Settings, quiet: bool = False) -> RunOutcome:
    """Run the configured workflow and return results without touching the filesystem."""
    timings: Dict[str, float] = {}
    started = time.perf_counter()

    potential = config.potential.build()
    grid = make_grid(config.grid.x_left, config.grid.x_right, config.grid.n_points)
    packet = config.packet
    spec = PacketSpec(gamma=packet.gamma, x0=packet.x0, p0=packet.p0, m=packet.m, t0=packet.t0)
    f0 = gaussian_packet(spec, grid)
    v_left, v_right = config.asymptotes()
    tolerance = _setting(config.thresholds, "admissibility_tolerance", settings.admissibility_tolerance)
    stride = _setting(config.time, "diagnostics_stride", settings.diagnostics_stride)
    schedule = config.time.schedule()
    thresholds = config.thresholds.conditions(config.mode.x_d)

    progress = Progress(
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total} steps"),
        TimeElapsedColumn(),
        console=console,
        disable=quiet,
        transient=True,
    )
    runs: Dict[str, Propagation] = {}
    constituent = {}
    with progress:
        if config.mode.kind == "splice":
            left_init, right_init = splice_initials(
                f0, v_left, v_right, packet.m, packet.t0, tolerance, config.mode.max_weight
            )
            left_run, right_run = asyncio.run(
                _propagate_pair(left_init, right_init, config, schedule, stride, progress)
            )
            runs = {"left": left_run, "right": right_run}
            snapshots = splice_all(SplicePlan(config.mode.x_d, left_run, right_run))
            constituent = {
                name: check_conditions(run.snapshots, thresholds) for name, run in runs.items()
            }
            diagnostics = None
        else:
            initial = multisurface_initial(
                f0,
                potential.n_surfaces,
                packet.m,
                v_left=v_left,
                v0_eff=config.mode.v0_eff,
                incident_surface=config.mode.incident_surface,
                t0=packet.t0,
                tolerance=tolerance,
                max_weight=config.mode.max_weight,
            )
            run = _propagate(initial, config, schedule, stride, progress, config.name or "bipolar")
            runs = {"bipolar": run}
            snapshots = run.snapshots
            diagnostics = run.diagnostics
    timings["propagation_s"] = time.perf_counter() - started

    oracle_run = None
    deviation = None
    if config.oracle.enabled:
        divisor = _setting(config.oracle, "dt_divisor", settings.oracle_dt_divisor)
        mark = time.perf_counter()
        with console.status("[bold green]Running split-step oracle...", spinner="dots") if not quiet else nullcontext():
            oracle_run = unipolar_propagate(
                snapshots[0].totals(),
                potential,
                packet.m,
                config.time.dt / divisor,
                config.time.t_max,
                schedule,
                grid=grid,
                t0=packet.t0,
                dispersion=config.oracle.dispersion,
            )
        deviation = oracle_run.max_deviation(snapshots)
        tail_gap = oracle_run.max_tail_deviation(snapshots)
        timings["oracle_s"] = time.perf_counter() - mark

    summary = summarize(
        snapshots,
        thresholds,
        diagnostics=diagnostics,
        n_steps=config.time.n_steps,
        speed_fraction=config.thresholds.stage_speed_fraction,
        materialization=config.thresholds.materialization,
        constituent_reports=constituent,
        oracle_max_deviation=deviation,
    )
    summary.extras.update(_extras(config, spec, snapshots))
    if oracle_run is not None:
        summary.extras["oracle_tail_deviation"] = tail_gap
    reference = v_right if config.mode.kind == "splice" else config.mode.v0_eff
    if reference is not None and reference != v_left:
        summary.extras["discarded_below_p_min"] = discarded_probability(f0, v_left, reference, packet.m)
        summary.extras["threshold_band_probability"] = threshold_band_probability(
            f0, v_left, reference, packet.m, config.mode.max_weight
        )
    timings["total_s"] = time.perf_counter() - started
    return RunOutcome(config, summary, snapshots, runs, oracle_run, timings)


def write_outputs(outcome: RunOutcome, output_dir: Path, digits: int = 17) -> Path:
    config = outcome.config
    output_dir.mkdir(parents=True, exist_ok=True)
    if config.output.write_snapshots:
        if config.mode.kind == "splice":
            for name, run in outcome.runs.items():
                write_snapshot_series(run.snapshots, output_dir / name, digits)
            write_snapshot_series(outcome.snapshots, output_dir / "spliced", digits)
        else:
            write_snapshot_series(outcome.snapshots, output_dir / "snapshots", digits)
        if outcome.oracle is not None:
            for k, fields in enumerate(outcome.oracle.snapshots):
                write_field_csv(outcome.oracle.grid.x, fields, output_dir / "oracle" / f"snapshot_{k:05d}.csv", digits)

    save_json(
        {"summary": outcome.summary.to_dict(mode="json"), "config": config.model_dump(mode="json")},
        output_dir / "summary.json",
    )
    save_json(outcome.timings, output_dir / "timings.json")
    outcome.output_dir = output_dir
    return output_dir


def summary_table(summary: SummaryReport) -> Table:
    table = Table(title="Run summary")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    for branch in summary.branches:
        table.add_row(f"R (surface {branch.surface})", f"{branch.reflection:.6f}")
        table.add_row(f"T (surface {branch.surface})", f"{branch.transmission:.6f}")
    table.add_row("combined probability min", f"{summary.combined_prob_min:.4f} at t = {summary.combined_prob_min_time:g}")
    table.add_row("combined probability final", f"{summary.combined_prob_final:.4f}")
    table.add_row("norm drift", f"{summary.norm_drift:+.3e}")
    if summary.stage_transition_time is not None:
        table.add_row("stage transition time", f"{summary.stage_transition_time:g}")
    if summary.oracle_max_deviation is not None:
        table.add_row("oracle max deviation", f"{summary.oracle_max_deviation:.3e}")
    tails = summary.condition_report.condition2
    if tails.total_tail:
        table.add_row("max |Psi_total(x_R)|", f"{max(tails.total_tail):.3e}")
    if "threshold_band_probability" in summary.extras:
        table.add_row("discarded near threshold", f"{summary.extras['threshold_band_probability']:.3e}")
    for name, passed in sorted(summary.condition_report.verdicts.items()):
        table.add_row(name, "[green]pass[/]" if passed else "[red]fail[/]")
    return table


def run_command(
    ctx,
    config: RunConfig,
    output: Optional[str] = None,
    assert_checks: bool = False,
) -> RunOutcome:
    """
    Executes the run workflow, writes files, prints a summary, and raises
    AcceptanceError when --assert checks fail.
    """
    settings: Settings = ctx.obj["settings"]
    quiet = ctx.obj.get("quiet", False)
    out = ctx.obj.get("console", console)

    if not quiet:
        out.print(f"[cyan]Running[/] {config.get_summary()}")
    outcome = execute_run(config, settings, quiet=quiet)
    output_dir = resolve_output_dir(output, config.output.directory, settings, config.name)
    write_outputs(outcome, output_dir, settings.snapshot_digits)

    if not quiet:
        out.print(summary_table(outcome.summary))
        out.print(f"[green]Wrote[/] {output_dir}")

    if assert_checks:
        failures = config.acceptance.evaluate(outcome.summary, config.oracle.tolerance)
        if failures:
            raise AcceptanceError(failures)
        if not quiet:
            out.print("[green]All acceptance checks passed.[/]")
    return outcome
