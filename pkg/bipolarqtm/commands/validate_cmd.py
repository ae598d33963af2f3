"""
Pre-flight checks for a run configuration. Nothing here allocates more than
the initial packet, and the config is never modified.
"""
import math
from typing import List

from rich.console import Console
from rich.table import Table

from bipolarqtm.initial_conditions import (
    DISCARD_FACTOR,
    PacketSpec,
    gaussian_values,
    minimum_momentum,
    negative_momentum_probability,
)
from bipolarqtm.models.report import Finding
from bipolarqtm.models.run_config import RunConfig
from bipolarqtm.numerics import EDGE_TOLERANCE, HBAR, ComplexField, make_grid
from bipolarqtm.propagator import NORM_LIMIT

console = Console()

RK4_STABILITY = 2.78
ROUNDOFF = 1e-16


def reference_momentum(config: RunConfig) -> float:
    """p_min for the decomposition the run will actually use."""
    v_left, v_right = config.asymptotes()
    if config.mode.kind == "splice":
        return minimum_momentum(v_left, v_right, config.packet.m)
    if config.mode.v0_eff is not None:
        return minimum_momentum(v_left, config.mode.v0_eff, config.packet.m)
    return 0.0


def spectral_radius(config: RunConfig) -> float:
    """Largest |eigenvalue| of the discrete H: kinetic stencil bound plus max |V|."""
    grid = make_grid(config.grid.x_left, config.grid.x_right, config.grid.n_points)
    v = config.potential.build().matrix(grid.x)
    kinetic = 2.0 * HBAR * HBAR / (config.packet.m * grid.dx ** 2)
    coupling = float(max(abs(v[i]).sum(axis=0).max() for i in range(v.shape[0]))) if v.size else 0.0
    return (kinetic + coupling - config.energy_shift_value()) / HBAR


def validate_config(config: RunConfig) -> List[Finding]:
    findings: List[Finding] = []
    grid = make_grid(config.grid.x_left, config.grid.x_right, config.grid.n_points)
    packet = config.packet
    spec = PacketSpec(gamma=packet.gamma, x0=packet.x0, p0=packet.p0, m=packet.m, t0=packet.t0)
    tolerance = config.thresholds.admissibility_tolerance

    clearance = spec.edge_ratio(grid) if grid.x_left < spec.x0 < grid.x_right else 1.0
    if clearance >= EDGE_TOLERANCE:
        findings.append(Finding(
            kind="edge_clearance",
            message=f"packet at x0 = {spec.x0} is not clear of the grid edges (|psi(edge)|/peak = {clearance:.3g})",
            value=clearance,
            limit=EDGE_TOLERANCE,
        ))
    else:
        p_min = reference_momentum(config)
        f0 = ComplexField(gaussian_values(spec, grid.x), grid)
        below = negative_momentum_probability(f0, p_min)
        # runs with p_min > 0 discard sub-threshold bins up to DISCARD_FACTOR * tolerance
        limit = DISCARD_FACTOR * tolerance if p_min > 0.0 else tolerance
        if below > limit:
            findings.append(Finding(
                kind="admissibility",
                message=f"{below:.3g} of the initial probability has p < {p_min:.6g}",
                value=below,
                limit=limit,
            ))

    radius = abs(spectral_radius(config))
    step = config.time.dt * radius
    if config.time.stepper == "rk4":
        if step >= RK4_STABILITY:
            findings.append(Finding(
                kind="stability",
                message=f"dt * lambda_max = {step:.3g} is outside the RK4 stability interval",
                value=step,
                limit=RK4_STABILITY,
            ))
    else:
        growth = 0.5 * config.time.n_steps * step * step
        limit = math.log(NORM_LIMIT / ROUNDOFF)
        if growth > limit:
            findings.append(Finding(
                kind="stability",
                message=(
                    f"forward Euler amplifies the stiffest mode by e^{growth:.3g} over "
                    f"{config.time.n_steps} steps (dt * lambda_max = {step:.3g})"
                ),
                value=growth,
                limit=limit,
            ))
    return findings


def validate_command(ctx, config: RunConfig, json_out: bool = False) -> List[Finding]:
    findings = validate_config(config)
    if json_out:
        return findings
    out = ctx.obj.get("console", console) if ctx.obj else console
    if not findings:
        out.print(f"[green]No findings[/] for {config.get_summary()}")
        return findings
    table = Table(title=f"Findings for {config.name or 'custom config'}")
    table.add_column("Kind", style="yellow")
    table.add_column("Value", justify="right")
    table.add_column("Limit", justify="right")
    table.add_column("Detail")
    for finding in findings:
        table.add_row(
            finding.kind,
            f"{finding.value:.3g}" if finding.value is not None else "",
            f"{finding.limit:.3g}" if finding.limit is not None else "",
            finding.message,
        )
    out.print(table)
    return findings
