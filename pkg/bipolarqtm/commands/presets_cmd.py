from typing import Dict, List

from rich.console import Console
from rich.table import Table

from bipolarqtm.config import PRESETS, expand_preset

console = Console()


def preset_rows() -> List[Dict[str, object]]:
    rows = []
    for name in PRESETS:
        config = expand_preset(name)
        rows.append({
            "name": name,
            "potential": config.potential.kind,
            "mode": config.mode.kind,
            "p0": config.packet.p0,
            "dt": config.time.dt,
            "t_max": config.time.t_max,
            "stepper": config.time.stepper,
            "oracle": config.oracle.enabled,
        })
    return rows


def list_presets_command(ctx, json_out: bool = False) -> List[Dict[str, object]]:
    rows = preset_rows()
    if json_out:
        return rows
    out = ctx.obj.get("console", console) if ctx.obj else console
    table = Table(title="Built-in presets")
    table.add_column("Name", style="cyan")
    table.add_column("Potential")
    table.add_column("Mode")
    table.add_column("p0", justify="right")
    table.add_column("dt", justify="right")
    table.add_column("t_max", justify="right")
    table.add_column("Stepper")
    table.add_column("Oracle")
    for row in rows:
        table.add_row(
            row["name"], row["potential"], row["mode"], f"{row['p0']:.6g}",
            f"{row['dt']:g}", f"{row['t_max']:g}", row["stepper"], "on" if row["oracle"] else "off",
        )
    out.print(table)
    return rows
