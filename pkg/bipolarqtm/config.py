import copy
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from bipolarqtm.models.run_config import RunConfig
from bipolarqtm.utils.cli_utils import apply_overrides

APP_NAME = "bipolarqtm"
CONFIG_FILE_NAME = "config.json"

PROTON_MASS = 2000.0
PROTON_PACKET = {"gamma": 0.35, "x0": -7.0, "m": PROTON_MASS}
PROTON_P0 = math.sqrt(2.0 * PROTON_MASS * 0.0027)

PROTON_ACCEPTANCE = {
    "combined_prob_initial_tolerance": 1e-6,
    "combined_prob_min_window": [0.84, 0.88],
    "combined_prob_final_tolerance": 0.01,
    "rt_tolerance": 0.01,
    "conditions": ["condition1", "condition2_initial", "condition3"],
    "tail_identity_tolerance": 1e-6,
    "stage_after_peak": True,
}

BARRIER_RAMP = {"kind": "barrier_ramp", "v0": 0.0020, "alpha": 2.5, "beta": 2.5, "v_left": 0.0, "v_right": 0.0008}

PRESETS: Dict[str, Dict[str, Any]] = {
    "eckart-proton": {
        "potential": {"kind": "eckart", "v0": 0.0024, "alpha": 2.5},
        "packet": {**PROTON_PACKET, "p0": PROTON_P0},
        "time": {"dt": 0.1, "t_max": 11600.0, "snapshot_count": 117, "energy_shift": "incident"},
        "oracle": {"enabled": True},
        "acceptance": PROTON_ACCEPTANCE,
    },
    "eckart-proton-fine": {
        "potential": {"kind": "eckart", "v0": 0.0024, "alpha": 2.5},
        "packet": {**PROTON_PACKET, "p0": PROTON_P0},
        "grid": {"n_points": 5000},
        "time": {
            "dt": 0.1, "t_max": 11600.0, "snapshot_count": 117,
            "stepper": "rk4", "energy_shift": "incident",
        },
        "oracle": {"enabled": True},
        "acceptance": {**PROTON_ACCEPTANCE, "oracle_gate": True},
    },
    "eckart-electron": {
        "potential": {"kind": "eckart", "v0": 20.0, "alpha": 1.0},
        "packet": {"gamma": 1.0, "x0": -7.5, "p0": math.sqrt(60.0), "m": 1.0},
        "time": {
            "dt": 2.5e-4, "t_max": 2.5, "snapshot_count": 101,
            "stepper": "rk4", "energy_shift": "incident",
        },
        "oracle": {"enabled": True},
        "acceptance": {"rt_tolerance": 0.01},
    },
    "barrier-ramp-spliced": {
        "potential": BARRIER_RAMP,
        "packet": {**PROTON_PACKET, "p0": 4.0},
        "time": {"dt": 0.1, "t_max": 9570.0, "snapshot_count": 88, "energy_shift": "incident"},
        "mode": {"kind": "splice", "x_d": 0.0},
        "acceptance": {"rt_tolerance": 0.01, "constituent_conditions": ["condition3"]},
    },
    "barrier-ramp-left": {
        "potential": BARRIER_RAMP,
        "packet": {**PROTON_PACKET, "p0": PROTON_P0},
        "time": {"dt": 0.1, "t_max": 11600.0, "snapshot_count": 117, "energy_shift": "incident"},
        "acceptance": {"expect_condition1_violation": True},
    },
    "two-surface": {
        "potential": {"kind": "two_surface", "v0": 0.0024, "d0": 0.00072, "alpha": 2.5},
        "packet": {**PROTON_PACKET, "p0": PROTON_P0},
        "time": {"dt": 0.1, "t_max": 11600.0, "snapshot_count": 117, "energy_shift": "incident"},
        "mode": {"kind": "multisurface"},
        "acceptance": {
            "conditions": ["condition3"],
            "total_norm_final_tolerance": 0.01,
            "min_branch_probability": 0.02,
        },
    },
    "two-surface-decoupled": {
        "potential": {"kind": "two_surface", "v0": 0.0024, "d0": 0.0, "alpha": 2.5},
        "packet": {**PROTON_PACKET, "p0": PROTON_P0},
        "time": {"dt": 0.1, "t_max": 11600.0, "snapshot_count": 117, "energy_shift": "incident"},
        "mode": {"kind": "multisurface"},
        "acceptance": {"total_norm_final_tolerance": 0.01},
    },
    "free-particle": {
        "potential": {"kind": "free"},
        "packet": {**PROTON_PACKET, "p0": 0.0},
        "grid": {"n_points": 12001},
        "time": {"dt": 0.01, "t_max": 500.0, "snapshot_count": 11, "stepper": "rk4"},
        "acceptance": {"minus_norm_max": 0.0, "analytic_free_tolerance": 1e-6},
    },
}


def get_default_config_path() -> Path:
    """Returns the default path for the application settings file."""
    return Path.home() / f".{APP_NAME}" / CONFIG_FILE_NAME


def preset_document(name: str) -> Dict[str, Any]:
    if name not in PRESETS:
        raise KeyError(f"unknown preset '{name}' (available: {', '.join(sorted(PRESETS))})")
    document = copy.deepcopy(PRESETS[name])
    document["name"] = name
    return document


def expand_preset(name: str) -> RunConfig:
    """Fully explicit RunConfig for a built-in preset."""
    return RunConfig.model_validate(preset_document(name))


def load_run_config(path: str | Path) -> RunConfig:
    return RunConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


def build_run_config(
    preset: Optional[str] = None,
    config_path: Optional[str | Path] = None,
    overrides: Iterable[str] = (),
) -> RunConfig:
    """
    Start from a preset or a config file (the file wins when both are
    given), apply --set overrides on the raw document, then validate.
    """
    if config_path:
        document = json.loads(Path(config_path).read_text(encoding="utf-8"))
    elif preset:
        document = preset_document(preset)
    else:
        raise ValueError("give --preset or --config")
    apply_overrides(document, overrides)
    return RunConfig.model_validate(document)


def save_config(config_data: Dict[str, Any] | RunConfig, path: Path | None = None):
    """Saves a configuration dictionary (or RunConfig) to a JSON file."""
    config_file_path = path if path else get_default_config_path()
    config_file_path = Path(config_file_path)
    config_file_path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(config_data, RunConfig):
        config_data = config_data.model_dump(mode="json")
    with open(config_file_path, 'w', encoding='utf-8') as f:
        json.dump(config_data, f, indent=2)
        f.write("\n")
