import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

from bipolarqtm.utils.config import Settings


def parse_override(item: str) -> Tuple[str, Any]:
    """Split 'a.b=value'; the value is read as a JSON literal when it parses, else kept as text."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"override '{item}' is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(document: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Set dotted keys on a nested dict in place and return it."""
    for item in overrides:
        key, value = parse_override(item)
        parts = key.split(".")
        node = document
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ValueError(f"cannot set '{key}': '{part}' is not a section")
            node = child
        node[parts[-1]] = value
    return document


def resolve_output_dir(
    requested: Optional[str], configured: Optional[str], settings: Settings, run_name: Optional[str]
) -> Path:
    """--output wins, then the config's output.directory, then the settings default."""
    if requested:
        return Path(requested).expanduser().resolve()
    if configured:
        return Path(configured).expanduser().resolve()
    return (Path(settings.default_output_dir).expanduser() / (run_name or "custom")).resolve()
