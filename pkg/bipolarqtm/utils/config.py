import logging
from pathlib import Path

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

DEFAULT_PATH = Path.home() / ".bipolarqtm" / "config.json"


class Settings(BaseModel):
    default_output_dir: str = str(Path.home() / ".bipolarqtm" / "runs")
    snapshot_digits: int = Field(default=17, ge=1, le=17)
    diagnostics_stride: int = Field(default=100, ge=1)
    admissibility_tolerance: float = Field(default=1e-6, gt=0)
    oracle_dt_divisor: int = Field(default=10, ge=1)


def load_settings(path: str | Path | None = None) -> Settings:
    file = Path(path) if path else DEFAULT_PATH
    if file.exists():
        try:
            return Settings.model_validate_json(file.read_text(encoding="utf-8"))
        except Exception as e:
            logger.warning("Could not parse settings file %s: %s. Using default settings.", file, e)
            return Settings()

    file.parent.mkdir(parents=True, exist_ok=True)
    settings = Settings()
    file.write_text(settings.model_dump_json(indent=2), encoding="utf-8")
    return settings
