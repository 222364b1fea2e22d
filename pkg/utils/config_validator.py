import importlib.util
import os
from fractions import Fraction
from pathlib import Path
from typing import Any

from utils.console import log

ROOT = Path(__file__).resolve().parent.parent
LIMIT_ENV = "ROBUSTA_LIMIT_STATES"

DEFAULTS: dict[str, Any] = {
    "LIMIT_STATES": 200_000,
    "DELTA_MAX": "8",
    "EPSILON": "1/10",
    "METHOD": "both",
    "REPORT_FORMAT": "text",
    "BENCH_WORKERS": 2,
    "STRICT_IMPLEMENTATION": False,
    "COMPLETION_TARGET": "self",
    "REPLAY_MAX_VISITS": 50,
    "MILNER_MAX_NODES": 4,
    "SEED": 0,
}


def _import_settings(path: Path) -> dict[str, Any]:
    spec = importlib.util.spec_from_file_location(path.stem.replace("-", "_"), path)
    if spec is None or spec.loader is None:
        raise ImportError(f"cannot load {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return dict(module.SETTINGS)


def _check(settings: dict[str, Any]):
    for key in ("LIMIT_STATES", "BENCH_WORKERS", "REPLAY_MAX_VISITS", "MILNER_MAX_NODES"):
        if not isinstance(settings[key], int) or settings[key] < 1:
            raise ValueError(f"{key} must be a positive integer")
    for key in ("DELTA_MAX", "EPSILON"):
        if Fraction(str(settings[key])) <= 0:
            raise ValueError(f"{key} must be a positive rational")
    if settings["METHOD"] not in ("cr", "bs", "both"):
        raise ValueError("METHOD must be one of cr, bs, both")
    if settings["REPORT_FORMAT"] not in ("text", "structured"):
        raise ValueError("REPORT_FORMAT must be text or structured")
    if settings["COMPLETION_TARGET"] not in ("self", "universal"):
        raise ValueError("COMPLETION_TARGET must be self or universal")


def load_config(path: Path | None = None) -> dict[str, Any]:
    """
    Loads the settings of ``config.py``, falling back to ``example-config.py``.

    Missing keys take their default; ``ROBUSTA_LIMIT_STATES`` overrides the
    state limit. An invalid configuration is a usage error (exit code 2).
    """
    candidates = [path] if path else [ROOT / "config.py", ROOT / "example-config.py"]
    settings = dict(DEFAULTS)
    try:
        source = next((p for p in candidates if p.exists()), None)
        if source is None:
            log.debug("No config.py found, using built-in defaults.")
        else:
            if source.name != "config.py":
                log.debug(f"config.py not found, using {source.name}.")
            settings.update(_import_settings(source))
        override = os.environ.get(LIMIT_ENV)
        if override:
            settings["LIMIT_STATES"] = int(override)
        _check(settings)
    except Exception as e:
        log.error(f"Error loading configuration: {e}")
        log.debug("Config error details", exc_info=True)
        log.error("Check example-config.py for the expected fields.")
        exit(2)
    return settings
