import importlib
import inspect
import pkgutil
from pathlib import Path

from suites.base import BaseSuite
from utils.console import log

SUITES_DIR = Path(__file__).resolve().parent.parent / "suites"


def suite_key(name: str) -> str:
    """Lookup key of a suite: ``university``, ``University`` and ``coffee-machine`` style names all match."""
    return name.lower().replace("-", "").replace("_", "")


def load_suites() -> dict[str, type[BaseSuite]]:
    """
    Imports every module of ``suites/`` and collects the suite class named like its module.

    Returns:
        dict[str, type[BaseSuite]]: Suite classes by lookup key, in module order.
    """
    suites: dict[str, type[BaseSuite]] = {}
    for info in sorted(pkgutil.iter_modules([str(SUITES_DIR)]), key=lambda i: i.name):
        if info.ispkg or info.name == "base":
            continue
        try:
            module = importlib.import_module(f"suites.{info.name}")
        except Exception as e:
            log.error(f"Failed to load suite {info.name}: {e}")
            log.debug("Suite load error details", exc_info=True)
            continue
        suite_class = getattr(module, info.name, None)
        if not (inspect.isclass(suite_class) and issubclass(suite_class, BaseSuite)) or inspect.isabstract(suite_class):
            log.error(f"Suite module {info.name} does not define a concrete suite class named {info.name}.")
            continue
        suites[suite_key(info.name)] = suite_class
    log.debug(f"Loaded suites: {', '.join(suites) or 'none'}")
    return suites
