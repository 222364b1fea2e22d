import asyncio
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

from tioa.analysis import Check, ModelResolver, run_param
from tioa.errors import RobustaError
from tioa.model import Tioa
from utils.console import log
from utils.report import bench_row

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


@dataclass(frozen=True)
class Cell:
    """One benchmark row: a check on a model or on the composition of several."""

    label: str
    check: Check
    references: tuple[str, ...]


class BaseSuite(ABC):
    """
    Base class for benchmark suites.
    """

    delta_max = Fraction(8)
    epsilon = Fraction(1, 10)

    def __init__(self, settings: dict[str, Any], resolver: Optional[ModelResolver] = None):
        self.settings = settings
        self.resolver = resolver or ModelResolver(settings.get("COMPLETION_TARGET", "self"))
        self.name = type(self).__name__

    @abstractmethod
    def cells(self) -> list[Cell]:
        """Rows of the suite, in table order."""
        raise NotImplementedError

    @staticmethod
    def model_path(filename: str) -> str:
        return str(MODELS_DIR / filename)

    def models(self, cell: Cell) -> list[Tioa]:
        return [self.resolver.resolve(reference) for reference in cell.references]

    def run_cell(self, cell: Cell, models: list[Tioa], delta_max: Fraction, epsilon: Fraction, method: str) -> dict[str, Any]:
        try:
            outcome = run_param(
                cell.check,
                models,
                delta_max,
                epsilon,
                method,
                self.settings.get("LIMIT_STATES", 200_000),
                self.settings.get("REPLAY_MAX_VISITS", 50),
            )
        except RobustaError as e:
            log.error(f"{self.name}: {cell.label} failed: {e}")
            log.debug(f"{self.name}: cell error details", exc_info=True)
            return {"model": cell.label, "analysis": cell.check.value, "error": str(e)}
        return bench_row(cell.label, outcome)

    async def run(
        self,
        delta_max: Optional[Fraction] = None,
        epsilon: Optional[Fraction] = None,
        method: str = "both",
        workers: int = 1,
        on_done: Optional[Callable[[str], None]] = None,
    ) -> list[dict[str, Any]]:
        """
        Runs every cell, at most ``workers`` at a time, and returns the rows in table order.
        """
        delta_max = Fraction(delta_max if delta_max is not None else self.delta_max)
        epsilon = Fraction(epsilon if epsilon is not None else self.epsilon)
        cells = self.cells()
        prepared = [(cell, self.models(cell)) for cell in cells]
        semaphore = asyncio.Semaphore(max(1, workers))

        async def wrapped_task(index: int, cell: Cell, models: list[Tioa]) -> tuple[int, dict[str, Any]]:
            async with semaphore:
                row = await asyncio.to_thread(self.run_cell, cell, models, delta_max, epsilon, method)
            return index, row

        rows: list[Optional[dict[str, Any]]] = [None] * len(cells)
        tasks = [wrapped_task(i, cell, models) for i, (cell, models) in enumerate(prepared)]
        for future in asyncio.as_completed(tasks):
            index, row = await future
            rows[index] = row
            if on_done:
                on_done(cells[index].label)
        return [row for row in rows if row is not None]
