from fractions import Fraction

from tioa.analysis import Check

from .base import BaseSuite, Cell


class Milner(BaseSuite):
    """Robust consistency of token-ring schedulers with 1 to ``MILNER_MAX_NODES`` nodes."""

    delta_max = Fraction(30)
    epsilon = Fraction(1, 10)

    def cells(self) -> list[Cell]:
        nodes = int(self.settings.get("MILNER_MAX_NODES", 4))
        return [Cell(f"{n} node{'s' if n > 1 else ''}", Check.CONSISTENCY, (f"milner:{n}",)) for n in range(1, nodes + 1)]
