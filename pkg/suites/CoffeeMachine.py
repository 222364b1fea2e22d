from fractions import Fraction

from tioa.analysis import Check

from .base import BaseSuite, Cell


class CoffeeMachine(BaseSuite):
    """The coffee machine, which has no robust margin, and its fixed variant."""

    epsilon = Fraction(1, 100)

    def cells(self) -> list[Cell]:
        return [
            Cell("Machine", Check.CONSISTENCY, (self.model_path("machine.tioa"),)),
            Cell("FixedMachine", Check.CONSISTENCY, (self.model_path("fixed_machine.tioa"),)),
        ]
