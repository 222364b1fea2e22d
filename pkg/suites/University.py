from tioa.analysis import Check

from .base import BaseSuite, Cell


class University(BaseSuite):
    """
    Coffee machine, researcher and administration, alone and composed.

    Consistency is checked on every component and on the compositions;
    compatibility on the two compositions that involve the researcher.
    """

    def cells(self) -> list[Cell]:
        path = self.model_path("university.tioa")
        m, r, a = f"{path}#M", f"{path}#R", f"{path}#A"
        consistency = [
            ("M", (m,)),
            ("R", (r,)),
            ("A", (a,)),
            ("M||A", (m, a)),
            ("R||A", (r, a)),
            ("M||R", (m, r)),
            ("M||R||A", (m, r, a)),
        ]
        compatibility = [
            ("M||R", (m, r)),
            ("M||R||A", (m, r, a)),
        ]
        return [Cell(label, Check.CONSISTENCY, refs) for label, refs in consistency] + [
            Cell(label, Check.COMPATIBILITY, refs) for label, refs in compatibility
        ]
