"""Small built-in specs used by tests, docs and the CLI examples."""

from __future__ import annotations

from fractions import Fraction

from .cover import Gluing, GluingMap, ManifoldSpec
from .surface import make_pattern

HALF = (Fraction(1, 2), Fraction(1, 2))


def pants_swap_spec() -> ManifoldSpec:
    """One pair-of-pants-like type, circles a / b / b^-1 a^-1.

    Circles 1 and 2 are glued to each other by the swap matrix; circle 3
    stays a boundary wall.  Both glued circles have one arc, so fiber
    deck maps act everywhere.
    """
    pattern = make_pattern(2, ["a", "b", "b^-1a^-1"], label="P")
    swap = GluingMap(((0, 1), (1, 0)), HALF)
    return ManifoldSpec((pattern,), (Gluing(("P", 0), ("P", 1), swap),), condition="C")


def shear_spec(shear: int = 1) -> ManifoldSpec:
    """Same pattern, glued through [[1, shear], [0, 1]]; condition (C) needs shear != 0."""
    pattern = make_pattern(2, ["a", "b", "b^-1a^-1"], label="P")
    mat = GluingMap(((1, shear), (0, 1)), HALF)
    return ManifoldSpec((pattern,), (Gluing(("P", 0), ("P", 1), mat),), condition="C")


def vertical_b_spec() -> ManifoldSpec:
    """Condition (B): a single type whose two circles are glued vertically."""
    pattern = make_pattern(2, ["a", "b"], label="V")
    mat = GluingMap(((1, 0), (0, 1)), HALF)
    return ManifoldSpec((pattern,), (Gluing(("V", 0), ("V", 1), mat),), condition="B")


FIXTURES = {
    "pants-swap": pants_swap_spec,
    "shear": shear_spec,
    "vertical-b": vertical_b_spec,
}
