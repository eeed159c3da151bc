"""Exception types shared across the package."""


class ChamberComplexError(Exception):
    """Base class for all package errors."""


class InvariantViolation(ChamberComplexError):
    """A structural invariant of a pattern, gluing or spec document failed.

    `rule` is a stable machine-readable name, `location` an optional
    JSON-path-like string pointing into the offending document.
    """

    def __init__(self, rule, message, location=None):
        self.rule = rule
        self.message = message
        self.location = location
        prefix = f"{location}: " if location else ""
        super().__init__(f"{prefix}{message} [{rule}]")


class SpecSyntaxError(ChamberComplexError):
    """A spec document or address string failed to parse."""

    def __init__(self, message, location=None):
        self.message = message
        self.location = location
        prefix = f"{location}: " if location else ""
        super().__init__(prefix + message)


class BudgetExceeded(ChamberComplexError):
    """A lazy search ran out of its cell-materialization budget.

    `best_bound` is the best upper bound established before giving up
    (None when not even a candidate path was found).
    """

    def __init__(self, budget, cells, best_bound=None):
        self.budget = budget
        self.cells = cells
        self.best_bound = best_bound
        extra = f", best upper bound {best_bound}" if best_bound is not None else ""
        super().__init__(f"expansion budget {budget} exhausted after {cells} cells{extra}")


class DeckIncompatible(ChamberComplexError):
    """The requested deck translation does not act on some reachable wall."""

    def __init__(self, message, wall=None):
        self.wall = wall
        super().__init__(message)


class TheoremContradiction(ChamberComplexError):
    """An enforced theorem-backed scan bound was exceeded; indicates a bug."""
