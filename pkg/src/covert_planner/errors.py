"""Exception types shared across the planner."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class ConfigError(PlannerError):
    """Scenario config rejected; message carries the offending field path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConstraintError(PlannerError):
    """A named scenario/plan invariant is violated."""

    def __init__(self, constraint, message):
        self.constraint = constraint
        super().__init__(f"{constraint}: {message}")


class ParameterError(PlannerError):
    """Argument outside the documented domain of an operation."""


class GeometryError(PlannerError):
    """Degenerate or singular geometry (coincident points, empty annulus)."""


class ShapeError(PlannerError):
    """Mismatched array dimensions between related objects."""


class InfeasibleError(PlannerError):
    """No feasible plan/point exists; message names the binding constraint."""


class SolverInputError(PlannerError):
    """Convex program or matrix input rejected by the solver."""
