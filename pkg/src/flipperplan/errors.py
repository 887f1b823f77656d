"""Exception types raised across the planner."""


class PlannerError(Exception):
    """Base class for all planner failures."""


class MapFormatError(PlannerError, ValueError):
    """Malformed map file or inconsistent grid data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfMapError(PlannerError, ValueError):
    """A query point lies outside the map footprint."""


class ContactError(PlannerError):
    """A rotate-to-contact search could not produce a touching configuration."""


class PunctureError(ContactError):
    """The moving set already punctures the surface at the start angle."""


class NoContactError(ContactError):
    """The moving set never touches the surface inside the search interval."""


class DeadEndError(PlannerError):
    """The greedy search found no feasible configuration for the next step."""

    def __init__(self, x, diagnostics=""):
        msg = f"no feasible configuration at reference x={x:.4f}"
        if diagnostics:
            msg += f" ({diagnostics})"
        super().__init__(msg)
        self.x = x
        self.diagnostics = diagnostics


class ParamsError(PlannerError, ValueError):
    """Invalid robot parameters or configuration keys."""
