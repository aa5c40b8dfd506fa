"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An input violates a documented precondition."""


class UndefinedHeading(InvalidArgument):
    """Heading requested for a zero-length horizontal vector."""


class DegenerateGoal(InvalidArgument):
    """Goal coincides with the robot position; no sampling direction exists."""


class OutOfOrder(ValueError):
    """A stamped value was pushed with a non-increasing stamp."""


class NoData(LookupError):
    """Lookup on an empty queue."""


class ExtrapolationRefused(LookupError):
    """Interpolation target lies outside the retained stamps."""


class ScenarioError(ValueError):
    """Scenario document failed schema or invariant validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
