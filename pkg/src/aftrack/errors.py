"""Exception hierarchy.

Validation problems (bad inputs, infeasible targets) derive from
``ValidationError``; solver trouble derives from ``NumericalError``.  The CLI
maps the first to exit code 2 and the second to exit code 3.
"""


class ValidationError(ValueError):
    """Input violates a documented invariant."""


class ScenarioError(ValidationError):
    """Scenario file could not be parsed or validated."""


class ZeroChannelError(ValidationError):
    """Channel vector is identically zero."""


class InfeasibleTargetError(ValidationError):
    """MSE target lies outside the achievable interval."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a trustworthy answer."""


class NotPositiveDefiniteError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class RankOneError(NumericalError):
    """Relaxed SDP solution is not rank-one where it should be."""

    def __init__(self, msg, ratio=None):
        super().__init__(msg)
        self.ratio = ratio
