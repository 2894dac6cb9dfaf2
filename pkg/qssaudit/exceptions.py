"""
Exception hierarchy.

Numerical failures inside a simulation are encoded in terminations and
statuses; these exceptions cover bad input and failed one-shot solves.
"""


class QssAuditError(Exception):
    """Root of every error raised by the package."""


class SpecError(QssAuditError):
    """Invalid system or scenario description."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class SingularMatrix(QssAuditError):
    """A dense LU factorisation met a negligible pivot."""


class SingularAlgebraic(QssAuditError):
    """The algebraic Jacobian g_y is singular or too ill-conditioned."""

    def __init__(self, condition: float):
        super().__init__(f"g_y is singular (condition estimate {condition:.3e})")
        self.condition = condition


class NotOnManifold(QssAuditError):
    """A state expected on the constraint manifold violates f = 0, g = 0."""


class PowerFlowDiverged(QssAuditError):
    """The initial power flow did not converge."""


class InfeasibleDeviceInit(QssAuditError):
    """A device cannot be initialised at the power-flow solution."""


class FaultNotActive(QssAuditError):
    """A ClearFault event refers to a bus without an active fault."""


class NewtonFailure(QssAuditError):
    """A Newton solve inside a step did not converge."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class QssSingularity(NewtonFailure):
    """The QSS Newton iteration failed: the manifold cannot be followed."""


class NotFixedPoint(QssAuditError):
    """A long-term equilibrium candidate would still trigger a discrete action."""


class EmptyOverlap(QssAuditError):
    """Two trajectories share no common time interval."""


class SpectrumError(QssAuditError):
    """The eigenvalue computation did not converge."""
