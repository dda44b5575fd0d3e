"""Exception hierarchy.

Domain errors (a requested construction does not exist for the given
parameters) derive from :class:`DomainError`; the CLI maps them to exit
code 1.  Malformed configuration documents raise :class:`SchemaError`
(exit code 2).
"""


class WeingartenError(Exception):
    """Base class for all package errors."""


class DomainError(WeingartenError):
    """The mathematical problem has no solution for the given inputs."""


class NoRoot(DomainError):
    """No value of the last principal curvature satisfies W = c."""


class NoOriginRoot(DomainError):
    """W(m, ..., m, 1) = c has no positive solution m."""


class NonSingularFamily(DomainError):
    """An origin launch was requested on a family without a singular origin."""


class OutOfRange(DomainError):
    """A parameter lies outside the range where a construction exists."""


class DegenerateHyperplane(DomainError):
    """The construction collapses to a horizontal totally geodesic slice."""


class TangencyMismatch(DomainError):
    """Pieces cannot be glued: the junction is not vertical."""


class NotElliptic(DomainError):
    """A Weingarten function failed the sampled monotonicity audit."""


class StepSizeUnderflow(WeingartenError):
    """The adaptive integrator could not make progress.

    The last accepted state is attached as ``last_state = (s, rho, rho_prime)``.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class InvalidFamily(WeingartenError, ValueError):
    """An ambient family violates its construction contract."""


class SchemaError(WeingartenError, ValueError):
    """A JSON document does not match the expected schema."""
