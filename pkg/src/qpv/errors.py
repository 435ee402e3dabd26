"""Exception hierarchy. Everything derives from ``ValueError`` so callers that
only care about bad input can catch one type."""


class QPVError(ValueError):
    pass


class DimensionError(QPVError):
    """Shapes, subsystem splits or qubit indices do not line up."""


class CapExceededError(QPVError):
    """A dense object would exceed the configured dimension cap."""


class NotHermitianError(QPVError):
    pass


class StrategyError(QPVError):
    """A verification strategy is malformed (target does not always pass, bad weights...)."""


class ProcessError(QPVError):
    """Invalid process: non-unitary, trace increasing, or wrong kind for the operation."""


class DecompositionError(QPVError):
    """A test has no local product description across the ancilla/system cut."""
