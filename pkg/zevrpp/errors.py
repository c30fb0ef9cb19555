"""Exception hierarchy."""


class ZevrppError(Exception):
    """Base class for all errors raised deliberately by zevrpp."""


class ScenarioError(ZevrppError):
    """A scenario file is malformed or inconsistent; carries its location."""

    def __init__(self, file: str, key: str, message: str) -> None:
        super().__init__(f"{file}: {key}: {message}")
        self.file = file
        self.key = key
        self.message = message


class ModelError(ZevrppError):
    """The optimization model cannot be built from the given inputs."""


class InfeasibleError(ZevrppError):
    """The solver certified that no feasible point exists."""


class ValidationFailure(ZevrppError):
    """A recovered solution violates an original-space constraint."""

    def __init__(self, constraint_label: str, violation: float) -> None:
        super().__init__(
            f"Constraint '{constraint_label}' violated by {violation:.3e} (relative)"
        )
        self.constraint_label = constraint_label
        self.violation = violation


class FitError(ZevrppError):
    """A surrogate fit could not be computed."""
