"""Exception types shared across the package."""


class SecurePacError(Exception):
    """Base class for all package errors."""


class DomainError(SecurePacError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateInputError(DomainError):
    """Inputs are in range but make the requested quantity undefined."""


class InfeasibleDesignError(SecurePacError):
    """The halting design cannot reach the target confidence at any budget."""


class InsufficientSiftedSamplesError(SecurePacError):
    """Basis sifting left fewer usable samples than the phase requires."""


class ContractViolation(SecurePacError, RuntimeError):
    """An object was used in a state its contract forbids."""


class ConfigError(SecurePacError, ValueError):
    """A run configuration failed validation.

    The message always starts with the offending field path.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
