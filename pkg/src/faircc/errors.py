"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConfigError(ValueError):
    """A run configuration is malformed or internally inconsistent."""


class ContractViolation(ValueError):
    """A slot decision breaks the preconditions of a queue update."""
