"""Exception types shared across monolab."""


class MonolabError(Exception):
    """Base class for library errors."""


class DomainError(MonolabError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class CapacityError(MonolabError):
    """The instance is larger than the exact (desk-scale) algorithms support."""


class ContractViolation(MonolabError):
    """A caller-side precondition or a self-check failed."""
