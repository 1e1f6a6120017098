"""Exception hierarchy for py-uavnoma."""

from typing import Optional

from pydantic import ValidationError


class UavNomaError(Exception):
    """Base class of every error raised by this package."""


class DomainError(UavNomaError, ValueError):
    """A numeric input lies outside the domain of the model."""


class ContractError(UavNomaError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class ConfigError(UavNomaError, ValueError):
    """A configuration or scenario file is invalid.

    Attributes:
        field: Dotted path of the offending field, when known
        constraint: The violated constraint in human-readable form
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        constraint: Optional[str] = None,
    ):
        super().__init__(message)
        self.field = field
        self.constraint = constraint

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "field": self.field,
            "constraint": self.constraint,
        }


class ProjectionError(UavNomaError, RuntimeError):
    """Speed-constraint projection did not converge within its sweep budget."""


def config_error_from(exc: ValidationError, prefix: str = "") -> ConfigError:
    """Convert the first pydantic validation error into a ``ConfigError``."""
    first = exc.errors()[0]
    path = ".".join(str(p) for p in first.get("loc", ()))
    if prefix:
        path = f"{prefix}.{path}" if path else prefix
    constraint = first.get("msg", "invalid value")
    if constraint.startswith("Value error, "):
        constraint = constraint[len("Value error, ") :]
    message = f"{path}: {constraint}" if path else constraint
    return ConfigError(message, field=path or None, constraint=constraint)
