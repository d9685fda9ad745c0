from dataclasses import dataclass
from typing import Any, Dict, List, Optional


class CdnEnergySimError(Exception):
    """Base exception class for the CDN energy simulator."""

    def __init__(
        self,
        message: str,
        cause: Optional[BaseException] = None,
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.cause = cause
        self.context = context or {}


class ConfigurationError(CdnEnergySimError):
    """Exception raised for runtime settings errors."""

    def __init__(
        self, message: str, invalid_keys: Optional[List[str]] = None, **kwargs: Any
    ) -> None:
        super().__init__(message, **kwargs)
        self.invalid_keys = invalid_keys or []


class ScenarioError(CdnEnergySimError):
    """Base class for problems with a scenario document."""


class ScenarioParseError(ScenarioError):
    """Raised when the scenario document is not well-formed JSON."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        **kwargs: Any,
    ) -> None:
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message, **kwargs)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ValidationIssue:
    """A single violated constraint, addressed by dotted field path."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ScenarioValidationError(ScenarioError):
    """Raised when a scenario document violates one or more constraints."""

    def __init__(self, issues: List[ValidationIssue], **kwargs: Any) -> None:
        super().__init__("\n".join(str(issue) for issue in issues), **kwargs)
        self.issues = list(issues)


class DanglingReferenceError(ScenarioValidationError):
    """Raised when an id referenced by the scenario does not exist."""


class TopologyError(ScenarioError):
    """Raised for path queries that do not follow the CDN tree."""


class EnergyModelError(CdnEnergySimError):
    """Base class for energy model precondition violations."""


class NegativeEnergyError(EnergyModelError):
    """Raised when a negative amount is posted to an energy ledger."""


class RateExceedsPhyError(EnergyModelError):
    """Raised when a stream bitrate exceeds the device's PHY rate."""

    def __init__(
        self, message: str, bitrate_bps: float, phy_rate_bps: float, **kwargs: Any
    ) -> None:
        super().__init__(message, **kwargs)
        self.bitrate_bps = bitrate_bps
        self.phy_rate_bps = phy_rate_bps


class SimulationInvariantError(CdnEnergySimError):
    """Raised when the engine detects a broken internal invariant."""

    def __init__(self, invariant: str, message: str, **kwargs: Any) -> None:
        super().__init__(f"invariant '{invariant}' violated: {message}", **kwargs)
        self.invariant = invariant


class ReportWriteError(CdnEnergySimError):
    """Raised when a report file cannot be written."""

    def __init__(self, message: str, path: str, **kwargs: Any) -> None:
        super().__init__(f"{message}: {path}", **kwargs)
        self.path = path


class SweepError(CdnEnergySimError):
    """Raised for sweep specifications that cannot be applied."""
