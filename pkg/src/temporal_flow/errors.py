"""Exception hierarchy.

Every error raised by the package derives from :class:`TemporalFlowError`, so
the CLI can turn any of them into a machine-readable error document.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Issue:
    """One validation problem found during ingestion."""

    kind: str  # schema | data | roster | mapping
    message: str
    row: int | None = None
    possession_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "row": self.row,
            "possession_id": self.possession_id,
            "message": self.message,
        }


class TemporalFlowError(Exception):
    kind = "error"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class SchemaError(TemporalFlowError):
    kind = "schema"


class DataError(TemporalFlowError):
    """Invariant violations in the event data; carries every issue found."""

    kind = "data"

    def __init__(self, message: str, issues: list[Issue] | tuple[Issue, ...] = ()):
        super().__init__(message)
        self.issues = tuple(issues)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["issues"] = [i.to_dict() for i in self.issues]
        return d


class RosterError(DataError):
    kind = "roster"


class MappingError(TemporalFlowError):
    kind = "mapping"


class WindowError(TemporalFlowError):
    kind = "window"


class ClassificationError(TemporalFlowError):
    kind = "classification"


class UndefinedMetricError(TemporalFlowError, ValueError):
    """A metric or statistic whose denominator is empty."""

    kind = "undefined"


class ChiSquareError(TemporalFlowError):
    kind = "chi2"


class ConfigError(TemporalFlowError, ValueError):
    kind = "config"
