"""Exception hierarchy shared across the package."""


class SasimError(Exception):
    """Base class for all package-specific errors."""


class InvalidTrajectory(SasimError):
    """Trajectory violates its invariants (empty, non-finite, or corrupt steps)."""


class MalformedCandidateSet(SasimError):
    """Candidate trajectories disagree in length or the set is empty."""


class MalformedResponse(SasimError):
    """Arbiter backend reply could not be parsed into a decision."""


class VlmUnavailable(SasimError):
    """Reasoning service unreachable after all retries."""


class ConfigError(SasimError):
    """Configuration file or environment is invalid."""


class RuleParseError(SasimError):
    """Decision-tree rule text failed to parse.

    Carries the 1-based line number of the offending rule.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioLoadError(SasimError):
    """Scenario file missing, unreadable, or schema-invalid."""


class MissingAnnotations(SasimError):
    """Scenario lacks the correct/incorrect plan annotations a caller needs."""


class OutOfBounds(SasimError):
    """Grid cell outside the occupancy grid."""


class StartOccupied(SasimError):
    """Path search started from an occupied cell."""


class EmptyResultSet(SasimError):
    """Aggregation requested over zero episode results."""
