"""Exception types shared across the model, harness, oracle, and CLI."""


class SnapshotModelError(Exception):
    """Base class for every error raised by this package."""


class UnknownTimestampError(SnapshotModelError):
    """A timestamp was looked up that is not present in the history."""


class UninitializedPointerError(SnapshotModelError):
    """Replay reached a point where one pointer has no write yet."""


class ValueDomainError(SnapshotModelError):
    """A write value lies outside the configured value domain."""


class GuardViolationError(SnapshotModelError):
    """An auxiliary transition was applied in a state its guard forbids.

    The scheduler only applies enabled steps, so this indicates a harness
    bug, never a property of the explored program.
    """


class DisabledStepError(SnapshotModelError):
    """A step was applied while disabled (e.g. its lock is held)."""


class ScheduleError(SnapshotModelError):
    """A schedule names a thread with no enabled step, or ends too early."""


class BudgetExceededError(SnapshotModelError):
    """Exploration exceeded its state budget."""


class TraceParseError(SnapshotModelError):
    """A trace or program file could not be parsed."""


class OracleSizeError(SnapshotModelError):
    """Too many operations for factorial witness enumeration."""
