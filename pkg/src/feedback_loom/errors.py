"""Shared exception types and the validation-result container.

Every protocol-visible error carries a stable ``code`` string so transports
can report rejections uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class FeedbackLoomError(Exception):
    """Base class for all session-engine errors."""

    code = "error"


class SequenceGapError(FeedbackLoomError):
    """Event sequence number is not last_seq + 1. Indicates a sequencing bug."""

    code = "sequence_gap"


class PhaseViolationError(FeedbackLoomError):
    """Event kind not permitted in the session's current phase."""

    code = "phase_violation"


class AlreadyClosedError(FeedbackLoomError):
    code = "already_closed"


class UnknownSeatError(FeedbackLoomError):
    code = "unknown_seat"


class UnknownChannelError(FeedbackLoomError):
    code = "unknown_channel"


class UnknownKindError(FeedbackLoomError):
    code = "unknown_kind"


class MalformedPayloadError(FeedbackLoomError):
    code = "malformed_payload"


class UnauthorizedSourceError(FeedbackLoomError):
    """Feedback input whose (source, target) pair is outside the registry."""

    code = "unauthorized_source"


class NotARecipientError(FeedbackLoomError):
    """Feedback target is not in the session's configured recipient set."""

    code = "not_a_recipient"


class NoValidAssignmentError(FeedbackLoomError):
    """No permutation satisfies the evaluator-assignment constraints."""

    code = "no_valid_assignment"

    def __init__(self, n_seats: int):
        super().__init__(f"no valid assignment exists for {n_seats} seats")
        self.n_seats = n_seats


class ConfigMismatchError(FeedbackLoomError):
    """Replay was given a config that differs from the log's setup event."""

    code = "config_mismatch"


class EmptyWindowError(FeedbackLoomError):
    code = "empty_window"


class EmptyInputError(FeedbackLoomError):
    code = "empty_input"


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of a non-raising check: ok, or a list of violation strings."""

    ok: bool
    violations: tuple[str, ...] = field(default=())

    @classmethod
    def passed(cls) -> "ValidationResult":
        return cls(ok=True)

    @classmethod
    def failed(cls, *violations: str) -> "ValidationResult":
        return cls(ok=False, violations=tuple(violations))

    def __bool__(self) -> bool:
        return self.ok
