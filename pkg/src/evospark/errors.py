"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class EvosparkError(Exception):
    """Base class for all engine errors."""


# --- world model ---------------------------------------------------------


class ParseError(EvosparkError):
    pass


class DuplicateCode(EvosparkError):
    pass


class DanglingAdjacency(EvosparkError):
    pass


class UnknownLocation(EvosparkError):
    pass


# --- provider ------------------------------------------------------------


class ProviderError(EvosparkError):
    pass


class FixtureExhausted(ProviderError):
    pass


class MissingPlaceholder(EvosparkError):
    pass


class ValidationError(EvosparkError):
    """Structured-output validation failure with a typed reason.

    Reasons: fence, extra_prose, missing_key, extra_key, wrong_type.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


# --- narrative spine -----------------------------------------------------


class MalformedPlan(EvosparkError):
    pass


# --- stratified memory ---------------------------------------------------


class ClosedEvent(EvosparkError):
    pass


class EmptyEventBuffer(EvosparkError):
    pass


class UnknownRole(EvosparkError):
    pass


class UnknownKey(EvosparkError):
    pass


class ImmutabilityError(EvosparkError):
    pass


# --- character grounding -------------------------------------------------


class IllegalTransition(EvosparkError):
    pass


class CodeCollision(EvosparkError):
    pass


# --- stage blocking ------------------------------------------------------


class FatalMisalignment(EvosparkError):
    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class LayoutUnrecoverable(EvosparkError):
    pass


class UnknownRoleInLayout(EvosparkError):
    pass


# --- orchestration -------------------------------------------------------


class RunNotInteractive(EvosparkError):
    pass


# --- evaluation ----------------------------------------------------------


class IncompletePair(EvosparkError):
    pass


class LengthMismatch(EvosparkError):
    pass


class EmptyInput(EvosparkError):
    pass


# --- service -------------------------------------------------------------


class ConfigError(EvosparkError):
    pass


class UnknownRun(EvosparkError):
    pass


class UnknownSpark(EvosparkError):
    pass


class NotAwaiting(EvosparkError):
    pass


class UnknownPhase(EvosparkError):
    pass
