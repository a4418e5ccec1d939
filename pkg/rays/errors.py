#!/usr/bin/env python3
"""
Error hierarchy for the rays toolkit
Every failure a computation can report is a subclass of RaysError. UsageError
subclasses map to exit code 2 on the command line, TracerError subclasses to 3.
"""


class RaysError(Exception):
    """Base class; keeps keyword context (index, address, point) for reports"""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    @property
    def case(self):
        return type(self).__name__

    def describe(self):
        if not self.context:
            return f"{self.case}: {self}"
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
        return f"{self.case}: {self} ({details})"


class UsageError(RaysError):
    """Bad input: arguments, configuration, address text"""


class TracerError(RaysError):
    """A numerical computation could not deliver its postcondition"""


# map-models
class InsideD(TracerError):
    pass


class OnDelta(TracerError):
    pass


class NotInTract(TracerError):
    pass


class NoConvergence(TracerError):
    pass


class WrongDomain(TracerError):
    pass


class DegeneratePoint(TracerError):
    pass


class PreconditionError(TracerError):
    pass


class DerivativeOrderError(UsageError):
    pass


# address-algebra
class AddressSyntaxError(UsageError):
    def __init__(self, message, position, text=""):
        super().__init__(f"{message} at position {position}", position=position)
        self.position = position
        self.text = text


class EmptyPeriod(UsageError):
    pass


class NonDistinct(UsageError):
    pass


# ray-tracer
class BristleAmbiguity(TracerError):
    pass


class DegenerateDirections(TracerError):
    pass


class DepthExceeded(TracerError):
    pass


class NotEscaping(TracerError):
    pass


class HorizonTooSmall(TracerError):
    pass


# hands
class ConfigNotFound(TracerError):
    pass


class NotInW(TracerError):
    def __init__(self, message, index, **context):
        super().__init__(message, index=index, **context)
        self.index = index


class ProbeInconsistent(TracerError):
    pass


class IntervalCollapsed(TracerError):
    pass


class BranchObstructed(TracerError):
    pass


class UnsupportedModel(TracerError):
    pass


# conformance
class CurveMissesCircle(TracerError):
    pass


class InvalidApproach(TracerError):
    pass


# cli
class ConfigError(UsageError):
    pass


class UnreadableCurve(TracerError):
    pass


def exit_code_for(error):
    """Exit code the command line reports for an exception"""
    return 2 if isinstance(error, UsageError) else 3
