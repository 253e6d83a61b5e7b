"""
Exceptions raised by the sticky particle simulator and its checkers
"""


class StickyFlowError(Exception):
    """
    Base class for every error this package raises on purpose
    """


class InvalidInputError(StickyFlowError, ValueError):
    """
    Raised when particle data is unusable: duplicate initial positions,
    non-positive masses, NaN or infinite values, mismatched lengths, or a v0
    that does not interpolate the initial velocities
    """


class InvalidSpecError(InvalidInputError):
    """
    Raised when a MeasureSpec cannot describe a probability measure, e.g. a
    density that is negative somewhere or integrates to zero
    """


class InvalidPartitionError(InvalidInputError):
    """
    Raised when a grouping passed to conditional_expectation does not cover
    every atom exactly once
    """


class InvalidGridError(InvalidInputError):
    """
    Raised when a convergence grid point lies outside the support of the
    initial measure
    """


class TimeRangeError(StickyFlowError, ValueError):
    """
    Raised when a time lies outside [0, t_end] of a simulation, or a test
    function's time support exceeds the simulated window
    """


class DomainError(StickyFlowError, ValueError):
    """
    Raised when an operation is undefined for the given argument, such as a
    transition map from s = 0 or the entropy residual at t = 0
    """


class AmbiguousTimeError(StickyFlowError, ValueError):
    """
    Raised when a quantity that only exists between collisions is requested
    at (or within tolerance of) an event time
    """


class FormatError(StickyFlowError):
    """
    Raised when a JSON or CSV document cannot be read: malformed JSON, wrong
    or missing "format" tag, unknown keys, wrong types
    """
