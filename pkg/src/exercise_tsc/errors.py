"""Exception hierarchy. Everything raised on bad input derives from ``ExerciseTSCError``."""


class ExerciseTSCError(Exception):
    pass


class ValidationError(ExerciseTSCError, ValueError):
    pass


class DegenerateSeriesError(ValidationError):
    pass


class TooShortError(ValidationError):
    pass


class MissingChannelError(ValidationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class RepCountMismatchError(ExerciseTSCError):
    def __init__(self, detected: int, expected: int):
        super().__init__(f"detected {detected} repetitions, expected {expected} (+/-1)")
        self.detected = detected
        self.expected = expected


class ShapeMismatchError(ValidationError):
    pass


class SingularSystemError(ExerciseTSCError, ArithmeticError):
    pass


class StrategyModalityError(ValidationError):
    pass


class TooFewParticipantsError(ValidationError):
    pass


class UnknownLabelError(ValidationError):
    pass


class EmptyIntersectionError(ExerciseTSCError):
    pass


class MalformedInputError(ExerciseTSCError):
    """A data file could not be parsed; carries the path and line number."""

    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


class FrameCountZeroError(ExerciseTSCError):
    pass


class StageError(ExerciseTSCError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
