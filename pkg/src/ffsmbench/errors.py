"""Exception types shared across the toolkit."""


class BenchError(Exception):
    """Base class for every error raised by ffsmbench."""


class ParseError(BenchError, ValueError):
    """Raised when an input file or expression cannot be read.

    ``path`` locates the offending element (an XML element path, a dot
    statement, or a byte offset rendered as text) when one is known.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{message} (at {path})"
        super().__init__(message)


class FeatureModelError(ParseError):
    pass


class ConstraintSyntaxError(ParseError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(message, path=f"offset {offset}")


class DotFormatError(ParseError):
    pass


class ConfigurationLimitExceeded(BenchError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(f"configuration space exceeds limit {limit}")


class InvalidConfigurationError(BenchError, ValueError):
    pass


class DerivationError(BenchError):
    """A product could not be derived as a complete deterministic machine.

    ``problems`` is a list of ``(kind, state, input)`` triples where kind is
    ``"missing"`` or ``"conflict"``.
    """

    def __init__(self, message, problems=(), configuration=None):
        self.problems = list(problems)
        self.configuration = configuration
        super().__init__(message)


class GenerationError(BenchError):
    pass


class TeacherInconsistencyError(BenchError):
    pass


class CounterexampleError(BenchError, ValueError):
    pass
