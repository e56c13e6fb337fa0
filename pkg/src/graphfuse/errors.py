"""Exception types shared across the package."""


class GraphFuseError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatchError(GraphFuseError):
    """Operands have incompatible shapes. Message names both shapes."""


class ContractError(GraphFuseError):
    """A documented precondition was violated by the caller."""


class ConfigError(GraphFuseError):
    """A configuration value is outside its legal range."""


class ParseError(GraphFuseError):
    """Malformed input file. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateBatchError(GraphFuseError):
    """Every position in the batch is masked out; the loss is undefined."""


class TrainingDivergedError(GraphFuseError):
    """Loss became non-finite. Message names the offending step."""


class VocabMismatchError(GraphFuseError):
    """Data refers to labels or tokens a loaded checkpoint has never seen."""
