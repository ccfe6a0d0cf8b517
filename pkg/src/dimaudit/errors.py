class DimauditError(ValueError):
    """Base class for input and numerical errors raised by the toolkit."""


class SchemaError(DimauditError):
    pass


class DataError(DimauditError):
    pass


class ConvergenceError(DimauditError):
    def __init__(self, message: str, sweeps: int):
        super().__init__(message)
        self.sweeps = sweeps


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it, ``__cause__`` holds the error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
