"""Exception types shared across the pipeline."""


class IngestError(Exception):
    """Raised when a table or statement file violates its format contract."""


class ProgramError(Exception):
    """Base class for program parsing / typing problems."""


class ProgramSyntaxError(ProgramError):
    """Malformed program text; carries the character position of the fault."""

    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


class ProgramTypeError(ProgramError):
    """Unknown operator, arity mismatch, or ill-typed arguments."""


class ExecError(Exception):
    """Base class for runtime failures while executing a program."""


class HopAmbiguous(ExecError):
    """hop over rows that do not share a single value in the column."""


class EmptyAggregate(ExecError):
    """Aggregate or hop applied to an empty row set (or all-missing cells)."""


class MissingCell(ExecError):
    """hop landed on an empty cell."""


class TemplateError(Exception):
    """A decomposition template slot could not be filled from the program."""


class SolveError(Exception):
    """A subproblem could not be answered from its probe."""


class TrainError(Exception):
    """Training was requested but no usable samples were available."""


class MetricError(Exception):
    """Metric inputs are empty or misaligned."""


class ShapeError(Exception):
    """Embedding dimension mismatch in the fusion model."""


class ConfigError(Exception):
    """Pipeline configuration is missing keys or out of range."""


class StageError(Exception):
    """A pipeline stage is missing an upstream artifact or read a bad one."""
