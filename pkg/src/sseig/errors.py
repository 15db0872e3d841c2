"""Exception hierarchy.

Numerical failures and input/format failures are kept apart so the CLI can
map them to distinct exit codes.
"""

from __future__ import annotations


class SseigError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(SseigError, ValueError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class DuplicatePointError(GraphError):
    def __init__(self, i: int, j: int):
        super().__init__(f"duplicate points {i} and {j}: nearest-neighbour scale is zero")
        self.pair = (i, j)


class DegenerateSeedError(SseigError, ValueError):
    pass


class ParseError(SseigError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line


class NumericalError(SseigError, ArithmeticError):
    """Base for failures of the numerical kernels."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SizeGuardError(SseigError, ValueError):
    pass


class PoleError(NumericalError):
    pass


class ResampleError(NumericalError):
    pass


class DegenerateBasisError(NumericalError):
    pass


class IllPosedError(NumericalError):
    pass


class DigestMismatchError(SseigError):
    pass
