"""Exception hierarchy shared by the front-end, interpreter and analyzer."""

from __future__ import annotations


class AbsliceError(Exception):
    """Base class for every error raised by this package."""


class MiniSyntaxError(AbsliceError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ResolutionError(AbsliceError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class MiniRuntimeError(AbsliceError):
    """Raised by the interpreter; aborts the run but leaves a partial trace."""

    def __init__(self, stmt, message: str):
        where = f"{stmt}: " if stmt is not None else ""
        super().__init__(where + message)
        self.stmt = stmt


class NullDereference(MiniRuntimeError):
    pass


class IndexOutOfBounds(MiniRuntimeError):
    pass


class TypeMismatch(MiniRuntimeError):
    pass


class UndefinedVariable(MiniRuntimeError):
    pass


class DivisionByZero(MiniRuntimeError):
    pass


class StepLimitExceeded(MiniRuntimeError):
    pass


class UnknownStatement(AbsliceError):
    pass


class MalformedTrace(AbsliceError):
    pass


class EndOfTrace(AbsliceError):
    pass


class GrammarViolation(AbsliceError):
    def __init__(self, position: int, expected: str, got: str):
        super().__init__(f"event {position}: expected {expected}, got {got}")
        self.position = position
        self.expected = expected
        self.got = got


class ModelError(AbsliceError):
    pass


class NoEnvironment(ModelError):
    pass


class UnresolvedBase(ModelError):
    pass


class ArityMismatch(ModelError):
    pass


class EmptyStack(ModelError):
    pass


class ProtocolError(ModelError):
    pass


class CriterionNotExecuted(AbsliceError):
    pass


class SearchBudgetExceeded(AbsliceError):
    pass
