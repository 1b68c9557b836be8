from typing import Optional

from com.mhire.app.common.cli_responses import ExitCode


class CliException(Exception):
    """Base exception carrying the exit code the CLI reports for it."""

    def __init__(self, exit_code: int, detail: str):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail


class DomainError(CliException):
    """Missing vertex, name clash or subset outside a graph."""

    def __init__(self, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, detail)


class ConfigurationError(CliException):
    def __init__(self, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, detail)


class ParseError(CliException):
    def __init__(self, detail: str, line: Optional[int] = None, position: Optional[int] = None):
        location = ""
        if line is not None:
            location += f"line {line}"
        if position is not None:
            location += f"{', ' if location else ''}position {position}"
        super().__init__(ExitCode.INPUT_ERROR, f"{detail} ({location})" if location else detail)
        self.message = detail
        self.line = line
        self.position = position


class PreconditionError(CliException):
    def __init__(self, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, detail)


class TermTypeError(CliException):
    """Evaluation of a term failed at generator `index` on domain clause `clause`."""

    def __init__(self, index: int, clause: str, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, f"step {index}: {clause}: {detail}")
        self.index = index
        self.clause = clause


class NonChemicalResultError(CliException):
    def __init__(self, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, detail)


class SearchError(CliException):
    def __init__(self, detail: str):
        super().__init__(ExitCode.INPUT_ERROR, detail)


class InternalInvariantError(CliException):
    def __init__(self, detail: str):
        super().__init__(ExitCode.INTERNAL_ERROR, detail)
