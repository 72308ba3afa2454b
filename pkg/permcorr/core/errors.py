# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-class-docstring
# pylint: disable=invalid-name

from typing import Optional


__all__ = [
    'PermCorrError', 'PermCorrError_IO', 'PermCorrError_Parse', 'PermCorrError_TooSmall',
    'PermCorrError_NonFinite', 'PermCorrError_Degenerate', 'PermCorrError_Range',
    'PermCorrError_TooLarge',
    'EXIT_OK', 'EXIT_INPUT', 'EXIT_DEGENERATE', 'EXIT_TOO_LARGE'
]


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_TOO_LARGE = 4


class PermCorrError(Exception):
    """Base class of all errors raised by permcorr.

    ``tag`` is the stable error identifier shown to users and ``exit_code`` is
    the status the command-line tool terminates with.
    """

    tag = 'E_UNKNOWN'
    exit_code = 1

    def __str__(self) -> str:
        message = super().__str__()
        if message:
            return '{}: {}'.format(self.tag, message)
        return self.tag


class PermCorrError_IO(PermCorrError, OSError):
    tag = 'E_IO'
    exit_code = EXIT_INPUT


class PermCorrError_Parse(PermCorrError, ValueError):
    tag = 'E_PARSE'
    exit_code = EXIT_INPUT

    def __init__(self, message: str, row: Optional[int] = None, line: Optional[int] = None) -> None:
        if row is not None:
            if line is not None and line != row:
                message = 'row {} (line {}): {}'.format(row, line, message)
            else:
                message = 'row {}: {}'.format(row, message)
        super().__init__(message)
        self.row = row
        self.line = line


class PermCorrError_TooSmall(PermCorrError, ValueError):
    tag = 'E_TOO_SMALL'
    exit_code = EXIT_INPUT


class PermCorrError_NonFinite(PermCorrError, ValueError):
    tag = 'E_NONFINITE'
    exit_code = EXIT_INPUT


class PermCorrError_Range(PermCorrError, ValueError):
    tag = 'E_RANGE'
    exit_code = EXIT_INPUT


class PermCorrError_Degenerate(PermCorrError, ArithmeticError):
    tag = 'E_DEGENERATE'
    exit_code = EXIT_DEGENERATE


class PermCorrError_TooLarge(PermCorrError):
    tag = 'E_TOO_LARGE'
    exit_code = EXIT_TOO_LARGE
