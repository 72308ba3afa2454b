# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-class-docstring,missing-function-docstring
# pylint: disable=invalid-name

import math
import sys
import time
from fractions import Fraction
from typing import Iterable, Union

from psutil import WINDOWS


__all__ = [
    'Real', 'colored', 'set_color', 'boolify',
    'accurate_sum', 'falling_factorial', 'is_exact', 'Stopwatch'
]


if WINDOWS:
    try:
        from colorama import init
    except ImportError:
        pass
    else:
        init()

try:
    from termcolor import colored as _colored
except ImportError:
    def _colored(text, color=None, on_color=None, attrs=None):  # pylint: disable=unused-argument
        return text


Real = Union[float, Fraction]

COLOR = sys.stdout.isatty()


def set_color(value):
    global COLOR  # pylint: disable=global-statement
    COLOR = bool(value)


def colored(text, color=None, on_color=None, attrs=None):
    if COLOR:
        return _colored(text, color=color, on_color=on_color, attrs=attrs)
    return text


def boolify(string, default=None):
    if string.lower() in ('true', 'yes', 'on', 'enabled', '1'):
        return True
    if string.lower() in ('false', 'no', 'off', 'disabled', '0'):
        return False
    if default is not None:
        return bool(default)
    return bool(string)


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction))


def accurate_sum(terms: Iterable[Real]) -> Real:
    """Sums ``terms`` without accumulated rounding error.

    Floats go through :func:`math.fsum` (correctly rounded, hence independent of
    the term order). Integers and :class:`~fractions.Fraction` terms are summed
    exactly.
    """

    terms = list(terms)
    if len(terms) > 0 and all(map(is_exact, terms)):
        return sum(terms)
    return math.fsum(terms)


def falling_factorial(n: int, m: int) -> int:
    """``n (n - 1) ... (n - m + 1)``, the count of ordered ``m``-tuples of distinct indices."""

    result = 1
    for i in range(m):
        result *= n - i
    return result


class Stopwatch:
    def __init__(self):
        self.start = None
        self.seconds = math.nan

    def __enter__(self) -> 'Stopwatch':
        self.start = time.perf_counter()
        return self

    def __exit__(self, *args, **kwargs) -> None:
        self.seconds = time.perf_counter() - self.start
