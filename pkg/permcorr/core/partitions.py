# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring
# pylint: disable=invalid-name

import collections
import math
from typing import Iterable, Iterator, Tuple

from cachetools.func import lru_cache

from permcorr.core.errors import PermCorrError_Range


__all__ = ['ExponentPartition', 'enumerate_partitions', 'partitions_of', 'partition_count',
           'adjusted_multinomial']


class ExponentPartition(tuple):
    """A multiset ``(n_1, ..., n_m)`` of positive exponents, stored non-increasing.

    >>> ExponentPartition((1, 2, 1))
    ExponentPartition(2, 1, 1)
    >>> ExponentPartition((2, 1, 1)).degeneracies
    (1, 2)
    """

    def __new__(cls, parts: Iterable[int]) -> 'ExponentPartition':
        parts = tuple(sorted(map(int, parts), reverse=True))
        if len(parts) == 0:
            raise PermCorrError_Range('a partition needs at least one part')
        if parts[-1] < 1:
            raise PermCorrError_Range('partition parts must be positive, got {}'.format(parts))
        return super().__new__(cls, parts)

    def __repr__(self) -> str:
        return '{}({})'.format(self.__class__.__name__, ', '.join(map(str, self)))

    @property
    def parts(self) -> Tuple[int, ...]:
        return tuple(self)

    @property
    def m(self) -> int:
        return len(self)

    @property
    def k(self) -> int:
        return sum(self)

    @property
    def degeneracies(self) -> Tuple[int, ...]:
        """Multiplicities ``d_1, ..., d_r`` of the distinct part values, largest value first."""

        counts = collections.Counter(self)
        return tuple(counts[value] for value in sorted(counts, reverse=True))


def _partitions(k: int, m: int, largest: int) -> Iterator[Tuple[int, ...]]:
    if m == 1:
        if 1 <= k <= largest:
            yield (k,)
        return
    for first in range(min(largest, k - m + 1), -(-k // m) - 1, -1):
        for rest in _partitions(k - first, m - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_partitions(k: int, m: int) -> Tuple[ExponentPartition, ...]:
    """All partitions of ``k`` into exactly ``m`` positive parts, lexicographically decreasing."""

    if not 1 <= m <= k:
        raise PermCorrError_Range('need 1 <= m <= k, got k={}, m={}'.format(k, m))
    return tuple(map(ExponentPartition, _partitions(k, m, k)))


def partitions_of(k: int) -> Tuple[ExponentPartition, ...]:
    """All partitions of ``k``, grouped by increasing part count."""

    if k < 1:
        raise PermCorrError_Range('need k >= 1, got {}'.format(k))
    return tuple(p for m in range(1, k + 1) for p in enumerate_partitions(k, m))


def partition_count(k: int) -> int:
    return len(partitions_of(k))


def adjusted_multinomial(partition: Iterable[int]) -> int:
    """``k! / (prod n_i! * prod d_r!)``.

    The number of ways to split ``k`` labeled positions into unlabeled blocks
    whose sizes are the parts of ``partition``.
    """

    partition = ExponentPartition(partition)
    denominator = 1
    for part in partition:
        denominator *= math.factorial(part)
    for degeneracy in partition.degeneracies:
        denominator *= math.factorial(degeneracy)
    return math.factorial(partition.k) // denominator
