# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring

import doctest

import pytest

from permcorr.core import (ExponentPartition, PermCorrError_Range, adjusted_multinomial,
                           enumerate_partitions, partition_count, partitions_of)
from permcorr.core import partitions


def test_doctests():
    assert doctest.testmod(partitions).failed == 0


def test_exponent_partition():
    partition = ExponentPartition([1, 3, 1, 2])
    assert partition.parts == (3, 2, 1, 1)
    assert (partition.k, partition.m) == (7, 4)
    assert partition.degeneracies == (1, 1, 2)
    with pytest.raises(PermCorrError_Range):
        ExponentPartition([2, 0])
    with pytest.raises(PermCorrError_Range):
        ExponentPartition([])


def test_enumerate_order():
    assert enumerate_partitions(4, 2) == ((3, 1), (2, 2))
    assert enumerate_partitions(6, 3) == ((4, 1, 1), (3, 2, 1), (2, 2, 2))
    assert enumerate_partitions(5, 5) == ((1, 1, 1, 1, 1),)
    assert enumerate_partitions(5, 1) == ((5,),)


@pytest.mark.parametrize('k, m', [(3, 4), (3, 0), (0, 1)])
def test_enumerate_range(k, m):
    with pytest.raises(PermCorrError_Range):
        enumerate_partitions(k, m)


@pytest.mark.parametrize('k, count', [(1, 1), (2, 2), (5, 7), (8, 22), (12, 77)])
def test_partition_count(k, count):
    assert partition_count(k) == count
    assert len(set(partitions_of(k))) == count


def test_adjusted_multinomial():
    assert adjusted_multinomial((2, 2)) == 3
    assert adjusted_multinomial((2, 1, 1)) == 6
    assert adjusted_multinomial((3, 1)) == 4
    assert adjusted_multinomial((1, 1, 1, 1)) == 1


@pytest.mark.parametrize('k, bell', [(3, 5), (4, 15), (5, 52), (6, 203), (10, 115975)])
def test_set_partitions_are_counted(k, bell):
    assert sum(map(adjusted_multinomial, partitions_of(k))) == bell
