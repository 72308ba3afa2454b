# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

"""Paired samples, their centered power sums, ranks and the observed correlation."""

# pylint: disable=invalid-name

import csv
import io
import logging
import math
import os
import warnings
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import rankdata

from permcorr.core.errors import (PermCorrError_IO, PermCorrError_Parse, PermCorrError_TooSmall,
                                  PermCorrError_NonFinite, PermCorrError_Range,
                                  PermCorrError_Degenerate)
from permcorr.core.utils import Real, accurate_sum


__all__ = [
    'Dataset', 'CentralMoments', 'load_csv', 'central_moments',
    'rank_transform', 'pearson_obs', 'spearman_obs', 'generate_dataset',
    'GENERATORS'
]


LOGGER = logging.getLogger('permcorr.dataset')

# Above this many values the centered power sums use numpy's pairwise summation
# instead of math.fsum. Both are error-reduced; fsum is also order independent.
FSUM_MAX_SIZE = 1 << 17
# Up to this many values the powers are formed over Python floats.
PYTHON_MAX_SIZE = 64

CLAMP_TOLERANCE = 1e-12

GENERATORS = ('uniform', 'normal')


class Dataset:
    """Paired real samples ``(x_i, y_i)``, ``i = 1..n``.

    Both coordinates are stored as read-only float64 arrays, so a dataset never
    changes after construction.
    """

    def __init__(self, x: Sequence[float], y: Sequence[float]) -> None:
        x = np.array(x, dtype=np.float64)
        y = np.array(y, dtype=np.float64)
        if x.ndim != 1 or y.ndim != 1:
            raise PermCorrError_Range('both coordinates must be one-dimensional')
        if x.size != y.size:
            raise PermCorrError_Range('x has {} values but y has {}'.format(x.size, y.size))
        if x.size < 2:
            raise PermCorrError_TooSmall('need at least 2 pairs, got {}'.format(x.size))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise PermCorrError_NonFinite('dataset contains NaN or infinite values')

        x.setflags(write=False)
        y.setflags(write=False)
        self._x = x
        self._y = y

    @classmethod
    def from_columns(cls, x: Sequence[float], y: Sequence[float]) -> 'Dataset':
        return cls(list(x), list(y))

    def __str__(self) -> str:
        return '{}(n={})'.format(self.__class__.__name__, self.n)

    __repr__ = __str__

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: 'Dataset') -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self._x, other._x) and np.array_equal(self._y, other._y)

    __hash__ = None

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def n(self) -> int:
        return int(self._x.size)

    def permuted(self, permutation: Sequence[int]) -> 'Dataset':
        """The dataset ``(x_i, y_{permutation[i]})``; only ``y`` moves."""

        return Dataset(self._x, self._y[np.asarray(permutation, dtype=np.intp)])

    def has_ties(self) -> bool:
        return bool(np.unique(self._x).size < self.n or np.unique(self._y).size < self.n)


class CentralMoments(NamedTuple):
    """Centered power sums ``S[j] = sum_i ((z_i - mu) / scale)^j`` of one coordinate.

    ``scale`` is a power of two near the largest centered magnitude, so the
    sums stay representable for any spread of the data and dividing by it is
    exact. ``S[0]`` holds ``n`` so that ``S[j]`` is indexed by the order ``j``.
    """

    n: int
    K: int
    S: Tuple[Real, ...]
    mu: Real
    scale: Real = 1.0

    def raw(self, j: int) -> Real:
        """The unscaled power sum ``sum_i (z_i - mu)^j`` (may overflow to ``inf``)."""

        return self.S[j] * self.scale ** j

    def chi(self, j: int) -> Real:
        """The central moment ``<z^j> = raw(j) / n``."""

        return self.raw(j) / self.n

    @property
    def variance(self) -> Real:
        return self.chi(2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.S[2] / self.n) * self.scale

    @property
    def is_exact(self) -> bool:
        return isinstance(self.mu, Fraction)

    def is_degenerate(self) -> bool:
        return self.K < 2 or self.S[2] <= 0

    def normalize(self, values: Sequence[float]) -> np.ndarray:
        """``(values - mu) / scale`` in floating point, without forming ``values - mu``."""

        values = np.asarray(values, dtype=np.float64)
        return values / float(self.scale) - float(self.mu) / float(self.scale)


def _power_of_two(magnitude: float) -> float:
    """The largest power of two not above ``magnitude`` (``1.0`` for zero)."""

    if magnitude == 0.0:
        return 1.0
    return math.ldexp(1.0, math.frexp(magnitude)[1] - 1)


def central_moments(values: Sequence[float], K: int, exact: bool = False) -> CentralMoments:
    """Two-pass centered power sums up to order ``K``.

    The mean is computed first (with one refinement pass) on values divided by
    a power of two, then the powers of the centered values, divided by another
    power of two, are summed. ``exact=True`` carries out everything in
    rational arithmetic on the exact binary values of the input.
    """

    values = np.asarray(values, dtype=np.float64).ravel()
    n = int(values.size)
    if n < 1:
        raise PermCorrError_TooSmall('no values')
    if K < 1:
        raise PermCorrError_Range('maximum order must be at least 1, got {}'.format(K))
    if not np.all(np.isfinite(values)):
        raise PermCorrError_NonFinite('values contain NaN or infinite entries')

    if n <= FSUM_MAX_SIZE:
        def total(array):
            return math.fsum(array.tolist())
    else:
        def total(array):
            return float(np.sum(array))

    lowest, highest = float(np.min(values)), float(np.max(values))
    if lowest == highest:
        if exact:
            return CentralMoments(n=n, K=K, S=(Fraction(n),) + (Fraction(0),) * K, mu=Fraction(highest),
                                  scale=Fraction(1))
        return CentralMoments(n=n, K=K, S=(float(n),) + (0.0,) * K, mu=highest)

    shift = _power_of_two(max(-lowest, highest))
    shifted = values / shift
    mu_shifted = total(shifted) / n
    mu_shifted += total(shifted - mu_shifted) / n
    mu = mu_shifted * shift
    scale = _power_of_two(max(mu_shifted - lowest / shift, highest / shift - mu_shifted)) * shift

    if exact:
        exact_mu = sum(map(Fraction, values.tolist()), Fraction(0)) / n
        exact_scale = Fraction(scale)
        centered = [(Fraction(value) - exact_mu) / exact_scale for value in values.tolist()]
        S = [Fraction(n)]
        powers = [Fraction(1)] * n
        for _ in range(K):
            powers = [power * value for power, value in zip(powers, centered)]
            S.append(sum(powers, Fraction(0)))
        return CentralMoments(n=n, K=K, S=tuple(S), mu=exact_mu, scale=exact_scale)

    centered = values / scale - mu / scale
    S = [float(n)]
    if n <= PYTHON_MAX_SIZE:
        centered = centered.tolist()
        powers = [1.0] * n
        for _ in range(K):
            powers = [power * value for power, value in zip(powers, centered)]
            S.append(math.fsum(powers))
    else:
        powers = np.ones_like(centered)
        for _ in range(K):
            powers = powers * centered
            S.append(total(powers))
    return CentralMoments(n=n, K=K, S=tuple(S), mu=mu, scale=scale)


def rank_transform(dataset: Dataset) -> Dataset:
    """Replace both coordinates by their ranks ``1..n``; ties share the midrank."""

    return Dataset(rankdata(dataset.x, method='average'), rankdata(dataset.y, method='average'))


def pearson_obs(dataset: Dataset) -> float:
    """Sample correlation of the identity pairing."""

    mx = central_moments(dataset.x, 2)
    my = central_moments(dataset.y, 2)
    if mx.is_degenerate() or my.is_degenerate():
        raise PermCorrError_Degenerate('zero variance in {}'.format('x' if mx.is_degenerate() else 'y'))

    dot = accurate_sum((mx.normalize(dataset.x) * my.normalize(dataset.y)).tolist())
    rho = dot / math.sqrt(mx.S[2] * my.S[2])
    if abs(rho) > 1.0:
        if abs(rho) - 1.0 > CLAMP_TOLERANCE:
            LOGGER.warning('Correlation %r is outside [-1, 1], clamped', rho)
        else:
            LOGGER.debug('Clamped correlation %r to [-1, 1]', rho)
        rho = math.copysign(1.0, rho)
    return rho


def spearman_obs(dataset: Dataset) -> float:
    return pearson_obs(rank_transform(dataset))


def generate_dataset(n: int, rng: np.random.Generator, generator: str = 'uniform') -> Dataset:
    """Random paired data with independent coordinates."""

    if generator == 'uniform':
        x, y = rng.random(n), rng.random(n)
    elif generator == 'normal':
        x, y = rng.standard_normal(n), rng.standard_normal(n)
    else:
        raise PermCorrError_Range('unknown generator {!r}, expected one of {}'.format(generator, GENERATORS))
    return Dataset(x, y)


def _parse_row(row, index, line=None):
    if len(row) != 2:
        raise PermCorrError_Parse('expected 2 columns, got {}'.format(len(row)), row=index, line=line)
    parsed = []
    for cell in row:
        try:
            value = float(cell.strip())
        except ValueError as e:
            raise PermCorrError_Parse('not a number: {!r}'.format(cell), row=index, line=line) from e
        if not math.isfinite(value):
            raise PermCorrError_NonFinite('row {}: non-finite value {!r}'.format(index, cell))
        parsed.append(value)
    return parsed


def _looks_numeric(row) -> bool:
    try:
        _parse_row(row, 1)
    except (PermCorrError_Parse, PermCorrError_NonFinite):
        return False
    return True


def _load_fast(text: str, skiprows: int) -> Optional[np.ndarray]:
    """All data rows through numpy's C parser, or ``None`` when anything is off."""

    try:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            data = np.loadtxt(io.StringIO(text), delimiter=',', ndmin=2, comments=None,
                              skiprows=skiprows, dtype=np.float64)
    except ValueError:
        return None
    if data.shape[0] < 2 or data.shape[1] != 2 or not np.all(np.isfinite(data)):
        return None
    return data


def load_csv(path: Union[str, os.PathLike], has_header: Optional[bool] = False) -> Dataset:
    """Read two comma-separated numeric columns ``x, y``.

    ``has_header=None`` skips the first line only when it does not parse as
    numbers. Blank lines are ignored. Parse errors name the 1-based data row
    (header and blank lines not counted) and the file line.
    """

    try:
        with open(path, encoding='UTF-8') as file:
            text = file.read()
    except OSError as e:
        raise PermCorrError_IO('cannot read {!r}: {}'.format(os.fspath(path), e.strerror or e)) from e
    except UnicodeDecodeError as e:
        raise PermCorrError_Parse('{!r} is not a UTF-8 CSV file: {}'.format(os.fspath(path), e)) from e

    first, first_line = next(((index, line) for index, line in enumerate(io.StringIO(text)) if line.strip()),
                             (None, None))
    if has_header is None:
        has_header = first is not None and not _looks_numeric(next(csv.reader([first_line])))
    skiprows = first + 1 if has_header and first is not None else 0

    data = _load_fast(text, skiprows)
    if data is not None:
        LOGGER.debug('Loaded %d pairs from %s', data.shape[0], os.fspath(path))
        return Dataset(data[:, 0], data[:, 1])

    # row by row, for the diagnostics
    x, y = [], []
    try:
        lines = io.StringIO(text)
        for _ in range(skiprows):
            next(lines)
        reader = csv.reader(lines)
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue
            xi, yi = _parse_row(row, len(x) + 1, line=skiprows + reader.line_num)
            x.append(xi)
            y.append(yi)
    except csv.Error as e:
        raise PermCorrError_Parse('{!r} is not a CSV file: {}'.format(os.fspath(path), e)) from e

    if len(x) < 2:
        raise PermCorrError_TooSmall('{!r} has {} data rows, need at least 2'.format(os.fspath(path), len(x)))
    LOGGER.debug('Loaded %d pairs from %s', len(x), os.fspath(path))
    return Dataset(x, y)
