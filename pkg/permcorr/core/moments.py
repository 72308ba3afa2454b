# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

"""Exact moments of the correlation coefficient over all permutations of one coordinate.

The ``k``-th moment expands into a sum over the ways ``k`` index positions can
coincide. For a set partition of the positions into ``m`` blocks with sizes
``(n_1, ..., n_m)`` the data enter only through the distinct-tuple sums

    X_(n_1..n_m) = sum over pairwise-distinct (i_1..i_m) of prod_t (x_{i_t} - mu_x)^{n_t}

and the same for ``y``, which follow from the centered power sums by
inclusion-exclusion. Averaging over permutations turns every such pair into
``X * Y * (n - m)! / n!``.
"""

# pylint: disable=invalid-name

import logging
import math
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from cachetools import LRUCache
from cachetools.func import lru_cache

from permcorr.core.dataset import CentralMoments, Dataset, central_moments, rank_transform
from permcorr.core.errors import PermCorrError_Degenerate, PermCorrError_Range
from permcorr.core.partitions import ExponentPartition, adjusted_multinomial, enumerate_partitions
from permcorr.core.utils import Real, accurate_sum, is_exact


__all__ = [
    'MomentVector', 'DistinctSums', 'distinct_power_sum', 'dot_moment',
    'exact_moment_inductive', 'exact_moment_closed', 'moment_vector',
    'moment_vector_from_sums', 'spearman_moments',
    'MODES', 'METHODS', 'DEFAULT_ORDER', 'MAX_ORDER', 'CLOSED_FORM_MAX_ORDER'
]


LOGGER = logging.getLogger('permcorr.moments')

DEFAULT_ORDER = 8
MAX_ORDER = 32
CLOSED_FORM_MAX_ORDER = 5

MODES = ('pearson', 'spearman')
METHODS = ('closed-form-then-inductive', 'inductive')
TRANSCRIPTIONS = ('corrected', 'verbatim')

PowerSums = Union[CentralMoments, Sequence[Real]]


class MomentVector(NamedTuple):
    """``values[k]`` is the mean of ``rho^k`` over all permutations, ``k = 0..K``.

    ``methods[k]`` names the path that produced ``values[k]`` (``closed-form``,
    ``inductive``, ``oracle-exact`` or ``oracle-mc``). Monte Carlo vectors also
    carry per-order standard errors.
    """

    n: int
    K: int
    values: Tuple[float, ...]
    mode: str = 'pearson'
    method: str = 'closed-form-then-inductive'
    methods: Tuple[str, ...] = ()
    standard_errors: Optional[Tuple[float, ...]] = None

    def to_dict(self) -> dict:
        result = {
            'n': self.n,
            'mode': self.mode,
            'method': self.method,
            'moments': list(self.values),
            'method_per_k': list(self.methods),
        }
        if self.standard_errors is not None:
            result['standard_errors'] = list(self.standard_errors)
        return result


def _as_power_sums(S: PowerSums) -> Tuple[Real, ...]:
    if isinstance(S, CentralMoments):
        return S.S
    return tuple(S)


def _check_order(k: int, limit: int = MAX_ORDER) -> None:
    if not 0 <= k <= limit:
        raise PermCorrError_Range('moment order must be in [0, {}], got {}'.format(limit, k))


@lru_cache(maxsize=MAX_ORDER + 1)
def _recursion_plan(K: int):
    """Every partition of an order ``<= K`` with the step that evaluates its distinct sum.

    Keys are ordered by order, then by part count, so each step only reads
    keys before it and the plan for ``K`` is a prefix of the plan for ``K + 1``.
    A step ``(last, head, bumped)`` reads ``S[last] * D[head] - sum D[bumped]``;
    ``head < 0`` marks the base case ``S[last]``.
    """

    keys = [tuple(partition) for k in range(1, K + 1) for m in range(1, k + 1)
            for partition in enumerate_partitions(k, m)]
    index = {key: position for position, key in enumerate(keys)}
    steps = []
    for key in keys:
        if len(key) == 1:
            steps.append((key[0], -1, ()))
            continue
        head, last = key[:-1], key[-1]
        bumped = tuple(index[tuple(sorted(head[:j] + (head[j] + last,) + head[j + 1:], reverse=True))]
                       for j in range(len(head)))
        steps.append((last, index[head], bumped))
    return tuple(keys), tuple(steps), index


@lru_cache(maxsize=MAX_ORDER + 1)
def _moment_terms(k: int) -> Tuple[Tuple[int, int, int], ...]:
    """``(position, weight, m)`` for every partition of ``k``, positions in plan order."""

    _, _, index = _recursion_plan(k)
    return tuple((index[tuple(partition)], adjusted_multinomial(partition), partition.m)
                 for m in range(1, k + 1) for partition in enumerate_partitions(k, m))


class DistinctSums:
    """Memoized distinct-tuple sums for one set of centered power sums.

    One instance is one evaluation context: its cache is never shared with
    another set of power sums. Keys are sorted exponent tuples, as the sum over
    distinct index tuples is symmetric in its exponents. Built from
    :class:`CentralMoments`, calls return sums of the unscaled centered values.
    """

    def __init__(self, S: PowerSums, maxsize: int = 1 << 17) -> None:
        self.scale = S.scale if isinstance(S, CentralMoments) else 1
        self.S = _as_power_sums(S)
        self.exact = all(map(is_exact, self.S))
        self.cache = LRUCache(maxsize=maxsize)
        self._table = []
        self._order = 0

    @property
    def max_order(self) -> int:
        return len(self.S) - 1

    def _check(self, k: int, exponents) -> None:
        if k > self.max_order:
            raise PermCorrError_Range(
                'exponents {} need power sums up to order {}, only {} available'.format(
                    tuple(exponents), k, self.max_order)
            )

    def __call__(self, exponents: Sequence[int]) -> Real:
        key = ExponentPartition(exponents)
        self._check(key.k, exponents)
        value = self._distinct(tuple(key))
        if self.scale != 1:
            value = value * self.scale ** key.k
        return value

    def table(self, K: int) -> List[Real]:
        """Distinct sums of every partition of an order ``<= K``, in plan order (scaled units)."""

        if K <= self._order:
            return self._table
        keys, steps, _ = _recursion_plan(K)
        self._check(K, keys[-1])
        values = self._table
        add = sum if self.exact else math.fsum
        S = self.S
        for position in range(len(values), len(keys)):
            last, head, bumped = steps[position]
            if head < 0:
                values.append(S[last])
            else:
                terms = [S[last] * values[head]]
                terms.extend(-values[other] for other in bumped)
                values.append(add(terms))
        self._order = K
        return values

    def _distinct(self, key: Tuple[int, ...]) -> Real:
        try:
            return self.cache[key]
        except KeyError:
            pass

        if len(key) == 1:
            value = self.S[key[0]]
        else:
            head, last = key[:-1], key[-1]
            terms = [self.S[last] * self._distinct(head)]
            for j in range(len(head)):
                bumped = head[:j] + (head[j] + last,) + head[j + 1:]
                terms.append(-self._distinct(tuple(sorted(bumped, reverse=True))))
            value = accurate_sum(terms)

        self.cache[key] = value
        return value


def distinct_power_sum(S: PowerSums, exponents: Sequence[int]) -> Real:
    """Sum over pairwise-distinct index tuples of ``prod_t (z_{i_t} - mu)^{exponents_t}``.

    ``S[j]`` is the centered power sum of order ``j`` (``S[0]`` is not used).
    """

    return DistinctSums(S)(exponents)


def dot_moment(X: DistinctSums, Y: DistinctSums, n: int, k: int) -> Real:
    """Mean of ``(sum_i x_i y_{pi_i})^k`` over all permutations ``pi``.

    ``X`` and ``Y`` hold the power sums of the data the dot product is taken
    over, in the units of their ``S``. Blocks needing more distinct indices
    than ``n`` drop out.
    """

    x, y = X.table(k), Y.table(k)
    arrangements = [1]
    for m in range(1, min(k, n) + 1):
        arrangements.append(arrangements[-1] * (n - m + 1))

    terms = _moment_terms(k)
    if X.exact and Y.exact:
        value = sum((Fraction(weight, arrangements[m]) * x[i] * y[i] for i, weight, m in terms if m <= n),
                    Fraction(0))
    else:
        value = math.fsum([weight / arrangements[m] * x[i] * y[i] for i, weight, m in terms if m <= n])
    LOGGER.debug('Order %d: %d partition terms (n=%d)', k, len(terms), n)
    return value


def _standardized(S: Tuple[Real, ...]) -> Tuple[float, ...]:
    scale = math.sqrt(S[2])
    return tuple(float(s) / scale ** j for j, s in enumerate(S))


def _check_sums(Sx, Sy, k):
    for name, S in (('x', Sx), ('y', Sy)):
        if len(S) - 1 < max(k, 2):
            raise PermCorrError_Range('power sums of {} stop at order {}, order {} requested'.format(
                name, len(S) - 1, max(k, 2)))
        if S[2] <= 0:
            raise PermCorrError_Degenerate('zero variance in {}'.format(name))


class _Context(NamedTuple):
    X: DistinctSums
    Y: DistinctSums
    scale: Real
    exact: bool


def _context(Sx: Tuple[Real, ...], Sy: Tuple[Real, ...], K: int) -> _Context:
    exact = is_exact(Sx[2]) and is_exact(Sy[2])
    if exact:
        context = _Context(DistinctSums(Sx), DistinctSums(Sy), Sx[2] * Sy[2], True)
    else:
        context = _Context(DistinctSums(_standardized(Sx)), DistinctSums(_standardized(Sy)), 1.0, False)
    context.X.table(K)
    context.Y.table(K)
    return context


def _inductive(context: _Context, n: int, k: int) -> float:
    if k == 0:
        return 1.0
    numerator = dot_moment(context.X, context.Y, n, k)
    if not context.exact:
        return float(numerator)
    value = numerator / context.scale ** (k // 2)
    if k % 2 == 0:
        return float(value)
    return float(value) / math.sqrt(context.scale)


def exact_moment_inductive(Sx: PowerSums, Sy: PowerSums, n: int, k: int) -> float:
    """``<rho^k>`` over all ``n!`` permutations from the centered power sums.

    Float power sums are standardized by ``sqrt(S[2])`` first, so the
    normalization ``n^k sigma_x^k sigma_y^k`` is absorbed and nothing overflows
    for large ``n``. Rational power sums are summed exactly and rounded once.
    """

    _check_order(k)
    if k == 0:
        return 1.0
    Sx, Sy = _as_power_sums(Sx), _as_power_sums(Sy)
    _check_sums(Sx, Sy, k)
    return _inductive(_context(Sx, Sy, k), n, k)


def exact_moment_closed(Sx: PowerSums, Sy: PowerSums, n: int, k: int,
                        transcription: str = 'corrected') -> float:
    """Closed forms of ``<rho^k>`` for ``k = 1..5`` in the central moments of the data.

    ``transcription='verbatim'`` evaluates the formulas in their widely quoted
    form. Its fourth moment overstates the two-block term
    ``3 [n^2 s_x^4 - n chi_4][n^2 s_y^4 - n nu_4]`` by a factor ``n^2``;
    ``'corrected'`` divides it out and agrees with the recursion and with full
    enumeration. Both transcriptions coincide for every other order.
    """

    if transcription not in TRANSCRIPTIONS:
        raise PermCorrError_Range('unknown transcription {!r}'.format(transcription))
    _check_order(k, CLOSED_FORM_MAX_ORDER)
    if k < 1:
        raise PermCorrError_Range('closed forms cover orders 1..5, got {}'.format(k))
    Sx, Sy = _as_power_sums(Sx), _as_power_sums(Sy)
    _check_sums(Sx, Sy, k)

    def h(m):
        return m <= n

    chi = [float(s) / n for s in Sx]
    nu = [float(s) / n for s in Sy]
    var_x, var_y = chi[2], nu[2]

    if k == 1:
        return 0.0
    if k == 2:
        return 1.0 / (n - 1)
    if k == 3:
        bracket = 1.0 / n ** 2
        if h(2):
            bracket += 3.0 / (n ** 2 * (n - 1))
        if h(3):
            bracket += 4.0 / (n ** 2 * (n - 1) * (n - 2))
        return chi[3] * nu[3] / (var_x * var_y) ** 1.5 * bracket

    if k == 4:
        sx4, sy4 = var_x ** 2, var_y ** 2
        two_block = 1.0 if transcription == 'verbatim' else 1.0 / n ** 2
        total = chi[4] * nu[4] / n ** 3
        if h(2):
            total += ((4.0 * chi[4] * nu[4]
                       + 3.0 * (n ** 2 * sx4 - n * chi[4]) * (n ** 2 * sy4 - n * nu[4]) * two_block)
                      / (n ** 3 * (n - 1)))
        pair = (2.0 * n * chi[4] - n ** 2 * sx4) * (2.0 * n * nu[4] - n ** 2 * sy4)
        if h(3):
            total += 6.0 * pair / (n ** 5 * (n - 1) * (n - 2))
        if h(4):
            total += 9.0 * pair / (n ** 5 * (n - 1) * (n - 2) * (n - 3))
        return total / (sx4 * sy4)

    # k == 5
    cx = chi[3] * chi[2]
    cy = nu[3] * nu[2]
    mu55 = chi[5] * nu[5]
    total = mu55 / n ** 4
    if h(2):
        total += 5.0 * mu55 / (n ** 4 * (n - 1))
        total += 10.0 * (n ** 2 * cx - n * chi[5]) * (n ** 2 * cy - n * nu[5]) / (n ** 6 * (n - 1))
    if h(3):
        total += (10.0 * (2.0 * n * chi[5] - n ** 2 * cx) * (2.0 * n * nu[5] - n ** 2 * cy)
                  / (n ** 6 * (n - 1) * (n - 2)))
        total += (60.0 * (n * chi[5] - n ** 2 * cx) * (n * nu[5] - n ** 2 * cy)
                  / (n ** 6 * (n - 1) * (n - 2)))
    six_five = (6.0 * n * chi[5] - 5.0 * n ** 2 * cx) * (6.0 * n * nu[5] - 5.0 * n ** 2 * cy)
    if h(4):
        total += 10.0 * six_five / (n ** 6 * (n - 1) * (n - 2) * (n - 3))
    if h(5):
        total += 16.0 * six_five / (n ** 6 * (n - 1) * (n - 2) * (n - 3) * (n - 4))
    return total / (var_x * var_y) ** 2.5


def _check_options(K, mode, method):
    if not 1 <= K <= MAX_ORDER:
        raise PermCorrError_Range('maximum order must be in [1, {}], got {}'.format(MAX_ORDER, K))
    if mode not in MODES:
        raise PermCorrError_Range('unknown mode {!r}, expected one of {}'.format(mode, MODES))
    if method not in METHODS:
        raise PermCorrError_Range('unknown method {!r}, expected one of {}'.format(method, METHODS))


def moment_vector_from_sums(mx: CentralMoments, my: CentralMoments, K: int = DEFAULT_ORDER,
                            mode: str = 'pearson',
                            method: str = 'closed-form-then-inductive') -> MomentVector:
    """Moments ``0..K`` from precomputed centered power sums of both coordinates."""

    _check_options(K, mode, method)
    if mx.n != my.n:
        raise PermCorrError_Range('x has {} values but y has {}'.format(mx.n, my.n))
    n = mx.n
    Sx, Sy = _as_power_sums(mx), _as_power_sums(my)
    _check_sums(Sx, Sy, K)

    context = None
    values, methods = [1.0], ['closed-form']
    for k in range(1, K + 1):
        if method == 'closed-form-then-inductive' and k <= CLOSED_FORM_MAX_ORDER:
            values.append(exact_moment_closed(Sx, Sy, n, k))
            methods.append('closed-form')
        else:
            if context is None:
                context = _context(Sx, Sy, K)
            values.append(_inductive(context, n, k))
            methods.append('inductive')

    LOGGER.debug('Moment vector n=%d K=%d mode=%s via %s', n, K, mode, method)
    return MomentVector(n=n, K=K, values=tuple(values), mode=mode, method=method, methods=tuple(methods))


@lru_cache(maxsize=256)
def spearman_moments(n: int, K: int = DEFAULT_ORDER,
                     method: str = 'closed-form-then-inductive') -> MomentVector:
    """Moments of Spearman's correlation for tie-free data of size ``n``.

    Without ties the ranks of both coordinates are ``1..n``, so the vector
    depends on ``n`` alone and is tabulated once per process.
    """

    if n < 2:
        raise PermCorrError_Range('need n >= 2, got {}'.format(n))
    _check_options(K, 'spearman', method)
    ranks = central_moments(np.arange(1, n + 1, dtype=np.float64), max(K, 2))
    return moment_vector_from_sums(ranks, ranks, K, mode='spearman', method=method)


def moment_vector(dataset: Dataset, K: int = DEFAULT_ORDER, mode: str = 'pearson',
                  method: str = 'closed-form-then-inductive', exact: bool = False) -> MomentVector:
    """Exact permutation moments ``<rho^k>``, ``k = 0..K``, of a dataset.

    ``mode='spearman'`` ranks both coordinates first (midranks for ties).
    Orders up to 5 use the closed forms unless ``method='inductive'``.
    ``exact=True`` runs the recursion on rational power sums.
    """

    _check_options(K, mode, method)
    if mode == 'spearman':
        if not dataset.has_ties() and not exact:
            return spearman_moments(dataset.n, K, method)
        dataset = rank_transform(dataset)

    mx = central_moments(dataset.x, max(K, 2), exact=exact)
    my = central_moments(dataset.y, max(K, 2), exact=exact)
    if mx.is_degenerate() or my.is_degenerate():
        raise PermCorrError_Degenerate('zero variance in {}'.format('x' if mx.is_degenerate() else 'y'))
    return moment_vector_from_sums(mx, my, K, mode=mode, method=method)
