# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

"""Ground truth by brute force: full permutation enumeration and seeded Monte Carlo.

Permutations are addressed by their lexicographic rank. The ``n!`` ranks are cut
into blocks that share a fixed prefix (at most ``MAX_TAIL_LENGTH`` trailing
positions vary inside a block), and every block is accumulated on its own.
Block boundaries depend on ``n`` only, so the merged result is the same for any
number of workers.
"""

# pylint: disable=invalid-name

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from cachetools.func import lru_cache

from permcorr.core.dataset import Dataset, central_moments, pearson_obs
from permcorr.core.errors import (PermCorrError_Degenerate, PermCorrError_Range,
                                  PermCorrError_TooLarge)
from permcorr.core.moments import MAX_ORDER, MomentVector
from permcorr.core.reconstruct import TAILS, PvalueEstimate
from permcorr.core.utils import Real, accurate_sum


__all__ = [
    'PermutationDistribution', 'block_layout', 'permutation_block', 'split_blocks',
    'enumerate_distribution', 'merge_distributions', 'oracle_moments_exact', 'oracle_dot_moments_exact',
    'oracle_pvalue_exact', 'oracle_cdf', 'sample_distribution', 'oracle_moments_mc',
    'oracle_pvalue_mc', 'distinct_sum_oracle',
    'DEFAULT_ENUMERATION_CAP', 'COMPARISON_SLACK'
]


LOGGER = logging.getLogger('permcorr.oracle')

DEFAULT_ENUMERATION_CAP = 10
MAX_TAIL_LENGTH = 8
MC_BLOCK_SIZE = 4096
MC_CHUNK_ELEMENTS = 1 << 22
COMPARISON_SLACK = 1e-12
DISTINCT_SUM_MAX_SIZE = 8


class PermutationDistribution:
    """Private accumulators of one worker.

    ``partials[k]`` collects one correctly rounded partial sum of ``rho^k`` per
    block; the tail counters compare every ``rho`` against ``threshold``.
    :meth:`merge` concatenates in block order, so merging is associative and the
    final sums do not depend on how blocks were handed out.
    """

    def __init__(self, n: int, K: int, threshold: Optional[float] = None) -> None:
        self.n = n
        self.K = K
        self.threshold = threshold
        self.count = 0
        self.partials = [[] for _ in range(K + 1)]
        self.exact_sums = None
        self.count_abs = 0
        self.count_right = 0
        self.count_left = 0

    def __str__(self) -> str:
        return '{}(n={}, K={}, count={})'.format(self.__class__.__name__, self.n, self.K, self.count)

    __repr__ = __str__

    def add(self, rho: np.ndarray) -> None:
        rho = np.asarray(rho, dtype=np.float64)
        self.count += int(rho.size)
        power = np.ones_like(rho)
        self.partials[0].append(float(rho.size))
        for k in range(1, self.K + 1):
            power = power * rho
            self.partials[k].append(math.fsum(power.tolist()))

        if self.threshold is not None:
            r = self.threshold
            self.count_abs += int(np.count_nonzero(np.abs(rho) >= abs(r) - COMPARISON_SLACK))
            self.count_right += int(np.count_nonzero(rho >= r - COMPARISON_SLACK))
            self.count_left += int(np.count_nonzero(rho <= r + COMPARISON_SLACK))

    def add_exact(self, dots: Iterable[int]) -> None:
        if self.exact_sums is None:
            self.exact_sums = [0] * (self.K + 1)
        for dot in dots:
            self.count += 1
            power = 1
            for k in range(self.K + 1):
                self.exact_sums[k] += power
                power *= dot

    def merge(self, other: 'PermutationDistribution') -> 'PermutationDistribution':
        if (self.n, self.K, self.threshold) != (other.n, other.K, other.threshold):
            raise PermCorrError_Range('cannot merge distributions with different settings')
        merged = PermutationDistribution(self.n, self.K, self.threshold)
        merged.count = self.count + other.count
        merged.partials = [mine + theirs for mine, theirs in zip(self.partials, other.partials)]
        if self.exact_sums is not None or other.exact_sums is not None:
            zeros = [0] * (self.K + 1)
            merged.exact_sums = [a + b for a, b in zip(self.exact_sums or zeros, other.exact_sums or zeros)]
        merged.count_abs = self.count_abs + other.count_abs
        merged.count_right = self.count_right + other.count_right
        merged.count_left = self.count_left + other.count_left
        return merged

    def power_means(self) -> Tuple[float, ...]:
        return tuple(accurate_sum(partial) / self.count for partial in self.partials)

    def tail_count(self, tail: str) -> int:
        return {'two': self.count_abs, 'right': self.count_right, 'left': self.count_left}[tail]


def block_layout(n: int) -> Tuple[int, int, int]:
    """``(prefix_length, block_size, block_count)`` of the rank blocks for size ``n``."""

    tail = min(n, MAX_TAIL_LENGTH)
    block_size = math.factorial(tail)
    return n - tail, block_size, math.factorial(n) // block_size


@lru_cache(maxsize=MAX_TAIL_LENGTH + 1)
def _tail_permutations(length: int) -> np.ndarray:
    permutations = np.array(list(itertools.permutations(range(length))), dtype=np.intp).reshape(-1, length)
    permutations.setflags(write=False)
    return permutations


def permutation_block(n: int, block: int) -> np.ndarray:
    """All permutations with lexicographic ranks in block ``block``, in rank order."""

    prefix_length, block_size, block_count = block_layout(n)
    if not 0 <= block < block_count:
        raise PermCorrError_Range('block {} out of range [0, {})'.format(block, block_count))

    digits = []
    for radix in range(n - prefix_length + 1, n + 1):
        block, digit = divmod(block, radix)
        digits.append(digit)
    remaining = list(range(n))
    prefix = [remaining.pop(digit) for digit in reversed(digits)]

    tails = np.asarray(remaining, dtype=np.intp)[_tail_permutations(n - prefix_length)]
    heads = np.tile(np.asarray(prefix, dtype=np.intp), (block_size, 1))
    return np.hstack([heads, tails])


def split_blocks(block_count: int, parts: int) -> List[range]:
    """Cut ``range(block_count)`` into at most ``parts`` contiguous ranges."""

    parts = max(1, min(parts, block_count))
    bounds = [block_count * i // parts for i in range(parts + 1)]
    return [range(start, stop) for start, stop in zip(bounds[:-1], bounds[1:])]


def _check_enumerable(dataset: Dataset, cap: int) -> None:
    if dataset.n > cap:
        raise PermCorrError_TooLarge(
            'full enumeration of {}! permutations exceeds the cap n <= {}'.format(dataset.n, cap)
        )


def _centered(dataset: Dataset, exact: bool = False):
    mx = central_moments(dataset.x, 2, exact=exact)
    my = central_moments(dataset.y, 2, exact=exact)
    if mx.is_degenerate() or my.is_degenerate():
        raise PermCorrError_Degenerate('zero variance in {}'.format('x' if mx.is_degenerate() else 'y'))
    return mx, my


def _run(worker, ranges: Sequence[range], threads: int) -> List[PermutationDistribution]:
    if threads <= 1 or len(ranges) <= 1:
        return list(map(worker, ranges))
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(worker, ranges))


def merge_distributions(distributions: Sequence[PermutationDistribution]) -> PermutationDistribution:
    """Merge per-range accumulators, in the order given (block order)."""

    if len(distributions) == 0:
        raise PermCorrError_Range('nothing to merge')
    merged = distributions[0]
    for distribution in distributions[1:]:
        merged = merged.merge(distribution)
    return merged


def enumerate_distribution(dataset: Dataset, K: int, threshold: Optional[float] = None,
                           cap: int = DEFAULT_ENUMERATION_CAP, threads: int = 1,
                           blocks: Optional[range] = None, exact: bool = False) -> PermutationDistribution:
    """Accumulate ``rho^k`` (``k <= K``) over the permutations in ``blocks`` (default: all).

    ``exact=True`` accumulates integer powers of the centered dot product
    (scaled to integers) instead of floating-point ``rho^k``.
    """

    _check_enumerable(dataset, cap)
    if not 0 <= K <= MAX_ORDER:
        raise PermCorrError_Range('maximum order must be in [0, {}], got {}'.format(MAX_ORDER, K))
    n = dataset.n
    mx, my = _centered(dataset, exact=exact)
    _, _, block_count = block_layout(n)
    if blocks is None:
        blocks = range(block_count)
    if len(blocks) == 0 or blocks[0] < 0 or blocks[-1] >= block_count:
        raise PermCorrError_Range('block range {} not inside [0, {})'.format(blocks, block_count))

    if exact:
        a, b, _ = _integer_centered(dataset, mx, my)

        def worker(block_range):
            distribution = PermutationDistribution(n, K, threshold)
            for block in block_range:
                for row in permutation_block(n, block).tolist():
                    distribution.add_exact([sum(ai * b[j] for ai, j in zip(a, row))])
            return distribution
    else:
        cx = mx.normalize(dataset.x)
        cy = my.normalize(dataset.y)
        norm = math.sqrt(mx.S[2] * my.S[2])

        def worker(block_range):
            distribution = PermutationDistribution(n, K, threshold)
            for block in block_range:
                distribution.add(cy[permutation_block(n, block)] @ cx / norm)
            return distribution

    ranges = split_blocks(len(blocks), threads)
    ranges = [blocks[r.start:r.stop] for r in ranges]
    distribution = merge_distributions(_run(worker, ranges, threads))
    LOGGER.debug('Enumerated %d permutations of n=%d in %d block(s)', distribution.count, n, len(blocks))
    return distribution


def _integer_centered(dataset: Dataset, mx, my):
    """Centered coordinates scaled by a common denominator to integers, and that scale."""

    cx = [Fraction(value) - mx.mu for value in dataset.x.tolist()]
    cy = [Fraction(value) - my.mu for value in dataset.y.tolist()]
    dx = _lcm(cx)
    dy = _lcm(cy)
    a = [int(value * dx) for value in cx]
    b = [int(value * dy) for value in cy]
    return a, b, dx * dy


def _lcm(values):
    result = 1
    for value in values:
        result = result * value.denominator // math.gcd(result, value.denominator)
    return result


def oracle_dot_moments_exact(dataset: Dataset, K: int, cap: int = DEFAULT_ENUMERATION_CAP,
                             blocks: Optional[range] = None) -> Tuple[Fraction, ...]:
    """Exact means of ``(sum_i (x_i - mu_x)(y_{pi_i} - mu_y))^k`` over all permutations, ``k = 0..K``."""

    mx, my = _centered(dataset, exact=True)
    distribution = enumerate_distribution(dataset, K, cap=cap, blocks=blocks, exact=True)
    _, _, scale = _integer_centered(dataset, mx, my)
    return tuple(Fraction(total, distribution.count * scale ** k)
                 for k, total in enumerate(distribution.exact_sums))


def oracle_moments_exact(dataset: Dataset, K: int, cap: int = DEFAULT_ENUMERATION_CAP,
                         threads: int = 1, exact: bool = False, start: Optional[int] = None,
                         stop: Optional[int] = None) -> MomentVector:
    """Means of ``rho^k`` over all ``n!`` permutations of ``y``.

    ``exact=True`` accumulates the centered dot products in rational
    arithmetic and rounds once per order. ``start`` and ``stop`` restrict the
    enumeration to the rank blocks ``[start, stop)``.
    """

    _check_enumerable(dataset, cap)
    n = dataset.n
    blocks = None
    if start is not None or stop is not None:
        _, _, block_count = block_layout(n)
        blocks = range(block_count)[start:stop]
    if exact:
        mx, my = _centered(dataset, exact=True)
        dots = oracle_dot_moments_exact(dataset, K, cap=cap, blocks=blocks)
        scale = mx.raw(2) * my.raw(2)
        values = []
        for k, dot in enumerate(dots):
            value = dot / scale ** (k // 2)
            values.append(float(value) if k % 2 == 0 else float(value) / math.sqrt(scale))
    else:
        values = enumerate_distribution(dataset, K, cap=cap, threads=threads, blocks=blocks).power_means()

    return MomentVector(n=n, K=K, values=tuple(values), method='oracle-exact',
                        methods=('oracle-exact',) * (K + 1))


def oracle_cdf(dataset: Dataset, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Sorted correlations of all ``n!`` permutations."""

    _check_enumerable(dataset, cap)
    mx, my = _centered(dataset)
    cx = mx.normalize(dataset.x)
    cy = my.normalize(dataset.y)
    norm = math.sqrt(mx.S[2] * my.S[2])
    _, _, block_count = block_layout(dataset.n)
    rho = np.concatenate([cy[permutation_block(dataset.n, block)] @ cx / norm for block in range(block_count)])
    return np.sort(rho)


def _check_tail(tail: str) -> None:
    if tail not in TAILS:
        raise PermCorrError_Range('unknown tail {!r}, expected one of {}'.format(tail, TAILS))


def oracle_pvalue_exact(dataset: Dataset, tail: str = 'two', cap: int = DEFAULT_ENUMERATION_CAP,
                        threads: int = 1) -> PvalueEstimate:
    """Fraction of permutations at least as extreme as the observed correlation (inclusive)."""

    _check_tail(tail)
    _check_enumerable(dataset, cap)
    rho_obs = pearson_obs(dataset)
    distribution = enumerate_distribution(dataset, 0, threshold=rho_obs, cap=cap, threads=threads)
    count = distribution.tail_count(tail)
    return PvalueEstimate(p=count / distribution.count, method='exact', tail=tail, K=0, rho_obs=rho_obs,
                          diagnostics={'permutations': distribution.count, 'extreme': count,
                                       'slack': COMPARISON_SLACK})


def _mc_blocks(samples: int) -> List[range]:
    return [range(start, min(start + MC_BLOCK_SIZE, samples)) for start in range(0, samples, MC_BLOCK_SIZE)]


def sample_distribution(dataset: Dataset, K: int, samples: int, seed: int = 0,
                        threshold: Optional[float] = None, threads: int = 1) -> PermutationDistribution:
    """Accumulate ``rho^k`` (``k <= 2K``) over ``samples`` uniform random permutations.

    Sample ``i`` draws from the stream keyed by ``(seed, i // MC_BLOCK_SIZE)``,
    so the result does not depend on ``threads``.
    """

    if samples < 1:
        raise PermCorrError_Range('need at least 1 sample, got {}'.format(samples))
    if not 0 <= K <= MAX_ORDER:
        raise PermCorrError_Range('maximum order must be in [0, {}], got {}'.format(MAX_ORDER, K))
    n = dataset.n
    mx, my = _centered(dataset)
    cx = mx.normalize(dataset.x)
    cy = my.normalize(dataset.y)
    norm = math.sqrt(mx.S[2] * my.S[2])
    rows_per_chunk = max(1, MC_CHUNK_ELEMENTS // n)
    blocks = _mc_blocks(samples)

    def worker(block_range):
        distribution = PermutationDistribution(n, 2 * K, threshold)
        for block in block_range:
            indices = blocks[block]
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
            for start in range(0, len(indices), rows_per_chunk):
                rows = min(rows_per_chunk, len(indices) - start)
                permutations = rng.permuted(np.tile(np.arange(n), (rows, 1)), axis=1)
                distribution.add(cy[permutations] @ cx / norm)
        return distribution

    ranges = split_blocks(len(blocks), threads)
    distribution = merge_distributions(_run(worker, ranges, threads))
    LOGGER.debug('Sampled %d permutations of n=%d (seed=%d)', distribution.count, n, seed)
    return distribution


def oracle_moments_mc(dataset: Dataset, K: int, samples: int, seed: int = 0,
                      threads: int = 1) -> MomentVector:
    """Monte Carlo means of ``rho^k`` with per-order standard errors."""

    distribution = sample_distribution(dataset, K, samples, seed=seed, threads=threads)
    means = distribution.power_means()
    N = distribution.count
    errors = [0.0]
    for k in range(1, K + 1):
        if N < 2:
            errors.append(None)
            continue
        variance = max(means[2 * k] - means[k] ** 2, 0.0) * N / (N - 1)
        errors.append(math.sqrt(variance / N))
    return MomentVector(n=dataset.n, K=K, values=tuple(means[:K + 1]), method='oracle-mc',
                        methods=('oracle-mc',) * (K + 1), standard_errors=tuple(errors))


def oracle_pvalue_mc(dataset: Dataset, tail: str = 'two', samples: int = 100000, seed: int = 0,
                     threads: int = 1) -> PvalueEstimate:
    """Proportion of sampled permutations at least as extreme as the observed correlation."""

    _check_tail(tail)
    rho_obs = pearson_obs(dataset)
    distribution = sample_distribution(dataset, 0, samples, seed=seed, threshold=rho_obs, threads=threads)
    count = distribution.tail_count(tail)
    p = count / distribution.count
    return PvalueEstimate(p=p, method='mc', tail=tail, K=0, rho_obs=rho_obs,
                          diagnostics={'samples': distribution.count, 'extreme': count, 'seed': seed,
                                       'standard_error': math.sqrt(p * (1.0 - p) / distribution.count),
                                       'slack': COMPARISON_SLACK})


def distinct_sum_oracle(values: Sequence[float], exponents: Sequence[int]) -> Real:
    """Brute-force sum over ordered tuples of pairwise-distinct indices.

    Computes ``sum prod_t (values[i_t] - mean)^{exponents[t]}`` in floating point.
    """

    n = len(values)
    m = len(exponents)
    if n > DISTINCT_SUM_MAX_SIZE:
        raise PermCorrError_TooLarge('brute-force distinct sums need n <= {}, got {}'.format(
            DISTINCT_SUM_MAX_SIZE, n))
    if not 1 <= m <= n:
        raise PermCorrError_Range('need 1 <= len(exponents) <= n, got {} exponents for n={}'.format(m, n))

    moments = central_moments(values, 1)
    centered = [value - moments.mu for value in np.asarray(values, dtype=np.float64).tolist()]
    terms = []
    for indices in itertools.permutations(range(n), m):
        product = 1.0
        for index, exponent in zip(indices, exponents):
            product *= centered[index] ** exponent
        terms.append(product)
    return accurate_sum(terms)
