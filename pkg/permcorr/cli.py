# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring

import argparse
import logging
import math
import os
import sys
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import psutil

from permcorr.core import (DEFAULT_ENUMERATION_CAP, GENERATORS, MAX_ORDER, METHODS, MODES,
                           RECONSTRUCTIONS, TAILS, PermCorrError, PermCorrError_Range,
                           PermCorrError_TooLarge, Stopwatch, accurate_sum, boolify, colored,
                           enumerate_partitions, generate_dataset, load_csv, moment_pvalue,
                           moment_vector, oracle_moments_exact, oracle_moments_mc,
                           oracle_pvalue_exact, oracle_pvalue_mc, rank_transform, set_color,
                           spearman_moments)
from permcorr.reports import OUTPUT_FORMATS, Report, emit
from permcorr.version import __version__


LOGGER = logging.getLogger('permcorr')

SUBCOMMANDS = ('moments', 'pvalue', 'validate', 'spearman-table', 'bench')
PVALUE_METHODS = ('exact', 'mc') + RECONSTRUCTIONS
BENCH_METHODS = ('closed-form', 'inductive', 'exact', 'mc')

DEFAULT_SAMPLES = 100000
DEFAULT_TRIALS = 100
VALIDATE_ORDER = 5
VALIDATE_MIN_SIZE = 3
VALIDATE_MAX_SIZE = 8
SPEARMAN_MAX_SIZE = 20


class RunConfig(NamedTuple):
    subcommand: str
    input: Optional[str]
    has_header: Optional[bool]
    K: int
    mode: str
    method: str
    tail: str
    seed: int
    samples: int
    trials: int
    n_min: int
    n_max: int
    sizes: Tuple[int, ...]
    repeat: int
    methods: Tuple[str, ...]
    threads: int
    enumeration_cap: int
    alpha: Optional[int]
    degree: Optional[int]
    generator: str
    exact: bool
    output: str
    verbose: int


def _env_int(name: str, default: int) -> int:
    try:
        value = int(os.getenv(name, None).strip())
        if value < 1:
            raise ValueError
    except (ValueError, AttributeError):
        return default
    return value


def _shared_options() -> argparse.ArgumentParser:  # pylint: disable=too-many-statements
    parser = argparse.ArgumentParser(add_help=False)

    data = parser.add_argument_group('data')
    data.add_argument('--input', '-i', dest='input', type=str, metavar='PATH',
                      help='CSV file with two numeric columns x,y.')
    data.add_argument('--header', dest='has_header', action='store_const', const=True, default=False,
                      help='The first line of the input is a header.')
    data.add_argument('--auto-header', dest='has_header', action='store_const', const=None,
                      help='Skip the first line only when it is not numeric.')
    data.add_argument('--generator', dest='generator', type=str, choices=GENERATORS, default='uniform',
                      help='Distribution of synthetic coordinates for `validate` and `bench`.\n'
                           '(default: %(default)s)')

    computation = parser.add_argument_group('computation')
    computation.add_argument('--k', '-k', dest='K', type=int, metavar='K',
                             help='Highest moment order (default: 8, `validate`: 5, maximum: {}).'.format(MAX_ORDER))
    computation.add_argument('--mode', dest='mode', type=str, choices=MODES, default='pearson',
                             help='Correlation coefficient. (default: %(default)s)')
    computation.add_argument('--method', dest='method', type=str,
                             help='Evaluation method.\n'
                                  '`moments`, `validate`, `spearman-table`: {}\n'
                                  '`pvalue`: {}'.format(' | '.join(METHODS), ' | '.join(PVALUE_METHODS)))
    computation.add_argument('--exact', dest='exact', action='store_true',
                             help='Evaluate `moments` in rational arithmetic and round once.')
    computation.add_argument('--tail', dest='tail', type=str, choices=TAILS, default='two',
                             help='Alternative of the permutation test. (default: %(default)s)')
    computation.add_argument('--alpha', dest='alpha', type=int, metavar='ALPHA',
                             help='Order of the Hausdorff moment inversion. (default: K)')
    computation.add_argument('--degree', dest='degree', type=int, metavar='DEGREE',
                             help='Degree of the Legendre density series. (default: K)')

    sampling = parser.add_argument_group('sampling')
    sampling.add_argument('--seed', dest='seed', type=int, default=0,
                          help='Seed of every random draw. (default: %(default)s)')
    sampling.add_argument('--samples', dest='samples', type=int, default=DEFAULT_SAMPLES,
                          help='Monte Carlo permutations. (default: %(default)s)')
    sampling.add_argument('--trials', dest='trials', type=int, default=DEFAULT_TRIALS,
                          help='Random datasets per size in `validate`. (default: %(default)s)')
    sampling.add_argument('--n-min', dest='n_min', type=int, default=VALIDATE_MIN_SIZE,
                          help='Smallest dataset size. (default: %(default)s)')
    sampling.add_argument('--n-max', dest='n_max', type=int,
                          help='Largest dataset size.\n'
                               '(default: `validate`: {}, capped by the enumeration cap; '
                               '`spearman-table`: {})'.format(VALIDATE_MAX_SIZE, SPEARMAN_MAX_SIZE))
    sampling.add_argument('--sizes', dest='sizes', type=int, nargs='+', default=[8], metavar='N',
                          help='Synthetic dataset sizes for `bench`. (default: 8)')
    sampling.add_argument('--repeat', dest='repeat', type=int, default=1,
                          help='Timed repetitions per method in `bench`. (default: %(default)s)')
    sampling.add_argument('--methods', dest='methods', type=str, nargs='+', choices=BENCH_METHODS,
                          default=list(BENCH_METHODS), metavar='METHOD',
                          help='Methods timed by `bench`: {}. (default: all)'.format(' | '.join(BENCH_METHODS)))

    execution = parser.add_argument_group('execution')
    execution.add_argument('--threads', dest='threads', type=int,
                           help='Worker threads for enumeration and Monte Carlo.\n'
                                'Set variable `PERMCORR_THREADS` to change the default. (default: 1)')
    execution.add_argument('--enumeration-cap', dest='enumeration_cap', type=int,
                           help='Largest n enumerated over all n! permutations.\n'
                                'Set variable `PERMCORR_ENUMERATION_CAP` to change the default. '
                                '(default: {})'.format(DEFAULT_ENUMERATION_CAP))

    output = parser.add_argument_group('output')
    output.add_argument('--output', '-o', dest='output', type=str, choices=OUTPUT_FORMATS,
                        help='Output format.\n'
                             'Set variable `PERMCORR_OUTPUT` to change the default.\n'
                             '(default: csv for `validate` and `spearman-table`, json otherwise)')
    output.add_argument('--force-color', dest='force_color', action='store_true',
                        help='Force colorize even when `stdout` is not a TTY terminal.')
    output.add_argument('--verbose', '-v', dest='verbose', action='count', default=0,
                        help='Log progress to `stderr` (repeat for debug records).')
    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='permcorr',
                                     description='Exact permutation moments and p-values of correlation coefficients.',
                                     formatter_class=argparse.RawTextHelpFormatter, add_help=False)
    parser.add_argument('--help', '-h', dest='help', action='help', default=argparse.SUPPRESS,
                        help='Show this help message and exit.')
    parser.add_argument('--version', '-V', dest='version', action='version', version='%(prog)s {}'.format(__version__),
                        help="Show %(prog)s's version number and exit.")

    shared = _shared_options()
    subparsers = parser.add_subparsers(dest='subcommand', metavar='<command>')
    subparsers.required = True
    descriptions = {
        'moments': 'Exact permutation moments <rho^k>, k = 0..K, of a dataset.',
        'pvalue': 'Permutation p-value of the observed correlation.',
        'validate': 'Mean squared error of the moment formulas against full enumeration.',
        'spearman-table': "Permutation moments of Spearman's rho for tie-free data of each size.",
        'bench': 'Wall-clock time of the moment formulas, enumeration and Monte Carlo.',
    }
    for subcommand in SUBCOMMANDS:
        subparser = subparsers.add_parser(subcommand, parents=[shared], help=descriptions[subcommand],
                                          description=descriptions[subcommand],
                                          formatter_class=argparse.RawTextHelpFormatter, add_help=False)
        subparser.add_argument('--help', '-h', dest='help', action='help', default=argparse.SUPPRESS,
                               help='Show this help message and exit.')

    args = parser.parse_args(argv)

    if args.threads is None:
        args.threads = _env_int('PERMCORR_THREADS', 1)
    if args.enumeration_cap is None:
        args.enumeration_cap = _env_int('PERMCORR_ENUMERATION_CAP', DEFAULT_ENUMERATION_CAP)
    if args.output is None:
        output = os.getenv('PERMCORR_OUTPUT', '').strip().lower()
        if output not in OUTPUT_FORMATS:
            output = ('csv' if args.subcommand in ('validate', 'spearman-table') else 'json')
        args.output = output
    if not args.force_color:
        args.force_color = boolify(os.getenv('PERMCORR_FORCE_COLOR', 'false'), default=False)

    return args


def make_config(args: argparse.Namespace) -> RunConfig:
    """Resolve the per-command defaults of ``args`` and check the result."""

    subcommand = args.subcommand
    K = args.K
    if K is None:
        K = (VALIDATE_ORDER if subcommand == 'validate' else 8)
    method = args.method
    if method is None:
        method = ('legendre' if subcommand == 'pvalue' else METHODS[0])
    n_max = args.n_max
    if n_max is None:
        if subcommand == 'validate':
            n_max = min(VALIDATE_MAX_SIZE, args.enumeration_cap)
        else:
            n_max = SPEARMAN_MAX_SIZE

    config = RunConfig(subcommand=subcommand, input=args.input, has_header=args.has_header, K=K,
                       mode=args.mode, method=method, tail=args.tail, seed=args.seed, samples=args.samples,
                       trials=args.trials, n_min=args.n_min, n_max=n_max, sizes=tuple(args.sizes),
                       repeat=args.repeat, methods=tuple(dict.fromkeys(args.methods)), threads=args.threads,
                       enumeration_cap=args.enumeration_cap, alpha=args.alpha, degree=args.degree,
                       generator=args.generator, exact=args.exact, output=args.output, verbose=args.verbose)
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:  # pylint: disable=too-many-branches
    def require(condition, message, *args):
        if not condition:
            raise PermCorrError_Range(message.format(*args))

    lowest_order = (2 if config.subcommand in ('validate', 'spearman-table') else 1)
    require(lowest_order <= config.K <= MAX_ORDER,
            '--k must be in [{}, {}], got {}', lowest_order, MAX_ORDER, config.K)
    require(config.trials >= 1, '--trials must be at least 1, got {}', config.trials)
    require(config.samples >= 1, '--samples must be at least 1, got {}', config.samples)
    require(config.threads >= 1, '--threads must be at least 1, got {}', config.threads)
    require(config.repeat >= 1, '--repeat must be at least 1, got {}', config.repeat)
    require(config.enumeration_cap >= 1, '--enumeration-cap must be at least 1, got {}', config.enumeration_cap)

    if config.subcommand == 'pvalue':
        require(config.method in PVALUE_METHODS, '--method must be one of {}, got {!r}',
                PVALUE_METHODS, config.method)
    elif config.subcommand != 'bench':
        require(config.method in METHODS, '--method must be one of {}, got {!r}', METHODS, config.method)

    if config.subcommand in ('moments', 'pvalue'):
        require(config.input is not None, '`{}` needs --input', config.subcommand)
    if config.alpha is not None:
        require(1 <= config.alpha <= config.K, '--alpha must be in [1, {}], got {}', config.K, config.alpha)
    if config.degree is not None:
        require(0 <= config.degree <= config.K, '--degree must be in [0, {}], got {}', config.K, config.degree)

    if config.subcommand in ('validate', 'spearman-table'):
        require(config.n_min >= 2, '--n-min must be at least 2, got {}', config.n_min)
        require(config.n_min <= config.n_max, '--n-min {} exceeds --n-max {}', config.n_min, config.n_max)
    if config.subcommand == 'validate':
        require(config.n_min >= VALIDATE_MIN_SIZE, '`validate` needs --n-min >= {}, got {}',
                VALIDATE_MIN_SIZE, config.n_min)
        if config.n_max > config.enumeration_cap:
            raise PermCorrError_TooLarge('--n-max {} exceeds the enumeration cap {}'.format(
                config.n_max, config.enumeration_cap))
    if config.subcommand == 'bench' and config.input is None:
        require(all(n >= 2 for n in config.sizes), '--sizes must all be at least 2, got {}', list(config.sizes))


def setup_logging(verbose: int) -> None:
    for handler in list(LOGGER.handlers):
        if getattr(handler, 'permcorr_cli', False):
            LOGGER.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    handler.permcorr_cli = True
    LOGGER.addHandler(handler)
    LOGGER.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG))


def cmd_moments(config: RunConfig) -> Report:
    dataset = load_csv(config.input, has_header=config.has_header)
    mv = moment_vector(dataset, config.K, mode=config.mode, method=config.method, exact=config.exact)
    LOGGER.info('Computed %d moments of n=%d (%s)', config.K, dataset.n, config.mode)
    rows = [(k, value, method) for k, (value, method) in enumerate(zip(mv.values, mv.methods))]
    return Report(mv.to_dict(), ('k', 'moment', 'method'), rows)


def cmd_pvalue(config: RunConfig) -> Report:
    dataset = load_csv(config.input, has_header=config.has_header)
    if config.method in ('exact', 'mc'):
        ranked = (rank_transform(dataset) if config.mode == 'spearman' else dataset)
        if config.method == 'exact':
            estimate = oracle_pvalue_exact(ranked, config.tail, cap=config.enumeration_cap,
                                           threads=config.threads)
        else:
            estimate = oracle_pvalue_mc(ranked, config.tail, samples=config.samples, seed=config.seed,
                                        threads=config.threads)
        estimate = estimate._replace(diagnostics=dict(estimate.diagnostics, n=dataset.n, mode=config.mode))
    else:
        estimate = moment_pvalue(dataset, config.K, method=config.method, tail=config.tail, mode=config.mode,
                                 alpha=config.alpha, degree=config.degree)
    LOGGER.info('p = %r (%s, %s tail)', estimate.p, estimate.method, estimate.tail)
    row = (estimate.rho_obs, estimate.p, estimate.method, estimate.tail)
    return Report(estimate.to_dict(), ('rho_obs', 'p', 'method', 'tail'), [row])


def cmd_validate(config: RunConfig) -> Report:
    orders = list(range(2, config.K + 1))
    rows = []
    for n in range(config.n_min, config.n_max + 1):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(n,)))
        squares = [[] for _ in orders]
        for _ in range(config.trials):
            dataset = generate_dataset(n, rng, config.generator)
            formula = moment_vector(dataset, config.K, method=config.method)
            oracle = oracle_moments_exact(dataset, config.K, cap=config.enumeration_cap, threads=config.threads)
            for i, k in enumerate(orders):
                squares[i].append((oracle.values[k] - formula.values[k]) ** 2)
        mse = [accurate_sum(column) / config.trials for column in squares]
        LOGGER.info('n=%d: max MSE %.3g over %d trial(s)', n, max(mse), config.trials)
        rows.append({'n': n, 'mse': mse})

    payload = {
        'generator': config.generator,
        'seed': config.seed,
        'trials': config.trials,
        'method': config.method,
        'k': orders,
        'rows': rows,
        'max_mse': max(max(row['mse']) for row in rows),
    }
    header = ['n'] + ['k{}'.format(k) for k in orders]
    return Report(payload, header, [[row['n']] + row['mse'] for row in rows])


def cmd_spearman_table(config: RunConfig) -> Report:
    rows = []
    for n in range(config.n_min, config.n_max + 1):
        mv = spearman_moments(n, config.K, config.method)
        rows.extend((n, k, mv.values[k]) for k in range(1, config.K + 1))
    payload = {
        'K': config.K,
        'method': config.method,
        'rows': [{'n': n, 'k': k, 'moment': value} for n, k, value in rows],
    }
    return Report(payload, ('n', 'k', 'moment'), rows)


def _inductive_work(n: int, K: int) -> int:
    return sum(len(enumerate_partitions(k, m)) for k in range(1, K + 1) for m in range(1, min(k, n) + 1))


def _bench_once(method: str, dataset, config: RunConfig) -> Tuple[int, int]:
    """Run ``method`` once and return ``(K_or_samples, work)``."""

    n = dataset.n
    if method == 'closed-form':
        K = min(config.K, 5)
        moment_vector(dataset, K)
        return K, n * max(K, 2)
    if method == 'inductive':
        moment_vector(dataset, config.K, method='inductive')
        return config.K, _inductive_work(n, config.K)
    if method == 'exact':
        oracle_moments_exact(dataset, config.K, cap=config.enumeration_cap, threads=config.threads)
        return config.K, math.factorial(n)
    oracle_moments_mc(dataset, config.K, config.samples, seed=config.seed, threads=config.threads)
    return config.samples, config.samples


def cmd_bench(config: RunConfig) -> Report:
    if config.input is not None:
        datasets = [load_csv(config.input, has_header=config.has_header)]
    else:
        rng = np.random.default_rng(config.seed)
        datasets = [generate_dataset(n, rng, config.generator) for n in config.sizes]
    if config.mode == 'spearman':
        datasets = list(map(rank_transform, datasets))

    process = psutil.Process()
    rows = []
    for dataset in datasets:
        for method in config.methods:
            if method == 'exact' and dataset.n > config.enumeration_cap:
                LOGGER.info('Skipping exact enumeration for n=%d (cap %d)', dataset.n, config.enumeration_cap)
                continue
            for repeat in range(config.repeat):
                with Stopwatch() as watch:
                    size, work = _bench_once(method, dataset, config)
                rows.append({
                    'method': method,
                    'n': dataset.n,
                    'K_or_samples': size,
                    'repeat': repeat,
                    'seconds': watch.seconds,
                    'work': work,
                    'rss_bytes': process.memory_info().rss,
                })
                LOGGER.info('%s n=%d: %.6f s', method, dataset.n, watch.seconds)

    payload = {'cpu_count': psutil.cpu_count(), 'threads': config.threads, 'rows': rows}
    header = ('method', 'n', 'K_or_samples', 'repeat', 'seconds', 'work', 'rss_bytes')
    return Report(payload, header, [[row[key] for key in header] for row in rows])


COMMANDS = {
    'moments': cmd_moments,
    'pvalue': cmd_pvalue,
    'validate': cmd_validate,
    'spearman-table': cmd_spearman_table,
    'bench': cmd_bench,
}

HINTS = {
    'pvalue': 'Use `--method mc`, `--method legendre` or `--method hausdorff` for this many observations, '
              'or raise `--enumeration-cap`.',
    'validate': 'Lower `--n-max` or raise `--enumeration-cap`.',
}


def _print_message(prefix: str, color: str, message: str) -> None:
    print('{} {}'.format(colored(prefix, color=color, attrs=('bold',)), message), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)

    if args.force_color:
        set_color(True)
    setup_logging(args.verbose)

    try:
        config = make_config(args)
        cpu_count = psutil.cpu_count()
        if cpu_count is not None and config.threads > cpu_count:
            _print_message('WARNING:', 'yellow',
                           '--threads {} exceeds the {} logical CPUs, using {}.'.format(
                               config.threads, cpu_count, cpu_count))
            config = config._replace(threads=cpu_count)
        report = COMMANDS[config.subcommand](config)
    except PermCorrError as e:  # pylint: disable=invalid-name
        _print_message('ERROR:', 'red', e)
        if isinstance(e, PermCorrError_TooLarge) and args.subcommand in HINTS:
            _print_message('HINT:', 'yellow', HINTS[args.subcommand])
        return e.exit_code

    emit(report, config.output)
    return 0


if __name__ == '__main__':
    sys.exit(main())
