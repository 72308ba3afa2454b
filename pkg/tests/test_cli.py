# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring

import csv
import io
import json

import numpy as np
import pytest

from permcorr.cli import main, make_config, parse_arguments
from permcorr.core import PermCorrError_Range, PermCorrError_TooLarge


TINY = [(1, 1), (2, 2), (3, 3)]


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ('PERMCORR_ENUMERATION_CAP', 'PERMCORR_THREADS', 'PERMCORR_OUTPUT', 'PERMCORR_FORCE_COLOR'):
        monkeypatch.delenv(name, raising=False)


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def random_rows(n, seed):
    rng = np.random.default_rng(seed)
    return list(zip(rng.random(n), rng.random(n)))


class TestMoments:
    def test_tiny(self, capsys, write_csv):
        code, out, err = run(capsys, 'moments', '--input', write_csv(TINY), '--k', 5)
        assert code == 0 and err == ''
        payload = json.loads(out)
        assert payload['n'] == 3
        assert payload['mode'] == 'pearson'
        assert payload['moments'][:2] == [1.0, 0.0]
        assert payload['moments'][2] == pytest.approx(0.5, abs=1e-15)
        assert payload['method_per_k'] == ['closed-form'] * 6

    def test_spearman_depends_on_size_only(self, capsys, write_csv):
        outputs = []
        for seed in (1, 2):
            path = write_csv(random_rows(10, seed), name='data{}.csv'.format(seed))
            code, out, _ = run(capsys, 'moments', '--input', path, '--mode', 'spearman')
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]

    def test_exact_arithmetic(self, capsys, write_csv):
        code, out, _ = run(capsys, 'moments', '--input', write_csv(TINY), '--k', 8, '--exact', '--method', 'inductive')
        assert code == 0
        assert json.loads(out)['moments'][8] == pytest.approx(0.3359375, abs=1e-15)

    def test_csv_output(self, capsys, write_csv):
        code, out, _ = run(capsys, 'moments', '--input', write_csv(TINY), '--k', 2, '--output', 'csv')
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ['k', 'moment', 'method']
        assert len(rows) == 4

    def test_text_output(self, capsys, write_csv):
        code, out, _ = run(capsys, 'moments', '--input', write_csv(TINY), '--k', 2, '--output', 'text')
        assert code == 0
        assert 'moment' in out.splitlines()[0]

    def test_output_environment(self, capsys, monkeypatch, write_csv):
        monkeypatch.setenv('PERMCORR_OUTPUT', 'csv')
        _, out, _ = run(capsys, 'moments', '--input', write_csv(TINY), '--k', 2)
        assert out.startswith('k,moment,method')

    @pytest.mark.parametrize('k', [0, 33])
    def test_bad_order(self, capsys, write_csv, k):
        code, out, err = run(capsys, 'moments', '--input', write_csv(TINY), '--k', k)
        assert code == 2
        assert out == ''
        assert 'E_RANGE' in err

    def test_missing_input(self, capsys, tmp_path):
        code, _, err = run(capsys, 'moments', '--input', tmp_path / 'missing.csv')
        assert code == 2
        assert 'E_IO' in err

    def test_parse_error(self, capsys, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('1,2\n3,x\n', encoding='UTF-8')
        code, _, err = run(capsys, 'moments', '--input', path)
        assert code == 2
        assert 'row 2' in err

    def test_degenerate(self, capsys, write_csv):
        code, _, err = run(capsys, 'moments', '--input', write_csv([(1, 5), (2, 5), (3, 5)]))
        assert code == 3
        assert 'E_DEGENERATE' in err


class TestPvalue:
    def test_exact(self, capsys, write_csv):
        code, out, _ = run(capsys, 'pvalue', '--input', write_csv(TINY), '--method', 'exact', '--tail', 'two')
        assert code == 0
        payload = json.loads(out)
        assert payload['p'] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert payload['rho_obs'] == 1.0
        assert payload['method'] == 'exact'
        assert payload['tail'] == 'two'
        assert payload['diagnostics']['permutations'] == 6

    def test_exact_too_large(self, capsys, write_csv):
        code, out, err = run(capsys, 'pvalue', '--input', write_csv(random_rows(11, 3)), '--method', 'exact')
        assert code == 4
        assert out == ''
        assert 'E_TOO_LARGE' in err
        assert 'HINT:' in err and '--method mc' in err

    def test_enumeration_cap_environment(self, capsys, monkeypatch, write_csv):
        monkeypatch.setenv('PERMCORR_ENUMERATION_CAP', '5')
        code, _, _ = run(capsys, 'pvalue', '--input', write_csv(random_rows(6, 4)), '--method', 'exact')
        assert code == 4
        code, _, _ = run(capsys, 'pvalue', '--input', write_csv(random_rows(6, 4)), '--method', 'exact',
                         '--enumeration-cap', 6)
        assert code == 0

    def test_monte_carlo_reproducible(self, capsys, write_csv):
        path = write_csv(random_rows(9, 5))
        argv = ('pvalue', '--input', path, '--method', 'mc', '--samples', 20000, '--seed', 7)
        first = run(capsys, *argv)
        second = run(capsys, *argv, '--threads', 1)
        assert first[0] == 0
        assert first[1] == second[1]
        assert json.loads(first[1])['diagnostics']['samples'] == 20000

    @pytest.mark.parametrize('method', ['hausdorff', 'legendre'])
    def test_moment_methods(self, capsys, write_csv, method):
        code, out, _ = run(capsys, 'pvalue', '--input', write_csv(random_rows(8, 6)), '--method', method, '--k', 8)
        assert code == 0
        payload = json.loads(out)
        assert payload['method'] == method
        assert 0.0 <= payload['p'] <= 1.0
        assert payload['diagnostics']['K'] == 8

    def test_spearman_exact(self, capsys, write_csv):
        code, out, _ = run(capsys, 'pvalue', '--input', write_csv([(1, 10), (2, 30), (3, 20)]),
                           '--method', 'exact', '--mode', 'spearman')
        assert code == 0
        payload = json.loads(out)
        assert payload['rho_obs'] == pytest.approx(0.5)
        assert payload['diagnostics']['mode'] == 'spearman'

    def test_unknown_method(self, capsys, write_csv):
        code, _, _ = run(capsys, 'pvalue', '--input', write_csv(TINY), '--method', 'inductive')
        assert code == 2

    def test_alpha_above_order(self, capsys, write_csv):
        code, _, _ = run(capsys, 'pvalue', '--input', write_csv(TINY), '--method', 'hausdorff', '--k', 4,
                         '--alpha', 6)
        assert code == 2


class TestValidate:
    def test_small_table(self, capsys):
        code, out, _ = run(capsys, 'validate', '--n-min', 3, '--n-max', 5, '--trials', 3, '--output', 'json')
        assert code == 0
        payload = json.loads(out)
        assert payload['k'] == [2, 3, 4, 5]
        assert [row['n'] for row in payload['rows']] == [3, 4, 5]
        assert payload['max_mse'] <= 1e-28
        assert payload['generator'] == 'uniform'

    def test_csv_layout(self, capsys):
        code, out, _ = run(capsys, 'validate', '--n-min', 3, '--n-max', 4, '--trials', 2, '--generator', 'normal',
                           '--method', 'inductive')
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ['n', 'k2', 'k3', 'k4', 'k5']
        assert [row[0] for row in rows[1:]] == ['3', '4']

    def test_reproducible(self, capsys):
        first = run(capsys, 'validate', '--n-min', 4, '--n-max', 4, '--trials', 4, '--seed', 3)
        second = run(capsys, 'validate', '--n-min', 4, '--n-max', 4, '--trials', 4, '--seed', 3)
        assert first == second

    def test_beyond_cap(self, capsys):
        code, _, err = run(capsys, 'validate', '--n-min', 3, '--n-max', 11)
        assert code == 4
        assert 'HINT:' in err

    def test_below_three(self, capsys):
        code, _, _ = run(capsys, 'validate', '--n-min', 2, '--n-max', 4)
        assert code == 2


class TestSpearmanTable:
    def test_small_sizes(self, capsys):
        code, out, _ = run(capsys, 'spearman-table', '--n-min', 3, '--n-max', 4, '--k', 3)
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ['n', 'k', 'moment']
        table = {(int(n), int(k)): float(value) for n, k, value in rows[1:]}
        assert len(table) == 6
        assert table[3, 1] == 0.0 and table[4, 1] == 0.0
        assert table[3, 2] == pytest.approx(0.5, abs=1e-15)
        assert table[4, 2] == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert table[3, 3] == pytest.approx(0.0, abs=1e-15)

    def test_order_at_least_two(self, capsys):
        code, _, _ = run(capsys, 'spearman-table', '--k', 1)
        assert code == 2


class TestBench:
    def test_rows(self, capsys):
        code, out, _ = run(capsys, 'bench', '--sizes', 6, '--k', 5, '--samples', 2000,
                           '--methods', 'closed-form', 'inductive', 'exact', 'mc')
        assert code == 0
        payload = json.loads(out)
        methods = [row['method'] for row in payload['rows']]
        assert methods == ['closed-form', 'inductive', 'exact', 'mc']
        for row in payload['rows']:
            assert set(row) >= {'method', 'n', 'K_or_samples', 'seconds', 'work', 'rss_bytes'}
            assert row['seconds'] >= 0.0 and row['rss_bytes'] > 0
        assert payload['rows'][2]['work'] == 720
        assert payload['rows'][3]['K_or_samples'] == 2000

    def test_skips_enumeration_above_cap(self, capsys):
        code, out, _ = run(capsys, 'bench', '--sizes', 12, '--methods', 'closed-form', 'exact', '--repeat', 2)
        assert code == 0
        rows = json.loads(out)['rows']
        assert [row['method'] for row in rows] == ['closed-form', 'closed-form']
        assert [row['repeat'] for row in rows] == [0, 1]


class TestConfig:
    def test_defaults(self):
        config = make_config(parse_arguments(['validate']))
        assert (config.K, config.n_min, config.n_max, config.trials) == (5, 3, 8, 100)
        assert config.output == 'csv'
        assert config.method == 'closed-form-then-inductive'
        config = make_config(parse_arguments(['pvalue', '--input', 'data.csv']))
        assert (config.K, config.method, config.output, config.threads) == (8, 'legendre', 'json', 1)

    def test_threads_environment(self, monkeypatch):
        monkeypatch.setenv('PERMCORR_THREADS', '3')
        assert make_config(parse_arguments(['bench'])).threads == 3
        monkeypatch.setenv('PERMCORR_THREADS', 'many')
        assert make_config(parse_arguments(['bench'])).threads == 1

    def test_validation(self):
        with pytest.raises(PermCorrError_Range):
            make_config(parse_arguments(['moments']))
        with pytest.raises(PermCorrError_Range):
            make_config(parse_arguments(['validate', '--trials', '0']))
        with pytest.raises(PermCorrError_Range):
            make_config(parse_arguments(['spearman-table', '--n-min', '9', '--n-max', '4']))
        with pytest.raises(PermCorrError_TooLarge):
            make_config(parse_arguments(['validate', '--n-max', '9', '--enumeration-cap', '8']))

    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as info:
            parse_arguments(['moments', '--mode', 'kendall'])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            parse_arguments([])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            parse_arguments(['--version'])
        assert info.value.code == 0
        assert 'permcorr' in capsys.readouterr().out
