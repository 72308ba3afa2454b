# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring

import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from permcorr.core import (Dataset, PermCorrError_Degenerate, PermCorrError_IO, PermCorrError_NonFinite,
                           PermCorrError_Parse, PermCorrError_Range, PermCorrError_TooSmall,
                           central_moments, load_csv, pearson_obs, rank_transform, spearman_obs)


class TestDataset:
    def test_validation(self):
        with pytest.raises(PermCorrError_Range):
            Dataset([1.0, 2.0, 3.0], [1.0, 2.0])
        with pytest.raises(PermCorrError_TooSmall):
            Dataset([1.0], [2.0])
        with pytest.raises(PermCorrError_NonFinite):
            Dataset([1.0, math.nan], [2.0, 3.0])
        with pytest.raises(PermCorrError_NonFinite):
            Dataset([1.0, 2.0], [math.inf, 3.0])

    def test_immutable(self, tiny):
        with pytest.raises(ValueError):
            tiny.x[0] = 5.0
        assert tiny.n == len(tiny) == 3

    def test_permuted_moves_y_only(self, tiny):
        permuted = tiny.permuted([2, 0, 1])
        np.testing.assert_array_equal(permuted.x, tiny.x)
        np.testing.assert_array_equal(permuted.y, [3.0, 1.0, 2.0])
        assert permuted != tiny
        assert Dataset.from_columns((1, 2, 3), (1, 2, 3)) == tiny

    def test_has_ties(self, tiny):
        assert not tiny.has_ties()
        assert Dataset([1.0, 1.0, 2.0], [1.0, 2.0, 3.0]).has_ties()


class TestCentralMoments:
    def test_small_sample(self):
        moments = central_moments([1.0, 2.0, 3.0], 4)
        assert moments.n == 3
        assert moments.mu == 2.0
        assert moments.S == (3.0, 0.0, 2.0, 0.0, 2.0)
        assert moments.chi(4) == pytest.approx(2.0 / 3.0)
        assert moments.sigma == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_constant_is_degenerate(self):
        moments = central_moments([7.25] * 5, 3)
        assert moments.S[1:] == (0.0, 0.0, 0.0)
        assert moments.is_degenerate()

    def test_exact_matches_float(self, make_dataset):
        values = make_dataset(9, seed=3).x
        approximate = central_moments(values, 6)
        exact = central_moments(values, 6, exact=True)
        assert exact.is_exact and not approximate.is_exact
        assert all(isinstance(s, Fraction) for s in exact.S)
        np.testing.assert_allclose([float(s) for s in exact.S], approximate.S, rtol=1e-12, atol=1e-15)

    def test_shifted_data(self):
        values = 1e8 + np.arange(10, dtype=np.float64)
        moments = central_moments(values, 2)
        assert moments.raw(2) == pytest.approx(82.5, rel=1e-12)
        assert abs(moments.raw(1)) < 1e-6
        assert moments.scale == 4.0

    def test_order_independent(self, make_dataset):
        values = make_dataset(40, seed=8, generator='normal').x
        moments = central_moments(values, 6)
        assert central_moments(values[::-1], 6) == moments
        assert central_moments(np.random.default_rng(1).permutation(values), 6) == moments

    @pytest.mark.parametrize('factor', [1e-200, 1e-45, 1e40, 1e250])
    def test_extreme_spread(self, factor):
        values = np.array([1.0, 2.0, 3.0, 7.0])
        moments = central_moments(values * factor, 12)
        reference = central_moments(values, 12)
        assert all(math.isfinite(s) for s in moments.S)
        assert not moments.is_degenerate()
        for j in (3, 4, 12):
            assert (moments.S[j] / moments.S[2] ** (j / 2)
                    == pytest.approx(reference.S[j] / reference.S[2] ** (j / 2), rel=1e-12))


class TestCorrelation:
    def test_pearson_identity(self, tiny):
        assert pearson_obs(tiny) == 1.0
        assert pearson_obs(Dataset([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])) == -1.0

    def test_pearson_bounded(self, make_dataset):
        for seed in range(20):
            assert -1.0 <= pearson_obs(make_dataset(12, seed=seed)) <= 1.0

    def test_degenerate(self):
        with pytest.raises(PermCorrError_Degenerate):
            pearson_obs(Dataset([1.0, 2.0, 3.0], [4.0, 4.0, 4.0]))

    def test_midranks(self):
        ranked = rank_transform(Dataset([10.0, 20.0, 20.0, 30.0], [4.0, 3.0, 2.0, 1.0]))
        np.testing.assert_array_equal(ranked.x, [1.0, 2.5, 2.5, 4.0])
        np.testing.assert_array_equal(ranked.y, [4.0, 3.0, 2.0, 1.0])

    def test_spearman_monotone(self):
        x = np.linspace(0.1, 2.0, 7)
        assert spearman_obs(Dataset(x, np.exp(x))) == pytest.approx(1.0, abs=1e-15)

    def test_affine_maps(self, make_dataset):
        dataset = make_dataset(15, seed=4)
        rho = pearson_obs(dataset)
        assert pearson_obs(Dataset(2.5 * dataset.x + 1.0, 0.5 * dataset.y - 3.0)) == pytest.approx(rho, rel=1e-12, abs=1e-14)
        assert pearson_obs(Dataset(-4.0 * dataset.x, dataset.y)) == pytest.approx(-rho, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize('factor', [1e-170, 1e-45, 1e150])
    def test_extreme_spread(self, make_dataset, factor):
        dataset = make_dataset(15, seed=4)
        scaled = Dataset(dataset.x * factor, dataset.y)
        assert pearson_obs(scaled) == pytest.approx(pearson_obs(dataset), rel=1e-12, abs=1e-14)

    def test_out_of_range_is_clamped(self, tiny, monkeypatch, caplog):
        monkeypatch.setattr('permcorr.core.dataset.accurate_sum', lambda terms: 10.0)
        with caplog.at_level(logging.WARNING, logger='permcorr'):
            assert pearson_obs(tiny) == 1.0
        assert 'outside [-1, 1]' in caplog.text


class TestLoadCsv:
    def test_plain(self, write_csv):
        dataset = load_csv(write_csv([(1, 2), (3, 4), (5, 7)]))
        np.testing.assert_array_equal(dataset.x, [1.0, 3.0, 5.0])
        np.testing.assert_array_equal(dataset.y, [2.0, 4.0, 7.0])

    def test_header_and_blank_lines(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('x,y\r\n1.5,2\r\n\r\n3,4.25\r\n\r\n', encoding='UTF-8')
        dataset = load_csv(str(path), has_header=True)
        np.testing.assert_array_equal(dataset.x, [1.5, 3.0])
        assert load_csv(str(path), has_header=None) == dataset

    def test_header_rejected_without_flag(self, write_csv):
        path = write_csv([(1, 2), (3, 4)], header='x,y')
        with pytest.raises(PermCorrError_Parse) as info:
            load_csv(path)
        assert info.value.row == 1
        assert 'E_PARSE' in str(info.value)

    def test_bad_row(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('1,2\n3,4\n5,six\n', encoding='UTF-8')
        with pytest.raises(PermCorrError_Parse) as info:
            load_csv(str(path))
        assert info.value.row == 3

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('1,2\n3,4,5\n', encoding='UTF-8')
        with pytest.raises(PermCorrError_Parse):
            load_csv(str(path))

    def test_non_finite(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('1,2\nnan,4\n', encoding='UTF-8')
        with pytest.raises(PermCorrError_NonFinite):
            load_csv(str(path))

    def test_too_small(self, write_csv):
        with pytest.raises(PermCorrError_TooSmall):
            load_csv(write_csv([(1, 2)]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(PermCorrError_IO) as info:
            load_csv(str(tmp_path / 'missing.csv'))
        assert info.value.exit_code == 2

    def test_row_index_counts_data_rows(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('x,y\n\n1,2\n\n3,oops\n', encoding='UTF-8')
        with pytest.raises(PermCorrError_Parse) as info:
            load_csv(str(path), has_header=True)
        assert (info.value.row, info.value.line) == (2, 5)
        assert 'row 2 (line 5)' in str(info.value)

    def test_quoted_and_spaced_cells(self, tmp_path, write_csv):
        path = tmp_path / 'quoted.csv'
        path.write_text('"1", 2\n 3 ,"4"\n5,7\n', encoding='UTF-8')
        assert load_csv(str(path)) == load_csv(write_csv([(1, 2), (3, 4), (5, 7)]))

    def test_single_column(self, tmp_path):
        path = tmp_path / 'data.csv'
        path.write_text('1\n2\n3\n', encoding='UTF-8')
        with pytest.raises(PermCorrError_Parse) as info:
            load_csv(str(path))
        assert info.value.row == 1

    def test_large_file(self, tmp_path):
        rng = np.random.default_rng(12)
        data = rng.standard_normal((5000, 2))
        path = tmp_path / 'large.csv'
        np.savetxt(str(path), data, delimiter=',', header='x,y', comments='', fmt='%.17g')
        dataset = load_csv(str(path), has_header=None)
        np.testing.assert_array_equal(dataset.x, data[:, 0])
        np.testing.assert_array_equal(dataset.y, data[:, 1])
