# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring,redefined-outer-name

import numpy as np
import pytest

from permcorr.core import Dataset, generate_dataset


@pytest.fixture
def tiny():
    """``x = y = (1, 2, 3)``: the six permutation correlations are 1, 1/2, 1/2, -1/2, -1/2, -1."""

    return Dataset([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


@pytest.fixture
def make_dataset():
    def factory(n, seed=0, generator='uniform'):
        return generate_dataset(n, np.random.default_rng(seed), generator)

    return factory


@pytest.fixture
def write_csv(tmp_path):
    def writer(rows, name='data.csv', header=None):
        path = tmp_path / name
        lines = [] if header is None else [header]
        lines.extend('{!r},{!r}'.format(float(x), float(y)) for x, y in rows)
        path.write_text('\n'.join(lines) + '\n', encoding='UTF-8')
        return str(path)

    return writer
