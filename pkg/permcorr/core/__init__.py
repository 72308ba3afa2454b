# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring

from permcorr.core import dataset, errors, moments, oracle, partitions, reconstruct, utils
from permcorr.core.dataset import *
from permcorr.core.errors import *
from permcorr.core.moments import *
from permcorr.core.oracle import *
from permcorr.core.partitions import *
from permcorr.core.reconstruct import *
from permcorr.core.utils import *


__all__ = []
for _module in (dataset, errors, partitions, moments, reconstruct, oracle, utils):
    __all__.extend(_module.__all__)
del _module
