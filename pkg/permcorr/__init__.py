# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

"""Exact permutation moments, null distributions and p-values of correlation coefficients."""

from permcorr import core
from permcorr.core import *
from permcorr.version import __version__


__all__ = core.__all__.copy()
