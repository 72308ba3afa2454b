# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring

import sys

from permcorr.cli import main


if __name__ == '__main__':
    sys.exit(main())
