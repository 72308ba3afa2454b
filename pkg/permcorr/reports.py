# This file is part of permcorr, exact permutation moments of correlation coefficients.
# License: GNU GPL version 3.

# pylint: disable=missing-module-docstring,missing-function-docstring

import csv
import json
import math
import sys
from typing import Any, Dict, List, NamedTuple, Sequence, TextIO

from permcorr.core.utils import colored


__all__ = ['Report', 'OUTPUT_FORMATS', 'emit', 'format_value']


OUTPUT_FORMATS = ('json', 'csv', 'text')


class Report(NamedTuple):
    """One result: ``payload`` is written as JSON, ``header`` and ``rows`` as CSV or text."""

    payload: Dict[str, Any]
    header: Sequence[str]
    rows: List[Sequence[Any]]


def format_value(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isfinite(value):
            return repr(value)
        return str(value)
    return str(value)


def _write_json(report: Report, file: TextIO) -> None:
    json.dump(report.payload, file, sort_keys=True, allow_nan=False, indent=2)
    file.write('\n')


def _write_csv(report: Report, file: TextIO) -> None:
    writer = csv.writer(file, lineterminator='\n')
    writer.writerow(report.header)
    for row in report.rows:
        writer.writerow(list(map(format_value, row)))


def _write_text(report: Report, file: TextIO) -> None:
    cells = [list(map(format_value, row)) for row in report.rows]
    widths = [len(title) for title in report.header]
    for row in cells:
        widths = [max(width, len(cell)) for width, cell in zip(widths, row)]

    header = '  '.join(title.rjust(width) for title, width in zip(report.header, widths))
    print(colored(header, attrs=('bold',)), file=file)
    print('  '.join('-' * width for width in widths), file=file)
    for row in cells:
        print('  '.join(cell.rjust(width) for cell, width in zip(row, widths)), file=file)


def emit(report: Report, output: str = 'json', file: TextIO = None) -> None:
    if file is None:
        file = sys.stdout
    {'json': _write_json, 'csv': _write_csv, 'text': _write_text}[output](report, file)
    file.flush()
