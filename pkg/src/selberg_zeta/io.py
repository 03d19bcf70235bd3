"""CSV and JSON serialization for tables, group descriptors and evaluations.

Column orders are fixed:

* multiplicity tables: ``n, p, m_numerator, m_denominator``
* evaluations: ``sigma, t, re, im, tail_budget, terms_used`` (grid dumps
  prepend ``row, col``)
* scans: ``tau, sup_error, is_record``
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .class_numbers import MultiplicityTable
from .congruence import GroupDescriptor

__all__ = [
    "MULT_COLUMNS",
    "EVAL_COLUMNS",
    "table_to_csv",
    "table_from_csv",
    "write_table",
    "read_table",
    "group_to_json",
    "group_from_json",
    "evaluations_to_csv",
]

MULT_COLUMNS = ("n", "p", "m_numerator", "m_denominator")
EVAL_COLUMNS = ("sigma", "t", "re", "im", "tail_budget", "terms_used")


def table_to_csv(table: MultiplicityTable) -> str:
    """One row per trace ``3..n_max``; the group goes in a leading ``# group=`` comment."""
    buf = io.StringIO()
    buf.write(f"# group={json.dumps(GroupDescriptor.coerce(table.group).to_dict(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MULT_COLUMNS)
    for n in range(3, table.n_max + 1):
        m = Fraction(table.m[n])
        w.writerow([n, table.p[n], m.numerator, m.denominator])
    return buf.getvalue()


def table_from_csv(text: str) -> MultiplicityTable:
    lines = text.splitlines()
    group = GroupDescriptor.modular()
    if lines and lines[0].startswith("# group="):
        group = GroupDescriptor.from_dict(json.loads(lines[0][len("# group="):]))
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if not rows or tuple(rows[0]) != MULT_COLUMNS:
        raise ValueError(f"expected header {','.join(MULT_COLUMNS)}")
    m, p = {}, {}
    for row in rows[1:]:
        n, pn, num, den = (int(v) for v in row)
        m[n] = Fraction(num, den)
        p[n] = pn
    n_max = max(m) if m else 2
    if sorted(m) != list(range(3, n_max + 1)):
        raise ValueError("table rows must cover every trace from 3 to n_max")
    return MultiplicityTable(group, n_max, m, p)


def write_table(table: MultiplicityTable, path) -> None:
    Path(path).write_text(table_to_csv(table))


def read_table(path) -> MultiplicityTable:
    return table_from_csv(Path(path).read_text())


def group_to_json(group) -> str:
    return json.dumps(GroupDescriptor.coerce(group).to_dict(), sort_keys=True)


def group_from_json(text: str) -> GroupDescriptor:
    return GroupDescriptor.from_dict(json.loads(text))


def evaluations_to_csv(rows: Iterable, grid: bool = False) -> str:
    """``rows`` are ``(sigma, t, SeriesResult)`` or, with ``grid``, ``(row, col, sigma, t, SeriesResult)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((("row", "col") if grid else ()) + EVAL_COLUMNS)
    for item in rows:
        *head, res = item
        z = complex(res.value)
        w.writerow([*head, repr(z.real), repr(z.imag), repr(float(res.tail_budget)), res.terms_used])
    return buf.getvalue()
