"""CSV tables and claim reports.

CSV files use LF line endings, RFC-style quoting, '.' as decimal separator
and 17 significant digits, so equal numbers give equal bytes. The first line
of every file is a comment carrying the resolved configuration hash.
"""

import csv
import io
import math
import os
from dataclasses import dataclass

SCAN_COLUMNS = ("param", "value", "gap", "running_fit")
QUANTITY_COLUMNS = ("quantity", "value")


class ReportError(OSError):
    pass


def fmt(x):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, int):
        return str(x)
    try:
        v = float(x)
    except (TypeError, ValueError):
        return str(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def csv_text(columns, rows, digest=None):
    buf = io.StringIO()
    if digest is not None:
        buf.write(f"# config_sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def scan_csv(scan, digest=None):
    return csv_text(SCAN_COLUMNS, scan.rows(), digest)


def quantity_csv(pairs, digest=None):
    return csv_text(QUANTITY_COLUMNS, list(pairs), digest)


@dataclass(frozen=True)
class Check:
    """One claim: measured against expected within a stated tolerance."""
    tag: str
    measured: object
    expected: object
    tolerance: str
    passed: bool

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.tag}: {fmt(self.measured)} vs {fmt(self.expected)} "
                f"[{self.tolerance}] {verdict}")


def within(tag, measured, expected, rel=None, abs_=None):
    """Check |measured - expected| <= rel * |expected| (or <= abs_)."""
    m, e = float(measured), float(expected)
    if rel is not None:
        ok = abs(m - e) <= rel * abs(e)
        tol = f"rel {rel:g}"
    else:
        ok = abs(m - e) <= abs_
        tol = f"abs {abs_:g}"
    return Check(tag, m, e, tol, bool(ok and math.isfinite(m)))


def at_most(tag, measured, bound):
    m = float(measured)
    return Check(tag, m, float(bound), "<=", bool(m <= bound))


def below(tag, measured, bound):
    m = float(measured)
    return Check(tag, m, float(bound), "<", bool(m < bound))


def holds(tag, ok, measured="true", expected="true"):
    return Check(tag, measured, expected, "exact", bool(ok))


def report_text(checks, digest=None, header=()):
    lines = []
    if digest is not None:
        lines.append(f"# config_sha256={digest}")
    lines.extend(f"# {h}" for h in header)
    lines.extend(c.line() for c in checks)
    return "\n".join(lines) + "\n"


def write_outputs(directory, files):
    """Write {name: text} under ``directory`` after all computing is done."""
    try:
        os.makedirs(directory, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(directory, name), "w", newline="\n") as fh:
                fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write outputs to {directory}: {exc.strerror}") from None
