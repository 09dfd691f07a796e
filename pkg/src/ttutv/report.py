"""CSV reports: one row per decomposition or completion run.

The header is fixed for a given :data:`REPORT_VERSION`; any change to the
columns or their order must bump it. Files are UTF-8 with LF line endings.
"""

import csv
import math

from .tensor_core import psnr as _psnr
from .tt import param_count

REPORT_VERSION = 1

REPORT_FIELDS = (
    "method",
    "sweep",
    "mode",
    "ranks",
    "eps",
    "rse",
    "psnr",
    "bound",
    "bound_kind",
    "achieved_error",
    "wall_time_ms",
    "param_count",
)

TRACE_FIELDS = ("iteration", "rse_observed", "rse_full", "psnr", "wall_time_ms")


def format_ranks(ranks):
    """``(1, 4, 4, 1)`` -> ``"1-4-4-1"`` (no commas, so no CSV quoting)."""
    return "-".join(str(int(r)) for r in ranks)


def _num(x):
    if x is None or x == "":
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def decomp_row(report, X, truth=None, eps=None):
    """Report row for a decomposition; ``report.achieved_error`` should be filled in."""
    row = {
        "method": report.method,
        "sweep": report.sweep,
        "mode": report.mode,
        "ranks": format_ranks(X.ranks),
        "eps": _num(eps),
        "rse": _num(report.rse),
        "psnr": "",
        "bound": _num(report.bound),
        "bound_kind": report.bound_kind,
        "achieved_error": _num(report.achieved_error),
        "wall_time_ms": _num(1000.0 * report.wall_time),
        "param_count": param_count(X),
    }
    if truth is not None:
        row["psnr"] = _num(_psnr(X.full(), truth))
    return row


def _last(xs):
    return xs[-1] if xs else ""


def completion_row(retraction, X, trace, wall_time):
    """Report row for a completion run (last iterate)."""
    return {
        "method": retraction,
        "sweep": "",
        "mode": "completion",
        "ranks": format_ranks(X.ranks),
        "eps": "",
        "rse": _num(_last(trace.rse_full) if trace.rse_full else _last(trace.rse_observed)),
        "psnr": _num(_last(trace.psnr)),
        "bound": "",
        "bound_kind": "",
        "achieved_error": "",
        "wall_time_ms": _num(1000.0 * wall_time),
        "param_count": param_count(X),
    }


def _write(path, fields, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _num(v) if isinstance(v, float) else v for k, v in row.items()})


def write_report(path, rows):
    _write(path, REPORT_FIELDS, rows)


def write_trace(path, trace):
    _write(path, TRACE_FIELDS, trace.rows())


def read_report(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
