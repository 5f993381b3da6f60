"""Bit-specified output emission: CSV artifacts and the JSON run report.

Every CSV has a header row, comma separators, decimal points and floats
printed with 17 significant digits, so re-reading reproduces the doubles
exactly. Files are written atomically (temp file + rename) so concurrent
sweep points never observe partial artifacts.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

__all__ = [
    "fmt_float",
    "write_csv",
    "write_json",
    "write_trace_csv",
    "write_emissions_csv",
    "write_curve_csv",
    "write_prices_csv",
    "write_table_csv",
]


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: list[str], rows):
    """Write rows of already-formatted cells as RFC-4180-style CSV."""
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_json(path, payload: dict):
    _atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_trace_csv(path, trace):
    rows = [
        [str(r.q), fmt_float(r.alpha), fmt_float(r.entropy), fmt_float(r.quad),
         fmt_float(r.total), fmt_float(r.residual), fmt_float(r.wall_ms)]
        for r in trace
    ]
    write_csv(path, ["q", "alpha", "H", "L", "G", "residual", "wall_ms"], rows)


def write_emissions_csv(path, samples):
    rows = [[str(i), fmt_float(x)] for i, x in enumerate(samples)]
    write_csv(path, ["path", "psi_bar"], rows)


def write_curve_csv(path, t, direct, regression):
    rows = [
        [str(k), fmt_float(t[k]), fmt_float(direct[k]), fmt_float(regression[k])]
        for k in range(len(t))
    ]
    write_csv(path, ["k", "t", "expected_emission_direct", "expected_emission_regression"], rows)


def write_prices_csv(path, prices):
    """prices: iterable of (rep, p1, p2)."""
    rows = [[str(rep), fmt_float(p1), fmt_float(p2)] for rep, p1, p2 in prices]
    write_csv(path, ["rep", "P1", "P2"], rows)


def write_table_csv(path, rows):
    """rows: iterable of (gamma, lambda, rho, p1, p1_se, p2, p2_se)."""
    out = [[fmt_float(g), fmt_float(l), fmt_float(r),
            fmt_float(p1), fmt_float(p1se), fmt_float(p2), fmt_float(p2se)]
           for g, l, r, p1, p1se, p2, p2se in rows]
    write_csv(path, ["gamma", "lambda", "rho", "P1", "P1_se", "P2", "P2_se"], out)
