"""Report writers: series CSVs and TOML manifests.

CSV files have the header ``x,value,window_sup,window_inf,flag``, LF line
endings and floats written with ``repr`` (shortest round-trip form), so the
same inputs give byte-identical files. Anything run-specific (timestamps,
thread count, argv) goes to ``run_meta.toml``, never into data files.
"""
from __future__ import annotations

import csv
import math
import os
from datetime import datetime, timezone

import numpy as np
import tomli_w

from .. import __version__
from ..diagnostics.ratios import FLAG_NAMES, RatioSeries
from ..kernels import BACKEND

SERIES_COLUMNS = ("x", "value", "window_sup", "window_inf", "flag")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_series_csv(path: str, s: RatioSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for x, v, hi, lo, f in zip(s.xs, s.values, s.rolling_sup, s.rolling_inf, s.flags):
            w.writerow((fmt(x), fmt(v), fmt(hi), fmt(lo), FLAG_NAMES[int(f)]))


def write_table_csv(path: str, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(tuple(fmt(v) for v in r))


def to_toml_value(v):
    """Make a value TOML-representable (None -> "none", numpy scalars -> Python)."""
    if v is None:
        return "none"
    if isinstance(v, dict):
        return {str(k): to_toml_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_toml_value(x) for x in v]
    if isinstance(v, np.ndarray):
        return [to_toml_value(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def write_manifest(path: str, data: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(tomli_w.dumps(to_toml_value(data)).encode("utf-8"))


def write_run_meta(out_dir: str, command: str, argv, threads: int) -> None:
    meta = {
        "command": command,
        "argv": list(argv),
        "timestamp_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "kernel_backend": BACKEND,
        "threads": threads,
    }
    write_manifest(os.path.join(out_dir, "run_meta.toml"), meta)


def slug(text: str) -> str:
    out = []
    for ch in str(text):
        out.append(ch if ch.isalnum() or ch in "-." else "_")
    s = "".join(out).strip("_")
    while "__" in s:
        s = s.replace("__", "_")
    return s or "x"


def finite_or_str(v: float):
    return v if math.isfinite(v) else repr(v)
