"""Tail-ratio series with trailing-window statistics.

Every limsup/liminf in the class definitions is estimated from one of these
series: the ratio is sampled at each lattice point of ``[x_lo, valid_up_to]``
and summarized over a ladder of trailing windows (the last ``W`` usable
points, ``W`` a fixed fraction of the usable count).

Points whose denominator is at or below ``floor`` are not divided. They are
flagged ``FLAG_INF`` when the numerator is at least ``sqrt(floor)``, because
a finite ratio would then exceed ``1/sqrt(floor)`` (a genuine blow-up such as
the tail of a bounded law hitting zero). Otherwise both sides have decayed
into the floor together and the point is ``FLAG_UNDERFLOW``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..convolution import convolve
from ..lattice import TailGrid, snap_steps

DEFAULT_FLOOR = 1e-280
DEFAULT_FRACTIONS = (1 / 16, 1 / 8, 1 / 4)

FLAG_OK = 0
FLAG_INF = 1
FLAG_UNDERFLOW = 2
FLAG_NAMES = {FLAG_OK: "ok", FLAG_INF: "inf", FLAG_UNDERFLOW: "underflow"}


class EmptyRangeError(ValueError):
    """No point of the requested range has a usable denominator."""


@dataclass(frozen=True, eq=False)
class WindowStat:
    width: int
    sup: float
    inf: float
    slope: float
    x_start: float


@dataclass(frozen=True, eq=False)
class RatioSeries:
    """Sampled ratio with its trailing-window summaries.

    ``values`` is ``inf`` at ``FLAG_INF`` points and ``nan`` at underflow
    points. ``windows`` is ordered from the smallest width to the largest.
    ``rolling_sup``/``rolling_inf`` are trailing statistics over the smallest
    width at every usable point (``nan`` elsewhere), for reports.
    """
    label: str
    xs: np.ndarray
    values: np.ndarray
    flags: np.ndarray
    windows: tuple
    valid_up_to: float
    x_lo: float
    rolling_sup: np.ndarray
    rolling_inf: np.ndarray
    notes: tuple = field(default=())

    @property
    def ok(self) -> np.ndarray:
        return self.flags == FLAG_OK

    @property
    def n_ok(self) -> int:
        return int(self.ok.sum())

    @property
    def n_inf(self) -> int:
        return int((self.flags == FLAG_INF).sum())

    @property
    def n_underflow(self) -> int:
        return int((self.flags == FLAG_UNDERFLOW).sum())

    @property
    def window_sups(self) -> np.ndarray:
        return np.array([w.sup for w in self.windows])

    @property
    def window_infs(self) -> np.ndarray:
        return np.array([w.inf for w in self.windows])

    @property
    def sup(self) -> float:
        """Largest ratio over the whole usable range (``inf`` if any point blew up)."""
        if self.n_inf:
            return math.inf
        return float(np.max(self.values[self.ok]))

    @property
    def inf(self) -> float:
        return float(np.min(self.values[self.ok]))

    def ok_values(self) -> np.ndarray:
        return self.values[self.ok]

    def ok_xs(self) -> np.ndarray:
        return self.xs[self.ok]

    def summary(self) -> dict:
        return {
            "label": self.label,
            "x_lo": self.x_lo,
            "valid_up_to": self.valid_up_to,
            "n_ok": self.n_ok,
            "n_inf": self.n_inf,
            "n_underflow": self.n_underflow,
            "window_widths": [w.width for w in self.windows],
            "window_sups": [w.sup for w in self.windows],
            "window_infs": [w.inf for w in self.windows],
            "window_slopes": [w.slope for w in self.windows],
            "notes": list(self.notes),
        }


def _relative_slope(v: np.ndarray) -> float:
    """Least-squares slope per point divided by the mean level."""
    if v.size < 2:
        return 0.0
    i = np.arange(v.size, dtype=float)
    i -= i.mean()
    mean = float(v.mean())
    slope = float(np.dot(i, v - mean) / np.dot(i, i))
    return slope / mean if mean != 0 else math.inf


def make_series(label: str, xs, num, den, *, floor: float = DEFAULT_FLOOR,
                fractions=DEFAULT_FRACTIONS, notes=()) -> RatioSeries:
    """Divide ``num/den`` under the floor rule and attach window statistics."""
    xs = np.asarray(xs, dtype=float)
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = den > floor
    if not np.any(ok):
        last = xs[-1] if xs.size else math.nan
        raise EmptyRangeError(f"{label}: denominator at or below {floor:g} on the whole range "
                              f"(valid_up_to undefined; range ends at {last!r})")
    blowup = num >= math.sqrt(floor)
    flags = np.where(ok, FLAG_OK, np.where(blowup, FLAG_INF, FLAG_UNDERFLOW)).astype(np.int8)
    valid_up_to = float(xs[ok][-1])
    keep = xs <= valid_up_to
    # beyond valid_up_to only blow-ups are informative
    keep |= flags == FLAG_INF
    xs, num, den, flags = xs[keep], num[keep], den[keep], flags[keep]
    ok = flags == FLAG_OK
    values = np.full(xs.size, np.nan)
    with np.errstate(over="ignore"):
        values[ok] = num[ok] / den[ok]
    values[flags == FLAG_INF] = np.inf

    v_ok = values[ok]
    x_ok = xs[ok]
    n_ok = v_ok.size
    windows = []
    for f in sorted(fractions):
        w = max(2, int(n_ok * f)) if n_ok >= 2 else 1
        w = min(w, n_ok)
        seg = v_ok[-w:]
        windows.append(WindowStat(w, float(seg.max()), float(seg.min()),
                                  _relative_slope(seg), float(x_ok[-w])))
    w0 = windows[0].width
    rs = np.full(xs.size, np.nan)
    ri = np.full(xs.size, np.nan)
    if n_ok:
        # trailing window: the filter is centred, so shift its origin right
        origin = (w0 - 1) // 2
        rs[ok] = ndimage.maximum_filter1d(v_ok, w0, mode="nearest", origin=origin)
        ri[ok] = ndimage.minimum_filter1d(v_ok, w0, mode="nearest", origin=origin)
    return RatioSeries(label, xs, values, flags, tuple(windows), valid_up_to, float(xs[0]),
                       rs, ri, tuple(notes))


def _start_index(V: TailGrid, x_lo: float) -> int:
    i = int(math.ceil(x_lo / V.step - 1e-9))
    if i > V.n:
        raise EmptyRangeError(f"x_lo={x_lo!r} lies beyond the grid end {V.x_end!r}")
    return max(i, 0)


def _ext_tail(V: TailGrid, idx: np.ndarray) -> np.ndarray:
    """Tail at integer lattice indices, with the total mass for negative ones."""
    out = V.tail[np.clip(idx, 0, V.n)]
    return np.where(idx < 0, V.total_mass, out)


def _windows_at(V: TailGrid, idx: np.ndarray, J: int) -> np.ndarray:
    """``V(ih, ih + J h]`` at indices ``idx`` (callers keep ``idx + J <= n``)."""
    return _ext_tail(V, idx) - _ext_tail(V, idx + J)


def ratio_shift(V: TailGrid, t: float, x_lo: float = 0.0, *, floor: float = DEFAULT_FLOOR,
                fractions=DEFAULT_FRACTIONS) -> RatioSeries:
    """``V(x - t) / V(x)`` (tails) on lattice points ``x >= x_lo``."""
    if not t > 0:
        raise ValueError(f"shift t must be positive, got {t!r}")
    k, note = snap_steps(V, t)
    i0 = _start_index(V, x_lo)
    idx = np.arange(i0, V.n + 1)
    return make_series(f"shift(t={k * V.step!r})", idx * V.step, _ext_tail(V, idx - k),
                       V.tail[idx], floor=floor, fractions=fractions,
                       notes=(note,) if note else ())


def ratio_conv2(V: TailGrid, x_lo: float = 0.0, *, floor: float = DEFAULT_FLOOR,
                fractions=DEFAULT_FRACTIONS, V2: TailGrid | None = None) -> RatioSeries:
    """``V^{*2}(x) / V(x)`` (tails) on lattice points ``x >= x_lo``."""
    if V2 is None:
        V2 = convolve(V, V)
    i0 = _start_index(V, x_lo)
    idx = np.arange(i0, V.n + 1)
    # the square may be exact only on a shorter range than V
    idx = idx[idx <= V2.n]
    num = V2.tail[idx]
    return make_series("conv2", idx * V.step, num, V.tail[idx], floor=floor,
                       fractions=fractions)


def _local_steps(V: TailGrid, T_len: float):
    J, note = snap_steps(V, T_len, what="T")
    return J, note


def local_ratio_shift(V: TailGrid, t: float, T_len: float, x_lo: float = 0.0, *,
                      floor: float = DEFAULT_FLOOR, fractions=DEFAULT_FRACTIONS) -> RatioSeries:
    """``V(x - t + Δ_T) / V(x + Δ_T)`` with window masses; global ratio when ``T`` passes the grid."""
    if not T_len > 0:
        raise ValueError(f"window length must be positive, got {T_len!r}")
    if T_len >= V.x_end:
        s = ratio_shift(V, t, x_lo, floor=floor, fractions=fractions)
        return _relabel(s, f"local_shift(t={t!r}, T=inf)")
    k, note_t = snap_steps(V, t)
    J, note_T = _local_steps(V, T_len)
    i0 = _start_index(V, x_lo)
    idx = np.arange(i0, V.n - J + 1)
    if idx.size == 0:
        raise EmptyRangeError(f"no lattice point x >= {x_lo!r} with x + T inside the grid")
    notes = tuple(n for n in (note_t, note_T) if n)
    return make_series(f"local_shift(t={k * V.step!r}, T={J * V.step!r})", idx * V.step,
                       _windows_at(V, idx - k, J), _windows_at(V, idx, J),
                       floor=floor, fractions=fractions, notes=notes)


def local_ratio_conv2(V: TailGrid, T_len: float, x_lo: float = 0.0, *,
                      floor: float = DEFAULT_FLOOR, fractions=DEFAULT_FRACTIONS,
                      V2: TailGrid | None = None) -> RatioSeries:
    """``V^{*2}(x + Δ_T) / V(x + Δ_T)``; global ratio when ``T`` passes the grid."""
    if not T_len > 0:
        raise ValueError(f"window length must be positive, got {T_len!r}")
    if T_len >= V.x_end:
        return _relabel(ratio_conv2(V, x_lo, floor=floor, fractions=fractions, V2=V2),
                        "local_conv2(T=inf)")
    if V2 is None:
        V2 = convolve(V, V)
    J, note = _local_steps(V, T_len)
    i0 = _start_index(V, x_lo)
    idx = np.arange(i0, min(V.n, V2.n) - J + 1)
    if idx.size == 0:
        raise EmptyRangeError(f"no lattice point x >= {x_lo!r} with x + T inside the grid")
    return make_series(f"local_conv2(T={J * V.step!r})", idx * V.step,
                       _windows_at(V2, idx, J), _windows_at(V, idx, J),
                       floor=floor, fractions=fractions, notes=(note,) if note else ())


def tail_ratio(A: TailGrid, B: TailGrid, x_lo: float = 0.0, *, floor: float = DEFAULT_FLOOR,
               fractions=DEFAULT_FRACTIONS, label: str = "tail_ratio") -> RatioSeries:
    """``A(x) / B(x)`` (tails) on the common lattice range."""
    if not math.isclose(A.step, B.step, rel_tol=1e-12):
        raise ValueError(f"step mismatch: {A.step!r} vs {B.step!r}")
    n = min(A.n, B.n)
    i0 = _start_index(A, x_lo)
    idx = np.arange(i0, n + 1)
    return make_series(label, idx * A.step, A.tail[idx], B.tail[idx], floor=floor,
                       fractions=fractions)


def _relabel(s: RatioSeries, label: str) -> RatioSeries:
    return RatioSeries(label, s.xs, s.values, s.flags, s.windows, s.valid_up_to, s.x_lo,
                       s.rolling_sup, s.rolling_inf, s.notes)
