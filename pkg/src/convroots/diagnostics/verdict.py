"""Three-valued membership verdicts from ratio series.

Limit classes (a target limit exists)
    ``L(g)``: shift ratio -> ``exp(g t)``; ``S(g)``: square ratio ->
    ``2 M(V, g)``; ``L_Delta``: local shift ratio -> 1; ``S_Delta``: local
    square ratio -> 2; ``TL_Delta(g)``: finite ``M(V, g)`` and the tilt
    ``V_g`` in ``L_Delta``.

Bounded classes (only a finite limsup is required)
    ``OS``, ``OL``, ``OS_Delta``, ``OL_Delta``.

The rules below are evidence rules on a finite grid; the thresholds live in
:class:`DiagConfig` and are copied into every verdict.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..convolution import convolve
from ..lattice import EsscherError, TailGrid, esscher, gamma_moment, snap_steps
from .ratios import (DEFAULT_FLOOR, DEFAULT_FRACTIONS, EmptyRangeError, RatioSeries,
                     local_ratio_conv2, local_ratio_shift, ratio_conv2, ratio_shift)

MEMBER = "consistent-member"
NONMEMBER = "consistent-nonmember"
INCONCLUSIVE = "inconclusive"

LIMIT_TAGS = ("L", "S", "L_Delta", "S_Delta", "TL_Delta")
BOUNDED_TAGS = ("OS", "OL", "OS_Delta", "OL_Delta")
SHIFT_TAGS = ("L", "OL", "L_Delta", "OL_Delta", "TL_Delta")


@dataclass(frozen=True)
class DiagConfig:
    """Thresholds for turning ratio series into verdicts.

    Attributes
    ----------
    band : float
        Relative tolerance around a target limit.
    slope_band : float
        Largest relative least-squares slope per grid point counted as flat.
    excursion_factor : float
        A series that has entered the band and later leaves it by more than
        ``excursion_factor * band`` is treated as oscillating.
    horizon_factor : float
        A trend that would need more than ``horizon_factor * n_ok`` further
        points to reach the target is treated as not reaching it.
    fractions : tuple of float
        Window widths as fractions of the usable point count.
    floor : float
        Denominator underflow floor.
    t_multiples : tuple of int
        Default shift ladder in lattice steps.
    x_lo : float
        Left end of the diagnostic range.
    """
    band: float = 0.02
    slope_band: float = 1e-3
    excursion_factor: float = 2.0
    horizon_factor: float = 10.0
    fractions: tuple = DEFAULT_FRACTIONS
    floor: float = DEFAULT_FLOOR
    t_multiples: tuple = (1, 2, 5, 10)
    x_lo: float = 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["fractions"] = list(self.fractions)
        d["t_multiples"] = list(self.t_multiples)
        return d


_SPEC_RE = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*$")


@dataclass(frozen=True)
class ClassSpec:
    """Class tag with its parameters.

    ``parse`` accepts ``"OS"``, ``"L(0.5)"``, ``"S(gamma=1)"``,
    ``"L_Delta(T=1)"`` and ``"TL_Delta(gamma=0.5, T=2)"``.
    """
    tag: str
    gamma: float = 0.0
    T: Optional[float] = None

    def __post_init__(self):
        if self.tag not in LIMIT_TAGS + BOUNDED_TAGS:
            raise ValueError(f"unknown class tag {self.tag!r}; expected one of "
                             f"{list(LIMIT_TAGS + BOUNDED_TAGS)}")
        if self.tag.endswith("_Delta") and self.T is None:
            object.__setattr__(self, "T", 1.0)
        if self.T is not None and not self.T > 0:
            raise ValueError(f"window length T must be positive, got {self.T!r}")

    @classmethod
    def parse(cls, text: str) -> "ClassSpec":
        m = _SPEC_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse class spec {text!r}")
        tag, args = m.group(1), m.group(2)
        kw = {}
        pos = []
        if args and args.strip():
            for part in args.split(","):
                part = part.strip()
                if "=" in part:
                    k, v = (s.strip() for s in part.split("=", 1))
                    if k not in ("gamma", "T"):
                        raise ValueError(f"class spec {text!r}: unknown parameter {k!r}")
                    kw[k] = float(v)
                else:
                    pos.append(float(part))
        if len(pos) > 1:
            raise ValueError(f"class spec {text!r}: at most one positional parameter (gamma)")
        if pos:
            kw["gamma"] = pos[0]
        return cls(tag, **kw)

    def __str__(self) -> str:
        parts = []
        if self.tag in ("L", "S", "TL_Delta"):
            parts.append(f"gamma={self.gamma!r}")
        if self.T is not None:
            parts.append(f"T={self.T!r}")
        return f"{self.tag}({', '.join(parts)})" if parts else self.tag


@dataclass(frozen=True, eq=False)
class Verdict:
    status: str
    target: ClassSpec
    evidence: dict
    reason: str
    series: tuple = field(default=(), repr=False)

    def __str__(self) -> str:
        return f"{self.target}: {self.status} ({self.reason})"


# ---------------------------------------------------------------------------
# single-series rules


def _rel(v, target):
    return np.asarray(v) / target - 1.0


def _reexit(values: np.ndarray, target: float, cfg: DiagConfig) -> bool:
    """True when the series enters the band and later leaves by the excursion margin."""
    dev = np.abs(_rel(values, target))
    inside = np.flatnonzero(dev <= cfg.band)
    if inside.size == 0:
        return False
    return bool(np.any(dev[inside[0]:] > cfg.excursion_factor * cfg.band))


def _monotone_growth(s: RatioSeries, cfg: DiagConfig) -> bool:
    """Nondecreasing over the largest window and growing by more than the band in every window."""
    v = s.ok_values()
    big = s.windows[-1]
    seg = v[-big.width:]
    if seg.size < 2:
        return False
    if np.any(np.diff(seg) < -1e-12 * np.abs(seg[1:])):
        return False
    for w in s.windows:
        part = v[-w.width:]
        if not part[-1] > part[0] * (1.0 + cfg.band):
            return False
    return True


def _support_ends(V: TailGrid, cfg: DiagConfig) -> bool:
    """The tail reaches an exact zero with nothing beyond the grid."""
    if V.residual > 0 or V.defect > 0:
        return False
    T = V.tail
    return bool(np.any((T[:-1] > cfg.floor) & (T[1:] == 0.0)))


def judge_limit(s: RatioSeries, target: float, cfg: DiagConfig) -> tuple[str, str, dict]:
    """Verdict for ``lim ratio == target`` from one series."""
    ev = {"target": target, **s.summary()}
    if s.n_inf:
        return NONMEMBER, f"{s.n_inf} points with vanishing denominator", ev
    v = s.ok_values()
    small, big = s.windows[0], s.windows[-1]
    big_seg = v[-big.width:]
    sup_dev = [w.sup / target - 1 for w in s.windows]
    inf_dev = [w.inf / target - 1 for w in s.windows]
    ev["sup_rel_dev"] = sup_dev
    ev["inf_rel_dev"] = inf_dev
    if _reexit(big_seg, target, cfg):
        return NONMEMBER, "re-exits the target band after entering it (oscillation)", ev
    if max(abs(sup_dev[0]), abs(inf_dev[0])) <= cfg.band and abs(small.slope) <= cfg.slope_band:
        return MEMBER, "smallest window inside band and flat", ev
    above = all(d > cfg.band for d in inf_dev)
    below = all(d < -cfg.band for d in sup_dev)
    if above or below:
        gap = inf_dev[0] if above else sup_dev[0]
        slope = small.slope
        moving_away = (slope >= 0) if above else (slope <= 0)
        if moving_away:
            return NONMEMBER, "all windows on one side of the target, trend not closing", ev
        needed = abs(gap) / abs(slope)
        ev["points_to_close"] = needed
        if needed > cfg.horizon_factor * s.n_ok:
            return NONMEMBER, "trend too slow to reach the target within the horizon", ev
        return INCONCLUSIVE, "away from target but trending towards it", ev
    if _monotone_growth(s, cfg) and sup_dev[0] > cfg.band:
        return NONMEMBER, "monotone divergence", ev
    return INCONCLUSIVE, "windows straddle or approach the target band", ev


def judge_bounded(s: RatioSeries, cfg: DiagConfig) -> tuple[str, str, dict]:
    """Verdict for ``limsup ratio < inf`` from one series."""
    ev = s.summary()
    if s.n_inf:
        return NONMEMBER, f"{s.n_inf} points with vanishing denominator", ev
    if _monotone_growth(s, cfg):
        return NONMEMBER, "monotone growth across every window", ev
    small, big = s.windows[0], s.windows[-1]
    if small.sup <= (1.0 + cfg.band) * big.sup:
        return MEMBER, "recent sup does not exceed the long-window sup", ev
    return INCONCLUSIVE, "recent sup still growing", ev


# ---------------------------------------------------------------------------
# classification


def t_ladder(V: TailGrid, cfg: DiagConfig, ts=None) -> list[float]:
    if ts is None:
        return [k * V.step for k in cfg.t_multiples]
    out = []
    for t in ts:
        k, _ = snap_steps(V, t)
        out.append(k * V.step)
    return out


def _combine(results: list[tuple[str, str]]) -> tuple[str, str]:
    statuses = [r[0] for r in results]
    if NONMEMBER in statuses:
        return NONMEMBER, next(r[1] for r in results if r[0] == NONMEMBER)
    if statuses and all(s == MEMBER for s in statuses):
        return MEMBER, "every check consistent"
    return INCONCLUSIVE, next((r[1] for r in results if r[0] == INCONCLUSIVE), "no checks")


def _moment_pinned(V: TailGrid, gamma: float, cfg: DiagConfig):
    mom = gamma_moment(V, gamma)
    if mom.unbounded:
        return mom, "moment overflows on grid"
    if gamma > 0 and V.residual > 0:
        missing = V.residual * math.exp(min(gamma * V.x_end, 700.0))
        if missing > cfg.band * mom.value:
            return mom, f"grid moment only a lower bound (missing >= {missing:.3g})"
    if gamma > 0:
        # a convergent moment sum gets little from the last quarter of the grid
        with np.errstate(divide="ignore", over="ignore"):
            terms = np.exp(gamma * V.xs + np.log(V.masses))
        late = float(terms[3 * terms.size // 4:].sum())
        if late > cfg.band * mom.value:
            return mom, (f"moment sum not settled on the grid (last quarter contributes "
                         f"{late / mom.value:.3g} of it)")
    return mom, None


def classify(V: TailGrid, spec: ClassSpec | str, config: DiagConfig | None = None, *,
             ts=None) -> Verdict:
    """Membership evidence for ``V`` in the class ``spec``.

    Shift-type classes are checked on every ``t`` of the ladder (default
    ``config.t_multiples`` lattice steps). A nonmember result at any ``t``
    makes the class verdict nonmember; member requires every check member.
    """
    cfg = config or DiagConfig()
    if isinstance(spec, str):
        spec = ClassSpec.parse(spec)
    ev: dict = {"class": str(spec), "thresholds": cfg.as_dict()}
    series: list[RatioSeries] = []
    results: list[tuple[str, str]] = []
    try:
        if spec.tag in SHIFT_TAGS:
            W = V
            if spec.tag == "TL_Delta":
                mom, why = _moment_pinned(V, spec.gamma, cfg)
                ev["moment"] = mom.value
                if why:
                    return Verdict(INCONCLUSIVE, spec, ev, why)
                W = _tilt_end_convention(V, spec.gamma)
            ladder = t_ladder(W, cfg, ts)
            ev["t_ladder"] = ladder
            per_t = {}
            for t in ladder:
                if spec.tag in ("L", "OL"):
                    s = ratio_shift(W, t, cfg.x_lo, floor=cfg.floor, fractions=cfg.fractions)
                else:
                    s = local_ratio_shift(W, t, spec.T, cfg.x_lo, floor=cfg.floor,
                                          fractions=cfg.fractions)
                series.append(s)
                if spec.tag in ("OL", "OL_Delta"):
                    st, why, e = judge_bounded(s, cfg)
                else:
                    target = math.exp(spec.gamma * t) if spec.tag == "L" else 1.0
                    st, why, e = judge_limit(s, target, cfg)
                per_t[repr(t)] = {"status": st, "reason": why, **e}
                results.append((st, f"t={t!r}: {why}"))
            ev["per_t"] = per_t
            if spec.tag in ("L", "L_Delta", "TL_Delta") and _support_ends(W, cfg):
                results.append((NONMEMBER, "support ends inside the grid"))
        else:
            V2 = convolve(V, V)
            if spec.tag in ("S", "OS"):
                s = ratio_conv2(V, cfg.x_lo, floor=cfg.floor, fractions=cfg.fractions, V2=V2)
            else:
                s = local_ratio_conv2(V, spec.T, cfg.x_lo, floor=cfg.floor,
                                      fractions=cfg.fractions, V2=V2)
            series.append(s)
            if spec.tag in ("OS", "OS_Delta"):
                st, why, e = judge_bounded(s, cfg)
                results.append((st, why))
            else:
                if spec.tag == "S":
                    mom, why = _moment_pinned(V, spec.gamma, cfg)
                    ev["moment"] = mom.value
                    if why:
                        return Verdict(INCONCLUSIVE, spec, ev, why, tuple(series))
                    target = 2.0 * mom.value
                else:
                    target = 2.0
                st, why, e = judge_limit(s, target, cfg)
                results.append((st, why))
                if spec.tag == "S":
                    # S(g) lies inside L(g): a failed L(g) check is also decisive
                    lv = classify(V, ClassSpec("L", spec.gamma), cfg, ts=ts)
                    ev["L_component"] = lv.status
                    if lv.status == NONMEMBER:
                        results.append((NONMEMBER, f"not in L: {lv.reason}"))
            ev["conv2"] = {"status": st, "reason": why, **e}
    except (EmptyRangeError, EsscherError) as exc:
        ev["error"] = str(exc)
        return Verdict(INCONCLUSIVE, spec, ev, str(exc), tuple(series))
    status, reason = _combine(results)
    return Verdict(status, spec, ev, reason, tuple(series))


def _tilt_end_convention(V: TailGrid, gamma: float) -> TailGrid:
    """Esscher tilt with any residual placed at the grid end (used once the moment is pinned)."""
    if V.residual == 0 or gamma <= 0:
        return esscher(V, gamma)
    return esscher(V, gamma, residual_at_end=True)
