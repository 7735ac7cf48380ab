"""Reproduction checks for the oscillating counterexample family.

Four checks, each PASS / FAIL / INCONCLUSIVE:

``plateau``
    closed-form shift ratio equals ``exp(gamma t)`` at every lattice point
    of ``[2 a_n + t, a_{n+1} - t)``.
``peak``
    on the grid, the window sup of the shift ratio over ``[2 a_n, 2 a_n + t)``
    at the largest cycle the grid realizes is within tolerance of
    ``(1 + t) exp(gamma t)``.
``L_verdict``
    :func:`classify` against ``L(gamma)`` returns consistent-nonmember.
``vanishing_product``
    per-cycle sups of ``F0(x) (1 + x)`` decrease strictly (evaluated in
    closed form, so cycles past the grid are included).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..families import (Example61Params, example61_grid, example61_log_base_tail,
                        example61_shift_ratio)
from .ratios import RatioSeries, ratio_shift
from .verdict import NONMEMBER, ClassSpec, DiagConfig, classify

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass(frozen=True, eq=False)
class CheckResult:
    name: str
    status: str
    detail: dict
    series: tuple = field(default=(), repr=False)


def plateau_check(params: Example61Params, t: float, step: float, cycles=(0, 1),
                  rtol: float = 1e-9) -> CheckResult:
    target = math.exp(params.gamma * t)
    worst = 0.0
    counts = {}
    for n in cycles:
        lo = 2.0 * params.scale(n) + t
        hi = params.scale(n + 1) - t
        xs = np.arange(math.ceil(lo / step), math.ceil(hi / step)) * step
        xs = xs[(xs >= lo) & (xs < hi)]
        counts[str(n)] = int(xs.size)
        if xs.size:
            dev = np.abs(example61_shift_ratio(params, xs, t) / target - 1.0)
            worst = max(worst, float(dev.max()))
    status = PASS if worst <= rtol and sum(counts.values()) else FAIL
    return CheckResult("plateau", status, {"t": t, "target": target, "max_rel_dev": worst,
                                           "rtol": rtol, "points_per_cycle": counts})


def realized_cycle(params: Example61Params, s: RatioSeries, t: float) -> int | None:
    """Largest ``n`` whose peak window ``[2 a_n, 2 a_n + t)`` lies inside the usable range."""
    best = None
    for n in range(params.log_scales.size - 1):
        a2 = 2.0 * params.scale(n)
        if not math.isfinite(a2) or a2 + t > s.valid_up_to:
            break
        best = n
    return best


def peak_check(params: Example61Params, s: RatioSeries, t: float, rtol: float = 0.05) -> CheckResult:
    target = (1.0 + t) * math.exp(params.gamma * t)
    n = realized_cycle(params, s, t)
    if n is None:
        return CheckResult("peak", INCONCLUSIVE, {"t": t, "reason": "no cycle realized"}, (s,))
    lo = 2.0 * params.scale(n)
    m = s.ok & (s.xs >= lo) & (s.xs < lo + t)
    sup = float(s.values[m].max())
    closed = float(example61_shift_ratio(params, lo, t))
    rel = sup / target - 1.0
    return CheckResult("peak", PASS if abs(rel) <= rtol else FAIL,
                       {"t": t, "cycle": n, "target": target, "grid_window_sup": sup,
                        "closed_form_at_2a_n": closed, "rel_dev": rel, "rtol": rtol}, (s,))


def cycle_product_sups(params: Example61Params, n_max: int, samples: int = 4097) -> list[float]:
    """``sup_{x in [a_n, a_{n+1})} F0(x) (1 + x)`` for ``n = 0..n_max`` (closed form)."""
    out = []
    for n in range(n_max + 1):
        a_n, a_next = params.scale(n), params.scale(n + 1)
        lin = np.linspace(a_n, 2.0 * a_n, samples)
        lin = lin[lin < 2.0 * a_n]
        pts = np.concatenate([lin, [2.0 * a_n, np.nextafter(a_next, 0.0)]])
        logv = example61_log_base_tail(params, pts) + np.log1p(pts)
        out.append(float(np.exp(logv.max())))
    return out


def vanishing_product_check(params: Example61Params, n_max: int | None = None) -> CheckResult:
    n_max = params.n_cycles + 1 if n_max is None else n_max
    sups = cycle_product_sups(params, n_max)
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    return CheckResult("vanishing_product", PASS if decreasing else FAIL,
                       {"cycle_sups": sups, "strictly_decreasing": decreasing})


def repro_example61(params: Example61Params, t_ladder=(1.0, 2.0), step: float = 1 / 32,
                    x_end: float | None = None, config: DiagConfig | None = None) -> dict:
    """Run all four checks; returns ``{"checks": [...], "verdict": Verdict, "grid": TailGrid}``.

    ``x_end`` defaults to where the tilted tail has fallen below the
    underflow floor, plus a margin, but never less than ``2 a_1 + 2 max(t)``.
    """
    cfg = config or DiagConfig()
    if x_end is None:
        # the tail is below the floor once gamma*x + |log F0| exceeds -log(floor)
        need = 2.0 * params.scale(1) + 2.0 * max(t_ladder)
        if params.gamma > 0:
            x_end = max(need, -math.log(cfg.floor) / params.gamma * 1.02)
        else:
            x_end = 2.0 * params.scale(min(params.n_cycles, 2)) + 2.0 * max(t_ladder)
    grid_params = Example61Params(params.alpha, params.a, params.gamma,
                                  n_cycles=_cycles_within(params, x_end))
    G = example61_grid(grid_params, step, int(math.ceil(x_end / step)))
    checks = []
    for t in t_ladder:
        checks.append(plateau_check(params, t, step))
        s = ratio_shift(G, t, floor=cfg.floor, fractions=cfg.fractions)
        checks.append(peak_check(params, s, t))
    verdict = classify(G, ClassSpec("L", params.gamma), cfg, ts=list(t_ladder))
    checks.append(CheckResult("L_verdict",
                              PASS if verdict.status == NONMEMBER else
                              (INCONCLUSIVE if verdict.status == "inconclusive" else FAIL),
                              {"status": verdict.status, "reason": verdict.reason}))
    checks.append(vanishing_product_check(params))
    return {"checks": checks, "verdict": verdict, "grid": G}


def _cycles_within(params: Example61Params, x_end: float) -> int:
    n = 0
    while n + 1 < params.log_scales.size - 1 and 2.0 * params.scale(n + 1) <= x_end:
        n += 1
    return n
