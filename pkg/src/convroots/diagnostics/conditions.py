"""Hypothesis checkers for compound-convolution closure results.

* :func:`check_condition_liminf` -- the lower bound
  ``liminf F^{*k}(x - t) / F^{*k}(x) >= exp(gamma t)`` for each power.
* :func:`find_minimal_n0` -- smallest ``n0`` with
  ``sum_{k > n0} p_k V^{*(k-1)}(x) <= eps * V^{*tau}(x)`` on a grid range
  (``variant="k"`` uses ``V^{*k}``; ``local_T`` switches to window masses).
* :func:`dstar` -- ``sup_x (V^{*tau})^{*2}(x) / V^{*tau}(x)``.
* :func:`lemma21_bridge_check` -- the two ``n0`` conditions hold together
  with the scaling ``eps = eps1 * D* / p1``.
* :func:`weak_equivalence` -- mutual big-O evidence for two tails.

Compound tails are computed from the truncated series
``sum_{k <= K} p_k V^{*k}``; every check either carries the dropped mass
``P(tau > K)`` as an explicit error term or restricts itself to the range
where it is negligible (``tail_residual <= CERTIFY_REL * V^{*tau}(x)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..convolution import CountingPmf, compound, convolve, power_ladder
from ..lattice import TailGrid, snap_steps
from .ratios import EmptyRangeError, RatioSeries, ratio_shift, tail_ratio
from .verdict import DiagConfig, _monotone_growth

CERTIFY_REL = 1e-12

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"


# ---------------------------------------------------------------------------
# liminf lower bound


@dataclass(frozen=True)
class LiminfRow:
    k: int
    t: float
    target: float
    window_infs: tuple
    margins: tuple
    passed: bool
    first_fail_x: Optional[float]


@dataclass(frozen=True, eq=False)
class LiminfReport:
    gamma: float
    tolerance: float
    rows: tuple
    series: tuple = field(default=(), repr=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def rows_for(self, k: int):
        return [r for r in self.rows if r.k == k]


def check_condition_liminf(F: TailGrid, gamma: float, k_max: int, t_ladder=None,
                           x_lo: float = 0.0, config: DiagConfig | None = None) -> LiminfReport:
    """Window-inf evidence for ``liminf F^{*k}(x-t)/F^{*k}(x) >= exp(gamma t)``.

    Powers are computed on ``F``'s own grid (clipped convolutions keep the
    tails exact there). A row passes when every window inf is at least
    ``exp(gamma t) * (1 - band)``.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    cfg = config or DiagConfig()
    if t_ladder is None:
        t_ladder = [m * F.step for m in cfg.t_multiples]
    powers = power_ladder(F, k_max, n_out=F.masses.size)
    rows, series = [], []
    for k in range(1, k_max + 1):
        Pk = powers[k]
        for t in t_ladder:
            steps, _ = snap_steps(F, t)
            t_eff = steps * F.step
            target = math.exp(gamma * t_eff)
            s = ratio_shift(Pk, t_eff, x_lo, floor=cfg.floor, fractions=cfg.fractions)
            series.append(s)
            infs = tuple(float(w.inf) for w in s.windows)
            margins = tuple(v - target for v in infs)
            ok_tol = -cfg.band * target
            passed = all(m >= ok_tol for m in margins)
            fail_x = None
            if not passed:
                v = s.values
                bad = np.flatnonzero(s.ok & (v - target < ok_tol))
                fail_x = float(s.xs[bad[0]]) if bad.size else None
            rows.append(LiminfRow(k, t_eff, target, infs, margins, passed, fail_x))
    return LiminfReport(gamma, cfg.band, tuple(rows), tuple(series))


# ---------------------------------------------------------------------------
# n0 search


@dataclass(frozen=True)
class N0Report:
    status: str          # "found" | "not-found-within-truncation" | "inconclusive-by-truncation"
    n0: Optional[int]
    epsilon: float
    variant: str
    local_T: Optional[float]
    x_hi: float
    truncation_K: int
    tail_residual: float
    min_slack: Optional[float]

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass(frozen=True, eq=False)
class _CompoundTables:
    """Per-power tails (or window masses) on a common index range."""
    xs: np.ndarray
    power_vals: np.ndarray   # shape (K+1, n)
    compound_vals: np.ndarray
    pmf: CountingPmf
    local_T: Optional[float]


def _tables(V: TailGrid, tau: CountingPmf, local_T: Optional[float], n_out=None) -> _CompoundTables:
    res = compound(V, tau, n_out=n_out)
    n = res.dist.masses.size
    P = np.vstack([np.concatenate([p.tail, np.full(n - p.tail.size, p.residual)])
                   if p.tail.size < n else p.tail[:n] for p in res.powers])
    C = res.dist.tail
    xs = np.arange(n) * V.step
    if local_T is not None:
        J, _ = snap_steps(V, local_T, what="T")
        if J >= n:
            pass  # window past the grid: global tails
        else:
            P = P[:, :n - J] - P[:, J:]
            C = C[:n - J] - C[J:]
            xs = xs[:n - J]
    return _CompoundTables(xs, P, C, tau, local_T)


def certified_range(C_vals: np.ndarray, tail_residual: float, floor: float = 1e-280) -> int:
    """Number of leading points where the compound value dominates the dropped mass."""
    ok = (C_vals > floor) & (tail_residual <= CERTIFY_REL * C_vals)
    if ok.all():
        return ok.size
    return int(np.argmin(ok))


def _range_end(tab: _CompoundTables, x_hi: Optional[float], floor: float = 1e-280) -> int:
    """End index of the checked range.

    Without ``x_hi`` this is the certified range. An explicit ``x_hi`` is
    only cut back to where the compound value is above ``floor``; the
    truncation precondition is then checked by the caller.
    """
    if x_hi is None:
        return certified_range(tab.compound_vals, tab.pmf.tail_residual, floor)
    above = tab.compound_vals > floor
    end = above.size if above.all() else int(np.argmin(above))
    return min(end, int(np.searchsorted(tab.xs, x_hi * (1 + 1e-12), side="right")))


def _lhs_ladder(tab: _CompoundTables, variant: str, end: int) -> np.ndarray:
    """``L[n0] = sum_{k = n0+1}^{K} p_k V^{*(k-1 or k)}`` on the range, for n0 = 0..K."""
    p = tab.pmf.probs
    K = p.size - 1
    shift = 1 if variant == "k-1" else 0
    if variant not in ("k-1", "k"):
        raise ValueError(f"variant must be 'k-1' or 'k', got {variant!r}")
    terms = np.zeros((K + 2, end))
    for k in range(1, K + 1):
        terms[k] = p[k] * tab.power_vals[k - shift, :end]
    # suffix sums: L[n0] = sum_{k >= n0+1} terms[k]
    suffix = np.cumsum(terms[::-1], axis=0)[::-1]
    return suffix[1:K + 2]


def find_minimal_n0(V: TailGrid, tau: CountingPmf, epsilon: float, variant: str = "k-1",
                    local_T: Optional[float] = None, *, x_hi: Optional[float] = None,
                    n_out: Optional[int] = None, _tables_cache=None) -> N0Report:
    """Smallest ``n0 >= 1`` for which the tail condition holds at every checked grid point.

    The left side is the truncated sum plus ``P(tau > K)`` (each dropped term
    is at most ``p_k``); the right side uses the truncated compound, which
    is a lower bound. The checked range is the certified range, or
    ``[0, x_hi]`` (cut where the compound falls below the floor) when
    ``x_hi`` is given. Either way it does not depend on ``epsilon``, so the
    result is nonincreasing in ``epsilon``. When ``P(tau > K)`` is not below
    ``epsilon`` times the smallest compound value on the range, the result is
    ``inconclusive-by-truncation``.
    """
    if not 0 < epsilon:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    tab = _tables_cache or _tables(V, tau, local_T, n_out)
    K = tau.K
    end = _range_end(tab, x_hi)
    x_end = float(tab.xs[end - 1]) if end else math.nan
    if end == 0:
        return N0Report("inconclusive-by-truncation", None, epsilon, variant, local_T, x_end,
                        K, tau.tail_residual, None)
    rhs = epsilon * tab.compound_vals[:end]
    if tau.tail_residual >= float(rhs.min()):
        return N0Report("inconclusive-by-truncation", None, epsilon, variant, local_T, x_end,
                        K, tau.tail_residual, None)
    L = _lhs_ladder(tab, variant, end) + tau.tail_residual
    slack = (rhs[None, :] - L).min(axis=1)
    for n0 in range(1, K + 1):
        if slack[n0] >= 0:
            return N0Report("found", n0, epsilon, variant, local_T, x_end, K,
                            tau.tail_residual, float(slack[n0]))
    return N0Report("not-found-within-truncation", None, epsilon, variant, local_T, x_end, K,
                    tau.tail_residual, float(slack[K]))


# ---------------------------------------------------------------------------
# D*


@dataclass(frozen=True)
class DStarReport:
    value: float
    valid_up_to: float
    argmax_x: float
    local_T: Optional[float]


def dstar(V: TailGrid, tau: CountingPmf, local_T: Optional[float] = None, *,
          n_out: Optional[int] = None) -> DStarReport:
    """Grid sup of the compound's square-to-compound ratio on the certified range.

    Returns ``1.0`` (the empty-sup convention) when the compound is the
    point mass at zero.
    """
    res = compound(V, tau, n_out=n_out)
    C = res.dist
    if not np.any(C.tail > 0):
        return DStarReport(1.0, 0.0, 0.0, local_T)
    C2 = convolve(C, C)
    n = C.masses.size
    num = C2.tail[:n] if C2.masses.size >= n else np.concatenate(
        [C2.tail, np.full(n - C2.masses.size, C2.residual)])
    den = C.tail
    xs = C.xs
    if local_T is not None:
        J, _ = snap_steps(C, local_T, what="T")
        if J < n:
            num = num[:n - J] - num[J:]
            den = den[:n - J] - den[J:]
            xs = xs[:n - J]
    end = certified_range(den, tau.tail_residual)
    if end == 0:
        raise EmptyRangeError("no grid point where the compound dominates the dropped mass")
    r = num[:end] / den[:end]
    i = int(np.argmax(r))
    return DStarReport(float(r[i]), float(xs[end - 1]), float(xs[i]), local_T)


# ---------------------------------------------------------------------------
# equivalence of the two n0 conditions


@dataclass(frozen=True)
class BridgeReport:
    eps1: float
    epsilon: float
    n0: Optional[int]
    dstar: float
    p1: float
    slack: Optional[float]
    holds: Optional[bool]
    local_T: Optional[float]
    note: str = ""


def lemma21_bridge_check(V: TailGrid, tau: CountingPmf, epsilon: float,
                         local_T: Optional[float] = None, *, n_out: Optional[int] = None) -> BridgeReport:
    """Check that the ``k-1`` condition at level ``eps1`` yields the ``k`` condition.

    ``n0`` is the ``k-1`` minimal index raised, if needed, until
    ``P(tau > n0) < eps1``. The ``k`` condition is then evaluated at that
    ``n0`` with level ``eps1 * D* / p1`` (``eps1 * (1 + D*) / p1`` for
    window masses) and its smallest slack over the range is reported.
    """
    p1 = tau.p(1)
    if not p1 > 0:
        raise ValueError("the bridge needs p_1 > 0")
    tab = _tables(V, tau, local_T, n_out)
    base = find_minimal_n0(V, tau, epsilon, "k-1", local_T, _tables_cache=tab)
    D = dstar(V, tau, local_T, n_out=n_out).value
    eps = epsilon * ((1.0 + D) if local_T is not None else D) / p1
    if not base.found:
        return BridgeReport(epsilon, eps, None, D, p1, None, None, local_T,
                            f"k-1 condition not established: {base.status}")
    n0 = base.n0
    while n0 < tau.K and tau.tail_beyond(n0) >= epsilon:
        n0 += 1
    end = _range_end(tab, None)
    L = _lhs_ladder(tab, "k", end)[n0] + tau.tail_residual
    slack = float((eps * tab.compound_vals[:end] - L).min())
    return BridgeReport(epsilon, eps, n0, D, p1, slack, slack >= 0, local_T)


# ---------------------------------------------------------------------------
# weak equivalence


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    status: str
    lower: float
    upper: float
    window_sups: tuple
    window_infs: tuple
    reason: str
    series: RatioSeries = field(repr=False, default=None)


def weak_equivalence(A: TailGrid, B: TailGrid, x_lo: float = 0.0,
                     config: DiagConfig | None = None) -> EquivalenceReport:
    """Evidence that ``A(x) / B(x)`` stays bounded and bounded away from zero.

    FAIL when the ratio blows up (``B`` vanishes first) or drifts
    monotonically up or down across every window; PASS when neither happens
    and the long-window range is finite and positive.
    """
    cfg = config or DiagConfig()
    s = tail_ratio(A, B, x_lo, floor=cfg.floor, fractions=cfg.fractions, label="A/B")
    lo, hi = s.inf, s.sup
    sups = tuple(w.sup for w in s.windows)
    infs = tuple(w.inf for w in s.windows)
    if s.n_inf:
        return EquivalenceReport(FAIL, lo, math.inf, sups, infs,
                                 "B vanishes where A does not", s)
    inv = tail_ratio(B, A, x_lo, floor=cfg.floor, fractions=cfg.fractions, label="B/A")
    if inv.n_inf:
        return EquivalenceReport(FAIL, 0.0, hi, sups, infs, "A vanishes where B does not", s)
    if _monotone_growth(s, cfg):
        return EquivalenceReport(FAIL, lo, hi, sups, infs, "ratio grows monotonically", s)
    if _monotone_growth(inv, cfg):
        return EquivalenceReport(FAIL, lo, hi, sups, infs, "ratio decays monotonically", s)
    if lo > 0 and math.isfinite(hi):
        return EquivalenceReport(PASS, lo, hi, sups, infs, "ratio bounded above and below", s)
    return EquivalenceReport(INCONCLUSIVE, lo, hi, sups, infs, "ratio range degenerate", s)
