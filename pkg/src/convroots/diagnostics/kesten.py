"""Kesten-type uniform bound ``V^{*k}(x) <= K M^k G(x)`` with explicit constants.

The recipe: ``A1 = sup V/G`` on the grid, ``C*(G)`` the largest window sup
of ``G^{*2}/G``, ``b = A1 (C*(G) - 2 M(G, g))``, ``a = M(V, g) + b``; any
``M`` in ``(a, 1 + a)`` (default ``a + 1/2``); ``eps`` the largest power of
two with ``(1 + eps)(a + (2 + A1) eps) < M``, then halved; and
``K = max(A1 (M - b) / (M eps), 1 / G(x0))`` with ``x0`` the left edge of
the longest trailing window. The bound is then checked at every grid point
for every ``k <= k_max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..convolution import power_ladder
from ..lattice import TailGrid, gamma_moment
from .ratios import ratio_conv2, tail_ratio
from .verdict import DiagConfig, _monotone_growth


class KestenConstraintError(ValueError):
    """A user-chosen ``M`` violates ``a < M < 1 + a``."""


@dataclass(frozen=True, eq=False)
class KestenCertificate:
    A1: float
    a: float
    b: float
    M: float
    epsilon: float
    K: float
    verified_k_max: int
    max_violation: float
    C_star_G: float
    M_V: float
    M_G: float
    x0: float
    feasible: bool = True
    infeasibility: Optional[str] = None
    worst_k: Optional[int] = None
    worst_x: Optional[float] = None
    notes: tuple = field(default=())

    @property
    def verified(self) -> bool:
        return self.feasible and self.max_violation >= 0

    def M_in_interval(self) -> bool:
        return self.a < self.M < 1.0 + self.a

    def epsilon_margin_ok(self) -> bool:
        return (1.0 + self.epsilon) * (self.a + (2.0 + self.A1) * self.epsilon) < self.M

    def bound(self, k: int, G_tail: np.ndarray) -> np.ndarray:
        """``K M^k G(x)`` evaluated in log space (``inf`` past the double range)."""
        with np.errstate(divide="ignore", over="ignore"):
            logb = math.log(self.K) + k * math.log(self.M) + np.log(G_tail)
            return np.exp(logb)


def _infeasible(why: str, **kw) -> KestenCertificate:
    base = dict(A1=math.nan, a=math.nan, b=math.nan, M=math.nan, epsilon=math.nan, K=math.nan,
                verified_k_max=0, max_violation=-math.inf, C_star_G=math.nan, M_V=math.nan,
                M_G=math.nan, x0=math.nan)
    base.update(kw)
    return KestenCertificate(**base, feasible=False, infeasibility=why)


def kesten_verify(V: TailGrid, G: TailGrid, gamma: float, k_max: int,
                  M_choice: Optional[float] = None, config: DiagConfig | None = None,
                  *, max_halvings: int = 200) -> KestenCertificate:
    """Build the certificate constants and sweep the bound over the grid.

    Raises
    ------
    ValueError
        When ``V`` or ``G`` has a tail that vanishes identically.
    KestenConstraintError
        When ``M_choice`` is outside ``(a, 1 + a)``.
    """
    cfg = config or DiagConfig()
    if not np.any(V.tail > 0):
        raise ValueError("V has an identically zero tail; the bound is vacuous")
    if not np.any(G.tail > 0):
        raise ValueError("G has an identically zero tail; nothing can dominate V")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    notes = []

    ratio = tail_ratio(V, G, 0.0, floor=cfg.floor, fractions=cfg.fractions, label="V/G")
    if ratio.n_inf:
        return _infeasible(f"V/G blows up at {ratio.n_inf} points: V is heavier than G (A1 = inf)",
                           A1=math.inf)
    if _monotone_growth(ratio, cfg):
        return _infeasible("V/G grows monotonically: A1 is not finite on this evidence",
                           A1=ratio.sup)
    A1 = ratio.sup

    conv = ratio_conv2(G, 0.0, floor=cfg.floor, fractions=cfg.fractions)
    C_star = float(max(w.sup for w in conv.windows))
    if conv.n_inf:
        C_star = math.inf
    if _monotone_growth(conv, cfg):
        notes.append("G^{*2}/G grows across every window: C*(G) is a grid value only")
    mV = gamma_moment(V, gamma)
    mG = gamma_moment(G, gamma)
    if mV.unbounded or mG.unbounded:
        return _infeasible("a gamma-moment overflows on the grid", A1=A1, C_star_G=C_star)
    if mV.lower_bound_only or mG.lower_bound_only:
        notes.append("gamma-moments are grid lower bounds")
    b = A1 * (C_star - 2.0 * mG.value)
    a = mV.value + b
    if not math.isfinite(a):
        return _infeasible("a is not finite (C*(G) unbounded on the grid)", A1=A1, a=a, b=b,
                           C_star_G=C_star, M_V=mV.value, M_G=mG.value)
    if M_choice is None:
        M = a + 0.5
    else:
        M = float(M_choice)
        if not a < M < 1.0 + a:
            raise KestenConstraintError(
                f"M={M!r} violates a < M < 1 + a with a={a!r} (requires M in ({a!r}, {1 + a!r}))")
    if not a < M < 1.0 + a:
        return _infeasible(f"no representable M in (a, 1 + a) for a={a!r}", A1=A1, a=a, b=b,
                           C_star_G=C_star, M_V=mV.value, M_G=mG.value)

    eps = None
    for j in range(1, max_halvings + 1):
        e = 2.0 ** -j
        if (1.0 + e) * (a + (2.0 + A1) * e) < M:
            eps = e / 2.0
            break
    if eps is None:
        return _infeasible("no eps = 2^-j satisfies (1+eps)(a+(2+A1)eps) < M",
                           A1=A1, a=a, b=b, M=M, C_star_G=C_star, M_V=mV.value, M_G=mG.value)

    x0 = conv.windows[-1].x_start
    G_x0 = float(G.tail[int(round(x0 / G.step))])
    K = max(A1 * (M - b) / (M * eps), 1.0 / G_x0)

    # sweep: every grid point of G, every k <= k_max
    n = G.masses.size
    powers = power_ladder(V, k_max, n_out=n)
    worst = math.inf
    worst_k = worst_x = None
    log_base = math.log(K)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logG = np.log(G.tail)
    for k in range(1, k_max + 1):
        Pk = powers[k]
        vt = Pk.tail if Pk.tail.size >= n else np.concatenate(
            [Pk.tail, np.full(n - Pk.tail.size, Pk.residual)])
        vt = vt[:n]
        with np.errstate(over="ignore", invalid="ignore"):
            bound = np.exp(log_base + k * math.log(M) + logG)
        slack = np.where(G.tail > 0, bound - vt, -vt)
        i = int(np.argmin(slack))
        if slack[i] < worst:
            worst, worst_k, worst_x = float(slack[i]), k, float(i * G.step)
    return KestenCertificate(A1, a, b, M, eps, K, k_max, worst, C_star, mV.value, mG.value, x0,
                             worst_k=worst_k, worst_x=worst_x, notes=tuple(notes))
