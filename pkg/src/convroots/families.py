"""Distribution families on the lattice.

The counterexample family
-------------------------
With ``r = (alpha + 1) / alpha`` and scales ``a_n = a ** (r ** n)`` the base
tail ``F0`` equals 1 below ``a_0``, falls linearly on ``[a_n, 2 a_n)`` and is
flat on ``[2 a_n, a_{n+1})``::

    F0(x) = C * (S_{n+1} + a_n^(-alpha-1) * (2 a_n - x))   on [a_n, 2 a_n)
    F0(x) = C * S_{n+1}                                     on [2 a_n, a_{n+1})

where ``S_n = sum_{i >= n} a_i^(-alpha)`` and ``C = 1 / S_0`` (the choice that
makes ``F0`` continuous at ``a_0``). The tilted law has tail
``exp(-gamma x) F0(x)`` for ``x >= 0``.

The scales grow doubly exponentially, so everything is evaluated in log
space; ``a_n`` itself overflows a double by ``n = 9`` for the default
parameters while its logarithm stays tame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from .lattice import LatticeError, TailGrid

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
# stop adding a_i^(-alpha) once a term is this far (in log) below the running sum
_LOG_SUM_CUTOFF = math.log(1e-18)


@dataclass(frozen=True)
class Example61Params:
    """Parameters of the counterexample family.

    Parameters
    ----------
    alpha : float
        In ``(3/2, (1 + sqrt 5)/2)``.
    a : float
        Base scale; needs ``a ** r > 8 a``.
    gamma : float
        Tail tilt rate, ``0`` for the untilted law.
    n_cycles : int
        Number of cycles ``[a_n, a_{n+1})`` a grid must cover.
    """
    alpha: float = 1.6
    a: float = 32.0
    gamma: float = 0.0
    n_cycles: int = 2
    log_scales: np.ndarray = field(init=False, repr=False, compare=False)
    log_S: np.ndarray = field(init=False, repr=False, compare=False)
    sum_remainder: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        al, a = self.alpha, self.a
        if not 1.5 < al < GOLDEN:
            raise ValueError(f"alpha={al!r} violates 3/2 < alpha < (sqrt(5)+1)/2")
        if not a > 1:
            raise ValueError(f"a={a!r} violates a > 1")
        r = (al + 1.0) / al
        if not r * math.log(a) > math.log(8.0 * a):
            raise ValueError(f"a={a!r} violates a**r > 8*a with r={r!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma={self.gamma!r} must be nonnegative")
        if self.n_cycles < 0:
            raise ValueError("n_cycles must be nonnegative")
        # log a_i^(-alpha) = -alpha * r^i * log a ; extend until far below the head
        logs = []
        i = 0
        while True:
            la = r ** i * math.log(a)
            logs.append(la)
            if -al * la < -al * logs[0] + _LOG_SUM_CUTOFF and i > self.n_cycles + 2:
                break
            i += 1
            if i > 60:
                break
        log_scales = np.array(logs)
        terms = -al * log_scales
        # log S_n by reverse log-cumulative-sum; S_n for n past the list is
        # dominated by its first term, which we keep as the approximation
        log_S = np.array([special.logsumexp(terms[n:]) for n in range(terms.size)])
        object.__setattr__(self, "log_scales", log_scales)
        object.__setattr__(self, "log_S", log_S)
        # the first omitted term relative to S_0
        omitted = -al * r ** terms.size * math.log(a)
        object.__setattr__(self, "sum_remainder", math.exp(omitted - log_S[0]))

    @property
    def r(self) -> float:
        return (self.alpha + 1.0) / self.alpha

    @property
    def log_C(self) -> float:
        return -float(self.log_S[0])

    @property
    def C(self) -> float:
        return math.exp(self.log_C)

    def scale(self, n: int) -> float:
        """``a_n`` (may be ``inf`` for large ``n``)."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_scales[n]))

    @property
    def scales(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_scales)

    def required_length(self, n_cycles: Optional[int] = None) -> float:
        """Grid end needed to contain the decreasing piece of cycle ``n_cycles``."""
        n = self.n_cycles if n_cycles is None else n_cycles
        return 2.0 * self.scale(n)


def example61_log_base_tail(params: Example61Params, x) -> np.ndarray:
    """``log F0(x)``; ``0`` for ``x < a_0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    al = params.alpha
    out = np.zeros_like(x)
    scales = params.scales
    finite = np.isfinite(scales)
    idx = np.searchsorted(scales[finite], x, side="right") - 1
    beyond = idx >= finite.sum() - 1
    if np.any(beyond & (x >= scales[0])):
        raise ValueError("x lies past the tabulated scales")
    mask = idx >= 0
    n = idx[mask]
    xm = x[mask]
    an = scales[n]
    log_S_next = params.log_S[n + 1]
    lin = xm < 2.0 * an
    val = log_S_next.copy()
    # linear piece: log(S_{n+1} + a_n^(-alpha-1) (2 a_n - x))
    with np.errstate(divide="ignore"):
        slope_term = (-al - 1.0) * params.log_scales[n] + np.log(np.where(lin, 2.0 * an - xm, 1.0))
    val[lin] = np.logaddexp(log_S_next[lin], slope_term[lin])
    out[mask] = params.log_C + val
    return out


def example61_log_tail(params: Example61Params, x) -> np.ndarray:
    """``log F(x) = -gamma x + log F0(x)`` for ``x >= 0`` and ``0`` for ``x < 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = example61_log_base_tail(params, np.maximum(x, 0.0)) - params.gamma * np.maximum(x, 0.0)
    return np.where(x < 0, 0.0, out)


def example61_tail(params: Example61Params, x):
    """Closed-form tail of the (tilted) counterexample law at ``x``."""
    val = np.exp(example61_log_tail(params, x))
    return float(val[0]) if np.ndim(x) == 0 else val


def example61_shift_ratio(params: Example61Params, x, t: float):
    """``F(x - t) / F(x)`` evaluated from log tails (no grid involved)."""
    lr = example61_log_tail(params, np.asarray(x, dtype=float) - t) - example61_log_tail(params, x)
    val = np.exp(lr)
    return float(val[0]) if np.ndim(x) == 0 else val


def example61_grid(params: Example61Params, step: float, N: Optional[int] = None) -> TailGrid:
    """Sample the closed-form tail at ``0, h, ..., N h``.

    ``N`` defaults to the smallest grid that covers ``params.n_cycles``.
    """
    need = params.required_length()
    if N is None:
        N = int(math.ceil(need / step))
    if N * step < need:
        raise LatticeError(f"grid end {N * step!r} is short of 2*a_{params.n_cycles} = {need!r}; "
                           f"need N >= {int(math.ceil(need / step))}")
    xs = np.arange(N + 1) * step
    T = np.exp(example61_log_tail(params, xs))
    return TailGrid.from_tail(T, step, lattice_span_exact=False,
                              notes=(f"example61(alpha={params.alpha}, a={params.a}, "
                                     f"gamma={params.gamma})",))


def tilt_tail(F0: TailGrid, gamma: float) -> TailGrid:
    """Tail tilt ``T'[i] = exp(-gamma i h) T[i]`` with masses by differencing."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    with np.errstate(under="ignore"):
        T = np.exp(-gamma * F0.xs) * F0.tail
    return TailGrid.from_tail(T, F0.step, lattice_span_exact=F0.lattice_span_exact,
                              notes=F0.notes + (f"tail tilt {gamma!r}",))


# ---------------------------------------------------------------------------
# standard corpus


def _from_sf(sf, step: float, N: int, **kw) -> TailGrid:
    xs = np.arange(N + 1) * step
    return TailGrid.from_tail(np.asarray(sf(xs), dtype=float), step, **kw)


def pareto(alpha: float, step: float, N: int) -> TailGrid:
    """Lomax form: tail ``(1 + x) ** -alpha``."""
    if not alpha > 0:
        raise ValueError(f"pareto alpha must be positive, got {alpha!r}")
    return _from_sf(lambda x: (1.0 + x) ** -alpha, step, N)


def weibull(beta: float, step: float, N: int, scale: float = 1.0) -> TailGrid:
    """Tail ``exp(-(x/scale) ** beta)``; heavy-tailed for ``beta < 1``."""
    if not 0 < beta < 1:
        raise ValueError(f"weibull shape must lie in (0, 1), got {beta!r}")
    return _from_sf(lambda x: np.exp(-(x / scale) ** beta), step, N)


def lognormal(mu: float, sigma: float, step: float, N: int) -> TailGrid:
    if not sigma > 0:
        raise ValueError(f"lognormal sigma must be positive, got {sigma!r}")
    return _from_sf(lambda x: stats.lognorm.sf(x, sigma, scale=math.exp(mu)), step, N)


def exponential(lam: float, step: float, N: int) -> TailGrid:
    if not lam > 0:
        raise ValueError(f"exponential rate must be positive, got {lam!r}")
    return _from_sf(lambda x: np.exp(-lam * x), step, N)


def geometric(q: float, step: float, N: int) -> TailGrid:
    """Lattice law on ``{h, 2h, ...}`` with tail ``q ** n`` at ``n h``."""
    if not 0 < q < 1:
        raise ValueError(f"geometric q must lie in (0, 1), got {q!r}")
    return _from_sf(lambda x: q ** np.rint(x / step), step, N, lattice_span_exact=True)


def point(c: float, step: float, N: int) -> TailGrid:
    """Unit mass at the lattice point nearest ``c``."""
    if c < 0:
        raise ValueError(f"point location must be nonnegative, got {c!r}")
    i = int(round(c / step))
    if i > N:
        raise ValueError(f"point {c!r} lies beyond the grid end {N * step!r}")
    m = np.zeros(N + 1)
    m[i] = 1.0
    return TailGrid.from_masses(m, step, residual=0.0)


FAMILIES = {
    "pareto": (pareto, ("alpha",)),
    "weibull": (weibull, ("beta",)),
    "lognormal": (lognormal, ("mu", "sigma")),
    "exponential": (exponential, ("lam",)),
    "geometric": (geometric, ("q",)),
    "point": (point, ("c",)),
}


def standard_families(name: str, step: float, N: int, **params) -> TailGrid:
    """Build a named family by tail sampling.

    >>> standard_families("geometric", 1.0, 3, q=0.5).tail.tolist()
    [1.0, 0.5, 0.25, 0.125]
    """
    try:
        fn, names = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(FAMILIES)}") from None
    missing = [p for p in names if p not in params]
    extra = [p for p in params if p not in names and not (name == "weibull" and p == "scale")]
    if missing or extra:
        raise ValueError(f"family {name!r} takes parameters {names}; "
                         f"missing {missing}, unexpected {extra}")
    return fn(*(params[p] for p in names), step, N,
              **({"scale": params["scale"]} if "scale" in params else {}))
