"""Convolution powers, compound sums and the Lévy-spectrum pipeline.

Lengths of outputs
------------------
A grid with zero residual is exact everywhere, so convolving two such grids
keeps the full support (``len(V) + len(W) - 1`` points after trimming trailing
zeros). As soon as one input has mass beyond its grid end, output points past
that input's grid end are no longer known exactly. The default output length
is then the shortest such input length, and the mass that lands past it is
added to ``residual``. An explicit ``n_out`` can only shorten this.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .lattice import LatticeError, TailGrid, point_mass

NORM_TOL = 1e-12
DEFAULT_TRUNCATION_TOL = 1e-12
DEFAULT_K_MAX = 2000


class TruncationWarning(UserWarning):
    """Issued when a counting pmf is cut at ``K_max`` before reaching the tolerance."""


def _check_steps(V: TailGrid, W: TailGrid) -> None:
    if not math.isclose(V.step, W.step, rel_tol=1e-12, abs_tol=0.0):
        raise LatticeError(f"step mismatch: {V.step!r} vs {W.step!r}")


def _support_len(V: TailGrid) -> int:
    """Length after dropping trailing zero masses (never below one)."""
    if V.residual > 0:
        return V.masses.size
    nz = np.flatnonzero(V.masses)
    return int(nz[-1]) + 1 if nz.size else 1


def exact_length(V: TailGrid, W: TailGrid) -> int:
    """Largest output length on which ``V * W`` is known exactly."""
    caps = [X.masses.size for X in (V, W) if X.residual > 0]
    if caps:
        return min(caps)
    return _support_len(V) + _support_len(W) - 1


def convolve(V: TailGrid, W: TailGrid, n_out: Optional[int] = None) -> TailGrid:
    """Lattice convolution ``V * W`` with spilled mass moved to ``residual``.

    Parameters
    ----------
    V, W : TailGrid
        Inputs on the same step.
    n_out : int, optional
        Output length cap. Defaults to :func:`exact_length`; larger values are
        reduced to it.

    Returns
    -------
    TailGrid
        Beyond-grid mass is ``rV*(sW + rW) + sV*rW + spilled`` where ``s`` is
        the on-grid mass. For proper inputs this is ``rV + rW - rV*rW + spilled``.
    """
    _check_steps(V, W)
    cap = exact_length(V, W)
    n = cap if n_out is None else max(1, min(int(n_out), cap))
    a = V.masses[:_support_len(V)]
    b = W.masses[:_support_len(W)]
    out, spilled = kernels.convolve_truncated(a, b, n)
    sV, sW = float(a.sum()), float(b.sum())
    rV, rW = V.residual, W.residual
    residual = rV * (sW + rW) + sV * rW + spilled
    defect = 1.0 - (1.0 - V.defect) * (1.0 - W.defect)
    return TailGrid.from_masses(np.maximum(out, 0.0), V.step, residual=residual,
                                lattice_span_exact=V.lattice_span_exact and W.lattice_span_exact,
                                defect=defect, check=False)


def nfold(V: TailGrid, n: int, n_out: Optional[int] = None) -> TailGrid:
    """``V^{*n}`` by repeated squaring; ``nfold(V, 0)`` is the point mass at 0.

    >>> nfold(TailGrid.from_masses([0.5, 0.5], 1.0), 4).masses.tolist()
    [0.0625, 0.25, 0.375, 0.25, 0.0625]
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    result = point_mass(V.step)
    if n == 0:
        return result
    base = V
    first = True
    while n:
        if n & 1:
            result = base if first else convolve(result, base, n_out)
            first = False
        n >>= 1
        if n:
            base = convolve(base, base, n_out)
    return result


# ---------------------------------------------------------------------------
# counting distributions


@dataclass(frozen=True, eq=False)
class CountingPmf:
    """Law of a count ``tau``: ``probs[k] = P(tau = k)`` for ``k <= K``.

    ``tail_residual`` is ``P(tau > K)``. ``source`` is ``"poisson"``,
    ``"geometric"`` or ``"explicit"`` and ``params`` holds the family
    parameters so dropped terms can be bounded analytically.
    """
    probs: np.ndarray
    tail_residual: float
    source: str
    params: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.probs.size - 1

    def p(self, k: int) -> float:
        return float(self.probs[k]) if 0 <= k <= self.K else 0.0

    def tail_beyond(self, k: int) -> float:
        """``P(tau > k)`` for ``k >= -1``; exact for built-in families."""
        if k >= self.K:
            return self._family_sf(k) if self.source != "explicit" else (
                self.tail_residual if k == self.K else math.nan)
        return float(self.probs[k + 1:].sum()) + self.tail_residual

    def _family_sf(self, k: int) -> float:
        if self.source == "poisson":
            return float(stats.poisson.sf(k, self.params["mu"]))
        if self.source == "geometric":
            return self.params["q"] ** (k + 1)
        return math.nan

    @property
    def positive_convention(self) -> bool:
        """Whether every listed ``p_k`` is strictly positive."""
        return bool(np.all(self.probs > 0))

    def __repr__(self) -> str:
        return f"CountingPmf({self.source}, K={self.K}, tail={self.tail_residual:.3g})"


def _freeze(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _choose_K(sf: Callable[[int], float], tol: float, K_max: int, what: str) -> int:
    K = 0
    while sf(K) >= tol:
        if K >= K_max:
            warnings.warn(f"{what}: tail {sf(K):.3g} still >= {tol:g} at K_max={K_max}; "
                          "truncating there", TruncationWarning, stacklevel=3)
            return K_max
        K += 1
    return K


def poisson_pmf(mu: float, K: Optional[int] = None, *, tol: float = DEFAULT_TRUNCATION_TOL,
                K_max: int = DEFAULT_K_MAX) -> CountingPmf:
    """Poisson(``mu``) probabilities up to ``K`` (chosen from ``tol`` when omitted)."""
    if not mu > 0 or not math.isfinite(mu):
        raise ValueError(f"Poisson mean must be positive and finite, got {mu!r}")
    if K is None:
        K = _choose_K(lambda k: stats.poisson.sf(k, mu), tol, K_max, f"poisson({mu})")
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    ks = np.arange(K + 1)
    probs = stats.poisson.pmf(ks, mu)
    tail = float(stats.poisson.sf(K, mu))
    return CountingPmf(_freeze(probs), tail, "poisson", {"mu": float(mu)})


def geometric_pmf(q: float, K: Optional[int] = None, *, tol: float = DEFAULT_TRUNCATION_TOL,
                  K_max: int = DEFAULT_K_MAX) -> CountingPmf:
    """``p_k = (1 - q) q^k`` for ``k <= K``; ``tail_residual = q^(K+1)``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"geometric q must lie in (0, 1), got {q!r}")
    if K is None:
        K = _choose_K(lambda k: q ** (k + 1), tol, K_max, f"geometric({q})")
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    probs = (1.0 - q) * q ** np.arange(K + 1)
    return CountingPmf(_freeze(probs), q ** (K + 1), "geometric", {"q": float(q)})


def explicit_pmf(probs: Sequence[float], tail_residual: Optional[float] = None) -> CountingPmf:
    """Wrap a user-supplied pmf. ``tail_residual`` defaults to ``1 - sum(probs)``.

    The ``p_k > 0`` convention is recorded (see ``positive_convention``) rather
    than enforced, so degenerate laws remain usable.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probs must be a nonempty 1-D sequence")
    if np.any(p < 0):
        raise ValueError(f"negative probability at index {int(np.argmax(p < 0))}")
    total = float(p.sum())
    if tail_residual is None:
        tail_residual = max(0.0, 1.0 - total)
    if tail_residual < 0 or abs(total + tail_residual - 1.0) > NORM_TOL:
        raise ValueError(f"pmf mass {total + tail_residual!r} differs from 1")
    return CountingPmf(_freeze(p), float(tail_residual), "explicit", {})


def degenerate_pmf(k: int) -> CountingPmf:
    p = np.zeros(k + 1)
    p[k] = 1.0
    return explicit_pmf(p, 0.0)


# ---------------------------------------------------------------------------
# compound sums


@dataclass(frozen=True, eq=False)
class CompoundResult:
    """Truncated compound ``sum_{k<=K} p_k V^{*k}`` plus its error accounting.

    ``abs_error_bound`` is the pmf tail beyond ``K``: every dropped term has a
    tail bounded by ``p_k``. ``kesten_error_bound`` is the relative-to-G bound
    ``sum_{k>K} p_k K_c M_c^k`` when a certificate was supplied and the pmf
    family allows the series to be summed.
    """
    dist: TailGrid
    truncation_K: int
    abs_error_bound: float
    kesten_error_bound: Optional[float]
    powers: tuple
    pmf: CountingPmf
    spilled_to_residual: bool = False

    def tail_bounds(self, x: float) -> tuple[float, float]:
        """Interval containing the untruncated compound tail at ``x``."""
        from .lattice import tail_at
        lo = tail_at(self.dist, x)
        if self.spilled_to_residual:
            return lo, lo
        return lo, min(1.0, lo + self.abs_error_bound)


def kesten_tail_sum(pmf: CountingPmf, K: int, K_cert: float, M_cert: float) -> Optional[float]:
    """``sum_{k>K} p_k K_cert M_cert^k`` in closed form, or None when it cannot be summed.

    Poisson(mu): ``K_cert * e^{mu(M-1)} * P(Poi(mu M) > K)``.
    Geometric(q): ``K_cert * (1-q) (qM)^{K+1} / (1 - qM)`` when ``qM < 1``.
    Explicit: zero if no mass lies beyond the listed probabilities.
    """
    if pmf.source == "poisson":
        mu = pmf.params["mu"]
        return float(K_cert * math.exp(mu * (M_cert - 1.0)) * stats.poisson.sf(K, mu * M_cert))
    if pmf.source == "geometric":
        q = pmf.params["q"]
        if q * M_cert >= 1.0:
            return math.inf
        return float(K_cert * (1.0 - q) * (q * M_cert) ** (K + 1) / (1.0 - q * M_cert))
    if pmf.tail_residual == 0.0:
        listed = pmf.probs[K + 1:]
        return float(K_cert * np.sum(listed * M_cert ** np.arange(K + 1, pmf.K + 1)))
    return None


def power_ladder(V: TailGrid, K: int, n_out: Optional[int] = None) -> list[TailGrid]:
    """``[V^{*0}, V^{*1}, ..., V^{*K}]`` built incrementally on a common length."""
    if n_out is None:
        n_out = default_compound_length(V, K)
    powers = [point_mass(V.step).padded(n_out) if n_out > 1 else point_mass(V.step)]
    current = None
    for _ in range(K):
        current = V.clipped(n_out) if current is None else convolve(current, V, n_out)
        powers.append(current)
    return powers


def default_compound_length(V: TailGrid, K: int) -> int:
    if V.residual > 0:
        return V.masses.size
    return max(1, K * (_support_len(V) - 1) + 1)


def compound(V: TailGrid, tau: CountingPmf, *, n_out: Optional[int] = None,
             spill_to_residual: bool = False, certificate=None) -> CompoundResult:
    """Compound law ``V^{*tau}`` truncated at ``tau.K``.

    Parameters
    ----------
    V : TailGrid
        Summand law.
    tau : CountingPmf
        Counting law; its ``K`` is the truncation point.
    n_out : int, optional
        Common grid length for all powers. Default: full support when
        ``V.residual == 0``, otherwise ``len(V.masses)``.
    spill_to_residual : bool
        Put ``P(tau > K)`` into the output residual (tails become upper
        bounds at the far end) instead of recording it as ``defect``.
    certificate : KestenCertificate, optional
        Enables ``kesten_error_bound``.
    """
    K = tau.K
    if n_out is None:
        n_out = default_compound_length(V, K)
    elif V.residual > 0:
        n_out = min(n_out, V.masses.size)
    powers = power_ladder(V, K, n_out)
    masses = np.zeros(n_out)
    residual = 0.0
    defect = 0.0
    for k, P in enumerate(powers):
        pk = tau.p(k)
        if pk == 0.0:
            continue
        m = P.masses
        masses[:m.size] += pk * m[:n_out]
        residual += pk * P.residual
        defect += pk * P.defect
    dropped = tau.tail_residual
    if spill_to_residual:
        residual += dropped
    else:
        defect += dropped
    dist = TailGrid.from_masses(masses, V.step, residual=residual,
                                lattice_span_exact=V.lattice_span_exact,
                                defect=defect, check=False)
    keb = None
    if certificate is not None:
        keb = kesten_tail_sum(tau, K, certificate.K, certificate.M)
    return CompoundResult(dist, K, float(dropped), keb, tuple(powers), tau,
                          spilled_to_residual=spill_to_residual)


def compound_poisson_panjer(V: TailGrid, mu: float, n_out: Optional[int] = None) -> TailGrid:
    """Compound Poisson law by Panjer's recursion (no truncation in ``k``).

    Each output mass ``g[n]`` only involves summand masses up to index ``n``,
    so it is exact on the grid even when ``V`` has residual mass; the output
    residual is whatever the grid does not hold.
    """
    if not mu > 0:
        raise ValueError(f"Poisson mean must be positive, got {mu!r}")
    if V.defect:
        raise LatticeError("Panjer recursion needs a summand without dropped mass")
    if n_out is None:
        n_out = V.masses.size
    if V.residual > 0 and n_out > V.masses.size:
        raise LatticeError("n_out past the summand grid end is not determined by the grid")
    g = kernels.panjer_poisson(V.masses, float(mu), int(n_out))
    return TailGrid.from_masses(g, V.step, residual=max(0.0, 1.0 - float(g.sum())),
                                lattice_span_exact=V.lattice_span_exact, check=False)


# ---------------------------------------------------------------------------
# Lévy spectrum ingestion


@dataclass(frozen=True, eq=False)
class LevySpectrum:
    """Tail ``x -> nu((x, inf))`` of a Lévy measure on ``(0, x_max]``.

    Either sampled (``xs``, ``nu_tail``; evaluated by log-linear interpolation)
    or given as a callable ``func``.
    """
    xs: np.ndarray
    nu_tail: np.ndarray
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        nt = np.asarray(self.nu_tail, dtype=float)
        if xs.ndim != 1 or xs.shape != nt.shape or xs.size < 2:
            raise ValueError("xs and nu_tail must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(xs) <= 0) or xs[0] <= 0:
            raise ValueError("xs must be positive and strictly increasing")
        if np.any(np.diff(nt) > 0) or np.any(nt < 0):
            raise ValueError("nu_tail must be nonnegative and nonincreasing")
        if xs[0] > 1.0 or xs[-1] < 1.0:
            raise ValueError("xs must bracket x = 1 so that mu = nu((1, inf)) is defined")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "nu_tail", nt)

    @classmethod
    def from_function(cls, func, x_max: float, n_points: int = 4096, x_min: float = 1e-3):
        xs = np.geomspace(x_min, x_max, n_points)
        xs = np.union1d(xs, [1.0])
        return cls(xs, np.asarray(func(xs), dtype=float), func)

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > self.x_max * (1 + 1e-12)):
            raise ValueError(f"spectrum only known up to x_max={self.x_max!r}")
        if self.func is not None:
            return np.asarray(self.func(x), dtype=float)
        with np.errstate(divide="ignore"):
            lt = np.log(self.nu_tail)
        if np.all(np.isfinite(lt)):
            return np.exp(np.interp(x, self.xs, lt))
        return np.interp(x, self.xs, self.nu_tail)

    @property
    def mu(self) -> float:
        return float(self.tail(1.0))


def levy_to_spectral(spec: LevySpectrum, step: float, N: int) -> tuple[float, TailGrid]:
    """Jump rate ``mu = nu((1, inf))`` and the normalized big-jump law ``F``.

    ``F`` has tail ``nu((max(x, 1), inf)) / mu`` sampled at ``0, h, ..., N h``.
    """
    mu = spec.mu
    if not mu > 0:
        raise ValueError("spectrum has no mass on (1, inf): mu = 0")
    if N * step > spec.x_max * (1 + 1e-12):
        raise ValueError(f"grid end {N * step!r} exceeds spectrum range x_max={spec.x_max!r}")
    xs = np.arange(N + 1) * step
    T = np.minimum(spec.tail(np.maximum(xs, 1.0)) / mu, 1.0)
    T = np.minimum.accumulate(T)
    return mu, TailGrid.from_tail(T, step, lattice_span_exact=False)


def id_compose(H1: TailGrid, F: TailGrid, mu: float, K: Optional[int] = None, *,
               n_out: Optional[int] = None) -> tuple[TailGrid, TailGrid]:
    """Return ``(H2, H)`` with ``H2`` the compound Poisson(``mu``) of ``F`` and ``H = H1 * H2``."""
    _check_steps(H1, F)
    tau = poisson_pmf(mu, K)
    H2 = compound(F, tau, n_out=n_out).dist
    return H2, convolve(H1, H2, n_out)
