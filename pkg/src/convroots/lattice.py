"""Distributions on the lattice {0, h, ..., Nh} with tracked beyond-grid mass.

A :class:`TailGrid` carries point masses ``m[i]`` at ``i*h``, the mass beyond
the grid end (``residual``) and the cached tail ``T[i] = P(X > i*h)``. Mass
that was dropped outright (e.g. by truncating a compound series) is kept in
``defect`` so that ``sum(m) + residual + defect == 1``.

Between lattice points the tail is read with the right-continuous step
convention: ``P(X > x) = T[floor(x/h)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
# relative slack when flooring x/h, so that 3*0.1 lands on index 3
_INDEX_EPS = 1e-9


class LatticeError(ValueError):
    """Invalid lattice input (negative mass, mass above one, bad step...)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TailGrid:
    step: float
    masses: np.ndarray
    residual: float
    tail: np.ndarray
    lattice_span_exact: bool = True
    defect: float = 0.0
    notes: tuple = field(default=())

    # -- constructors -------------------------------------------------
    @classmethod
    def from_masses(cls, masses, step, *, residual=None, lattice_span_exact=True,
                    defect=0.0, notes=(), check=True) -> "TailGrid":
        """Build from point masses; the tail is the reverse cumulative sum."""
        m = np.asarray(masses, dtype=np.float64)
        if m.ndim != 1 or m.size == 0:
            raise LatticeError("masses must be a nonempty 1-D sequence")
        if not step > 0 or not math.isfinite(step):
            raise LatticeError(f"step must be positive and finite, got {step}")
        if check and np.any(m < 0):
            i = int(np.argmax(m < 0))
            raise LatticeError(f"negative mass {m[i]!r} at index {i}")
        total = float(m.sum())
        if residual is None:
            # a shortfall within NORM_TOL is rounding in the caller's normalization
            residual = 1.0 - defect - total
            residual = residual if residual > NORM_TOL else 0.0
        if check and total + residual + defect > 1.0 + NORM_TOL:
            raise LatticeError(f"masses sum to {total + residual + defect!r} > 1")
        tail = np.empty_like(m)
        # T[i] = residual + sum_{j>i} m[j]
        tail[-1] = residual
        if m.size > 1:
            tail[:-1] = residual + np.cumsum(m[:0:-1])[::-1]
        return cls(float(step), _frozen(m), float(residual), _frozen(tail),
                   bool(lattice_span_exact), float(defect), tuple(notes))

    @classmethod
    def from_tail(cls, tail, step, *, lattice_span_exact=False, notes=()) -> "TailGrid":
        """Build from sampled tail values ``T[i] = P(X > i*h)``.

        The tail is stored exactly as given; masses are its differences, so
        ``T[i] - T[i+1] == m[i+1]`` holds bit for bit.
        """
        T = np.asarray(tail, dtype=np.float64)
        if T.ndim != 1 or T.size == 0:
            raise LatticeError("tail must be a nonempty 1-D sequence")
        if not step > 0:
            raise LatticeError(f"step must be positive, got {step}")
        if T[0] > 1.0 + NORM_TOL or T[-1] < 0 or np.any(np.diff(T) > 0):
            raise LatticeError("tail must be nonincreasing with values in [0, 1]")
        m = np.empty_like(T)
        m[0] = max(0.0, 1.0 - T[0])
        m[1:] = T[:-1] - T[1:]
        return cls(float(step), _frozen(m), float(T[-1]), _frozen(T),
                   bool(lattice_span_exact), 0.0, tuple(notes))

    # -- basic views --------------------------------------------------
    @property
    def n(self) -> int:
        """Index of the last lattice point (grid covers 0..n*h)."""
        return self.masses.size - 1

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.masses.size) * self.step

    @property
    def x_end(self) -> float:
        return self.n * self.step

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum()) + self.residual

    def is_degenerate_at_zero(self) -> bool:
        return self.residual == 0.0 and not np.any(self.masses[1:] > 0)

    def normalization_error(self) -> float:
        return abs(float(self.masses.sum()) + self.residual + self.defect - 1.0)

    def with_notes(self, *notes: str) -> "TailGrid":
        return TailGrid(self.step, self.masses, self.residual, self.tail,
                        self.lattice_span_exact, self.defect, self.notes + tuple(notes))

    def padded(self, length: int) -> "TailGrid":
        """Extend with zero masses; only valid when nothing sits beyond the grid."""
        if length <= self.masses.size:
            return self
        if self.residual > 0:
            raise LatticeError("cannot pad a grid whose residual is positive")
        m = np.concatenate([self.masses, np.zeros(length - self.masses.size)])
        return TailGrid.from_masses(m, self.step, residual=0.0,
                                    lattice_span_exact=self.lattice_span_exact,
                                    defect=self.defect, notes=self.notes, check=False)

    def clipped(self, length: int) -> "TailGrid":
        """Keep the first ``length`` points, moving the rest into ``residual``."""
        if length >= self.masses.size:
            return self
        spilled = float(self.masses[length:].sum())
        return TailGrid.from_masses(self.masses[:length], self.step,
                                    residual=self.residual + spilled,
                                    lattice_span_exact=self.lattice_span_exact,
                                    defect=self.defect, notes=self.notes, check=False)

    def __repr__(self) -> str:
        return (f"TailGrid(step={self.step}, n={self.n}, residual={self.residual:.3g}, "
                f"defect={self.defect:.3g}, lattice={self.lattice_span_exact})")


def build_lattice(masses: Sequence[float], step: float, *, lattice_span_exact: bool = True) -> TailGrid:
    """Validate ``masses`` and wrap them as a :class:`TailGrid`.

    ``residual`` is ``1 - sum(masses)``, or 0 when that is within ``NORM_TOL``.

    >>> build_lattice([0.5, 0.5], 1).tail.tolist()
    [0.5, 0.0]
    """
    return TailGrid.from_masses(masses, step, lattice_span_exact=lattice_span_exact)


def point_mass(step: float = 1.0, index: int = 0) -> TailGrid:
    m = np.zeros(index + 1)
    m[index] = 1.0
    return TailGrid.from_masses(m, step, residual=0.0)


def grid_index(V: TailGrid, x: float) -> int:
    return int(math.floor(x / V.step + _INDEX_EPS))


def tail_at(V: TailGrid, x) -> float:
    """``P(X > x)`` under the right-continuous step convention."""
    if np.ndim(x):
        idx = np.floor(np.asarray(x, dtype=float) / V.step + _INDEX_EPS).astype(np.int64)
        out = np.where(idx >= V.masses.size, V.residual, V.tail[np.clip(idx, 0, V.n)])
        return np.where(idx < 0, V.total_mass, out)
    if x < 0:
        return V.total_mass
    i = grid_index(V, x)
    return V.residual if i > V.n else float(V.tail[i])


def snap_steps(V: TailGrid, length: float, *, what: str = "t") -> tuple[int, str]:
    """Round a shift/window length to a whole number of lattice steps.

    Returns ``(steps, note)``; ``note`` is empty when no rounding happened.
    """
    raw = length / V.step
    k = max(1, int(round(raw)))
    note = ""
    if abs(raw - k) > 1e-9 * max(1.0, raw):
        kind = "lattice span" if V.lattice_span_exact else "grid"
        note = f"{what}={length!r} snapped to {k * V.step!r} ({kind} {V.step!r})"
    return k, note


def window_mass(V: TailGrid, x: float, T_len: float) -> float:
    """``V(x, x + T_len]``; equals the tail ``V̄(x)`` once ``x + T_len`` passes the grid end."""
    if not T_len > 0:
        raise LatticeError(f"window length must be positive, got {T_len}")
    if x + T_len > V.x_end + 1e-9 * V.step:
        return tail_at(V, x)
    return tail_at(V, x) - tail_at(V, x + T_len)


def window_masses(V: TailGrid, steps: int) -> np.ndarray:
    """Vector of ``V(ih, ih + steps*h]`` for ``i = 0 .. n - steps``."""
    return V.tail[:V.masses.size - steps] - V.tail[steps:]


@dataclass(frozen=True)
class GammaMoment:
    """Grid estimate of ``M(V, gamma) = E exp(gamma X)``.

    ``lo``/``hi`` bracket the true value given that the residual mass sits
    somewhere beyond the grid end; ``value`` uses the convention that the
    residual sits exactly at the grid end (which is also what :func:`esscher`
    assumes). For ``gamma > 0`` and positive residual only a lower bound is
    available and ``hi`` is infinite.
    """
    value: float
    lower_bound_only: bool
    gamma: float
    lo: float
    hi: float
    unbounded: bool = False

    @property
    def is_exact(self) -> bool:
        return not self.unbounded and self.lo == self.hi


def _log_tilted_masses(V: TailGrid, gamma: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logm = np.log(V.masses)
    return gamma * V.xs + logm


def gamma_moment(V: TailGrid, gamma: float) -> GammaMoment:
    """Evaluate ``sum_i exp(gamma*i*h) m[i]`` without overflowing on zero masses."""
    with np.errstate(over="ignore"):
        terms = np.exp(_log_tilted_masses(V, gamma))
        grid_sum = float(terms.sum())
    if not math.isfinite(grid_sum):
        return GammaMoment(math.inf, False, gamma, math.inf, math.inf, unbounded=True)
    if gamma == 0.0:
        v = grid_sum + V.residual
        return GammaMoment(v, False, gamma, v, v)
    if gamma > 0:
        lb = V.residual > 0
        hi = math.inf if lb else grid_sum
        return GammaMoment(grid_sum, lb, gamma, grid_sum, hi)
    end_weight = V.residual * math.exp(gamma * V.x_end) if V.residual > 0 else 0.0
    return GammaMoment(grid_sum + end_weight, False, gamma, grid_sum, grid_sum + end_weight)


class EsscherError(ValueError):
    pass


def esscher(V: TailGrid, gamma: float, *, residual_at_end: bool = False) -> TailGrid:
    """Exponential tilt: masses ``exp(gamma*x) m(x) / M(V, gamma)``.

    A positive residual is treated as located at the grid end, so it tilts
    with weight ``exp(gamma * n * h)`` and stays beyond the grid. For
    ``gamma > 0`` that only bounds the moment from below, so it is rejected
    unless ``residual_at_end`` asks for the convention explicitly.
    """
    if gamma == 0.0:
        return V
    if V.defect > 0:
        raise EsscherError("cannot tilt a grid with dropped (defect) mass")
    mom = gamma_moment(V, gamma)
    if mom.unbounded:
        raise EsscherError(f"M(V, {gamma}) overflows on the grid")
    if mom.lower_bound_only and not residual_at_end:
        raise EsscherError(
            f"M(V, {gamma}) is only bounded below on the grid (residual {V.residual:.3g} > 0)")
    total = mom.value
    end_log = gamma * V.x_end + math.log(V.residual) if V.residual > 0 else -math.inf
    if gamma > 0 and V.residual > 0:
        total = mom.value + math.exp(end_log)
    with np.errstate(over="ignore", under="ignore"):
        m = np.exp(_log_tilted_masses(V, gamma) - math.log(total))
    residual = math.exp(end_log - math.log(total)) if V.residual > 0 else 0.0
    return TailGrid.from_masses(m, V.step, residual=residual,
                                lattice_span_exact=V.lattice_span_exact, check=False,
                                notes=V.notes + (f"esscher({gamma!r})",))
