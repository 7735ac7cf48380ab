import math

import numpy as np
import pytest

from convroots import (EsscherError, LatticeError, TailGrid, build_lattice, esscher,
                       gamma_moment, nfold, point_mass, standard_families, tail_at, window_mass)
from convroots.lattice import snap_steps

TWO = [0.5, 0.5]


def test_degenerate_at_zero():
    V = build_lattice([1.0], 1.0)
    assert V.is_degenerate_at_zero
    assert V.tail.tolist() == [0.0]
    assert tail_at(V, 0.0) == 0.0


def test_two_point_tail_and_residual():
    V = build_lattice(TWO, 1.0)
    assert V.tail.tolist() == [0.5, 0.0]
    assert V.residual == 0.0
    assert tail_at(V, 0.5) == 0.5
    assert tail_at(V, 1.0) == 0.0
    assert tail_at(V, -1.0) == 1.0


def test_pareto_residual_matches_closed_form():
    V = standard_families("pareto", 0.25, 1024, alpha=2.0)
    assert V.residual == pytest.approx(257.0 ** -2, abs=1e-12)
    assert V.normalization_error() <= 1e-12


def test_tail_consistency_by_recomputation(rng):
    m = rng.dirichlet(np.ones(40)) * 0.9
    V = build_lattice(m, 0.5)
    recomputed = np.array([V.residual + m[i + 1:].sum() for i in range(m.size)])
    assert np.allclose(V.tail, recomputed, rtol=0, atol=1e-15)
    assert V.residual == pytest.approx(0.1)


def test_from_tail_differences_are_exact():
    T = np.array([0.9, 0.6, 0.35, 0.1, 0.02])
    V = TailGrid.from_tail(T, 1.0)
    assert np.array_equal(V.tail, T)
    assert np.array_equal(T[:-1] - T[1:], V.masses[1:])
    assert V.masses[0] == pytest.approx(0.1)


def test_rounding_shortfall_is_not_a_residual():
    m = np.full(3, 1 / 3)
    assert build_lattice(m, 1.0).residual == 0.0


@pytest.mark.parametrize("bad", [[-0.1, 1.1], [0.7, 0.7], []])
def test_build_rejects_improper(bad):
    with pytest.raises(LatticeError):
        build_lattice(bad, 1.0)


def test_build_rejects_bad_step():
    with pytest.raises(LatticeError):
        build_lattice(TWO, 0.0)


def test_window_mass_examples():
    V = build_lattice(TWO, 1.0)
    assert window_mass(V, 0.0, 1.0) == 0.5
    E = standard_families("exponential", 1 / 64, 64 * 30, lam=1.0)
    assert window_mass(E, 1.0, 1.0) == pytest.approx(math.exp(-1) - math.exp(-2), abs=1 / 64)
    # window past the grid end reduces to the tail
    assert window_mass(E, 2.0, 1e6) == pytest.approx(tail_at(E, 2.0), abs=1e-15)


def test_gamma_moment_examples():
    V = build_lattice(TWO, 1.0)
    assert gamma_moment(V, 0.0).value == pytest.approx(1.0)
    assert gamma_moment(V, math.log(2)).value == pytest.approx(1.5)
    assert gamma_moment(point_mass(), 3.0).value == 1.0
    assert gamma_moment(point_mass(), -3.0).value == 1.0


def test_gamma_moment_lower_bound_flag():
    P = standard_families("pareto", 0.5, 64, alpha=2.0)
    mom = gamma_moment(P, 0.1)
    assert mom.lower_bound_only and mom.hi == math.inf
    neg = gamma_moment(P, -0.1)
    assert not neg.lower_bound_only and 0 < neg.value < 1


def test_subunit_tilt_moment(rng):
    for _ in range(10):
        V = build_lattice(rng.dirichlet(np.ones(8)), 1.0)
        assert 0 < gamma_moment(V, -0.7).value < 1


def test_esscher_examples():
    V = build_lattice(TWO, 1.0)
    assert esscher(V, 0.0) is V
    W = esscher(V, math.log(2))
    assert W.masses == pytest.approx([1 / 3, 2 / 3], abs=1e-15)
    back = esscher(esscher(V, -1.0), 1.0)
    assert np.abs(back.masses - V.masses).max() <= 1e-12


def test_esscher_rejects_lower_bound_moment():
    P = standard_families("pareto", 0.5, 64, alpha=2.0)
    with pytest.raises(EsscherError):
        esscher(P, 0.2)
    T = esscher(P, 0.2, residual_at_end=True)
    assert T.normalization_error() <= 1e-12


def test_esscher_negative_tilt_keeps_residual_at_end():
    P = standard_families("pareto", 0.5, 64, alpha=2.0)
    T = esscher(P, -0.3)
    expect = P.residual * math.exp(-0.3 * P.x_end) / gamma_moment(P, -0.3).value
    assert T.residual == pytest.approx(expect, rel=1e-12)
    assert T.normalization_error() <= 1e-12


def test_esscher_commutes_with_powers():
    V = build_lattice([0.2, 0.5, 0.3], 0.5)
    W = esscher(V, -0.4)
    MV = gamma_moment(V, -0.4).value
    for k in range(1, 7):
        assert np.allclose(esscher(nfold(V, k), -0.4).masses, nfold(W, k).masses, atol=1e-12)
        assert gamma_moment(nfold(V, k), -0.4).value == pytest.approx(MV ** k, rel=1e-12)


def test_snap_steps_records_the_snap():
    V = build_lattice(TWO, 0.25)
    steps, note = snap_steps(V, 0.3)
    assert steps == 1 and "0.3" in note
    assert snap_steps(V, 0.5) == (2, "")
