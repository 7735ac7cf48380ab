import math

import numpy as np
import pytest
from scipy import stats

from convroots import (LevySpectrum, build_lattice, compound, compound_poisson_panjer, convolve,
                       degenerate_pmf, explicit_pmf, geometric_pmf, id_compose, levy_to_spectral,
                       nfold, point_mass, poisson_pmf, standard_families, tail_at)
from convroots.convolution import TruncationWarning, exact_length, kesten_tail_sum

TWO = build_lattice([0.5, 0.5], 1.0)


def brute_convolve(a, b):
    out = np.zeros(a.size + b.size - 1)
    for i in range(a.size):
        for j in range(b.size):
            out[i + j] += a[i] * b[j]
    return out


def test_identity_and_hand_convolution():
    assert np.array_equal(convolve(TWO, point_mass()).masses, TWO.masses)
    assert convolve(TWO, TWO).masses.tolist() == [0.25, 0.5, 0.25]


def test_convolve_matches_double_loop(rng):
    for _ in range(10):
        a = rng.dirichlet(np.ones(int(rng.integers(1, 30))))
        b = rng.dirichlet(np.ones(int(rng.integers(1, 30))))
        got = convolve(build_lattice(a, 1.0), build_lattice(b, 1.0)).masses
        assert np.allclose(got, brute_convolve(a, b), rtol=0, atol=1e-15)


def test_commutative_and_associative(rng):
    U, V, W = (build_lattice(rng.dirichlet(np.ones(n)), 1.0) for n in (5, 9, 13))
    assert np.allclose(convolve(V, W).masses, convolve(W, V).masses, atol=1e-15)
    left = convolve(convolve(U, V), W).masses
    right = convolve(U, convolve(V, W)).masses
    assert np.abs(left - right).max() <= 1e-12


def test_residual_propagates():
    V = build_lattice([0.3, 0.3], 1.0)           # residual 0.4
    W = build_lattice([0.5, 0.5], 1.0)
    C = convolve(V, W)
    assert C.n + 1 == exact_length(V, W) == 2
    # beyond the output grid: everything except mass that stayed at 0 or 1
    expect = 1.0 - (0.3 * 0.5 + (0.3 * 0.5 + 0.3 * 0.5))
    assert C.residual == pytest.approx(expect, abs=1e-15)
    assert C.normalization_error() <= 1e-12


def test_steps_must_match():
    with pytest.raises(ValueError):
        convolve(build_lattice([1.0], 1.0), build_lattice([1.0], 0.5))


def test_nfold_small_cases():
    assert nfold(TWO, 0).is_degenerate_at_zero
    assert np.array_equal(nfold(TWO, 1).masses, TWO.masses)
    assert np.allclose(nfold(TWO, 4).masses, stats.binom.pmf(np.arange(5), 4, 0.5), atol=1e-15)


def test_poisson_pmf_examples():
    p = poisson_pmf(1.0, 0)
    assert p.K == 0 and p.p(0) == pytest.approx(math.exp(-1))
    assert p.tail_residual == pytest.approx(1 - math.exp(-1))
    q = poisson_pmf(1.0, 20)
    assert q.tail_residual < 1e-18
    assert q.p(2) / q.p(1) == pytest.approx(0.5)
    assert q.positive_convention


def test_poisson_default_truncation():
    p = poisson_pmf(2.0)
    assert p.tail_residual < 1e-12
    assert stats.poisson.sf(p.K - 1, 2.0) >= 1e-12


def test_poisson_cap_warns():
    with pytest.warns(TruncationWarning):
        p = poisson_pmf(50.0, tol=1e-300, K_max=60)
    assert p.K == 60


def test_geometric_pmf_examples():
    g = geometric_pmf(0.5, 1)
    assert g.probs.tolist() == [0.5, 0.25] and g.tail_residual == 0.25
    assert geometric_pmf(0.5, 30).tail_residual == 2.0 ** -31
    h = geometric_pmf(0.3, 40)
    assert h.probs.sum() + h.tail_residual == pytest.approx(1.0, abs=1e-15)


def test_explicit_pmf_validation():
    e = explicit_pmf([0.2, 0.0, 0.8])
    assert not e.positive_convention
    with pytest.raises(ValueError):
        explicit_pmf([0.5, 0.6])
    with pytest.raises(ValueError):
        explicit_pmf([-0.1, 1.1])


def test_compound_degenerate_counts():
    assert np.array_equal(compound(TWO, degenerate_pmf(1)).dist.masses, TWO.masses)
    assert compound(TWO, degenerate_pmf(0)).dist.is_degenerate_at_zero


def test_compound_binomial_oracle():
    tau = poisson_pmf(0.5, 12)
    r = compound(TWO, tau)
    brute = sum(stats.poisson.pmf(k, 0.5) * stats.binom.sf(3, k, 0.5) for k in range(13))
    assert tail_at(r.dist, 3.0) == pytest.approx(brute, abs=1e-12)
    assert r.abs_error_bound == tau.tail_residual
    assert r.dist.defect == pytest.approx(tau.tail_residual)


def test_compound_linearity_of_mixture():
    V = build_lattice([0.1, 0.6, 0.3], 1.0)
    mix = compound(V, explicit_pmf([0.0, 0.0, 0.4, 0.0, 0.6])).dist
    want = 0.4 * np.pad(nfold(V, 2).masses, (0, 4)) + 0.6 * nfold(V, 4).masses
    assert np.abs(mix.masses - want).max() <= 1e-15


def test_compound_spill_to_residual():
    r = compound(TWO, poisson_pmf(1.0, 5), spill_to_residual=True)
    assert r.dist.defect == 0.0
    assert r.dist.residual == pytest.approx(r.abs_error_bound)
    lo, hi = r.tail_bounds(2.0)
    assert lo == hi


def test_error_bound_sound_under_refinement():
    V = build_lattice([0.3, 0.4, 0.3], 1.0)
    coarse = compound(V, poisson_pmf(2.0, 6))
    fine = compound(V, poisson_pmf(2.0, 30))
    n = coarse.dist.masses.size
    diff = np.abs(fine.dist.tail[:n] - coarse.dist.tail[:n]).max()
    assert diff <= coarse.abs_error_bound


def test_power_tails_increase_in_k():
    V = build_lattice([0.2, 0.3, 0.5], 1.0)
    r = compound(V, poisson_pmf(1.0, 12))
    n = r.dist.masses.size
    tails = np.array([np.concatenate([P.tail, np.zeros(n - P.tail.size)])[:n] for P in r.powers])
    assert np.all(np.diff(tails, axis=0) >= -1e-15)


def test_panjer_cross_check(rng):
    for _ in range(5):
        V = build_lattice(rng.dirichlet(np.ones(6)), 1.0)
        mu = float(rng.uniform(0.3, 2.5))
        ladder = compound(V, poisson_pmf(mu))
        panjer = compound_poisson_panjer(V, mu, ladder.dist.masses.size)
        assert np.abs(panjer.masses - ladder.dist.masses).max() <= 1e-12


def test_kesten_tail_sums():
    p = poisson_pmf(1.0, 10)
    K_c, M_c = 3.0, 1.5
    series = sum(stats.poisson.pmf(k, 1.0) * K_c * M_c ** k for k in range(11, 200))
    assert kesten_tail_sum(p, 10, K_c, M_c) == pytest.approx(series, rel=1e-9)
    g = geometric_pmf(0.4, 10)
    series = sum(0.6 * 0.4 ** k * K_c * M_c ** k for k in range(11, 400))
    assert kesten_tail_sum(g, 10, K_c, M_c) == pytest.approx(series, rel=1e-9)
    assert kesten_tail_sum(geometric_pmf(0.8, 10), 10, K_c, M_c) == math.inf


def test_levy_exponential_spectrum():
    spec = LevySpectrum.from_function(lambda x: np.exp(-x), 60.0)
    mu, F = levy_to_spectral(spec, 0.25, 200)
    assert mu == pytest.approx(math.exp(-1))
    assert tail_at(F, 0.5) == 1.0
    assert tail_at(F, 3.0) == pytest.approx(math.exp(-2), rel=1e-12)
    assert F.residual == pytest.approx(math.exp(-49), rel=1e-9)


def test_levy_table_interpolation():
    xs = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    spec = LevySpectrum(xs, 2.0 / xs)
    assert spec.mu == 2.0
    # log-linear between (2, 1.0) and (4, 0.5): geometric mean at the midpoint
    assert spec.tail(np.array([3.0]))[0] == pytest.approx(math.sqrt(0.5), rel=1e-12)


def test_levy_rejects_zero_mass():
    spec = LevySpectrum(np.array([0.5, 1.0, 2.0]), np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError, match="mu = 0"):
        levy_to_spectral(spec, 0.5, 4)


def test_id_compose_trivial_cases():
    F = standard_families("pareto", 0.5, 100, alpha=2.0)
    H2, H = id_compose(point_mass(0.5), F, 1.0)
    assert np.array_equal(H.masses, H2.masses)
    H1 = standard_families("exponential", 0.5, 100, lam=5.0)
    H2, H = id_compose(H1, point_mass(0.5), 1.0)
    assert H2.is_degenerate_at_zero
    assert np.allclose(H.masses, H1.masses, atol=1e-15)


def test_id_compose_against_oracle():
    h, N = 0.5, 80
    F = standard_families("pareto", h, N, alpha=2.0)
    H1 = standard_families("exponential", h, N, lam=5.0)
    H2, H = id_compose(H1, F, 1.0)
    n = H.masses.size
    full = brute_convolve(H1.masses, H2.masses)[:n]
    assert np.abs(full - H.masses).max() <= 1e-14
    # H1 puts mass H1.masses[0] at zero, so H dominates that share of H2
    assert np.all(H.tail[:n] >= H1.masses[0] * H2.tail[:n] - 1e-15)
