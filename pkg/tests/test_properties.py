import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from convroots import (build_lattice, compound, convolve, esscher, explicit_pmf, gamma_moment,
                       nfold, poisson_pmf)
from convroots.diagnostics import check_condition_liminf, find_minimal_n0

weights = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=24).filter(lambda w: sum(w) > 1e-3)
steps = st.sampled_from([0.25, 0.5, 1.0])


def same(a, b, tol):
    """Mass-wise comparison; trailing underflowed zeros may be trimmed on either side."""
    n = max(a.size, b.size)
    return np.abs(np.pad(a, (0, n - a.size)) - np.pad(b, (0, n - b.size))).max() <= tol


def grid(w, step=1.0, keep=1.0):
    m = np.asarray(w) / sum(w) * keep
    return build_lattice(m, step)


@given(weights, steps, st.floats(0.5, 1.0))
def test_normalization_and_tail_consistency(w, h, keep):
    V = grid(w, h, keep)
    assert V.normalization_error() <= 1e-12
    assert np.all(np.diff(V.tail) <= 1e-16)
    assert V.tail[-1] == V.residual
    assert np.allclose(V.tail[:-1] - V.tail[1:], V.masses[1:], atol=1e-15)


@given(weights, weights)
def test_convolution_commutes(a, b):
    V, W = grid(a), grid(b)
    assert same(convolve(V, W).masses, convolve(W, V).masses, 1e-15)


@given(weights, weights, weights)
@settings(max_examples=40)
def test_convolution_associates(a, b, c):
    U, V, W = grid(a), grid(b), grid(c)
    left = convolve(convolve(U, V), W)
    right = convolve(U, convolve(V, W))
    assert same(left.masses, right.masses, 1e-12)


@given(weights, st.integers(0, 8))
@settings(max_examples=40)
def test_nfold_equals_iterated(w, n):
    V = grid(w)
    it = nfold(V, 0)
    for _ in range(n):
        it = convolve(it, V)
    assert same(nfold(V, n).masses, it.masses, 1e-12)


@given(weights, steps, st.floats(0.05, 1.5), st.integers(1, 6))
@settings(max_examples=40)
def test_esscher_identities(w, h, g, k):
    V = grid(w, h)
    W = esscher(V, -g)
    assert np.abs(esscher(W, g).masses - V.masses).max() <= 1e-10
    assert abs(gamma_moment(V, -g).value * gamma_moment(W, g).value - 1) <= 1e-10
    Vk = nfold(V, k)
    assert same(esscher(Vk, -g).masses, nfold(W, k).masses, 1e-10)
    rel = gamma_moment(Vk, -g).value / gamma_moment(V, -g).value ** k - 1
    assert abs(rel) <= 1e-10


@given(weights, st.floats(0.5, 1.0))
@settings(max_examples=30)
def test_liminf_holds_automatically_at_gamma_zero(w, keep):
    V = grid(w, 1.0, keep)
    if not np.any(V.tail > 0):
        return
    assert check_condition_liminf(V, 0.0, 3, [1.0, 2.0]).passed


@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5), st.floats(0.3, 2.0))
@settings(max_examples=25, deadline=None)
def test_n0_nonincreasing_in_epsilon(w, mu):
    V = grid(w)
    tau = poisson_pmf(mu)
    n0s = []
    for eps in (0.9, 0.5, 0.1, 0.01):
        r = find_minimal_n0(V, tau, eps)
        n0s.append(r.n0 if r.found else tau.K + 1)
    assert n0s == sorted(n0s)


@given(weights, st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6).filter(lambda p: sum(p) > 0))
@settings(max_examples=30)
def test_compound_is_proper_and_deterministic(w, p):
    V = grid(w)
    tau = explicit_pmf(np.asarray(p) / sum(p))
    a, b = compound(V, tau), compound(V, tau)
    assert a.dist.normalization_error() <= 1e-12
    assert a.dist.masses.tobytes() == b.dist.masses.tobytes()
