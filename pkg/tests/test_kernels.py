import numpy as np
import pytest

from convroots import kernels

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.available_backends()[request.param]


def test_active_backend_is_listed():
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("na,nb,n_out", [(5, 7, 11), (5, 7, 4), (1, 1, 1), (30, 3, 10), (4, 4, 0)])
def test_convolve_truncated(backend, na, nb, n_out, rng):
    a = rng.random(na)
    b = rng.random(nb)
    out, spilled = backend.convolve_truncated(a, b, n_out)
    full = np.convolve(a, b)
    want = np.zeros(n_out)
    want[:min(n_out, full.size)] = full[:n_out]
    assert out.shape == (n_out,)
    assert np.allclose(out, want, rtol=1e-13, atol=0)
    assert spilled == pytest.approx(full[n_out:].sum(), rel=1e-12, abs=1e-15)


def test_panjer(backend):
    f = np.array([0.5, 0.5])
    g = backend.panjer_poisson(f, 1.0, 6)
    # compound Poisson(1) of Bernoulli(1/2) is Poisson(1/2)
    from scipy import stats
    assert np.allclose(g, stats.poisson.pmf(np.arange(6), 0.5), rtol=1e-13)


def test_window_integral(backend, rng):
    tail = np.sort(rng.random(40))[::-1].copy()
    w = rng.random(5)
    got = backend.window_integral(tail, w, 30)
    want = np.array([sum(w[j] * (tail[i + j] - tail[i + 5]) for j in range(5)) for i in range(30)])
    assert np.allclose(got, want, rtol=1e-13)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled extension not built")
    mods = kernels.available_backends()
    a, b = rng.random(300), rng.random(200)
    r1 = mods["numpy"].convolve_truncated(a, b, 350)
    r2 = mods["cython"].convolve_truncated(a, b, 350)
    assert np.allclose(r1[0], r2[0], rtol=1e-12) and r1[1] == pytest.approx(r2[1], rel=1e-12)
    f = rng.dirichlet(np.ones(8))
    assert np.allclose(mods["numpy"].panjer_poisson(f, 1.3, 100),
                       mods["cython"].panjer_poisson(f, 1.3, 100), rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("n", [kernels.CONVOLVE_CROSSOVER - 1, kernels.CONVOLVE_CROSSOVER + 1])
def test_dispatch_matches_direct_sum_near_crossover(n, rng):
    a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
    out, spilled = kernels.convolve_truncated(a, b, n)
    full = np.convolve(a, b)
    assert np.allclose(out, full[:n], rtol=1e-12, atol=1e-18)
    assert spilled == pytest.approx(full[n:].sum(), rel=1e-12)
