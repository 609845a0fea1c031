import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import multivariate_normal
from scipy.stats import unitary_group

from netentropy.entropy import (bernoulli_network_entropy, binary_entropy, binomial_entropy_asymptotic,
                                binomial_entropy_exact, gaussian_differential_entropy,
                                gaussian_marginal_entropy, shannon, von_neumann)
from netentropy.linalg import DEGENERATE


def binomial_entropy_direct(n, p):
    """Term-by-term sum with exact integer binomial coefficients."""
    total = 0.0
    for k in range(n + 1):
        logb = math.log(math.comb(n, k)) + k * math.log(p) + (n - k) * math.log(1 - p)
        total -= math.exp(logb) * logb
    return total / math.log(2)


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    A = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


@pytest.mark.parametrize("probs, expect", [
    ([0.5, 0.5], 1.0),
    ([1.0, 0.0, 0.0], 0.0),
    ([0.25] * 4, 2.0),
])
def test_shannon_examples(probs, expect):
    assert shannon(probs) == pytest.approx(expect, abs=1e-15)


def test_shannon_rejects_unnormalized():
    with pytest.raises(ValueError, match="sums to"):
        shannon([0.5, 0.6])
    with pytest.raises(ValueError, match="negative"):
        shannon([1.5, -0.5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12).filter(lambda w: sum(w) > 1e-3),
       st.randoms(use_true_random=False))
def test_shannon_bounds_and_permutation_invariance(weights, rnd):
    p = np.array(weights) / sum(weights)
    h = shannon(p)
    assert -1e-12 <= h <= math.log2(len(p)) + 1e-12
    shuffled = list(p)
    rnd.shuffle(shuffled)
    assert shannon(shuffled) == pytest.approx(h, abs=1e-12)


@pytest.mark.parametrize("n, p, expect", [(4, 0.5, 4.0), (1, 0.5, 1.0)])
def test_bernoulli_network_entropy(n, p, expect):
    assert bernoulli_network_entropy(n, p) == pytest.approx(expect)


def test_bernoulli_network_entropy_formula():
    hb = -(0.3 * math.log2(0.3) + 0.7 * math.log2(0.7))
    assert bernoulli_network_entropy(10, 0.3) == pytest.approx(10 * hb, abs=1e-13)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
def test_bernoulli_requires_open_interval(p):
    with pytest.raises(ValueError):
        bernoulli_network_entropy(3, p)
    with pytest.raises(ValueError):
        binomial_entropy_exact(3, p)


def test_binomial_entropy_small_cases():
    assert binomial_entropy_exact(1, 0.5) == pytest.approx(1.0, abs=1e-14)
    assert binomial_entropy_exact(2, 0.5) == pytest.approx(1.5, abs=1e-14)
    assert binomial_entropy_exact(4, 0.5) == pytest.approx(shannon(np.array([1, 4, 6, 4, 1]) / 16), abs=1e-14)


@pytest.mark.parametrize("n, p", [(10, 0.3), (100, 0.3), (257, 0.5), (1000, 0.05)])
def test_binomial_entropy_matches_direct_sum(n, p):
    assert binomial_entropy_exact(n, p) == pytest.approx(binomial_entropy_direct(n, p), abs=1e-10)


def test_binomial_entropy_large_n_is_stable():
    h = binomial_entropy_exact(10_000, 0.3)
    assert math.isfinite(h)
    assert h == pytest.approx(binomial_entropy_asymptotic(10_000, 0.3), abs=1e-4)


def test_binomial_asymptotic():
    assert binomial_entropy_asymptotic(100, 0.5) == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * 25))
    assert abs(binomial_entropy_exact(100, 0.3) - binomial_entropy_asymptotic(100, 0.3)) < 0.01
    d50 = binomial_entropy_exact(50, 0.3) - binomial_entropy_asymptotic(50, 0.3)
    d200 = binomial_entropy_exact(200, 0.3) - binomial_entropy_asymptotic(200, 0.3)
    assert abs(d200) < abs(d50)
    for p in (0.1, 0.3, 0.45):
        assert binomial_entropy_asymptotic(37, p) == pytest.approx(binomial_entropy_asymptotic(37, 1 - p))


def test_binomial_gap_scales_as_one_over_n():
    scaled = [n * abs(binomial_entropy_exact(n, 0.3) - binomial_entropy_asymptotic(n, 0.3))
              for n in (50, 100, 250, 500, 1000, 2000)]
    assert max(scaled) < 0.11
    assert all(b <= a for a, b in zip(scaled, scaled[1:]))


def test_gaussian_entropy_examples():
    assert gaussian_differential_entropy([[1.0]]) == pytest.approx(0.5 * math.log2(2 * math.pi * math.e))
    assert gaussian_differential_entropy([[1.0]]) == pytest.approx(2.0471, abs=1e-4)
    for n, s2 in ((3, 1.0), (5, 0.25), (8, 4.0)):
        h = gaussian_differential_entropy(s2 * np.eye(n))
        assert h == pytest.approx(n / 2 * math.log2(2 * math.pi * math.e * s2), abs=1e-12)
    assert gaussian_differential_entropy(np.ones((3, 3))) is DEGENERATE


def test_gaussian_entropy_matches_scipy():
    rng = np.random.default_rng(3)
    for n in (1, 2, 5, 8):
        A = rng.normal(size=(n, n))
        cov = A @ A.T + 0.1 * np.eye(n)
        nats = multivariate_normal(np.zeros(n), cov).entropy()
        assert gaussian_differential_entropy(cov) == pytest.approx(nats / math.log(2), abs=1e-10)


def test_gaussian_entropy_rejects_non_psd():
    with pytest.raises(ValueError):
        gaussian_differential_entropy(np.diag([1.0, -0.5]))


def test_marginal_entropy():
    assert gaussian_marginal_entropy(0.25) == pytest.approx(0.5 * math.log2(2 * math.pi * math.e / 4))
    assert gaussian_marginal_entropy(0.0) is DEGENERATE


def test_von_neumann_examples():
    psi = np.array([1, 1j, 0, -1]) / math.sqrt(3)
    assert von_neumann(np.outer(psi, psi.conj())) == pytest.approx(0.0, abs=1e-12)
    for n in (1, 2, 3):
        assert von_neumann(np.eye(2 ** n) / 2 ** n) == pytest.approx(n, abs=1e-12)
    rho = np.zeros((4, 4))
    rho[1, 1] = rho[2, 2] = 0.5
    assert von_neumann(rho) == pytest.approx(1.0, abs=1e-14)


def test_von_neumann_rejects_bad_states():
    with pytest.raises(ValueError, match="trace"):
        von_neumann(np.eye(2))
    with pytest.raises(ValueError, match="positive"):
        von_neumann(np.diag([1.5, -0.5]))


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_von_neumann_unitary_invariance_and_bounds(d):
    rng = np.random.default_rng(d)
    for rank in (1, 2, d):
        rho = random_density(d, rng, rank)
        U = unitary_group.rvs(d, random_state=rng)
        s = von_neumann(rho)
        assert 0 <= s <= math.log2(d) + 1e-12
        assert von_neumann(U @ rho @ U.conj().T) == pytest.approx(s, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.floats(0, 1), st.integers(0, 2**31))
def test_von_neumann_concave(d, lam, seed):
    rng = np.random.default_rng(seed)
    r1 = random_density(d, rng, int(rng.integers(1, d + 1)))
    r2 = random_density(d, rng, int(rng.integers(1, d + 1)))
    mix = lam * r1 + (1 - lam) * r2
    assert von_neumann(mix) >= lam * von_neumann(r1) + (1 - lam) * von_neumann(r2) - 1e-9


def test_binary_entropy_symmetric():
    assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8))
