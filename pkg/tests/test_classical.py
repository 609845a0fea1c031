import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netentropy.classical import (GaussianState, bernoulli_limit_report, consensus_limit,
                                  differential_entropy_trajectory, limit_marginal_entropy, propagate_gaussian)
from netentropy.entropy import gaussian_differential_entropy, shannon
from netentropy.graph import build_graph, complete_graph, default_graph, laplacian, path_graph, random_connected_graph
from netentropy.linalg import DEGENERATE, LOG2E, log_det_sym


def test_propagate_zero_time_is_identity():
    init = GaussianState([1.0, -2.0, 0.5, 3.0], np.diag([1.0, 2.0, 3.0, 4.0]))
    out = propagate_gaussian(default_graph(), init, 0.0)
    np.testing.assert_allclose(out.mean, init.mean, atol=1e-12)
    np.testing.assert_allclose(out.cov, init.cov, atol=1e-12)


@pytest.mark.parametrize("t", [0.2, 1.0, 3.0])
def test_propagate_k2_closed_form(t):
    e2, e4 = math.exp(-2 * t), math.exp(-4 * t)
    # exp(-tL) = [[a, b], [b, a]] with a = (1+e2)/2, b = (1-e2)/2; cov = exp(-2tL) for sigma2 = 1.
    out = propagate_gaussian(complete_graph(2), GaussianState.iid(2, mu=0.0), t)
    np.testing.assert_allclose(out.cov, [[(1 + e4) / 2, (1 - e4) / 2], [(1 - e4) / 2, (1 + e4) / 2]], atol=1e-14)


def test_propagate_rejects_negative_time_and_size_mismatch():
    with pytest.raises(ValueError):
        propagate_gaussian(default_graph(), GaussianState.iid(4), -1.0)
    with pytest.raises(ValueError):
        propagate_gaussian(default_graph(), GaussianState.iid(3), 1.0)


def test_propagate_to_infinity_reaches_average():
    init = GaussianState([4.0, 0.0, 0.0, 0.0], 2.0 * np.eye(4))
    g = default_graph()
    far = propagate_gaussian(g, init, 40.0)
    lim = propagate_gaussian(g, init, math.inf)
    np.testing.assert_allclose(lim.mean, np.ones(4), atol=1e-12)
    np.testing.assert_allclose(lim.cov, 2.0 * np.full((4, 4), 0.25), atol=1e-12)
    np.testing.assert_allclose(far.mean, lim.mean, atol=1e-10)
    np.testing.assert_allclose(far.cov, lim.cov, atol=1e-10)
    assert consensus_limit(init).cov == pytest.approx(lim.cov)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 2**31), t=st.floats(0, 6), sigma2=st.sampled_from([0.5, 1.0, 4.0]))
def test_average_conserved_and_limit_rate(n, seed, t, sigma2):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, rng)
    mu = rng.normal(size=n)
    out = propagate_gaussian(g, GaussianState(mu, sigma2 * np.eye(n)), t)
    assert abs(out.mean.mean() - mu.mean()) <= 1e-10
    fiedler = np.linalg.eigvalsh(laplacian(g))[1]
    gap = np.max(np.abs(out.cov - sigma2 * np.full((n, n), 1 / n)))
    assert gap <= sigma2 * math.exp(-2 * fiedler * t) * n + 1e-12


def test_trajectory_initial_value_and_slope():
    g = default_graph()
    tr = differential_entropy_trajectory(g, 1.0, [0.0])
    assert tr.joint[0] == pytest.approx(2 * math.log2(2 * math.pi * math.e), abs=1e-12)
    tr = differential_entropy_trajectory(g, 1.0)
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(5.0) and len(tr.times) == 51
    np.testing.assert_allclose(tr.steps(), -np.trace(laplacian(g)) * LOG2E * 0.1, atol=1e-10)


def test_trajectory_agrees_with_numerical_log_det_at_short_times():
    g = path_graph(5)
    grid = np.linspace(0, 0.5, 6)
    tr = differential_entropy_trajectory(g, 2.0, grid, keep_states=True)
    for h, state in zip(tr.joint, tr.states):
        assert h == pytest.approx(gaussian_differential_entropy(state.cov), abs=1e-8)
        assert h == pytest.approx(0.5 * (5 * math.log2(2 * math.pi * math.e) + log_det_sym(state.cov)), abs=1e-8)


def test_trajectory_with_general_initial_covariance():
    g = default_graph()
    A = np.random.default_rng(0).normal(size=(4, 4))
    cov0 = A @ A.T + np.eye(4)
    tr = differential_entropy_trajectory(g, 1.0, [0.0, 0.2, 0.4], cov0=cov0, keep_states=True)
    for h, st_ in zip(tr.joint, tr.states):
        assert h == pytest.approx(gaussian_differential_entropy(st_.cov), abs=1e-8)


def test_trajectory_limit_entries():
    n, sigma2 = 4, 1.0
    tr = differential_entropy_trajectory(default_graph(), sigma2, [0.0, 1.0, math.inf])
    assert tr.joint[-1] is DEGENERATE
    assert tr.marginal[-1] == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * sigma2 / n))
    assert limit_marginal_entropy(n, sigma2) == pytest.approx(tr.marginal[-1])
    assert tr.is_non_increasing()


def test_trajectory_rejects_bad_input():
    with pytest.raises(ValueError):
        differential_entropy_trajectory(default_graph(), 0.0)
    with pytest.raises(ValueError):
        differential_entropy_trajectory(default_graph(), 1.0, [0.0, 0.5, 0.2])


def test_trajectory_warns_on_disconnected_graph():
    with pytest.warns(RuntimeWarning, match="disconnected"):
        tr = differential_entropy_trajectory(build_graph(4, [(1, 2), (3, 4)]), 1.0, [0.0, 1.0])
    assert tr.is_non_increasing()


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 2**31), sigma2=st.floats(0.1, 10))
def test_trajectory_monotone_and_exact(n, seed, sigma2):
    g = random_connected_graph(n, np.random.default_rng(seed))
    grid = np.sort(np.random.default_rng(seed + 1).uniform(0, 5, size=12))
    grid = np.unique(grid)
    tr = differential_entropy_trajectory(g, sigma2, grid)
    assert tr.is_non_increasing(1e-9)
    assert tr.max_closed_form_error() <= 1e-8


def test_bernoulli_report_examples():
    r = bernoulli_limit_report(4, 0.5)
    assert r.H0 == pytest.approx(4.0)
    assert r.H_inf_exact == pytest.approx(shannon(np.array([1, 4, 6, 4, 1]) / 16))
    assert r.decreased

    r1 = bernoulli_limit_report(1, 0.5)
    assert r1.H0 == pytest.approx(1.0) and r1.H_inf_exact == pytest.approx(1.0)
    assert not r1.decreased

    r100 = bernoulli_limit_report(100, 0.3)
    assert r100.H_inf_asymptotic == pytest.approx(0.5 * math.log2(2 * math.pi * math.e * 21))
    assert abs(r100.H_inf_exact - r100.H_inf_asymptotic) < 0.01
    assert r100.H_inf_exact < r100.H0 / 10
    assert set(r100.as_dict()) == {"n", "p", "H0", "H_inf_exact", "H_inf_asymptotic", "decreased"}
