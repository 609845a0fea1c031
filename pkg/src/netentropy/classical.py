"""Continuous-time classical consensus dX/dt = -L X with Gaussian or Bernoulli initial values.

The flow is linear, so a Gaussian initial law stays Gaussian and is propagated
exactly with ``exp(-tL)``; no ODE stepping is involved.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import entropy
from .graph import Graph, laplacian
from .linalg import DEGENERATE, LOG2E, eig_sym, expm_sym, log_det_sym, symmetrize


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = symmetrize(np.atleast_2d(self.cov))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def iid(cls, n: int, mu: float = 0.0, sigma2: float = 1.0) -> GaussianState:
        return cls(np.full(n, float(mu)), sigma2 * np.eye(n))

    @property
    def n(self) -> int:
        return self.mean.size


def propagate_gaussian(g: Graph, init: GaussianState, t: float) -> GaussianState:
    """Law of X(t) = exp(-tL) X(0); ``t = inf`` returns the consensus limit."""
    if init.n != g.n:
        raise ValueError(f"state has {init.n} nodes, graph has {g.n}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if math.isinf(t):
        return consensus_limit(init)
    E = expm_sym(-laplacian(g), t)
    return GaussianState(E @ init.mean, E @ init.cov @ E)


def consensus_limit(init: GaussianState) -> GaussianState:
    """Law of X(inf) = 11^T X(0) / N (valid for connected graphs)."""
    J = np.full((init.n, init.n), 1.0 / init.n)
    return GaussianState(J @ init.mean, J @ init.cov @ J)


@dataclass
class ClassicalTrajectory:
    times: np.ndarray
    joint: list  # float bits, or DEGENERATE at t = inf
    marginal: list  # entropy of node `node`'s coordinate
    closed_form: np.ndarray
    node: int = 0
    states: list = field(default_factory=list)

    def steps(self) -> np.ndarray:
        vals = np.array([float(h) for h in self.joint])
        return np.diff(vals)

    def is_non_increasing(self, slack: float = 1e-9) -> bool:
        finite = [float(h) for h in self.joint if h is not DEGENERATE]
        return bool(np.all(np.diff(finite) <= slack))

    def max_closed_form_error(self) -> float:
        errs = [abs(h - c) for h, c in zip(self.joint, self.closed_form) if h is not DEGENERATE]
        return max(errs, default=0.0)


def default_grid(t_end: float = 5.0, dt: float = 0.1) -> np.ndarray:
    return np.round(np.arange(0.0, t_end + dt / 2, dt), 12)


def differential_entropy_trajectory(g: Graph, sigma2: float = 1.0, grid=None, *,
                                    cov0=None, node: int = 0,
                                    keep_states: bool = False) -> ClassicalTrajectory:
    """Differential entropy of X(t) along ``grid`` for X(0) ~ N(0, sigma2*I) (or ``cov0``).

    The joint entropy uses log|exp(-tL) S0 exp(-tL)| = log|S0| - 2t*sum(eig(L))*log2(e),
    taken from the Laplacian spectrum so that it stays exact long after the
    covariance's small eigenvalues underflow. ``closed_form`` holds the
    trace-based value h(0) - t*tr(L)*log2(e) for comparison. ``inf`` in the
    grid yields DEGENERATE for the joint entropy and the N(., sigma2/N)
    coordinate entropy for the marginal.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    if not g.is_connected:
        warnings.warn("graph is disconnected: the consensus limit is not the global average",
                      RuntimeWarning, stacklevel=2)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < 0 or np.any(np.diff(grid) <= 0)):
        raise ValueError("time grid must be non-negative and strictly increasing")
    L = laplacian(g)
    lam = eig_sym(L)[0]
    S0 = sigma2 * np.eye(g.n) if cov0 is None else symmetrize(cov0)
    logdet0 = log_det_sym(S0)
    if logdet0 is DEGENERATE:
        raise ValueError("initial covariance is singular")
    init = GaussianState(np.zeros(g.n), S0)
    h0 = entropy.gaussian_entropy_from_logdet(g.n, logdet0)
    joint, marginal, states = [], [], []
    for t in grid:
        state = propagate_gaussian(g, init, float(t))
        if math.isinf(t):
            joint.append(DEGENERATE)
        else:
            logdet = logdet0 - 2.0 * t * float(np.sum(lam)) * LOG2E
            joint.append(entropy.gaussian_entropy_from_logdet(g.n, logdet))
        marginal.append(entropy.gaussian_marginal_entropy(state.cov[node, node]))
        if keep_states:
            states.append(state)
    closed = h0 - grid * np.trace(L) * LOG2E
    return ClassicalTrajectory(grid, joint, marginal, closed, node, states)


def limit_marginal_entropy(n: int, sigma2: float = 1.0) -> float:
    """Entropy of one coordinate of X(inf) for i.i.d. N(mu, sigma2) initial values."""
    return entropy.gaussian_marginal_entropy(sigma2 / n)


@dataclass(frozen=True)
class BernoulliReport:
    n: int
    p: float
    H0: float
    H_inf_exact: float
    H_inf_asymptotic: float

    @property
    def decreased(self) -> bool:
        return self.H_inf_exact < self.H0

    def as_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "H0": self.H0, "H_inf_exact": self.H_inf_exact,
                "H_inf_asymptotic": self.H_inf_asymptotic, "decreased": self.decreased}


def bernoulli_limit_report(n: int, p: float) -> BernoulliReport:
    """Entropy before and at the consensus limit for i.i.d. Bernoulli(p) node values.

    At the limit every node holds sum(X(0))/N, whose law is Binomial(N, p)
    relabelled, so its entropy is the binomial entropy.
    """
    return BernoulliReport(
        n, p,
        entropy.bernoulli_network_entropy(n, p),
        entropy.binomial_entropy_exact(n, p),
        entropy.binomial_entropy_asymptotic(n, p),
    )
