"""Entropy functionals, all in bits.

Shannon and von Neumann entropies are plain floats. Differential entropies of
Gaussians may be :data:`~netentropy.linalg.DEGENERATE` when the covariance is
singular; the per-coordinate entropy used at the consensus limit has its own
function, :func:`gaussian_marginal_entropy`, and is never mixed with the joint one.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .linalg import DEGENERATE, LOG2E, clip_spectrum, eig_sym, eigvals_hermitian

NORM_TOL = 1e-12
TRACE_TOL = 1e-9


def _plogp_sum(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def shannon(probs) -> float:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("distribution must be a non-empty 1-D sequence")
    if np.any(p < 0):
        raise ValueError("distribution has negative entries")
    if abs(p.sum() - 1.0) > NORM_TOL * max(1, p.size):
        raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
    return max(0.0, _plogp_sum(p))


def binary_entropy(p: float) -> float:
    return shannon([p, 1.0 - p])


def _check_open_unit(p: float):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def bernoulli_network_entropy(n: int, p: float) -> float:
    """Joint entropy of ``n`` i.i.d. Bernoulli(p) node values."""
    _check_open_unit(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * binary_entropy(p)


def binomial_log_pmf(n: int, p: float) -> np.ndarray:
    """Natural-log pmf of Binomial(n, p) on 0..n, evaluated in log space."""
    k = np.arange(n + 1)
    return (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            + k * math.log(p) + (n - k) * math.log1p(-p))


def binomial_entropy_exact(n: int, p: float) -> float:
    _check_open_unit(p)
    if n < 0:
        raise ValueError("n must be >= 0")
    lb = binomial_log_pmf(n, p)
    return float(-np.sum(np.exp(lb) * lb) * LOG2E)


def binomial_entropy_asymptotic(n: int, p: float) -> float:
    """Leading-order normal approximation ``0.5*log2(2*pi*e*n*p*(1-p))``."""
    _check_open_unit(p)
    return 0.5 * math.log2(2 * math.pi * math.e * n * p * (1 - p))


def gaussian_differential_entropy(cov):
    """Joint differential entropy of N(mu, cov), or DEGENERATE if cov is singular."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    w = clip_spectrum(eig_sym(cov)[0])
    if np.any(w == 0.0):
        return DEGENERATE
    n = w.size
    return 0.5 * (n * math.log2(2 * math.pi * math.e) + float(np.sum(np.log2(w))))


def gaussian_entropy_from_logdet(n: int, logdet_bits: float) -> float:
    """Same as :func:`gaussian_differential_entropy` given ``log2|cov|`` directly."""
    return 0.5 * (n * math.log2(2 * math.pi * math.e) + logdet_bits)


def gaussian_marginal_entropy(variance: float):
    """Differential entropy of one Gaussian coordinate with the given variance."""
    if variance < -1e-10:
        raise ValueError(f"negative variance {variance}")
    if variance <= 1e-300:
        return DEGENERATE
    return 0.5 * math.log2(2 * math.pi * math.e * variance)


def von_neumann(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace is {tr}, not 1")
    w = clip_spectrum(eigvals_hermitian(rho))
    return max(0.0, _plogp_sum(w))
