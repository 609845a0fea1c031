"""Randomized gossip: classical [A1], [A1'], [A2] and quantum [AQ1], [AQ2] updates.

Each tick picks a node uniformly, then one of its neighbours uniformly. The
coefficient ``b`` is Bernoulli with mean ``beta``; ``b = 1`` keeps the current
values and ``b = 0`` hands each selected node the other's value.

Besides the update rules this module holds the exact descriptions of [A2]:
the single-particle transition matrix ``P`` (where does the value that sat at
node ``s`` end up) and the operator acting on the joint pmf over the
permutation orbit of ``X(0)``. Both are independent routes to the node
marginals and are checked against each other and against Monte Carlo.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .entropy import _plogp_sum
from .graph import Graph, pair_distribution
from .quantum import n_qubits_of, swap_operator

ALGORITHMS = ("A1", "A1'", "A2", "AQ1", "AQ2")
MAX_JOINT_NODES = 6


@dataclass(frozen=True)
class GossipConfig:
    graph: Graph
    beta: float = 0.5
    seed: int = 0
    horizon: int = 50

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie strictly inside (0, 1), got {self.beta}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not self.graph.is_connected:
            raise ValueError("gossip needs a connected graph")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial, fixed by ``(seed, trial)`` alone."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _neighbor_table(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    deg = g.degrees
    table = np.zeros((g.n, int(deg.max())), dtype=int)
    for i, nb in enumerate(g.neighbors):
        table[i, :len(nb)] = nb
    return table, deg


def sample_pair(cfg: GossipConfig, rng: np.random.Generator) -> tuple[int, int]:
    g = cfg.graph
    i = int(rng.integers(g.n))
    nb = g.neighbors[i]
    j = nb[int(rng.integers(len(nb)))]
    return (i, j) if i < j else (j, i)


def draw_ticks(g: Graph, rng: np.random.Generator, k: int, beta: float):
    """``k`` ticks of randomness: first nodes, partner nodes and coefficients b."""
    table, deg = _neighbor_table(g)
    first = rng.integers(g.n, size=k)
    u = rng.random(k)
    second = table[first, np.minimum((u * deg[first]).astype(int), deg[first] - 1)]
    b = (rng.random(k) < beta).astype(np.int8)
    return first, second, b


def step_A1(x, pair) -> np.ndarray:
    i, j = pair
    x = np.array(x, dtype=float)
    x[i] = x[j] = 0.5 * (x[i] + x[j])
    return x


def step_A1prime(x, pair, b: int) -> np.ndarray:
    i, j = pair
    x = np.array(x, dtype=float)
    x[i] = x[j] = x[i] if b else x[j]
    return x


def step_A2(x, pair, b: int) -> np.ndarray:
    i, j = pair
    x = np.array(x)
    if not b:
        x[i], x[j] = x[j], x[i]
    return x


def step_AQ1(rho, pair) -> np.ndarray:
    U = swap_operator(n_qubits_of(rho), pair)
    return 0.5 * rho + 0.5 * U.conjugate(rho)


def step_AQ2(rho, pair, b: int) -> np.ndarray:
    if b:
        return np.array(rho, copy=True)
    return swap_operator(n_qubits_of(rho), pair).conjugate(rho)


def single_particle_matrix(cfg: GossipConfig) -> np.ndarray:
    """``P[s, i]``: probability that the value at node ``s`` sits at node ``i`` one tick later.

    P = I - sum_{edges} q_ij (1 - beta) (e_i - e_j)(e_i - e_j)^T.
    """
    n = cfg.graph.n
    P = np.eye(n)
    for (i, j), q in pair_distribution(cfg.graph).items():
        w = q * (1.0 - cfg.beta)
        P[i, i] -= w
        P[j, j] -= w
        P[i, j] += w
        P[j, i] += w
    return P


def label_tracking_estimate(cfg: GossipConfig, ticks: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of ``P`` from one long [A2] run carrying node labels."""
    n = cfg.graph.n
    first, second, b = draw_ticks(cfg.graph, rng, ticks, cfg.beta)
    counts = np.zeros((n, n))
    moved = b == 0
    # Per tick every position is observed once; swapped positions exchange.
    np.add.at(counts, (first[moved], second[moved]), 1.0)
    np.add.at(counts, (second[moved], first[moved]), 1.0)
    stay = np.full(n, float(ticks))
    np.subtract.at(stay, first[moved], 1.0)
    np.subtract.at(stay, second[moved], 1.0)
    counts[np.diag_indices(n)] += stay
    return counts / ticks


def marginal_evolution(P: np.ndarray, marginals0, k: int) -> np.ndarray:
    """Node marginals after ``k`` ticks: ``p_k^i = sum_s (P^k)[s, i] p_0^s``.

    ``marginals0`` is an ``(N, S)`` array of distributions over one shared
    support of ``S`` values.
    """
    m0 = np.asarray(marginals0, dtype=float)
    if m0.ndim != 2 or m0.shape[0] != P.shape[0]:
        raise ValueError(f"expected {P.shape[0]} marginals over a common support, got shape {m0.shape}")
    if np.any(np.abs(m0.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("every marginal must sum to 1")
    return np.linalg.matrix_power(P, k).T @ m0


def point_marginals(x0, support) -> np.ndarray:
    """Marginals of a deterministic initial vector as indicator rows over ``support``."""
    support = list(support)
    m = np.zeros((len(x0), len(support)))
    for i, v in enumerate(x0):
        try:
            m[i, support.index(v)] = 1.0
        except ValueError:
            raise ValueError(f"value {v!r} of node {i + 1} is not in the support") from None
    return m


@dataclass
class JointPmf:
    """Pmf of the node-value vector on the orbit of the initial vectors under edge swaps."""

    graph: Graph
    support: np.ndarray  # (M, N), one configuration per row
    probs: np.ndarray  # (M,)
    swap_index: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_vectors(cls, graph: Graph, vectors, probs=None) -> JointPmf:
        if graph.n > MAX_JOINT_NODES:
            raise ValueError(f"joint pmf is capped at {MAX_JOINT_NODES} nodes, got {graph.n}")
        vectors = [tuple(v) for v in np.atleast_2d(vectors)]
        if any(len(v) != graph.n for v in vectors):
            raise ValueError("initial vectors must have one entry per node")
        probs = np.full(len(vectors), 1.0 / len(vectors)) if probs is None else np.asarray(probs, float)
        pos: dict[tuple, int] = {}
        queue = deque()
        for v in vectors:
            if v not in pos:
                pos[v] = len(pos)
                queue.append(v)
        while queue:
            v = queue.popleft()
            for i, j in graph.edges:
                w = list(v)
                w[i], w[j] = w[j], w[i]
                w = tuple(w)
                if w not in pos:
                    pos[w] = len(pos)
                    queue.append(w)
        support = list(pos)
        p = np.zeros(len(support))
        for v, pv in zip(vectors, probs):
            p[pos[v]] += pv
        swap_index = {}
        for i, j in graph.edges:
            idx = np.empty(len(support), dtype=int)
            for r, v in enumerate(support):
                w = list(v)
                w[i], w[j] = w[j], w[i]
                idx[r] = pos[tuple(w)]
            swap_index[(i, j)] = idx
        return cls(graph, np.array(support), p, swap_index)

    def with_probs(self, probs) -> JointPmf:
        return JointPmf(self.graph, self.support, probs, self.swap_index)

    def values(self) -> list:
        return sorted(set(self.support.ravel().tolist()))

    def marginals(self, values=None) -> np.ndarray:
        values = self.values() if values is None else list(values)
        out = np.zeros((self.graph.n, len(values)))
        for c, v in enumerate(values):
            out[:, c] = self.probs @ (self.support == v)
        return out

    def entropy(self) -> float:
        return _plogp_sum(self.probs)


def joint_pmf_operator_step(f: JointPmf, cfg: GossipConfig, pair=None) -> JointPmf:
    """One [A2] tick acting on the joint pmf.

    With ``pair=None`` the selected pair is averaged out:
    ``f' = sum_e q_e (beta f + (1 - beta) f o swap_e)``. With a given pair the
    update is conditional on that pair being chosen.
    """
    if pair is not None:
        idx = f.swap_index[tuple(sorted(pair))]
        return f.with_probs(cfg.beta * f.probs + (1.0 - cfg.beta) * f.probs[idx])
    out = np.zeros_like(f.probs)
    for e, q in pair_distribution(cfg.graph).items():
        out += q * (cfg.beta * f.probs + (1.0 - cfg.beta) * f.probs[f.swap_index[e]])
    return f.with_probs(out)


@dataclass
class MonteCarloStats:
    algorithm: str
    seed: int
    trials: int
    horizon: int
    per_k: list
    support: list | None = None
    counts: np.ndarray | None = None  # (horizon+1, N, S) value counts, [A2]
    hit_times: np.ndarray | None = None  # first consensus tick per trial, -1 if never, [A1']
    mean: np.ndarray | None = None  # (horizon+1, N)
    std: np.ndarray | None = None
    entropies: np.ndarray | None = None  # (trials, horizon+1), quantum algorithms

    def as_dict(self) -> dict:
        return {"algorithm": self.algorithm, "seed": self.seed, "trials": self.trials,
                "horizon": self.horizon, "per_k": self.per_k}

    def marginals(self) -> np.ndarray:
        return self.counts / self.trials


def _classical_mc(cfg, algorithm, x0, trials, pairs):
    g, K = cfg.graph, cfg.horizon
    firsts = np.empty((trials, K), dtype=int)
    seconds = np.empty((trials, K), dtype=int)
    bits = np.empty((trials, K), dtype=np.int8)
    x0 = np.asarray(x0, dtype=float)
    X = np.empty((trials, g.n))
    for t in range(trials):
        rng = trial_rng(cfg.seed, t)
        if x0.ndim == 2:
            X[t] = x0[t]
        else:
            X[t] = x0
        if pairs is None:
            firsts[t], seconds[t], bits[t] = draw_ticks(g, rng, K, cfg.beta)
        else:
            bits[t] = (rng.random(K) < cfg.beta).astype(np.int8)
    if pairs is not None:
        pairs = np.asarray(pairs, dtype=int)
        if pairs.shape != (K, 2):
            raise ValueError(f"frozen pair sequence must have shape ({K}, 2)")
        firsts[:] = pairs[:, 0]
        seconds[:] = pairs[:, 1]

    support = sorted(set(X.ravel().tolist())) if algorithm == "A2" else None
    sup = np.array(support) if support is not None else None
    counts = np.zeros((K + 1, g.n, len(support))) if support is not None else None
    hit = np.full(trials, -1)
    mean = np.empty((K + 1, g.n))
    std = np.empty((K + 1, g.n))
    per_k = []
    rows = np.arange(trials)

    def record(k):
        mean[k] = X.mean(axis=0)
        std[k] = X.std(axis=0, ddof=1) if trials > 1 else 0.0
        entry = {"k": k, "mean": mean[k].tolist()}
        if algorithm == "A2":
            counts[k] = (X[:, :, None] == sup).sum(axis=0)
            entry["marginals"] = (counts[k] / trials).tolist()
        elif algorithm == "A1'":
            done = np.all(X == X[:, :1], axis=1)
            hit[(hit < 0) & done] = k
            entry["consensus_fraction"] = float(np.mean(hit >= 0))
        else:
            dis = np.linalg.norm(X - X.mean(axis=1, keepdims=True), axis=1)
            entry["disagreement"] = float(dis.mean())
        per_k.append(entry)

    record(0)
    for k in range(K):
        i, j, b = firsts[:, k], seconds[:, k], bits[:, k].astype(bool)
        xi, xj = X[rows, i], X[rows, j]
        if algorithm == "A1":
            X[rows, i] = X[rows, j] = 0.5 * (xi + xj)
        elif algorithm == "A1'":
            v = np.where(b, xi, xj)
            X[rows, i] = X[rows, j] = v
        else:
            X[rows, i] = np.where(b, xi, xj)
            X[rows, j] = np.where(b, xj, xi)
        record(k + 1)
    return MonteCarloStats(algorithm, cfg.seed, trials, K, per_k, support, counts,
                           hit if algorithm == "A1'" else None, mean, std)


def _quantum_mc(cfg, algorithm, rho0, trials, pairs):
    from .entropy import von_neumann

    g, K = cfg.graph, cfg.horizon
    ents = np.empty((trials, K + 1))
    for t in range(trials):
        rng = trial_rng(cfg.seed, t)
        first, second, b = draw_ticks(g, rng, K, cfg.beta)
        if pairs is not None:
            first, second = np.asarray(pairs)[:, 0], np.asarray(pairs)[:, 1]
        rho = np.array(rho0, dtype=complex)
        ents[t, 0] = von_neumann(rho)
        for k in range(K):
            pair = (int(first[k]), int(second[k]))
            rho = step_AQ1(rho, pair) if algorithm == "AQ1" else step_AQ2(rho, pair, int(b[k]))
            ents[t, k + 1] = von_neumann(rho)
    per_k = [{"k": k, "mean_entropy": float(ents[:, k].mean())} for k in range(K + 1)]
    return MonteCarloStats(algorithm, cfg.seed, trials, K, per_k, entropies=ents)


def run_monte_carlo(cfg: GossipConfig, algorithm: str, init, trials: int, pairs=None) -> MonteCarloStats:
    """Seeded Monte Carlo of one gossip algorithm.

    ``init`` is ``x0`` (an ``N`` vector, or a ``(trials, N)`` array of per-trial
    draws) for classical algorithms and ``rho0`` for quantum ones. Trial ``t``
    draws all of its randomness from :func:`trial_rng` ``(seed, t)``, so the
    result does not depend on trial ordering. ``pairs`` freezes the selected
    pair sequence for every trial; only ``b`` is then random.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if algorithm.startswith("AQ"):
        return _quantum_mc(cfg, algorithm, init, trials, pairs)
    return _classical_mc(cfg, algorithm, init, trials, pairs)


@dataclass
class ErgodicityReport:
    P: np.ndarray
    slem: float
    distances: np.ndarray  # ||P^k - 11^T/N||_max for k = 0..k_max
    C: float

    @property
    def symmetric(self) -> bool:
        return bool(np.allclose(self.P, self.P.T, atol=1e-12, rtol=0))

    @property
    def doubly_stochastic(self) -> bool:
        P = self.P
        return bool(np.all(P >= -1e-15)
                    and np.allclose(P.sum(axis=0), 1.0, atol=1e-12, rtol=0)
                    and np.allclose(P.sum(axis=1), 1.0, atol=1e-12, rtol=0))

    def bound_holds(self, slack: float = 1e-8) -> bool:
        k = np.arange(self.distances.size)
        return bool(np.all(self.distances <= self.C * self.slem ** k + slack))

    def tail_rate(self, floor: float = 1e-10) -> float:
        """Slope of log d_k over the ticks where d_k is still above round-off."""
        d = self.distances
        keep = np.flatnonzero(d > floor)
        keep = keep[keep >= 1]
        if keep.size < 2:
            return -math.inf
        lo = keep[keep.size // 2]
        hi = keep[-1]
        if hi == lo:
            return -math.inf
        return float((math.log(d[hi]) - math.log(d[lo])) / (hi - lo))

    @property
    def ergodic(self) -> bool:
        # For symmetric P every entry of P^k - J is bounded by slem^k, hence C <= 1.
        return (self.symmetric and self.doubly_stochastic and self.slem < 1.0
                and self.C <= 1.0 + 1e-8 and self.bound_holds())

    def as_dict(self) -> dict:
        return {"slem": self.slem, "C": self.C, "symmetric": self.symmetric,
                "doubly_stochastic": self.doubly_stochastic, "ergodic": self.ergodic,
                "distances": self.distances.tolist()}


def slem(P: np.ndarray) -> float:
    """Second-largest eigenvalue modulus."""
    mods = np.sort(np.abs(np.linalg.eigvals(P)))[::-1]
    return float(mods[1]) if mods.size > 1 else 0.0


def ergodicity_report(P: np.ndarray, k_max: int = 50) -> ErgodicityReport:
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    J = np.full((n, n), 1.0 / n)
    lam = slem(P)
    d = np.empty(k_max + 1)
    Pk = np.eye(n)
    for k in range(k_max + 1):
        d[k] = np.max(np.abs(Pk - J))
        Pk = Pk @ P
    # Fit C only where d_k is above round-off; the slack in bound_holds covers the rest.
    live = np.flatnonzero(d > 1e-13)
    if lam > 1e-12 and live.size:
        C = float(np.max(d[live] / lam ** live.astype(float)))
    else:
        C = float(d[0])
    return ErgodicityReport(P, lam, d, C)
