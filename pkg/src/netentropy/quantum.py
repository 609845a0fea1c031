"""Continuous-time quantum consensus over qubit networks.

    d rho/dt = sum_{{j,k} in E} (U_jk rho U_jk^dagger - rho)

Qubit ``q`` (0-based) is the ``q``-th tensor factor, i.e. the most significant
bit of a computational-basis index belongs to qubit 0. Permutation operators
are kept as index arrays on the basis; conjugating a density matrix is then a
fancy-indexing copy, and dense unitaries are built only on request.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.optimize import nnls

from .entropy import TRACE_TOL, _plogp_sum
from .graph import Graph
from .linalg import NEG_TOL, clip_spectrum, eigvals_hermitian

MAX_SYMMETRIZE_QUBITS = 6
MAX_ORBIT_QUBITS = 4
DRIFT_BOUND = 1e-8

_KETS = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2),
    "-": np.array([1.0, -1.0], dtype=complex) / math.sqrt(2),
}


class StepSizeError(RuntimeError):
    """RK4 step lost trace, Hermiticity or positivity beyond the allowed drift."""


@dataclass(frozen=True)
class PermutationOperator:
    """Unitary that moves the content of qubit ``q`` to position ``perm[q]``.

    ``index[b]`` is the basis index that basis state ``b`` is sent to. These
    compose as a representation: ``op(p) @ op(s) == op(p o s)``.
    """

    n: int
    perm: tuple[int, ...]

    @cached_property
    def index(self) -> np.ndarray:
        n = self.n
        b = np.arange(2 ** n)
        out = np.zeros_like(b)
        for q in range(n):
            bit = (b >> (n - 1 - q)) & 1
            out |= bit << (n - 1 - self.perm[q])
        return out

    @cached_property
    def inverse_index(self) -> np.ndarray:
        return np.argsort(self.index)

    @property
    def matrix(self) -> np.ndarray:
        d = 2 ** self.n
        U = np.zeros((d, d))
        U[self.index, np.arange(d)] = 1.0
        return U

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        """``U rho U^dagger``."""
        inv = self.inverse_index
        return rho[np.ix_(inv, inv)]

    def compose(self, other: PermutationOperator) -> PermutationOperator:
        """Operator for ``self.perm o other.perm`` (apply ``other`` first)."""
        return PermutationOperator(self.n, tuple(self.perm[other.perm[q]] for q in range(self.n)))


def transposition(n: int, j: int, k: int) -> tuple[int, ...]:
    perm = list(range(n))
    perm[j], perm[k] = k, j
    return tuple(perm)


def swap_operator(n_qubits: int, pair) -> PermutationOperator:
    """Swap of qubits ``pair = (j, k)``, 0-based."""
    j, k = sorted(int(x) for x in pair)
    if not (0 <= j < k < n_qubits):
        raise ValueError(f"swap pair {tuple(pair)} invalid for {n_qubits} qubits")
    return PermutationOperator(n_qubits, transposition(n_qubits, j, k))


def all_permutations(n: int) -> list[PermutationOperator]:
    return [PermutationOperator(n, p) for p in itertools.permutations(range(n))]


def basis_index(bits) -> int:
    """Basis index of ``|b_0 b_1 ... b_{N-1}>``."""
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def ket_from_string(kets) -> np.ndarray:
    if len(kets) == 0:
        raise ValueError("empty ket specification")
    psi = np.ones(1, dtype=complex)
    for ch in kets:
        try:
            psi = np.kron(psi, _KETS[ch])
        except KeyError:
            raise ValueError(f"unknown single-qubit state {ch!r}; use 0, 1, + or -") from None
    return psi


def qstate_from_kets(kets) -> np.ndarray:
    """Pure product state from a string (or list) over ``0 1 + -``, e.g. ``"01+-"``."""
    psi = ket_from_string(kets)
    return np.outer(psi, psi.conj())


def basis_density(bits) -> np.ndarray:
    d = 2 ** len(bits)
    rho = np.zeros((d, d), dtype=complex)
    i = basis_index(bits)
    rho[i, i] = 1.0
    return rho


def n_qubits_of(rho: np.ndarray) -> int:
    d = rho.shape[0]
    n = d.bit_length() - 1
    if rho.shape != (d, d) or 2 ** n != d:
        raise ValueError(f"density matrix shape {rho.shape} is not 2^N x 2^N")
    return n


def check_density_matrix(rho, tol: float = TRACE_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n_qubits_of(rho)
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"trace is {np.trace(rho)}, not 1")
    clip_spectrum(eigvals_hermitian(rho))
    return rho


def edge_swaps(g: Graph) -> list[PermutationOperator]:
    return [swap_operator(g.n, e) for e in g.edges]


def consensus_rhs(swaps, rho: np.ndarray) -> np.ndarray:
    out = -len(swaps) * rho
    for U in swaps:
        out += U.conjugate(rho)
    return out


def rk4_step(swaps, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = consensus_rhs(swaps, rho)
    k2 = consensus_rhs(swaps, rho + 0.5 * h * k1)
    k3 = consensus_rhs(swaps, rho + 0.5 * h * k2)
    k4 = consensus_rhs(swaps, rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class QuantumTrajectory:
    times: np.ndarray
    states: list
    entropies: np.ndarray
    drifts: np.ndarray  # largest pre-correction drift over the steps ending at each sample
    min_eigenvalues: np.ndarray

    def is_non_decreasing(self, slack: float = 1e-8) -> bool:
        return bool(np.all(np.diff(self.entropies) >= -slack))


def integrate_quantum(g: Graph, rho0, grid, step: float = 0.01,
                      keep_states: bool = True) -> QuantumTrajectory:
    """Fixed-step RK4 integration of the consensus master equation.

    Between consecutive grid times the interval is split into
    ``ceil(dt/step)`` equal steps. After every step the state is Hermitized and
    trace-renormalized; the correction applied must stay below ``DRIFT_BOUND``
    and the spectrum must stay non-negative, otherwise :class:`StepSizeError`
    is raised.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    rho = check_density_matrix(rho0).copy()
    if n_qubits_of(rho) != g.n:
        raise ValueError(f"state has {n_qubits_of(rho)} qubits, graph has {g.n} nodes")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be non-empty, non-negative and strictly increasing")
    swaps = edge_swaps(g)

    # Advance from t=0 to the first sample silently.
    times, states, ents, drifts, mins = [], [], [], [], []
    t_prev = 0.0
    for t in grid:
        drift = 0.0
        span = t - t_prev
        n_steps = int(math.ceil(span / step - 1e-9)) if span > 0 else 0
        h = span / n_steps if n_steps else 0.0
        for _ in range(n_steps):
            rho = rk4_step(swaps, rho, h)
            herm = float(np.max(np.abs(rho - rho.conj().T)))
            tr = np.trace(rho).real
            drift = max(drift, abs(tr - 1.0), herm)
            if drift >= DRIFT_BOUND:
                raise StepSizeError(
                    f"drift {drift:.2e} exceeds {DRIFT_BOUND:g} at t={t_prev:g}; use a smaller step than {h:g}")
            rho = 0.5 * (rho + rho.conj().T)
            rho /= np.trace(rho).real
        w = np.linalg.eigvalsh(rho)
        if w[0] < -NEG_TOL:
            raise StepSizeError(
                f"state lost positivity (eigenvalue {w[0]:.2e}) at t={t:g}; use a smaller step than {step:g}")
        times.append(float(t))
        ents.append(max(0.0, _plogp_sum(clip_spectrum(w))))
        drifts.append(drift)
        mins.append(float(w[0]))
        if keep_states:
            states.append(rho.copy())
        t_prev = t
    if not keep_states:
        states.append(rho.copy())
    return QuantumTrajectory(np.array(times), states, np.array(ents), np.array(drifts), np.array(mins))


def step_grid(t_end: float, step: float = 0.01) -> np.ndarray:
    n = int(round(t_end / step))
    return np.linspace(0.0, n * step, n + 1)


def superoperator(g: Graph) -> np.ndarray:
    """Generator of the master equation acting on row-major ``vec(rho)``."""
    d = 2 ** g.n
    G = -len(g.edges) * np.eye(d * d)
    for U in edge_swaps(g):
        M = U.matrix
        G += np.kron(M, M)  # real permutation matrix: conj(U) == U
    return G


def exact_evolution(g: Graph, rho0, t: float) -> np.ndarray:
    """rho(t) via the matrix exponential of the vectorized generator (small N only)."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    vec = scipy.linalg.expm(t * superoperator(g)) @ rho0.reshape(-1)
    return vec.reshape(d, d)


def symmetrized_limit(rho0, n_qubits: int | None = None) -> np.ndarray:
    """Average of ``U_pi rho0 U_pi^dagger`` over the full symmetric group."""
    rho0 = np.asarray(rho0, dtype=complex)
    n = n_qubits_of(rho0) if n_qubits is None else n_qubits
    if n > MAX_SYMMETRIZE_QUBITS:
        raise ValueError(f"symmetrization is capped at {MAX_SYMMETRIZE_QUBITS} qubits, got {n}")
    acc = np.zeros_like(rho0)
    for U in all_permutations(n):
        acc += U.conjugate(rho0)
    return acc / math.factorial(n)


def interchange_weights(g: Graph, t: float) -> dict[tuple[int, ...], float]:
    """Law at time ``t`` of the random walk on permutations driven by edge swaps at rate 1.

    ``rho(s + t) = sum_pi w[pi] U_pi rho(s) U_pi^dagger`` with these weights,
    which gives one explicit convex decomposition of the flow.
    """
    if g.n > MAX_ORBIT_QUBITS:
        raise ValueError(f"permutation weights are capped at {MAX_ORBIT_QUBITS} nodes")
    perms = list(itertools.permutations(range(g.n)))
    pos = {p: i for i, p in enumerate(perms)}
    Q = -len(g.edges) * np.eye(len(perms))
    for j, k in g.edges:
        tau = transposition(g.n, j, k)
        for p in perms:
            Q[pos[p], pos[tuple(tau[p[q]] for q in range(g.n))]] += 1.0
    m = scipy.linalg.expm(t * Q)[:, pos[tuple(range(g.n))]]
    return {p: float(m[pos[p]]) for p in perms}


@dataclass
class ConvexDecomposition:
    weights: dict
    residual: float
    rho_s: np.ndarray
    rho_target: np.ndarray

    @property
    def weight_sum(self) -> float:
        return float(sum(self.weights.values()))

    def certifies(self, residual_bound: float = 1e-6, sum_tol: float = 1e-8) -> bool:
        w = np.array(list(self.weights.values()))
        return (self.residual < residual_bound and bool(np.all((w >= 0) & (w <= 1)))
                and abs(self.weight_sum - 1.0) <= sum_tol)


def convex_decomposition(rho_s, rho_target) -> ConvexDecomposition:
    """Non-negative least squares fit of ``rho_target`` over the permutation orbit of ``rho_s``."""
    rho_s = np.asarray(rho_s, dtype=complex)
    n = n_qubits_of(rho_s)
    if n > MAX_ORBIT_QUBITS:
        raise ValueError(f"orbit decomposition is capped at {MAX_ORBIT_QUBITS} qubits, got {n}")
    ops = all_permutations(n)
    orbit = [U.conjugate(rho_s).reshape(-1) for U in ops]
    A = np.array(orbit).T
    A = np.vstack([A.real, A.imag, np.ones((1, len(ops)))])
    b = np.asarray(rho_target, dtype=complex).reshape(-1)
    b = np.concatenate([b.real, b.imag, [1.0]])
    w, _ = nnls(A, b, maxiter=50 * len(ops))
    fit = sum(wi * U.conjugate(rho_s) for wi, U in zip(w, ops))
    residual = float(np.max(np.abs(fit - rho_target)))
    return ConvexDecomposition({U.perm: float(wi) for U, wi in zip(ops, w)}, residual, rho_s, rho_target)


def orbit_decomposition_check(g: Graph, rho0, s: float, eps: float,
                               step: float = 0.01) -> ConvexDecomposition:
    """Integrate to ``s`` and ``s + eps`` and express rho(s+eps) in the orbit hull of rho(s)."""
    if s < 0 or eps < 0:
        raise ValueError("s and eps must be >= 0")
    marks = sorted({0.0, s, s + eps})
    traj = integrate_quantum(g, rho0, marks, step=step)
    at = dict(zip(traj.times, traj.states))
    return convex_decomposition(at[float(s)], at[float(s + eps)])
