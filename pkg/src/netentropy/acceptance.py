"""The exit criteria of the package, runnable from the CLI (``verify``) and pytest.

Each ``criterion_*`` function returns a :class:`CriterionResult`; tolerances
are fixed here and nowhere else.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import classical, entropy, gossip, quantum
from .graph import complete_graph, cycle_graph, default_graph, path_graph, random_connected_graph, laplacian
from .linalg import LOG2E


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    @property
    def within_budget(self) -> bool:
        return self.seconds < self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.number}. {self.name} ({self.seconds:.2f}s / {self.budget:g}s): {self.detail}"


def _timed(number, name, budget, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0, budget)


def criterion_1(seed: int = 20240611) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        grid = classical.default_grid(5.0, 0.1)
        worst_step, worst_err, ok = -math.inf, 0.0, True
        for _ in range(20):
            g = random_connected_graph(int(rng.integers(2, 9)), rng)
            for sigma2 in (0.5, 1.0, 4.0):
                tr = classical.differential_entropy_trajectory(g, sigma2, grid)
                steps = tr.steps()
                worst_step = max(worst_step, float(steps.max()))
                err = tr.max_closed_form_error()
                worst_err = max(worst_err, err)
                h0 = 0.5 * g.n * math.log2(2 * math.pi * math.e * sigma2)
                slope = -np.trace(laplacian(g)) * LOG2E * 0.1
                ok &= bool(np.all(steps <= 1e-9)) and err <= 1e-8
                ok &= abs(tr.joint[0] - h0) <= 1e-8
                ok &= bool(np.allclose(steps, slope, atol=1e-8, rtol=0))
        return ok, f"max step {worst_step:.3e} (<= 1e-9), max |h - closed form| {worst_err:.2e} (<= 1e-8)"
    return _timed(1, "differential entropy non-increasing, matches closed form", 5, body)


def criterion_2() -> CriterionResult:
    def body():
        ok, parts = True, []
        for p in (0.3, 0.5):
            ns = [50, 100, 200, 400]
            diffs = [abs(entropy.binomial_entropy_exact(n, p) - entropy.binomial_entropy_asymptotic(n, p))
                     for n in ns]
            scaled = [n * d for n, d in zip(ns, diffs)]
            ok &= all(b < a for a, b in zip(diffs, diffs[1:]))
            ok &= all(b <= 1.1 * a for a, b in zip(scaled, scaled[1:]))
            for n in ns:
                ok &= classical.bernoulli_limit_report(n, p).decreased
            parts.append(f"p={p}: N*|diff| " + ", ".join(f"{s:.4g}" for s in scaled))
        return ok, "; ".join(parts)
    return _timed(2, "binomial limit entropy asymptotics", 2, body)


def criterion_3() -> CriterionResult:
    def body():
        g = default_graph()
        rho0 = quantum.qstate_from_kets("01+-")
        traj = quantum.integrate_quantum(g, rho0, quantum.step_grid(20.0, 0.01), step=0.01)
        min_step = float(np.diff(traj.entropies).min())
        drift = float(traj.drifts.max())
        dist = float(np.max(np.abs(traj.states[-1] - quantum.symmetrized_limit(rho0))))
        a = traj.is_non_decreasing(1e-8)
        b = drift < 1e-9
        c = dist < 1e-4
        oracle_err = 0.0
        for graph, ket in ((complete_graph(2), "0+"), (path_graph(3), "01+"), (complete_graph(3), "+0-")):
            r0 = quantum.qstate_from_kets(ket)
            marks = [0.0, 0.25, 0.5, 1.0, 2.0, 5.0]
            tr = quantum.integrate_quantum(graph, r0, marks, step=0.01)
            for t, rho in zip(tr.times, tr.states):
                oracle_err = max(oracle_err, float(np.max(np.abs(rho - quantum.exact_evolution(graph, r0, t)))))
        d = oracle_err < 1e-6
        return a and b and c and d, (f"(a) min dS {min_step:.2e} (b) max drift {drift:.1e} "
                                     f"(c) |rho(20) - limit| {dist:.1e} (d) RK4 vs expm {oracle_err:.1e}")
    return _timed(3, "von Neumann entropy non-decreasing, consensus limit", 60, body)


def criterion_4() -> CriterionResult:
    def body():
        cases = [(complete_graph(2), "0+"), (path_graph(3), "01+"), (complete_graph(3), "01-")]
        ok, worst_res, worst_sum = True, 0.0, 0.0
        for g, ket in cases:
            rho0 = quantum.qstate_from_kets(ket)
            for s in (0.0, 1.0):
                for eps in (0.1, 1.0):
                    dec = quantum.orbit_decomposition_check(g, rho0, s, eps)
                    worst_res = max(worst_res, dec.residual)
                    worst_sum = max(worst_sum, abs(dec.weight_sum - 1.0))
                    ok &= dec.certifies(1e-6, 1e-8)
        return ok, f"max residual {worst_res:.1e} (< 1e-6), max |sum w - 1| {worst_sum:.1e} (<= 1e-8)"
    return _timed(4, "convex decomposition over the permutation orbit", 30, body)


def criterion_5(perturb: bool = False) -> CriterionResult:
    def body():
        ok, parts = True, []
        for label, g in (("C3", cycle_graph(3)), ("default", default_graph())):
            cfg = gossip.GossipConfig(g, beta=0.5)
            P = gossip.single_particle_matrix(cfg)
            if perturb:
                P = P.copy()
                P[0, 1] += 1e-3
                P[0, 0] -= 1e-3
            rep = gossip.ergodicity_report(P, 50)
            ok &= rep.ergodic
            gap = 0.0
            for x0 in (np.arange(1, g.n + 1), np.array([0, 0, 1, 1][:g.n] if g.n == 4 else [0, 1, 1])):
                f = gossip.JointPmf.from_vectors(g, [x0])
                values = f.values()
                m0 = gossip.point_marginals(x0, values)
                for k in range(51):
                    mk = gossip.marginal_evolution(P, m0, k)
                    gap = max(gap, float(np.max(np.abs(f.marginals(values) - mk))))
                    f = gossip.joint_pmf_operator_step(f, cfg)
            ok &= gap <= 1e-12
            parts.append(f"{label}: slem {rep.slem:.4f}, C {rep.C:.3f}, ergodic {rep.ergodic}, "
                         f"joint vs P^k {gap:.1e}")
        return ok, "; ".join(parts)
    return _timed(5, "single-particle chain ergodicity, exact marginals", 10, body)


def criterion_6(trials: int = 100_000, k: int = 50, seed: int = 6) -> CriterionResult:
    def body():
        g = default_graph()
        cfg = gossip.GossipConfig(g, beta=0.5, seed=seed, horizon=k)
        x0 = np.arange(1, g.n + 1)
        stats = gossip.run_monte_carlo(cfg, "A2", x0, trials)
        emp = stats.marginals()[k]
        expect = gossip.marginal_evolution(gossip.single_particle_matrix(cfg),
                                           gossip.point_marginals(x0, stats.support), k)
        sigma = np.sqrt(expect * (1 - expect) / trials)
        z = np.abs(emp - expect)
        ok = bool(np.all(z <= 3 * sigma + 1e-15))
        worst = float(np.max(z / np.where(sigma > 0, sigma, np.inf)))
        return ok, f"{trials} trials, k={k}: worst |emp - exact| = {worst:.2f} sigma (<= 3)"
    return _timed(6, "[A2] Monte Carlo marginals match P^k mixture", 60, body)


def criterion_7(trials: int = 100_000, seed: int = 7) -> CriterionResult:
    def body():
        g = default_graph()
        K = 20
        cfg = gossip.GossipConfig(g, beta=0.5, seed=seed, horizon=K)
        first, second, _ = gossip.draw_ticks(g, np.random.default_rng(seed), K, 0.5)
        pairs = np.column_stack([first, second])
        x0 = np.array([1.0, -2.0, 0.5, 3.0])
        stats = gossip.run_monte_carlo(cfg, "A2", x0, trials, pairs=pairs)
        a1 = [x0]
        for i, j in pairs:
            a1.append(gossip.step_A1(a1[-1], (i, j)))
        a1 = np.array(a1)
        se = stats.std / math.sqrt(trials)
        dev = np.abs(stats.mean - a1)
        ok_a = bool(np.all(dev <= 3 * se + 1e-12))
        worst = float(np.max(np.where(se > 0, dev / np.where(se > 0, se, 1), 0.0)))

        gap = 0.0
        rng = np.random.default_rng(seed + 1)
        for graph in (complete_graph(2), path_graph(3), complete_graph(3)):
            gcfg = gossip.GossipConfig(graph, beta=0.5)
            q = gossip.pair_distribution(graph)
            swaps = {e: quantum.swap_operator(graph.n, e) for e in graph.edges}
            for bits in np.ndindex(*(2,) * graph.n):
                f = gossip.JointPmf.from_vectors(graph, [bits])
                rows = [quantum.basis_index(v) for v in f.support]
                rho = quantum.basis_density(bits)
                rho_avg = rho.copy()
                f_avg = f
                for _ in range(10):
                    e = graph.edges[int(rng.integers(len(graph.edges)))]
                    f = gossip.joint_pmf_operator_step(f, gcfg, pair=e)
                    rho = gossip.step_AQ1(rho, e)
                    f_avg = gossip.joint_pmf_operator_step(f_avg, gcfg)
                    rho_avg = sum(qe * (0.5 * rho_avg + 0.5 * swaps[ee].conjugate(rho_avg))
                                  for ee, qe in q.items())
                    for pmf, r in ((f, rho), (f_avg, rho_avg)):
                        diag = np.real(np.diag(r))
                        full = np.zeros_like(diag)
                        full[rows] = pmf.probs
                        off = r - np.diag(np.diag(r))
                        gap = max(gap, float(np.max(np.abs(diag - full))), float(np.max(np.abs(off))))
        ok_b = gap <= 1e-12
        return ok_a and ok_b, (f"(a) worst mean deviation {worst:.2f} sigma (<= 3) over {K + 1}x{g.n} entries; "
                               f"(b) joint pmf vs [AQ1] diagonal {gap:.1e} (<= 1e-12)")
    return _timed(7, "expectation and physical equivalence of gossip schemes", 60, body)


def criterion_8(trials: int = 10_000, seed: int = 8) -> CriterionResult:
    def body():
        g = default_graph()
        cfg = gossip.GossipConfig(g, beta=0.5, seed=seed, horizon=200)
        stats = gossip.run_monte_carlo(cfg, "A1'", np.arange(1, g.n + 1), trials)
        cdf = np.array([e["consensus_fraction"] for e in stats.per_k])
        frac = float(cdf[-1])
        ok = frac >= 0.99 and bool(np.all(np.diff(cdf) >= 0)) and cdf[0] == 0.0
        return ok, f"consensus by k=200 in {frac:.4%} of runs (>= 99%), CDF monotone {bool(np.all(np.diff(cdf) >= 0))}"
    return _timed(8, "[A1'] finite-time consensus", 10, body)


def _random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def criterion_9(seed: int = 9, paths: int = 10, K: int = 100) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        spec_gap, s_gap = 0.0, 0.0
        for g in (complete_graph(2), path_graph(3), complete_graph(3)):
            for _ in range(paths):
                rho = _random_density(2 ** g.n, rng)
                w0 = np.linalg.eigvalsh(rho)
                s0 = entropy.von_neumann(rho)
                first, second, b = gossip.draw_ticks(g, rng, K, 0.5)
                for k in range(K):
                    rho = gossip.step_AQ2(rho, (first[k], second[k]), b[k])
                    spec_gap = max(spec_gap, float(np.max(np.abs(np.linalg.eigvalsh(rho) - w0))))
                    s_gap = max(s_gap, abs(entropy.von_neumann(rho) - s0))
        ok_aq2 = spec_gap <= 1e-10 and s_gap <= 1e-9
        g = path_graph(3)
        rho = quantum.qstate_from_kets("01+")
        ents = [entropy.von_neumann(rho)]
        first, second, _ = gossip.draw_ticks(g, rng, K, 0.5)
        for k in range(K):
            rho = gossip.step_AQ1(rho, (first[k], second[k]))
            ents.append(entropy.von_neumann(rho))
        ents = np.array(ents)
        ok_aq1 = bool(np.all(np.diff(ents) >= -1e-10)) and ents[-1] > ents[0] + 0.5
        return ok_aq2 and ok_aq1, (f"[AQ2] spectrum drift {spec_gap:.1e}, entropy drift {s_gap:.1e}; "
                                   f"[AQ1] S {ents[0]:.3f} -> {ents[-1]:.3f}")
    return _timed(9, "[AQ2] spectrum invariance vs [AQ1] entropy growth", 10, body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(perturb_p: bool = False) -> list[CriterionResult]:
    out = []
    for fn in CRITERIA:
        out.append(fn(perturb=True) if perturb_p and fn is criterion_5 else fn())
    return out
