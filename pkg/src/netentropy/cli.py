"""Command-line experiment runner.

    netentropy run <config | manifest.json>
    netentropy verify
    netentropy graph-info <edgelist>

Exit codes: 0 success, 1 failed criterion or violated numerical invariant,
2 input error. ``NETENTROPY_OUTPUT_DIR`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, acceptance, classical, gossip, quantum
from .graph import (Graph, GraphError, build_graph, default_graph, laplacian, load_edge_list,
                    pair_distribution)
from .linalg import eig_sym

OUTPUT_ENV = "NETENTROPY_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


# key -> (parser, default); None default means required
_COMMON = {"kind": (str, None), "graph": (str, ""), "out": (str, "out")}
SCHEMAS = {
    "classical-flow": {"sigma2": (float, 1.0), "t_end": (float, 5.0), "dt": (float, 0.1),
                       "node": (int, 1)},
    "quantum-flow": {"ket": (str, "01+-"), "t_end": (float, 20.0), "step": (float, 0.01),
                     "dt": (float, 0.1)},
    "bernoulli-report": {"n": (_ints, [50, 100, 200, 400]), "p": (float, 0.5)},
    "gossip-mc": {"algorithm": (str, "A2"), "beta": (float, 0.5), "seed": (int, 0),
                  "horizon": (int, 50), "trials": (int, 10000), "x0": (_floats, []),
                  "ket": (str, "")},
    "gossip-exact": {"beta": (float, 0.5), "horizon": (int, 50), "x0": (_floats, [])},
    "ergodicity": {"beta": (float, 0.5), "horizon": (int, 50)},
}


@dataclass
class Experiment:
    kind: str
    params: dict
    graph: Graph
    out_dir: Path


def parse_config(text: str) -> dict:
    """Flat ``key = value`` text; ``#`` comments. Returns the raw string mapping plus line numbers."""
    raw, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key], lines[key] = value, lineno
    return {"values": raw, "lines": lines}


def resolve(parsed: dict) -> dict:
    raw, lines = parsed["values"], parsed["lines"]
    if "kind" not in raw:
        raise ConfigError("missing required key 'kind'")
    kind = raw["kind"]
    if kind not in SCHEMAS:
        raise ConfigError(f"line {lines['kind']}: unknown kind {kind!r}; choose from {sorted(SCHEMAS)}")
    schema = {**_COMMON, **SCHEMAS[kind]}
    params = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"line {lines[key]}: unknown key {key!r} for kind {kind}")
        try:
            params[key] = schema[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"line {lines[key]}: bad value for {key!r}: {exc}") from None
    for key, (_, default) in schema.items():
        params.setdefault(key, default)
    _validate(params, lines)
    return params


def _validate(p: dict, lines: dict):
    def bad(key, msg):
        where = f"line {lines[key]}: " if key in lines else ""
        raise ConfigError(f"{where}{key}: {msg}")

    kind = p["kind"]
    if "beta" in p and not 0 < p["beta"] < 1:
        bad("beta", "must lie strictly inside (0, 1)")
    if "sigma2" in p and p["sigma2"] <= 0:
        bad("sigma2", "must be > 0")
    for key in ("t_end", "dt", "step"):
        if key in p and p[key] <= 0:
            bad(key, "must be > 0")
    for key in ("horizon", "trials"):
        if key in p and p[key] < (1 if key == "trials" else 0):
            bad(key, "out of range")
    if kind == "bernoulli-report":
        if not 0 < p["p"] < 1:
            bad("p", "must lie strictly inside (0, 1)")
        if not p["n"] or min(p["n"]) < 1:
            bad("n", "needs one or more counts >= 1")
    if kind == "gossip-mc" and p["algorithm"] not in gossip.ALGORITHMS:
        bad("algorithm", f"choose from {', '.join(gossip.ALGORITHMS)}")
    if p.get("ket"):
        if set(p["ket"]) - set("01+-"):
            bad("ket", "use characters 0, 1, + and -")
    if p["graph"] and not Path(p["graph"]).exists():
        bad("graph", f"file {p['graph']!r} does not exist")


def load_experiment(path: str | Path) -> Experiment:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            manifest = json.loads(text)
            params = manifest["config"]
            graph = build_graph(manifest["graph"]["n"], manifest["graph"]["edges"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: not a valid manifest ({exc})") from None
        params = resolve({"values": {k: _unparse(v) for k, v in params.items()}, "lines": {}})
    else:
        params = resolve(parse_config(text))
        graph = load_edge_list(params["graph"]) if params["graph"] else default_graph()
    out = Path(os.environ.get(OUTPUT_ENV) or params["out"])
    return Experiment(params["kind"], params, graph, out)


def _unparse(v) -> str:
    if isinstance(v, list):
        return ",".join(repr(x) for x in v)
    return str(v) if not isinstance(v, float) else repr(v)


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return str(v) if v is classical.DEGENERATE else repr(float(v))


def _gnuplot(csv_name: str, ycols: list[str]) -> str:
    plots = ", ".join(f"'{csv_name}' using 1:{i + 2} with lines title '{c}'" for i, c in enumerate(ycols))
    return f"set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nplot {plots}\n"


def _run_classical(exp: Experiment) -> dict:
    p = exp.params
    if not 1 <= p["node"] <= exp.graph.n:
        raise ConfigError(f"node: must lie in 1..{exp.graph.n}")
    grid = classical.default_grid(p["t_end"], p["dt"])
    tr = classical.differential_entropy_trajectory(exp.graph, p["sigma2"], grid, node=p["node"] - 1)
    if not tr.is_non_increasing(1e-9):
        raise InvariantViolation("differential entropy must be non-increasing")
    rows = [(repr(float(t)), _fmt(h), _fmt(m)) for t, h, m in zip(tr.times, tr.joint, tr.marginal)]
    rows.append(("inf", "-inf", _fmt(classical.limit_marginal_entropy(exp.graph.n, p["sigma2"]))))
    return {"classical_flow.csv": _csv(["t", "h_joint_bits", "h_marginal_bits"], rows),
            "classical_flow.gp": _gnuplot("classical_flow.csv", ["h_joint_bits", "h_marginal_bits"])}


def _run_quantum(exp: Experiment) -> dict:
    p = exp.params
    rho0 = quantum.qstate_from_kets(p["ket"])
    if len(p["ket"]) != exp.graph.n:
        raise ConfigError(f"ket: needs {exp.graph.n} qubits for this graph, got {len(p['ket'])}")
    grid = quantum.step_grid(p["t_end"], p["dt"])
    try:
        tr = quantum.integrate_quantum(exp.graph, rho0, grid, step=p["step"], keep_states=False)
    except quantum.StepSizeError as exc:
        raise InvariantViolation(f"density matrix drift: {exc}") from None
    if not tr.is_non_decreasing(1e-8):
        raise InvariantViolation("von Neumann entropy must be non-decreasing")
    rows = [(repr(float(t)), repr(float(s)), repr(float(d)))
            for t, s, d in zip(tr.times, tr.entropies, tr.drifts)]
    out = {"quantum_flow.csv": _csv(["t", "S_bits", "trace_drift"], rows),
           "quantum_flow.gp": _gnuplot("quantum_flow.csv", ["S_bits"])}
    if exp.graph.n <= quantum.MAX_SYMMETRIZE_QUBITS:
        from .entropy import von_neumann
        lim = quantum.symmetrized_limit(rho0)
        out["quantum_limit.json"] = json.dumps({
            "S_limit_bits": von_neumann(lim),
            "distance_to_limit": float(np.max(np.abs(tr.states[-1] - lim))),
        }, indent=2) + "\n"
    return out


def _run_bernoulli(exp: Experiment) -> dict:
    reports = [classical.bernoulli_limit_report(n, exp.params["p"]) for n in exp.params["n"]]
    rows = [(r.n, repr(r.p), repr(r.H0), repr(r.H_inf_exact), repr(r.H_inf_asymptotic), int(r.decreased))
            for r in reports]
    return {"bernoulli_report.csv": _csv(["n", "p", "H0_bits", "H_inf_exact_bits",
                                          "H_inf_asymptotic_bits", "decreased"], rows)}


def _initial_values(p: dict, n: int) -> np.ndarray:
    if not p["x0"]:
        return np.arange(1, n + 1, dtype=float)
    if len(p["x0"]) != n:
        raise ConfigError(f"x0: needs {n} values for this graph, got {len(p['x0'])}")
    return np.array(p["x0"])


def _run_gossip_mc(exp: Experiment) -> dict:
    p = exp.params
    cfg = gossip.GossipConfig(exp.graph, p["beta"], p["seed"], p["horizon"])
    algo = p["algorithm"]
    if algo.startswith("AQ"):
        ket = p["ket"] or "01+-"[:exp.graph.n].ljust(exp.graph.n, "0")
        if len(ket) != exp.graph.n:
            raise ConfigError(f"ket: needs {exp.graph.n} qubits for this graph")
        init = quantum.qstate_from_kets(ket)
    else:
        init = _initial_values(p, exp.graph.n)
    stats = gossip.run_monte_carlo(cfg, algo, init, p["trials"])
    out = {"gossip_mc.json": json.dumps(stats.as_dict(), indent=1) + "\n"}
    if stats.counts is not None:
        for i in range(exp.graph.n):
            rows = [[k] + [int(c) for c in stats.counts[k, i]] for k in range(cfg.horizon + 1)]
            out[f"histogram_node{i + 1}.csv"] = _csv(["k"] + [repr(v) for v in stats.support], rows)
    if algo == "AQ1":
        if np.any(np.diff(stats.entropies, axis=1) < -1e-9):
            raise InvariantViolation("[AQ1] entropy must be non-decreasing along every path")
    return out


def _run_gossip_exact(exp: Experiment) -> dict:
    p = exp.params
    cfg = gossip.GossipConfig(exp.graph, p["beta"], horizon=p["horizon"])
    x0 = _initial_values(p, exp.graph.n)
    P = gossip.single_particle_matrix(cfg)
    f = gossip.JointPmf.from_vectors(exp.graph, [x0])
    values = f.values()
    m0 = gossip.point_marginals(x0, values)
    header = ["k", "joint_entropy_bits", "max_gap"] + [
        f"p{i + 1}[{v!r}]" for i in range(exp.graph.n) for v in values]
    rows, prev = [], -np.inf
    for k in range(cfg.horizon + 1):
        mk = gossip.marginal_evolution(P, m0, k)
        gap = float(np.max(np.abs(f.marginals(values) - mk)))
        if gap > 1e-12:
            raise InvariantViolation(f"joint-pmf marginals disagree with P^k marginals at k={k} ({gap:.1e})")
        h = f.entropy()
        if h < prev - 1e-12:
            raise InvariantViolation("joint pmf entropy must be non-decreasing")
        prev = h
        rows.append([k, repr(h), repr(gap)] + [repr(float(v)) for v in mk.ravel()])
        f = gossip.joint_pmf_operator_step(f, cfg)
    return {"gossip_exact.csv": _csv(header, rows)}


def _run_ergodicity(exp: Experiment) -> dict:
    p = exp.params
    cfg = gossip.GossipConfig(exp.graph, p["beta"], horizon=p["horizon"])
    rep = gossip.ergodicity_report(gossip.single_particle_matrix(cfg), p["horizon"])
    if not rep.ergodic:
        raise InvariantViolation("single-particle chain is not ergodic")
    return {"ergodicity.json": json.dumps({**rep.as_dict(), "P": rep.P.tolist()}, indent=1) + "\n"}


RUNNERS = {
    "classical-flow": _run_classical,
    "quantum-flow": _run_quantum,
    "bernoulli-report": _run_bernoulli,
    "gossip-mc": _run_gossip_mc,
    "gossip-exact": _run_gossip_exact,
    "ergodicity": _run_ergodicity,
}


def versions() -> dict:
    return {"netentropy": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_experiment(exp: Experiment) -> list[Path]:
    files = RUNNERS[exp.kind](exp)
    manifest = {
        "kind": exp.kind,
        "config": {k: v for k, v in exp.params.items() if k not in ("out",)},
        "graph": {"n": exp.graph.n, "edges": exp.graph.edges_one_based()},
        "outputs": sorted(files),
        "versions": versions(),
    }
    manifest["config"]["graph"] = ""
    files["manifest.json"] = json.dumps(manifest, indent=2) + "\n"
    written = []
    for name, text in files.items():
        path = exp.out_dir / name
        atomic_write(path, text)
        written.append(path)
    return written


def cmd_run(args) -> int:
    try:
        exp = load_experiment(args.config)
        paths = run_experiment(exp)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = []
    for fn in acceptance.CRITERIA:
        r = fn(perturb=True) if args.perturb_p and fn is acceptance.criterion_5 else fn()
        print(r.line(), flush=True)
        results.append(r)
    n_ok = sum(r.ok for r in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    return EXIT_OK if n_ok == len(results) else EXIT_FAIL


def cmd_graph_info(args) -> int:
    try:
        g = load_edge_list(args.edgelist)
    except (GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    lam = eig_sym(laplacian(g))[0]
    print(f"nodes: {g.n}")
    print(f"edges: {' '.join(f'{i}-{j}' for i, j in g.edges_one_based())}")
    print(f"degrees: {' '.join(str(d) for d in g.degrees)}")
    print(f"connected: {g.is_connected}")
    print(f"laplacian eigenvalues: {' '.join(f'{x:.6g}' for x in lam)}")
    if g.is_connected and g.edges:
        print(f"fiedler eigenvalue: {lam[1]:.6g}")
        for (i, j), q in pair_distribution(g, exact=True).items():
            print(f"q[{i + 1},{j + 1}] = {q}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netentropy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a config file or manifest")
    run.add_argument("config")
    run.set_defaults(func=cmd_run)
    verify = sub.add_parser("verify", help="run the acceptance criteria")
    verify.add_argument("--perturb-p", action="store_true", help=argparse.SUPPRESS)
    verify.set_defaults(func=cmd_verify)
    info = sub.add_parser("graph-info", help="summarize an edge-list file")
    info.add_argument("edgelist")
    info.set_defaults(func=cmd_graph_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
