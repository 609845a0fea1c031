"""Undirected graphs, Laplacians and the gossip pair-selection law.

Node labels are 1-based wherever they cross an I/O boundary (edge-list files,
reports) and 0-based everywhere inside the library.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Invalid graph description."""


class GraphParseError(GraphError):
    """Edge-list text that cannot be parsed; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on nodes 0..n-1.

    Build instances with :func:`build_graph`; the constructor assumes the edge
    tuple is already validated, normalized to ``(i, j)`` with ``i < j`` and sorted.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=int)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    @property
    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n

    def edges_one_based(self) -> list[tuple[int, int]]:
        return [(i + 1, j + 1) for i, j in self.edges]


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Validate a 1-based edge list and return a :class:`Graph`.

    Raises :class:`GraphError` naming the offending pair for out-of-range
    nodes, self-loops and duplicate edges.
    """
    if n < 1:
        raise GraphError(f"node count must be >= 1, got {n}")
    seen: set[tuple[int, int]] = set()
    normalized = []
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"edge {tuple(pair)} is not a pair")
        a, b = int(pair[0]), int(pair[1])
        if not (1 <= a <= n and 1 <= b <= n):
            raise GraphError(f"edge {{{a},{b}}} has a node outside 1..{n}")
        if a == b:
            raise GraphError(f"edge {{{a},{b}}} is a self-loop")
        key = (min(a, b) - 1, max(a, b) - 1)
        if key in seen:
            raise GraphError(f"edge {{{a},{b}}} is a duplicate")
        seen.add(key)
        normalized.append(key)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j in normalized:
        nbrs[i].append(j)
        nbrs[j].append(i)
    return Graph(n, tuple(sorted(normalized)), tuple(tuple(sorted(nb)) for nb in nbrs))


# Default 4-node interaction graph for every preset experiment: a 4-cycle plus
# the chord 1-3. Any other graph can be supplied as an edge-list file.
DEFAULT_EDGES = ((1, 2), (2, 3), (3, 4), (1, 4), (1, 3))


def default_graph() -> Graph:
    return build_graph(4, DEFAULT_EDGES)


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 nodes")
    return build_graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def star_graph(leaves: int) -> Graph:
    """Star K_{1,leaves} with centre node 1."""
    return build_graph(leaves + 1, [(1, j) for j in range(2, leaves + 2)])


def random_connected_graph(n: int, rng: np.random.Generator, extra_prob: float = 0.3) -> Graph:
    """Random spanning tree plus independent extra edges with probability ``extra_prob``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(k)]
        a, b = sorted((int(order[k]), int(parent)))
        edges.add((a, b))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in edges and rng.random() < extra_prob:
                edges.add((a, b))
    return build_graph(n, [(a + 1, b + 1) for a, b in sorted(edges)])


def laplacian(g: Graph) -> np.ndarray:
    """Degree matrix minus adjacency matrix."""
    L = np.zeros((g.n, g.n))
    for i, j in g.edges:
        L[i, j] = L[j, i] = -1.0
        L[i, i] += 1.0
        L[j, j] += 1.0
    return L


def pair_distribution(g: Graph, exact: bool = False) -> dict[tuple[int, int], float]:
    """Probability that each edge is the pair chosen by one gossip tick.

    A node is drawn uniformly, then one of its neighbours uniformly, so edge
    ``{i, j}`` is chosen with probability ``(1/deg(i) + 1/deg(j)) / n``.
    With ``exact=True`` the values are :class:`fractions.Fraction`.
    """
    deg = g.degrees
    if g.n > 1 and np.any(deg == 0):
        isolated = [int(i) + 1 for i in np.flatnonzero(deg == 0)]
        raise GraphError(f"isolated node(s) {isolated}: pair selection undefined")
    if not g.edges:
        raise GraphError("graph has no edges: pair selection undefined")
    if not g.is_connected:
        warnings.warn("pair distribution on a disconnected graph", RuntimeWarning, stacklevel=2)
    probs = {}
    for i, j in g.edges:
        q = (Fraction(1, int(deg[i])) + Fraction(1, int(deg[j]))) / g.n
        probs[(i, j)] = q if exact else float(q)
    return probs


def parse_edge_list(text: str) -> Graph:
    """Parse the edge-list format: a node count line, then ``i j`` lines (1-based).

    ``#`` starts a comment; blank lines are skipped.
    """
    n = None
    edges = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 1:
                raise GraphParseError(lineno, f"expected node count, got {line!r}")
            try:
                n = int(tokens[0])
            except ValueError:
                raise GraphParseError(lineno, f"node count is not an integer: {tokens[0]!r}") from None
            if n < 1:
                raise GraphParseError(lineno, f"node count must be >= 1, got {n}")
            continue
        if len(tokens) != 2:
            raise GraphParseError(lineno, f"expected 'i j', got {line!r}")
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphParseError(lineno, f"non-integer node label in {line!r}") from None
        if not (1 <= a <= n and 1 <= b <= n):
            raise GraphParseError(lineno, f"node outside 1..{n} in {line!r}")
        if a == b:
            raise GraphParseError(lineno, f"self-loop {a}-{b}")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GraphParseError(lineno, f"duplicate edge {a}-{b} (first on line {seen[key]})")
        seen[key] = lineno
        edges.append((a, b))
    if n is None:
        raise GraphParseError(1, "empty edge list: missing node count")
    return build_graph(n, edges)


def load_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g: Graph) -> str:
    lines = [str(g.n)] + [f"{i} {j}" for i, j in g.edges_one_based()]
    return "\n".join(lines) + "\n"
