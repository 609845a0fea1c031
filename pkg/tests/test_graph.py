from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netentropy.graph import (GraphError, GraphParseError, build_graph, complete_graph, cycle_graph,
                              default_graph, format_edge_list, laplacian, pair_distribution,
                              parse_edge_list, path_graph, random_connected_graph, star_graph)


def test_k2():
    g = build_graph(2, [(1, 2)])
    assert g.degrees.tolist() == [1, 1]
    assert g.is_connected
    np.testing.assert_array_equal(laplacian(g), [[1, -1], [-1, 1]])


def test_c3_is_k3():
    g = build_graph(3, [(1, 2), (2, 3), (1, 3)])
    assert g.degrees.tolist() == [2, 2, 2]
    np.testing.assert_array_equal(laplacian(g), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])
    assert g == complete_graph(3) == cycle_graph(3)


def test_default_graph_connected():
    g = default_graph()
    assert g.n == 4 and len(g.edges) == 5
    assert g.is_connected
    assert g.degrees.tolist() == [3, 2, 3, 2]


def test_path_spectrum_matches_characteristic_polynomial():
    L = laplacian(path_graph(3))
    # det(L - x I) = -x (x - 1)(x - 3)  ->  x^3 - 4x^2 + 3x
    np.testing.assert_allclose(np.poly(L), [1, -4, 3, 0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(L), [0, 1, 3], atol=1e-12)


@pytest.mark.parametrize("edges, match", [
    ([(1, 5)], "outside"),
    ([(2, 2)], "self-loop"),
    ([(1, 2), (2, 1)], "duplicate"),
])
def test_build_graph_rejects(edges, match):
    with pytest.raises(GraphError, match=match):
        build_graph(3, edges)


def test_disconnected_flag():
    g = build_graph(4, [(1, 2), (3, 4)])
    assert not g.is_connected
    w = np.linalg.eigvalsh(laplacian(g))
    assert np.sum(np.abs(w) < 1e-8) == 2


def test_pair_distribution_examples():
    assert pair_distribution(complete_graph(2), exact=True) == {(0, 1): 1}
    assert set(pair_distribution(cycle_graph(3), exact=True).values()) == {Fraction(1, 3)}
    star = pair_distribution(star_graph(3), exact=True)
    assert list(star.values()) == [Fraction(1, 3)] * 3
    assert sum(star.values()) == 1


def test_pair_distribution_isolated_node():
    with pytest.raises(GraphError, match="isolated"):
        pair_distribution(build_graph(3, [(1, 2)]))


def test_pair_distribution_warns_when_disconnected():
    with pytest.warns(RuntimeWarning):
        pair_distribution(build_graph(4, [(1, 2), (3, 4)]))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 2**32 - 1), extra=st.floats(0, 1))
def test_graph_invariants(n, seed, extra):
    g = random_connected_graph(n, np.random.default_rng(seed), extra)
    assert g.is_connected
    L = laplacian(g)
    np.testing.assert_array_equal(L, L.T)
    assert np.max(np.abs(L.sum(axis=1))) <= 1e-12
    w = np.linalg.eigvalsh(L)
    assert w.min() >= -1e-10
    assert np.sum(np.abs(w) < 1e-8) == 1
    assert sum(pair_distribution(g, exact=True).values()) == 1
    assert abs(sum(pair_distribution(g).values()) - 1) <= 1e-12


def test_parse_round_trip():
    text = "# four-node stand-in\n4\n1 2\n2 3  # comment\n\n3 4\n1 4\n1 3\n"
    g = parse_edge_list(text)
    assert g == default_graph()
    assert parse_edge_list(format_edge_list(g)) == g


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("four\n", 1),
    ("3\n1 2\n2\n", 3),
    ("3\n1 2\n1 9\n", 3),
    ("3\n1 2\n3 3\n", 3),
    ("3\n1 2\n2 1\n", 3),
    ("3\n# c\n1 2 3\n", 3),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(GraphParseError) as exc:
        parse_edge_list(text)
    assert exc.value.lineno == line
    assert str(exc.value).startswith(f"line {line}:")
