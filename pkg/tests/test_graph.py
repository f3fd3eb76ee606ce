import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jitune.graph import (
    Graph,
    GraphFormatError,
    attach_attributes,
    attach_labels,
    connected_components,
    load_edge_list,
    save_graph,
    split_edges,
    write_edge_list,
)

from conftest import erdos_renyi


def parse(text, **kw):
    return load_edge_list(io.StringIO(text), **kw)


def test_triangle_unit_weights():
    g = parse("0 1\n1 2\n2 0\n")
    assert (g.node_count, g.edge_count, g.total_weight) == (3, 3, 3.0)
    assert g.edges == [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]


def test_duplicates_merge_by_summing():
    g = parse("0 1 2.5\n0 1 0.5\n")
    assert g.edges == [(0, 1, 3.0)]
    assert g.ingest.duplicates_merged == 1


def test_self_loop_dropped():
    g = parse("5 5 1.0\n")
    assert g.edge_count == 0
    assert g.ingest.loops_dropped == 1


def test_comments_blank_lines_and_bytes_input():
    g = load_edge_list(b"# header\n\n0 1\n1 2 2\n")
    assert g.edges == [(0, 1, 1.0), (1, 2, 2.0)]


def test_token_ids_are_interned():
    g = parse("a b\nb c\n")
    assert g.names == ("a", "b", "c")
    assert g.edges == [(0, 1, 1.0), (1, 2, 1.0)]


def test_directed_arcs_are_symmetrized():
    g = parse("0 1 1\n1 0 2\n", directed=True)
    assert g.edges == [(0, 1, 3.0)]
    assert g.ingest.symmetrized


@pytest.mark.parametrize("text", ["", "0\n", "0 1 2 3\n", "0 1 x\n", "0 1 -1\n", "0 1 0\n",
                                  "0 1 nan\n"])
def test_malformed_input_rejected(text):
    with pytest.raises(GraphFormatError):
        parse(text)


def test_error_carries_line_number():
    with pytest.raises(GraphFormatError) as info:
        parse("0 1\n1 2\n2 3 bad\n")
    assert info.value.line == 3


def test_labels_accumulate():
    g = Graph.from_edges(2, [(0, 1)])
    g = attach_labels(g, io.StringIO("0 3\n0 7\n"))
    assert g.labels == (frozenset({3, 7}), frozenset())


def test_empty_label_stream():
    g = attach_labels(Graph.from_edges(3, [(0, 1)]), io.StringIO(""))
    assert g.labels == (frozenset(),) * 3


def test_label_out_of_range():
    with pytest.raises(GraphFormatError, match="out of range"):
        attach_labels(Graph.from_edges(3, [(0, 1)]), io.StringIO("9 1\n"))


def test_attributes():
    g = Graph.from_edges(3, [(0, 1)])
    g = attach_attributes(g, io.StringIO("0 1 2\n1 3 4\n2 5 6\n"))
    assert g.attributes.shape == (3, 2)
    with pytest.raises(GraphFormatError, match="dimension"):
        attach_attributes(g, io.StringIO("0 1 2\n1 3 4 5\n2 5 6\n"))
    with pytest.raises(GraphFormatError, match="lack attributes"):
        attach_attributes(g, io.StringIO("0 1 2\n1 3 4\n"))


def test_split_counts():
    g = Graph.from_edges(10, [(i, i + 1) for i in range(9)] + [(0, 9)])
    s = split_edges(g, 0.2, seed=4)
    assert len(s.test_positive) == 2 and len(s.test_negative) == 2
    assert s.train_graph.edge_count == 8
    again = split_edges(g, 0.2, seed=4)
    assert np.array_equal(s.test_positive, again.test_positive)
    assert np.array_equal(s.test_negative, again.test_negative)


def test_split_negatives_are_non_edges():
    g = erdos_renyi(40, 0.2, 1)
    s = split_edges(g, 0.2, seed=0)
    held = {tuple(p) for p in s.test_positive.tolist()}
    assert held <= g.edge_set
    assert held.isdisjoint(s.train_graph.edge_set)
    neg = {tuple(p) for p in s.test_negative.tolist()}
    assert len(neg) == len(s.test_negative)
    assert neg.isdisjoint(g.edge_set)
    assert all(u < v for u, v in neg)


def test_split_complete_graph_has_no_negatives():
    k4 = Graph.from_edges(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    with pytest.raises(ValueError, match="non-edges"):
        split_edges(k4, 0.2)


@pytest.mark.parametrize("edges,n,count", [([(0, 1), (1, 2), (0, 2)], 3, 1),
                                           ([(0, 1), (2, 3)], 4, 2), ([], 5, 5)])
def test_component_count(edges, n, count):
    assert connected_components(Graph.from_edges(n, edges))[0] == count


def test_save_and_reload_round_trip(tmp_path):
    g = Graph.from_edges(4, [(0, 1, 0.1), (1, 2, 1 / 3), (2, 3, 2.0)],
                         labels=[{1}, {1, 2}, set(), {0}],
                         attributes=np.array([[0.1], [1 / 7], [2.0], [-3.5]]))
    save_graph(g, tmp_path / "g.edges", tmp_path / "g.labels", tmp_path / "g.attrs")
    back = load_edge_list(tmp_path / "g.edges", num_nodes=4)
    back = attach_labels(back, tmp_path / "g.labels")
    back = attach_attributes(back, tmp_path / "g.attrs")
    assert back.same_as(g)


edge_lists = st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12),
                                st.floats(0.01, 10, allow_nan=False)), min_size=1, max_size=60)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_canonical_form_properties(edges):
    g = Graph.from_edges(13, edges)
    g.check_invariants()
    assert np.all(g.src < g.dst)
    pairs = list(zip(g.src.tolist(), g.dst.tolist()))
    assert pairs == sorted(set(pairs))
    expected = sum(w for u, v, w in edges if u != v)
    assert g.total_weight == pytest.approx(expected, rel=1e-12)
    adj = g.adjacency_matrix
    assert (adj != adj.T).nnz == 0


@settings(max_examples=30, deadline=None)
@given(edge_lists)
def test_text_round_trip_is_lossless(edges):
    g = Graph.from_edges(13, edges)
    if g.edge_count == 0:
        return
    buf = io.StringIO()
    write_edge_list(g, buf)
    back = load_edge_list(io.StringIO(buf.getvalue()), num_nodes=13)
    assert back.same_as(g)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 80), st.floats(0.0, 0.1), st.integers(0, 10**6))
def test_components_match_networkx(n, p, seed):
    nx = pytest.importorskip("networkx")
    g = erdos_renyi(n, p, seed)
    ref = nx.Graph()
    ref.add_nodes_from(range(n))
    ref.add_edges_from(zip(g.src.tolist(), g.dst.tolist()))
    count, assign = connected_components(g)
    assert count == nx.number_connected_components(ref)
    for comp in nx.connected_components(ref):
        assert len({int(assign[v]) for v in comp}) == 1
