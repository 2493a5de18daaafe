import pytest

from dpmatch.generators import GraphFamilySpec, generate
from dpmatch.streams import (
    EDGE,
    EMPTY,
    NODE,
    AdjacencyValidator,
    StreamError,
    Update,
    adjacency_stream,
    edge_stream,
    parse_stream,
    validate_adjacency_order,
    validate_edge_order,
)


def test_parse_round_trip():
    s = parse_stream("n 5\nE 0 1\n-\n# comment\nN 3  # trailing\nE 2 4\n")
    assert s.n == 5
    assert [u.kind for u in s.updates] == [EDGE, EMPTY, NODE, EDGE]
    assert parse_stream(s.dumps()) == s


def test_parse_infers_n():
    assert parse_stream("E 0 7\n").n == 8
    assert parse_stream("").n == 0


@pytest.mark.parametrize("text,t", [("E 0\n", 1), ("-\nX 1 2\n", 2), ("-\n-\nE a b\n", 3)])
def test_parse_errors_carry_timestep(text, t):
    with pytest.raises(StreamError) as ei:
        parse_stream(text)
    assert ei.value.t == t


def test_parse_range_errors():
    with pytest.raises(StreamError):
        parse_stream("n 3\nE 0 3\n")
    with pytest.raises(StreamError):
        parse_stream("E -1 2\n")


@pytest.mark.parametrize("text,t", [
    ("n 4\nE 0 1\nE 1 0\n", 2),
    ("n 4\n-\nE 2 2\n", 2),
    ("n 4\nN 1\n", 1),
])
def test_edge_order_violations(text, t):
    with pytest.raises(StreamError) as ei:
        validate_edge_order(parse_stream(text))
    assert ei.value.t == t


def test_edge_order_ok():
    validate_edge_order(parse_stream("n 4\nE 0 1\n-\nE 2 3\n"))


@pytest.mark.parametrize("text,t", [
    ("n 3\nE 0 1\n", 1),                      # edge before any arrival
    ("n 3\nN 0\nN 1\nE 0 1\nE 0 2\n", 4),     # not adjacent to the current node
    ("n 3\nN 0\nE 0 1\n", 2),                 # back list names a future node
    ("n 3\nN 0\nN 1\nE 1 0\nE 0 1\n", 4),     # listed twice
    ("n 3\nN 0\nN 0\n", 2),
    ("n 3\nN 5\n", 1),
])
def test_adjacency_back_violations(text, t):
    with pytest.raises(StreamError) as ei:
        validate_adjacency_order(parse_stream(text))
    assert ei.value.t == t


def test_adjacency_both_lists():
    text = "n 3\nN 0\nE 0 1\nN 1\nE 1 0\nE 1 2\nN 2\nE 2 1\n"
    validate_adjacency_order(parse_stream(text), "both")
    with pytest.raises(StreamError):
        validate_adjacency_order(parse_stream(text), "back")
    with pytest.raises(ValueError):
        AdjacencyValidator(3, "front")


@pytest.mark.parametrize("lists", ["back", "both"])
def test_adjacency_stream_builder_is_valid(lists):
    g = generate(GraphFamilySpec("erdos-renyi", n=40, p=0.2, seed=4))
    order = list(range(39, -1, -1))
    s = adjacency_stream(g.n, order, g.adj, lists)
    validate_adjacency_order(s, lists)
    edges = {(min(x.u, x.v), max(x.u, x.v)) for x in s.updates if x.kind == EDGE}
    assert edges == set(g.edges())
    assert sum(x.kind == EDGE for x in s.updates) == len(edges) * (1 if lists == "back" else 2)


def test_edge_stream_builder():
    s = edge_stream(3, [(0, 1), (1, 2)])
    assert s.updates == [Update(EDGE, 0, 1), Update(EDGE, 1, 2)] and len(s) == 2
