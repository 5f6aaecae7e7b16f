import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nobelgraph.projection import (
    ATTRIBUTE_NAMES,
    ProjectionGraph,
    attributes_by_name,
    build_projection,
    connected_components,
    largest_component,
)
from nobelgraph.store import PropertyGraph
from nobelgraph.synthetic import SyntheticConfig, synthetic_store

from oracles import brute_projection


def person(g, name, org=(), field=(), country=(), motivation=None):
    pid = g.upsert_node("Person", name)
    for rel, values, label in (("EMPLOYED_BY", org, "Organization"), ("WORKS_IN_FIELD", field, "Field"),
                               ("IS_CITIZEN_OF", country, "Country")):
        for v in values:
            g.upsert_edge(pid, g.upsert_node(label, v), rel)
    if motivation is not None:
        g.upsert_edge(pid, g.upsert_node("Award", "Prize " + name), "RECEIVED", {"motivation": motivation})
    return pid


def weights_by_name(p: ProjectionGraph):
    return {tuple(sorted((p.names[i], p.names[j]))): w for (i, j), w in p.edges.items()}


def test_two_shared_categories():
    g = PropertyGraph()
    person(g, "A", field=["Physics"], country=["Germany"], org=["Bonn"])
    person(g, "B", field=["Physics"], country=["Germany"], org=["Berlin"])
    assert weights_by_name(build_projection(g)) == {("A", "B"): 2}


def test_nothing_shared_means_no_edge():
    g = PropertyGraph()
    person(g, "A", field=["Physics"])
    person(g, "B", field=["Chemistry"])
    p = build_projection(g)
    assert p.n == 2 and p.m == 0


def test_multi_valued_indicator():
    g = PropertyGraph()
    person(g, "A", org=["Harvard", "MIT"])
    person(g, "B", org=["MIT"])
    assert weights_by_name(build_projection(g)) == {("A", "B"): 1}


def test_award_statement_exact_normalized_match():
    g = PropertyGraph()
    person(g, "A", motivation="for the  discovery of X")
    person(g, "B", motivation="For the discovery of X ")
    person(g, "C", motivation="for the discovery of Y")
    assert weights_by_name(build_projection(g)) == {("A", "B"): 1}


def test_vertices_include_award_receiving_organizations():
    g = PropertyGraph()
    a = person(g, "A", org=["Red Cross"])
    red_cross = g.find("Organization", "Red Cross").id
    g.upsert_node("Organization", "Plain Org")
    g.upsert_edge(red_cross, g.upsert_node("Award", "Peace"), "RECEIVED")
    p = build_projection(g)
    assert sorted(p.ids) == sorted([a, red_cross])
    # the organization's own organization attribute is itself
    assert weights_by_name(p) == {("A", "Red Cross"): 1}


def test_empty_attribute_list_rejected():
    with pytest.raises(ValueError):
        build_projection(PropertyGraph(), [])
    with pytest.raises(ValueError):
        attributes_by_name(["shoe_size"])


def test_weights_bounded_by_category_count():
    g = synthetic_store(3, SyntheticConfig(persons=60, countries=3, fields=3))
    p = build_projection(g)
    assert p.m > 0
    assert all(1 <= w <= len(ATTRIBUTE_NAMES) for w in p.edges.values())
    assert all(i < j for i, j in p.edges)


def _id_weights(p):
    return {tuple(sorted((p.ids[i], p.ids[j]))): w for (i, j), w in p.edges.items()}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(5, 70))
def test_matches_all_pairs_oracle(seed, persons):
    cfg = SyntheticConfig(persons=persons, countries=4, fields=3, shared_prize_rate=0.3)
    g = synthetic_store(seed, cfg)
    p = build_projection(g)
    weights, ids = brute_projection(g, list(ATTRIBUTE_NAMES))
    assert sorted(p.ids) == ids
    assert _id_weights(p) == weights


def test_matches_oracle_at_500_vertices():
    g = synthetic_store(11, SyntheticConfig(persons=500, countries=30, fields=15))
    p = build_projection(g)
    assert p.n >= 500
    weights, _ = brute_projection(g, list(ATTRIBUTE_NAMES))
    assert _id_weights(p) == weights


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.permutations(list(ATTRIBUTE_NAMES)))
def test_attribute_order_irrelevant(seed, order):
    g = synthetic_store(seed, SyntheticConfig(persons=40, countries=5, fields=4))
    base = _id_weights(build_projection(g))
    assert _id_weights(build_projection(g, attributes_by_name(order))) == base


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, len(ATTRIBUTE_NAMES) - 1))
def test_adding_a_category_is_monotone(seed, k):
    g = synthetic_store(seed, SyntheticConfig(persons=40, countries=5, fields=4))
    names = list(ATTRIBUTE_NAMES)
    random.Random(seed).shuffle(names)
    small = _id_weights(build_projection(g, attributes_by_name(names[:k])))
    big = _id_weights(build_projection(g, attributes_by_name(names[: k + 1])))
    for pair, w in small.items():
        assert big.get(pair, 0) >= w


def test_deterministic():
    a = build_projection(synthetic_store(5))
    b = build_projection(synthetic_store(5))
    assert a.edge_list_text() == b.edge_list_text()
    assert a.ids == b.ids


def test_largest_component_examples():
    tri = ProjectionGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert largest_component(tri).edges == tri.edges
    plus = ProjectionGraph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    lc = largest_component(plus)
    assert lc.ids == [0, 1, 2] and lc.m == 3
    tie = ProjectionGraph.from_edges(4, [(2, 3), (0, 1)], ids=[3, 4, 1, 2])
    assert largest_component(tie).ids == [1, 2]
    empty = largest_component(ProjectionGraph.from_edges(0, []))
    assert empty.n == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 25), st.integers(0, 10**6))
def test_components_partition_vertices(n, seed):
    rng = random.Random(seed)
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < 0.1]
    g = ProjectionGraph.from_edges(n, edges)
    comps = connected_components(g)
    assert sorted(v for c in comps for v in c) == list(range(n))
    where = {v: k for k, c in enumerate(comps) for v in c}
    assert all(where[i] == where[j] for i, j in edges)
    assert [len(c) for c in comps] == sorted((len(c) for c in comps), reverse=True)


def test_edge_list_text_format():
    g = ProjectionGraph.from_edges(3, [(0, 1, 2), (2, 0, 1)], names=["Zed", "Amy", "Bob"])
    assert g.edge_list_text() == "Amy\tZed\t2\nBob\tZed\t1\n"


def test_from_edges_rejects_self_loops():
    with pytest.raises(ValueError):
        ProjectionGraph.from_edges(2, [(1, 1)])
