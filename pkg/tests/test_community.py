import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nobelgraph.community import (
    assignment_text,
    format_profiles,
    louvain,
    modularity,
    profile_communities,
)
from nobelgraph.projection import ProjectionGraph, build_projection, largest_component
from nobelgraph.synthetic import SyntheticConfig, synthetic_store

from oracles import best_partition, modularity_matrix, random_edges


def barbell(k=4):
    a = list(itertools.combinations(range(k), 2))
    b = [(i + k, j + k) for i, j in a]
    return ProjectionGraph.from_edges(2 * k, a + b + [(k - 1, k)])


def wedges(g):
    return [(i, j, w) for (i, j), w in g.edges.items()]


def test_barbell_recovers_cliques_with_best_q():
    g = barbell(4)
    part = louvain(g, seed=0)
    assert sorted(map(sorted, part.communities())) == [[0, 1, 2, 3], [4, 5, 6, 7]]
    best_q, _ = best_partition(8, wedges(g))
    assert part.modularity == pytest.approx(best_q, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_barbell_any_seed(seed):
    part = louvain(barbell(4), seed=seed)
    assert part.n_communities == 2


def test_complete_graph_single_community():
    g = ProjectionGraph.from_edges(6, itertools.combinations(range(6), 2))
    part = louvain(g, seed=1)
    assert part.n_communities == 1
    assert part.modularity == pytest.approx(0.0, abs=1e-12)


def test_all_in_one_is_zero():
    g = barbell(3)
    assert modularity(g, [0] * g.n) == pytest.approx(0.0, abs=1e-15)


def test_singletons_on_path_by_hand():
    # k = (1, 2, 1), 2m = 4: Q = -(1 + 4 + 1) / 16
    g = ProjectionGraph.from_edges(3, [(0, 1), (1, 2)])
    assert modularity(g, [0, 1, 2]) == pytest.approx(-6 / 16, abs=1e-15)


def test_two_triangle_barbell_matches_matrix_form():
    g = barbell(3)
    part = louvain(g, seed=3)
    assert modularity_matrix(g.n, wedges(g), part.assignment) == pytest.approx(part.modularity, abs=1e-12)


def test_modularity_input_checks():
    g = barbell(3)
    with pytest.raises(ValueError):
        modularity(g, [0, 1])
    with pytest.raises(ValueError):
        modularity(g, {0: 0, 1: 0})
    assert modularity(g, {v: 0 for v in range(6)}) == pytest.approx(0.0, abs=1e-15)
    assert modularity(ProjectionGraph.from_edges(3, []), [0, 1, 2]) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.floats(0.05, 0.6), st.integers(0, 10**6), st.integers(0, 2**32))
def test_random_weighted_invariants(n, p, gseed, seed):
    edges = random_edges(random.Random(gseed), n, p, weighted=True)
    g = ProjectionGraph.from_edges(n, edges)
    part = louvain(g, seed=seed)
    labels = part.assignment
    assert len(labels) == n
    assert set(labels) == set(range(part.n_communities))
    assert abs(modularity(g, labels) - part.modularity) <= 1e-9
    assert abs(modularity_matrix(n, edges, labels) - part.modularity) <= 1e-9
    assert part.modularity >= modularity(g, list(range(n))) - 1e-12
    assert all(b >= a - 1e-12 for a, b in zip(part.history, part.history[1:]))
    again = louvain(g, seed=seed)
    assert again.assignment == labels and again.modularity == part.modularity


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.floats(0.2, 0.8), st.integers(0, 10**6))
def test_near_optimal_on_tiny_graphs(n, p, gseed):
    edges = random_edges(random.Random(gseed), n, p, weighted=True)
    g = ProjectionGraph.from_edges(n, edges)
    best_q, _ = best_partition(n, edges)
    part = louvain(g, seed=0)
    assert part.modularity <= best_q + 1e-9


def test_resolution_changes_granularity():
    g = barbell(5)
    coarse = louvain(g, seed=0, resolution=0.01)
    fine = louvain(g, seed=0, resolution=5.0)
    assert coarse.n_communities <= 2 <= fine.n_communities


def test_empty_graph():
    part = louvain(ProjectionGraph.from_edges(0, []))
    assert part.assignment == [] and part.modularity == 0.0


def test_profiles():
    g = barbell(4)
    extra = ProjectionGraph.from_edges(9, list(g.edges), names=[f"v{i}" for i in range(9)])
    part = louvain(extra, seed=0)
    profiles = profile_communities(None, extra, part)
    assert sum(p.size for p in profiles) == 9
    by_size = {p.size: p for p in profiles}
    assert by_size[4].internal_density == 1.0
    assert by_size[1].internal_density == 0.0
    text = format_profiles(profiles, part.modularity)
    assert text.startswith("3 communities")


def test_profiles_use_store_attributes():
    store = synthetic_store(2, SyntheticConfig(persons=60, countries=4, fields=3))
    g = largest_component(build_projection(store))
    part = louvain(g, seed=2)
    profiles = profile_communities(store, g, part)
    assert sum(p.size for p in profiles) == g.n
    assert all(0.0 <= p.internal_density <= 1.0 for p in profiles)
    assert any(p.fields for p in profiles) and any(p.countries for p in profiles)


def test_assignment_text_sorted():
    g = ProjectionGraph.from_edges(4, [(0, 1), (2, 3)], names=["d", "c", "b", "a"])
    part = louvain(g, seed=0)
    lines = assignment_text(g, part).splitlines()
    assert len(lines) == 4
    assert lines == sorted(lines, key=lambda s: (int(s.split("\t")[0]), s.split("\t")[1]))
