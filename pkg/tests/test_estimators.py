import itertools

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nobelgraph.estimators import (
    CentralityRanker,
    LouvainCommunities,
    SharedAttributeProjection,
    check_graph,
    to_adjacency,
)
from nobelgraph.projection import build_projection, largest_component
from nobelgraph.synthetic import SyntheticConfig, synthetic_store


def barbell_matrix(k=4):
    A = np.zeros((2 * k, 2 * k), dtype=int)
    for i, j in itertools.combinations(range(k), 2):
        A[i, j] = A[j, i] = A[i + k, j + k] = A[j + k, i + k] = 1
    A[k - 1, k] = A[k, k - 1] = 1
    return A


def test_params_and_clone():
    est = LouvainCommunities(seed=3, resolution=0.5)
    assert est.get_params() == {"seed": 3, "resolution": 0.5}
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
    ranker = CentralityRanker().set_params(damping=0.5)
    assert ranker.damping == 0.5
    assert clone(SharedAttributeProjection(attributes=("field",))).attributes == ("field",)


def test_louvain_on_matrix_and_sparse():
    A = barbell_matrix()
    dense = LouvainCommunities(seed=0).fit(A)
    sparse = LouvainCommunities(seed=0).fit(sp.csr_matrix(A))
    assert dense.labels_.tolist() == sparse.labels_.tolist()
    assert sorted(dense.labels_[:4]) == [dense.labels_[0]] * 4
    assert dense.labels_[0] != dense.labels_[4]
    assert dense.n_communities_ == 2
    assert dense.score(A) == pytest.approx(dense.modularity_, abs=1e-12)
    assert LouvainCommunities(seed=0).fit_predict(A).tolist() == dense.labels_.tolist()


def test_modularity_matches_networkx():
    A = barbell_matrix(5)
    est = LouvainCommunities(seed=1).fit(A)
    G = nx.from_numpy_array(A)
    comms = [set(np.flatnonzero(est.labels_ == c)) for c in range(est.n_communities_)]
    assert est.modularity_ == pytest.approx(nx.community.modularity(G, comms), abs=1e-12)


@pytest.mark.parametrize("bad", [
    np.zeros((2, 3)),
    np.array([[0, 1], [2, 0]]),
    np.array([[1, 0], [0, 0]]),
    np.array([[0, -1], [-1, 0]]),
    np.array([[0, 0.5], [0.5, 0]]),
    np.array([[0, np.nan], [np.nan, 0]]),
    np.array([["a", "b"], ["b", "a"]]),
])
def test_check_graph_rejects(bad):
    with pytest.raises(ValueError):
        check_graph(bad)


def test_adjacency_roundtrip():
    store = synthetic_store(2, SyntheticConfig(persons=40, countries=4, fields=3))
    g = build_projection(store)
    A = to_adjacency(g)
    back = check_graph(A)
    assert back.edges == g.edges
    assert check_graph(g) is g


def test_projection_transformer():
    store = synthetic_store(2, SyntheticConfig(persons=40, countries=4, fields=3))
    est = SharedAttributeProjection().fit()
    g = est.transform(store)
    assert g.edges == build_projection(store).edges
    assert est.attributes_ == ("organization", "field", "country", "award_statement")
    only_field = SharedAttributeProjection(attributes=("field",)).fit_transform(store)
    assert max(only_field.edges.values()) == 1
    with pytest.raises(ValueError):
        SharedAttributeProjection(attributes=()).fit()
    with pytest.raises(TypeError):
        est.transform(np.zeros((2, 2)))
    with pytest.raises(NotFittedError):
        SharedAttributeProjection().transform(store)


def test_centrality_ranker_against_networkx():
    store = synthetic_store(4, SyntheticConfig(persons=60, countries=6, fields=4))
    g = largest_component(build_projection(store))
    est = CentralityRanker(tol=1e-12).fit(g)
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges)
    pr = nx.pagerank(G, alpha=0.85, tol=1e-14, max_iter=1000)
    bc = nx.betweenness_centrality(G, normalized=True)
    dc = nx.degree_centrality(G)
    X = est.transform(g)
    assert X.shape == (g.n, 3)
    assert np.allclose(X[:, 0], [pr[i] for i in range(g.n)], atol=1e-9)
    assert np.allclose(X[:, 1], [dc[i] for i in range(g.n)], atol=1e-12)
    assert np.allclose(X[:, 2], [bc[i] for i in range(g.n)], atol=1e-12)
    top = est.top("betweenness", 3)
    assert [s for _, s in top] == sorted(X[:, 2], reverse=True)[:3]


def test_centrality_not_fitted():
    with pytest.raises(NotFittedError):
        CentralityRanker().top()
