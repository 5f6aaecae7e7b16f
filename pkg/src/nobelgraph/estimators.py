"""scikit-learn style wrappers around the analysis layer.

Graph inputs may be a ProjectionGraph or a square symmetric weight matrix
(dense array-like or scipy sparse); ``check_graph`` converts either form.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .community import louvain, modularity
from .metrics import betweenness, degree_centrality, pagerank
from .projection import ATTRIBUTE_NAMES, ProjectionGraph, attributes_by_name, build_projection
from .store import PropertyGraph


def check_graph(X) -> ProjectionGraph:
    """Return ``X`` as a ProjectionGraph, validating matrix input."""
    if isinstance(X, ProjectionGraph):
        return X
    if hasattr(X, "tocoo"):
        X = X.toarray()
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square adjacency matrix, got shape {A.shape}")
    if not np.issubdtype(A.dtype, np.number):
        raise ValueError("adjacency matrix must be numeric")
    if not np.all(np.isfinite(A)):
        raise ValueError("adjacency matrix contains NaN or infinity")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency matrix must be symmetric")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency matrix must have a zero diagonal")
    if np.any(A < 0) or np.any(A != np.round(A)):
        raise ValueError("edge weights must be non-negative integers")
    iu, ju = np.nonzero(np.triu(A, 1))
    return ProjectionGraph.from_edges(A.shape[0], [(int(i), int(j), int(A[i, j])) for i, j in zip(iu, ju)])


def check_store(X) -> PropertyGraph:
    if not isinstance(X, PropertyGraph):
        raise TypeError(f"expected a PropertyGraph, got {type(X).__name__}")
    return X


def to_adjacency(g: ProjectionGraph) -> np.ndarray:
    """Dense symmetric weight matrix of ``g``."""
    A = np.zeros((g.n, g.n), dtype=np.int64)
    for (i, j), w in g.edges.items():
        A[i, j] = A[j, i] = w
    return A


class SharedAttributeProjection(TransformerMixin, BaseEstimator):
    """Store -> weighted projection graph over shared attribute categories.

    Stateless; ``fit`` only checks the configuration.
    """

    def __init__(self, attributes=ATTRIBUTE_NAMES, statement_property="motivation"):
        self.attributes = attributes
        self.statement_property = statement_property

    def _attrs(self):
        names = list(self.attributes)
        if not names:
            raise ValueError("at least one attribute category is required")
        return attributes_by_name(names, self.statement_property)

    def fit(self, X=None, y=None):
        self.attributes_ = tuple(a.name for a in self._attrs())
        return self

    def transform(self, X) -> ProjectionGraph:
        check_is_fitted(self, "attributes_")
        return build_projection(check_store(X), self._attrs())


class LouvainCommunities(ClusterMixin, BaseEstimator):
    """Louvain modularity clustering; ``labels_`` are dense community ids."""

    def __init__(self, seed=0, resolution=1.0):
        self.seed = seed
        self.resolution = resolution

    def fit(self, X, y=None):
        g = check_graph(X)
        part = louvain(g, seed=self.seed, resolution=self.resolution)
        self.partition_ = part
        self.labels_ = np.asarray(part.assignment, dtype=np.int64)
        self.modularity_ = part.modularity
        self.n_communities_ = part.n_communities
        return self

    def score(self, X, y=None) -> float:
        """Modularity of the fitted labels on ``X``."""
        check_is_fitted(self, "labels_")
        return modularity(check_graph(X), self.labels_.tolist(), self.resolution)


class CentralityRanker(TransformerMixin, BaseEstimator):
    """Per-vertex PageRank, degree and betweenness.

    ``transform`` returns an ``(n, 3)`` array with columns in that order.
    """

    columns = ("pagerank", "degree", "betweenness")

    def __init__(self, damping=0.85, tol=1e-8, max_iter=1000, weighted=False):
        self.damping = damping
        self.tol = tol
        self.max_iter = max_iter
        self.weighted = weighted

    def _scores(self, g: ProjectionGraph) -> np.ndarray:
        pr = pagerank(g, self.damping, self.tol, self.max_iter, self.weighted)
        return np.column_stack([pr, degree_centrality(g), betweenness(g)])

    def fit(self, X, y=None):
        g = check_graph(X)
        scores = self._scores(g)
        self.pagerank_, self.degree_, self.betweenness_ = scores.T.copy()
        self.names_ = list(g.names)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "pagerank_")
        return self._scores(check_graph(X))

    def top(self, measure="pagerank", k=3) -> list[tuple[str, float]]:
        check_is_fitted(self, "pagerank_")
        scores = getattr(self, measure + "_")
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], self.names_[i]))[:k]
        return [(self.names_[i], float(scores[i])) for i in order]
