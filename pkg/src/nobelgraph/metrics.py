"""Small-world statistics and centrality measures on a ProjectionGraph.

Path-based measures use hop distances; projection weights only matter for
the optional weighted PageRank mode and for community detection.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import NobelGraphError
from .projection import ProjectionGraph, connected_components, largest_component


class DisconnectedGraphError(NobelGraphError, ValueError):
    """Average path length requested on a disconnected graph."""


class UndefinedMetricError(NobelGraphError, ValueError):
    """The metric is undefined for this graph size."""


class ConvergenceError(NobelGraphError, RuntimeError):
    def __init__(self, message: str, last: list[float], iterations: int):
        self.last = last
        self.iterations = iterations
        super().__init__(message)


def _bfs(adj: list, source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return dist


def avg_shortest_path(g: ProjectionGraph) -> float:
    """Mean BFS distance over ordered pairs ``i != j``; needs a connected graph."""
    n = g.n
    if n < 2:
        raise UndefinedMetricError("average shortest path needs at least 2 vertices")
    adj = g.weighted_adjacency()
    total = 0
    for s in range(n):
        dist = _bfs(adj, s)
        if -1 in dist:
            raise DisconnectedGraphError(
                "graph is disconnected; call projection.largest_component first"
            )
        total += sum(dist)
    return total / (n * (n - 1))


def local_clustering(g: ProjectionGraph) -> list[float]:
    adj = g.adjacency()
    out = []
    for nbrs in adj:
        k = len(nbrs)
        if k < 2:
            out.append(0.0)
            continue
        links = sum(len(adj[u] & nbrs) for u in nbrs) // 2
        out.append(2.0 * links / (k * (k - 1)))
    return out


def avg_clustering(g: ProjectionGraph) -> float:
    """Mean local coefficient over all vertices; degree < 2 contributes 0."""
    if g.n == 0:
        return 0.0
    return math.fsum(local_clustering(g)) / g.n


def random_baseline(n: int, m: int, seed: int) -> ProjectionGraph:
    """Uniform simple graph with exactly ``n`` vertices and ``m`` edges (G(n, m))."""
    pairs = n * (n - 1) // 2
    if n < 0 or not 0 <= m <= pairs:
        raise ValueError(f"need 0 <= m <= n(n-1)/2 = {pairs}, got m={m}")
    rng = random.Random(seed)
    edges = []
    for code in sorted(rng.sample(range(pairs), m)):
        # row i holds pairs (i, i+1..n-1); invert the triangular numbering
        i = n - 2 - int((math.isqrt(8 * (pairs - 1 - code) + 1) - 1) // 2)
        start = i * (2 * n - i - 1) // 2
        j = code - start + i + 1
        edges.append((i, j))
    return ProjectionGraph.from_edges(n, edges)


@dataclass
class SmallWorldReport:
    L: float
    C: float
    L_rand: float
    C_rand: float
    L_ratio: float
    C_ratio: float
    n: int
    m: int
    rng_seed: int
    random_model: str
    random_component_size: int
    small_world: bool
    c_ratio_min: float
    l_ratio_max: float

    def to_dict(self) -> dict:
        return asdict(self)

    def format_table(self) -> str:
        rows = [
            ("Avg. Shortest Path (L)", self.L, self.L_rand, self.L_ratio),
            ("Avg. Clustering Coeff (C)", self.C, self.C_rand, self.C_ratio),
        ]
        head = f"{'Metric':<28}{'Target Network':>16}{'Random Network':>16}{'Ratio (Target/Random)':>24}"
        lines = [head, "-" * len(head)]
        for name, t, r, q in rows:
            lines.append(f"{name:<28}{t:>16.4f}{r:>16.4f}{_fmt_ratio(q):>24}")
        lines.append(
            f"n={self.n} m={self.m} random={self.random_model} seed={self.rng_seed} "
            f"small_world={'yes' if self.small_world else 'no'}"
        )
        return "\n".join(lines) + "\n"


def _fmt_ratio(q: float) -> str:
    return "inf" if math.isinf(q) else f"{q:.2f}"


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


def small_world_report(
    g: ProjectionGraph, seed: int = 0, *, c_ratio_min: float = 1.2, l_ratio_max: float = 1.2
) -> SmallWorldReport:
    """Compare L and C with a G(n, m) baseline of the same size.

    If the random graph comes out disconnected, its L is taken over its
    largest component (``random_component_size`` records that size).
    """
    L = avg_shortest_path(g)
    C = avg_clustering(g)
    rand = random_baseline(g.n, g.m, seed)
    rand_core = rand if len(connected_components(rand)) == 1 else largest_component(rand)
    L_rand = avg_shortest_path(rand_core)
    C_rand = avg_clustering(rand)
    L_ratio, C_ratio = _ratio(L, L_rand), _ratio(C, C_rand)
    return SmallWorldReport(
        L=L, C=C, L_rand=L_rand, C_rand=C_rand, L_ratio=L_ratio, C_ratio=C_ratio,
        n=g.n, m=g.m, rng_seed=seed, random_model="G(n,m)",
        random_component_size=rand_core.n,
        small_world=C_ratio >= c_ratio_min and L_ratio <= l_ratio_max,
        c_ratio_min=c_ratio_min, l_ratio_max=l_ratio_max,
    )


def pagerank(
    g: ProjectionGraph,
    damping: float = 0.85,
    tol: float = 1e-8,
    max_iter: int = 1000,
    weighted: bool = False,
) -> list[float]:
    """Power iteration on ``PR = (1-d)/N + d * sum_j PR(j)/Deg(j)``.

    Undirected edges act as links both ways. Isolated vertices have no
    out-links; their mass is spread uniformly over all vertices (as if they
    linked to everyone), which keeps the vector a distribution. Stops when
    the L1 change drops below ``tol``.
    """
    n = g.n
    if n == 0:
        raise UndefinedMetricError("pagerank needs a non-empty graph")
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    adj = g.weighted_adjacency()
    if weighted:
        out_w = [float(sum(nbrs.values())) for nbrs in adj]
    else:
        out_w = [float(len(nbrs)) for nbrs in adj]
    dangling = [i for i in range(n) if out_w[i] == 0]
    x = [1.0 / n] * n
    for it in range(1, max_iter + 1):
        leak = math.fsum(x[i] for i in dangling)
        base = (1.0 - damping) / n + damping * leak / n
        nxt = [base] * n
        for j in range(n):
            if out_w[j] == 0:
                continue
            share = damping * x[j] / out_w[j]
            if weighted:
                for i, w in adj[j].items():
                    nxt[i] += share * w
            else:
                for i in adj[j]:
                    nxt[i] += share
        total = math.fsum(nxt)
        nxt = [v / total for v in nxt]  # guards rounding drift only
        change = math.fsum(abs(a - b) for a, b in zip(nxt, x))
        x = nxt
        if change < tol:
            return x
    raise ConvergenceError(f"pagerank did not converge in {max_iter} iterations", x, max_iter)


def degree_centrality(g: ProjectionGraph) -> list[float]:
    """``deg(i) / (N - 1)``."""
    if g.n < 2:
        raise UndefinedMetricError("degree centrality needs at least 2 vertices")
    adj = g.weighted_adjacency()
    return [len(nbrs) / (g.n - 1) for nbrs in adj]


def betweenness(g: ProjectionGraph, exact: bool = False) -> list[float] | list[Fraction]:
    """Brandes betweenness over hop-shortest paths, normalized by (N-1)(N-2)/2.

    Path counts are exact integers. With ``exact=True`` the dependency
    accumulation uses Fractions and the result is exact.
    """
    n = g.n
    adj = g.weighted_adjacency()
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    cb = [zero] * n
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [zero] * n
        while stack:
            w = stack.pop()
            coeff = (one + delta[w]) / sigma[w] if exact else (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                cb[w] += delta[w]
    if n < 3:
        return [zero] * n
    # each unordered pair is visited from both ends
    scale = Fraction(1, (n - 1) * (n - 2)) if exact else 1.0 / ((n - 1) * (n - 2))
    return [c * scale for c in cb]


def ranking(scores, names: list[str], top_k: int | None = None) -> list[tuple[str, float]]:
    """Vertices by descending score, ties by name."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], names[i]))
    if top_k is not None:
        order = order[:top_k]
    return [(names[i], float(scores[i])) for i in order]


@dataclass
class CentralityTable:
    names: list[str]
    pagerank: list[float]
    degree: list[float]
    betweenness: list[float]

    def top(self, measure: str, k: int = 3) -> list[tuple[str, float]]:
        return ranking(getattr(self, measure), self.names, k)

    def format_table(self, k: int = 3) -> str:
        head = f"{'Algorithm':<24}{'Name':<40}{'Score':>10}"
        lines = [head, "-" * len(head)]
        for label, measure in (
            ("PageRank (Influence)", "pagerank"),
            ("Degree (Popularity)", "degree"),
            ("Betweenness (Bridges)", "betweenness"),
        ):
            for rank, (name, score) in enumerate(self.top(measure, k), 1):
                lines.append(f"{label if rank == 1 else '':<24}{f'{rank}. {name}':<40}{score:>10.4f}")
        return "\n".join(lines) + "\n"

    def top_records(self, k: int = 3) -> list[dict]:
        out = []
        for measure in ("pagerank", "degree", "betweenness"):
            for rank, (name, score) in enumerate(self.top(measure, k), 1):
                out.append({"measure": measure, "rank": rank, "name": name, "score": score})
        return out


def centrality_table(g: ProjectionGraph, damping: float = 0.85) -> CentralityTable:
    return CentralityTable(
        names=list(g.names),
        pagerank=pagerank(g, damping),
        degree=degree_centrality(g),
        betweenness=[float(b) for b in betweenness(g)],
    )
