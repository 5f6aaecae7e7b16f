"""Louvain modularity optimisation and community profiles."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .projection import ProjectionGraph
from .store import PropertyGraph

GAIN_EPS = 1e-9


@dataclass
class Partition:
    assignment: list[int]
    modularity: float
    rng_seed: int
    pass_count: int
    resolution: float = 1.0
    # modularity after each local-moving phase
    history: list[float] = field(default_factory=list)

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment))

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.n_communities)]
        for v, c in enumerate(self.assignment):
            groups[c].append(v)
        return groups


def modularity(g: ProjectionGraph, assignment: Sequence[int] | Mapping[int, int],
               resolution: float = 1.0) -> float:
    """Weighted modularity of a total assignment (vertex -> community).

    Returns 0.0 for a graph without edges.
    """
    if isinstance(assignment, Mapping):
        if set(assignment) != set(range(g.n)):
            raise ValueError("assignment must cover every vertex exactly once")
        labels = [assignment[v] for v in range(g.n)]
    else:
        labels = list(assignment)
        if len(labels) != g.n:
            raise ValueError(f"assignment has {len(labels)} entries for {g.n} vertices")
    if any(c is None for c in labels):
        raise ValueError("assignment must cover every vertex")
    two_m = 2.0 * sum(g.edges.values())
    if two_m == 0:
        return 0.0
    internal: Counter = Counter()
    total: Counter = Counter()
    for (i, j), w in g.edges.items():
        total[labels[i]] += w
        total[labels[j]] += w
        if labels[i] == labels[j]:
            internal[labels[i]] += 2 * w
    return sum(internal[c] / two_m - resolution * (total[c] / two_m) ** 2 for c in total)


class _Level:
    """Weighted graph with self-loops used between aggregation steps."""

    def __init__(self, n: int, adj: list[dict[int, float]], loops: list[float]):
        self.n = n
        self.adj = adj  # off-diagonal weights, symmetric
        self.loops = loops  # A_ii (internal weight counted from both ends)
        self.k = [loops[i] + sum(adj[i].values()) for i in range(n)]


def _move_nodes(level: _Level, comm: list[int], two_m: float, resolution: float,
                rng: random.Random) -> bool:
    tot = [0.0] * level.n
    for v in range(level.n):
        tot[comm[v]] += level.k[v]
    # modularity change of a move is 2 * (gain_c - gain_stay) / two_m
    eps = GAIN_EPS * two_m / 2
    improved = False
    order = list(range(level.n))
    while True:
        rng.shuffle(order)
        moved = False
        for v in order:
            cv, kv = comm[v], level.k[v]
            links: dict[int, float] = {}
            for u, w in level.adj[v].items():
                links[comm[u]] = links.get(comm[u], 0.0) + w
            tot[cv] -= kv
            stay = links.get(cv, 0.0) - resolution * kv * tot[cv] / two_m
            gains = {
                c: links[c] - resolution * kv * tot[c] / two_m for c in links if c != cv
            }
            best_c = cv
            if gains:
                top = max(gains.values())
                if top > stay + eps:
                    best_c = min(c for c, gain in gains.items() if gain >= top - eps)
            tot[best_c] += kv
            if best_c != cv:
                comm[v] = best_c
                moved = improved = True
        if not moved:
            return improved


def _aggregate(level: _Level, comm: list[int]) -> tuple[_Level, list[int]]:
    remap: dict[int, int] = {}
    for v in range(level.n):
        remap.setdefault(comm[v], len(remap))
    k = len(remap)
    adj: list[dict[int, float]] = [{} for _ in range(k)]
    loops = [0.0] * k
    for v in range(level.n):
        cv = remap[comm[v]]
        loops[cv] += level.loops[v]
        for u, w in level.adj[v].items():
            cu = remap[comm[u]]
            if cu == cv:
                loops[cv] += w
            else:
                adj[cv][cu] = adj[cv].get(cu, 0.0) + w
    return _Level(k, adj, loops), [remap[comm[v]] for v in range(level.n)]


def louvain(g: ProjectionGraph, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Two-phase Louvain (local moving, aggregation) until no move helps.

    Vertex visit order is shuffled by ``seed`` on every sweep. A vertex moves
    only for a strictly positive gain; equal-gain targets go to the lowest
    community id.
    """
    n = g.n
    if n == 0:
        return Partition([], 0.0, seed, 0, resolution, [])
    adj = [{u: float(w) for u, w in nbrs.items()} for nbrs in g.weighted_adjacency()]
    level = _Level(n, adj, [0.0] * n)
    two_m = sum(level.k)
    membership = list(range(n))
    passes = 0
    history = [modularity(g, membership, resolution)]
    if two_m > 0:
        rng = random.Random(seed)
        while True:
            comm = list(range(level.n))
            improved = _move_nodes(level, comm, two_m, resolution, rng)
            passes += 1
            history.append(modularity(g, [comm[c] for c in membership], resolution))
            if not improved:
                break
            level, mapping = _aggregate(level, comm)
            membership = [mapping[c] for c in membership]
            if level.n == 1:
                break
    dense: dict[int, int] = {}
    labels = [dense.setdefault(c, len(dense)) for c in membership]
    return Partition(labels, modularity(g, labels, resolution), seed, passes, resolution, history)


@dataclass
class CommunityProfile:
    community_id: int
    size: int
    internal_density: float
    fields: dict[str, int] = field(default_factory=dict)
    countries: dict[str, int] = field(default_factory=dict)
    exemplars: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _target_names(store: PropertyGraph, node_id: int, rel_type: str) -> list[str]:
    return sorted(store.node(e.dst).name for e in store.out_edges(node_id) if e.rel_type == rel_type)


def _histogram(values: list[str], top: int) -> dict[str, int]:
    ranked = sorted(Counter(values).items(), key=lambda kv: (-kv[1], kv[0]))
    return dict(ranked[:top])


def profile_communities(store: PropertyGraph | None, g: ProjectionGraph, partition: Partition,
                        top: int = 5, exemplars: int = 3) -> list[CommunityProfile]:
    """Size, unweighted internal density and field/country histograms per community."""
    if len(partition.assignment) != g.n:
        raise ValueError("partition does not match graph")
    adj = g.weighted_adjacency()
    profiles = []
    for cid, members in enumerate(partition.communities()):
        member_set = set(members)
        size = len(members)
        internal = sum(1 for v in members for u in adj[v] if u in member_set and u > v)
        density = internal / (size * (size - 1) / 2) if size > 1 else 0.0
        fields: list[str] = []
        countries: list[str] = []
        if store is not None:
            for v in members:
                if store.has_node(g.ids[v]):
                    fields += _target_names(store, g.ids[v], "WORKS_IN_FIELD")
                    countries += _target_names(store, g.ids[v], "IS_CITIZEN_OF")
        inner_degree = {v: sum(1 for u in adj[v] if u in member_set) for v in members}
        picks = sorted(members, key=lambda v: (-inner_degree[v], g.names[v]))[:exemplars]
        profiles.append(
            CommunityProfile(cid, size, density, _histogram(fields, top), _histogram(countries, top),
                             [g.names[v] for v in picks])
        )
    return profiles


def format_profiles(profiles: list[CommunityProfile], modularity_q: float | None = None) -> str:
    head = f"{'Community':>9}{'Size':>7}{'Density':>9}  {'Top field':<22}{'Top country':<22}Exemplars"
    lines = []
    if modularity_q is not None:
        lines.append(f"{len(profiles)} communities, modularity Q = {modularity_q:.4f}")
    lines += [head, "-" * len(head)]
    for p in sorted(profiles, key=lambda p: (-p.size, p.community_id)):
        field_ = next(iter(p.fields), "-")
        country = next(iter(p.countries), "-")
        lines.append(
            f"{p.community_id:>9}{p.size:>7}{p.internal_density:>9.2f}  {field_[:21]:<22}"
            f"{country[:21]:<22}{', '.join(p.exemplars)}"
        )
    return "\n".join(lines) + "\n"


def assignment_text(g: ProjectionGraph, partition: Partition) -> str:
    """``community_id<TAB>vertex_name`` lines ordered by community then name."""
    rows = sorted((c, g.names[v]) for v, c in enumerate(partition.assignment))
    return "".join(f"{c}\t{name}\n" for c, name in rows)
