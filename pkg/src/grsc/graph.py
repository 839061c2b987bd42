"""Graph utilities used by the separation routines and heuristics.

The split digraph numbers its vertices as ``i_1 = 2*i``, ``i_2 = 2*i + 1``
for original node ``i``, followed by the artificial root and, optionally, a
species sink.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

NODE_ARC = 0
ROOT_ARC = 1
EDGE_ARC = 2
SINK_ARC = 3

_EPS = 1e-12


def adjacency_lists(n: int, edges) -> tuple[tuple[int, ...], ...]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    return tuple(tuple(sorted(nb)) for nb in adj)


def d_neighborhood(adj: Sequence[Sequence[int]], i: int, d: int) -> set[int]:
    """Nodes at hop distance 1..d from ``i``."""
    seen = {i}
    frontier = [i]
    for _ in range(d):
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    seen.discard(i)
    return seen


def connected_components(adj: Sequence[Sequence[int]], subset: Iterable[int]) -> list[list[int]]:
    """Components of the subgraph induced by ``subset``.

    Each component is a sorted list (minimum-index node first); components
    are ordered by their minimum node.
    """
    members = set(subset)
    comps = []
    for start in sorted(members):
        if start not in members:
            continue
        members.discard(start)
        comp = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w in members:
                    members.discard(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


@dataclass
class SplitDigraph:
    n_vertices: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray  # math.inf for uncapacitated arcs
    kind: np.ndarray
    origin: np.ndarray  # original node of node/root/sink arcs, -1 otherwise
    root: int = -1
    sink: int = -1

    @property
    def n_arcs(self) -> int:
        return len(self.tail)

    def finite_total(self) -> float:
        cap = self.capacity[np.isfinite(self.capacity)]
        return float(cap.sum())

    @classmethod
    def from_arcs(cls, n_vertices: int, arcs: Sequence[tuple[int, int, float]]) -> "SplitDigraph":
        """Generic digraph; every arc is tagged as an edge arc."""
        m = len(arcs)
        tail = np.array([a[0] for a in arcs], dtype=np.int64).reshape(m)
        head = np.array([a[1] for a in arcs], dtype=np.int64).reshape(m)
        cap = np.array([a[2] for a in arcs], dtype=float).reshape(m)
        return cls(n_vertices, tail, head, cap, np.full(m, EDGE_ARC), np.full(m, -1))


def split_in(i: int) -> int:
    return 2 * i


def split_out(i: int) -> int:
    return 2 * i + 1


def build_split_digraph(
    n_nodes: int,
    edges: np.ndarray,
    node_cap: np.ndarray,
    root_cap: np.ndarray,
    sink_nodes: Optional[Iterable[int]] = None,
) -> SplitDigraph:
    """Node-split digraph with an artificial root (and optional sink).

    Arcs, in order: one node arc ``i_1 -> i_2`` per node (capacity
    ``node_cap[i]``), one root arc ``r -> i_1`` per node (``root_cap[i]``),
    ``i_2 -> j_1`` and ``j_2 -> i_1`` per edge (uncapacitated), then
    ``i_2 -> s`` for every sink node (uncapacitated).
    """
    n = n_nodes
    root = 2 * n
    idx = np.arange(n)
    tails = [2 * idx, np.full(n, root)]
    heads = [2 * idx + 1, 2 * idx]
    caps = [np.asarray(node_cap, float), np.asarray(root_cap, float)]
    kinds = [np.full(n, NODE_ARC), np.full(n, ROOT_ARC)]
    origins = [idx, idx]
    m = len(edges)
    if m:
        a, b = edges[:, 0], edges[:, 1]
        tails.append(np.concatenate([2 * a + 1, 2 * b + 1]))
        heads.append(np.concatenate([2 * b, 2 * a]))
        caps.append(np.full(2 * m, math.inf))
        kinds.append(np.full(2 * m, EDGE_ARC))
        origins.append(np.full(2 * m, -1))
    n_vertices = 2 * n + 1
    sink = -1
    if sink_nodes is not None:
        c = np.array(sorted(set(int(i) for i in sink_nodes)), dtype=np.int64)
        sink = n_vertices
        n_vertices += 1
        tails.append(2 * c + 1)
        heads.append(np.full(len(c), sink))
        caps.append(np.full(len(c), math.inf))
        kinds.append(np.full(len(c), SINK_ARC))
        origins.append(c)
    return SplitDigraph(
        n_vertices,
        np.concatenate(tails).astype(np.int64),
        np.concatenate(heads).astype(np.int64),
        np.concatenate(caps),
        np.concatenate(kinds),
        np.concatenate(origins).astype(np.int64),
        root=root,
        sink=sink,
    )


class FlowNetwork:
    """Residual network for repeated max-flow queries on one digraph.

    Arc ``2a`` of the residual graph is forward arc ``a``, ``2a+1`` its
    reverse. Uncapacitated arcs get a capacity larger than the sum of all
    finite capacities.
    """

    def __init__(self, dg: SplitDigraph):
        self.dg = dg
        big = dg.finite_total() + 1.0
        cap = np.where(np.isfinite(dg.capacity), dg.capacity, big)
        self.big = big
        m = dg.n_arcs
        self.to = [0] * (2 * m)
        self.res = [0.0] * (2 * m)
        self.out: list[list[int]] = [[] for _ in range(dg.n_vertices)]
        for a in range(m):
            t, h = int(dg.tail[a]), int(dg.head[a])
            self.to[2 * a] = h
            self.to[2 * a + 1] = t
            self.res[2 * a] = float(cap[a])
            self.out[t].append(2 * a)
            self.out[h].append(2 * a + 1)
        self.initial = list(self.res)

    def levels(self, s: int, t: int) -> Optional[list[int]]:
        level = [-1] * len(self.out)
        level[s] = 0
        q = deque([s])
        to, res = self.to, self.res
        while q:
            v = q.popleft()
            for e in self.out[v]:
                w = to[e]
                if level[w] < 0 and res[e] > _EPS:
                    level[w] = level[v] + 1
                    q.append(w)
        return level if level[t] >= 0 else None

    def blocking_flow(self, s: int, t: int, level: list[int], limit: float) -> float:
        to, res, out = self.to, self.res, self.out
        it = [0] * len(out)
        total = 0.0
        while total < limit:
            # iterative DFS for one augmenting path in the level graph
            path: list[int] = []
            v = s
            while v != t:
                edges = out[v]
                advanced = False
                while it[v] < len(edges):
                    e = edges[it[v]]
                    w = to[e]
                    if res[e] > _EPS and level[w] == level[v] + 1:
                        path.append(e)
                        v = w
                        advanced = True
                        break
                    it[v] += 1
                if not advanced:
                    if v == s:
                        return total
                    level[v] = -1  # dead end
                    e = path.pop()
                    v = to[e ^ 1]
                    it[v] += 1
            push = min(min(res[e] for e in path), limit - total)
            for e in path:
                res[e] -= push
                res[e ^ 1] += push
            total += push
        return total

    def reachable(self, s: int) -> list[bool]:
        seen = [False] * len(self.out)
        seen[s] = True
        q = deque([s])
        while q:
            v = q.popleft()
            for e in self.out[v]:
                w = self.to[e]
                if not seen[w] and self.res[e] > _EPS:
                    seen[w] = True
                    q.append(w)
        return seen


    def reaching(self, t: int) -> list[bool]:
        """Vertices with a residual path to ``t``."""
        seen = [False] * len(self.out)
        seen[t] = True
        q = deque([t])
        while q:
            w = q.popleft()
            for e in self.out[w]:
                u = self.to[e]
                if not seen[u] and self.res[e ^ 1] > _EPS:
                    seen[u] = True
                    q.append(u)
        return seen

    def solve(self, source: int, target: int, limit: float = math.inf,
              side: str = "source") -> tuple[float, list[int]]:
        """Max flow plus a minimum cut.

        ``side="source"`` returns the arcs leaving the residual-reachable set
        of ``source``; ``side="sink"`` the arcs entering the set of vertices
        that still reach ``target``, i.e. the minimum cut closest to it.
        """
        if source == target:
            raise ValueError("source and target must differ")
        if side not in ("source", "sink"):
            raise ValueError(f"unknown cut side {side!r}")
        self.res = list(self.initial)
        cap_limit = min(limit, self.big)
        value = 0.0
        while value < cap_limit:
            level = self.levels(source, target)
            if level is None:
                break
            pushed = self.blocking_flow(source, target, level, cap_limit - value)
            if pushed <= _EPS:
                break
            value += pushed
        if value >= self.big - 0.5:
            return math.inf, []
        tail, head = self.dg.tail, self.dg.head
        if side == "source":
            src = self.reachable(source)
            cut = [a for a in range(self.dg.n_arcs) if src[tail[a]] and not src[head[a]]]
        else:
            snk = self.reaching(target)
            cut = [a for a in range(self.dg.n_arcs) if snk[head[a]] and not snk[tail[a]]]
        return value, cut


def max_flow_min_cut(
    dg: SplitDigraph, source: int, target: int, limit: float = math.inf, side: str = "source"
) -> tuple[float, list[int]]:
    """Dinic's maximum flow with the source-side minimum cut.

    Returns ``(value, cut_arcs)`` where ``cut_arcs`` are the indices of arcs
    leaving the set of vertices reachable from ``source`` in the final
    residual network. With a finite ``limit`` the augmentation stops once the
    flow reaches it; the returned cut is then only meaningful if
    ``value < limit``. A value of ``math.inf`` means no finite cut exists.
    ``side="sink"`` returns the minimum cut closest to ``target`` instead.
    """
    return FlowNetwork(dg).solve(source, target, limit, side)


def cut_to_separator(dg: SplitDigraph, cut_arcs: Iterable[int]) -> tuple[list[int], list[int]]:
    """Original nodes whose node arcs resp. root arcs are in the cut."""
    w_v = sorted(int(dg.origin[a]) for a in cut_arcs if dg.kind[a] == NODE_ARC)
    w_a = sorted(int(dg.origin[a]) for a in cut_arcs if dg.kind[a] == ROOT_ARC)
    return w_v, w_a


def brute_force_min_cut(dg: SplitDigraph, source: int, target: int) -> float:
    """Minimum ``source``-``target`` cut by enumerating vertex bipartitions.

    Exponential in the number of vertices; intended for small test graphs.
    """
    others = [v for v in range(dg.n_vertices) if v not in (source, target)]
    best = math.inf
    tail, head, cap = dg.tail, dg.head, dg.capacity
    for mask in range(1 << len(others)):
        side = np.zeros(dg.n_vertices, dtype=bool)
        side[source] = True
        for b, v in enumerate(others):
            if mask >> b & 1:
                side[v] = True
        crossing = side[tail] & ~side[head]
        best = min(best, float(cap[crossing].sum()) if crossing.any() else 0.0)
    return best
