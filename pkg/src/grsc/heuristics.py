"""Greedy construction, post-processing, an LP-guided primal heuristic and local branching.

The construction grows up to ``k`` cores from random seed parcels by
repeatedly attaching the cheapest useful parcel along a node-weighted
shortest path, where a parcel's weight is its marginal cost divided by the
quota progress it brings (:func:`node_cost_delta`).
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .formulations import SeparationSettings, add_local_branching, build
from .graph import connected_components
from .instance import Instance
from .milp import CutContext, SolveInterrupted, branch_and_cut
from .oracle import validate
from .separation import CutPool, SeparationPoint
from .solution import Solution, Variant, effective_width

NUM_EPS = 0.001
DEN_EPS = 0.0001
START_THRESHOLD = 0.001


class HeuristicInfeasible(RuntimeError):
    """No protected partial solution could be grown from any start."""


class PartialSolution:
    def __init__(self, inst: Instance, d: int):
        self.inst = inst
        self.d = d
        self.core: set[int] = set()
        self.reserve: set[int] = set()
        self.score = np.zeros(inst.n_species)

    def ball(self, i: int) -> frozenset[int]:
        return self.inst.closed_neighborhood(i, self.d)

    def add_core(self, i: int) -> None:
        inst = self.inst
        if i in self.core:
            return
        self.core.add(i)
        self.score[: inst.n_s1] += inst.weight[: inst.n_s1, i]
        for j in self.ball(i):
            if j not in self.reserve:
                self.reserve.add(j)
                self.score[inst.n_s1:] += inst.weight[inst.n_s1:, j]

    def hosted(self) -> np.ndarray:
        return self.score >= self.inst.lam

    def protected(self) -> tuple[bool, bool]:
        h = self.hosted()
        inst = self.inst
        return bool(h[: inst.n_s1].sum() >= inst.p1), bool(h[inst.n_s1:].sum() >= inst.p2)


def node_cost_delta(i: int, S: PartialSolution, cost: Optional[np.ndarray] = None) -> float:
    """Marginal cost of making ``i`` a core parcel per unit of quota progress.

    Only unhosted species of a class that is not yet protected count in the
    denominator. A net negative progress term is clamped at zero so the
    value stays positive.
    """
    inst = S.inst
    cost = inst.cost if cost is None else cost
    new = [j for j in S.ball(i) if j not in S.reserve]
    num = float(sum(cost[j] for j in new)) + NUM_EPS
    hosted = S.hosted()
    prot1, prot2 = S.protected()
    den = 0.0
    if not prot1:
        for s in inst.species_s1:
            if not hosted[s]:
                den += inst.weight[s, i] + S.score[s] - inst.lam[s]
    if not prot2:
        for s in inst.species_s2:
            if not hosted[s]:
                gain = float(inst.weight[s, new].sum()) if new else 0.0
                den += gain + S.score[s] - inst.lam[s]
    return num / (max(den, 0.0) + DEN_EPS)


def _terminals(S: PartialSolution) -> list[int]:
    inst = S.inst
    hosted = S.hosted()
    prot1, prot2 = S.protected()
    need1 = [] if prot1 else [s for s in inst.species_s1 if not hosted[s]]
    need2 = [] if prot2 else [s for s in inst.species_s2 if not hosted[s]]
    out = []
    for i in range(inst.n_nodes):
        if i in S.core:
            continue
        if need1 and any(inst.weight[s, i] > 0 for s in need1):
            out.append(i)
            continue
        if need2:
            fresh = [j for j in S.ball(i) if j not in S.reserve]
            if fresh and any(inst.weight[s, j] > 0 for s in need2 for j in fresh):
                out.append(i)
    return out


def _shortest_paths(inst: Instance, sources: set[int], weight: dict[int, float]):
    """Multi-source Dijkstra with node weights; sources cost nothing."""
    dist = {i: 0.0 for i in sources}
    pred: dict[int, int] = {}
    heap = [(0.0, i) for i in sorted(sources)]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w in inst.adjacency[v]:
            if w in sources:
                continue
            nd = d + weight[w]
            if nd < dist.get(w, math.inf) or (nd == dist.get(w) and v < pred.get(w, math.inf)):
                dist[w] = nd
                pred[w] = v
                heapq.heappush(heap, (nd, w))
    return dist, pred


def _grow(inst: Instance, seeds, d: int, cost: Optional[np.ndarray]) -> Optional[PartialSolution]:
    S = PartialSolution(inst, d)
    for i in seeds:
        S.add_core(int(i))
    while not all(S.protected()):
        terms = _terminals(S)
        if not terms:
            return None
        weight = {i: node_cost_delta(i, S, cost) for i in range(inst.n_nodes) if i not in S.core}
        dist, pred = _shortest_paths(inst, S.core, weight)
        reach = [t for t in terms if t in dist]
        if not reach:
            return None
        target = min(reach, key=lambda t: (dist[t], t))
        path = [target]
        while path[-1] in pred:
            path.append(pred[path[-1]])
        for v in reversed(path):
            S.add_core(v)
    return S


def _is_feasible(inst: Instance, variant: Variant, core: set[int], reserve: set[int], k: int) -> bool:
    cm = np.zeros(inst.n_nodes, dtype=bool)
    cm[list(core)] = True
    rm = np.zeros(inst.n_nodes, dtype=bool)
    rm[list(reserve)] = True
    n1 = inst.n_s1
    if n1 and (inst.weight[:n1] @ cm >= inst.lam[:n1]).sum() < inst.p1:
        return False
    if inst.n_s2 and (inst.weight[n1:] @ rm >= inst.lam[n1:]).sum() < inst.p2:
        return False
    if inst.p1 > 0 and n1 == 0 or inst.p2 > 0 and inst.n_s2 == 0:
        return False
    if variant.has_connectivity:
        nodes = core if variant is Variant.GRSC_CB else reserve
        if len(connected_components(inst.adjacency, nodes)) > k:
            return False
    return True


def post_process(inst: Instance, variant: Variant | str, sol: Solution, k: Optional[int] = None) -> Solution:
    """Greedy removal of core parcels.

    Each round removes the core parcel whose removal (together with the
    buffer parcels only it was covering) keeps the solution feasible and
    saves the most cost; stops when no removal saves anything.
    """
    variant = Variant.parse(variant)
    k = inst.max_components if k is None else k
    d = effective_width(inst, variant)
    core = set(sol.core) if variant.has_buffer else set(sol.reserve)
    cover = np.zeros(inst.n_nodes, dtype=np.int64)
    for i in core:
        cover[list(inst.closed_neighborhood(i, d))] += 1
    while True:
        best, best_gain = None, 0.0
        for i in sorted(core):
            ball = inst.closed_neighborhood(i, d)
            own = [j for j in ball if cover[j] == 1]
            gain = float(inst.cost[own].sum()) if own else 0.0
            if gain <= best_gain:
                continue
            rest = core - {i}
            reserve = {j for j in range(inst.n_nodes) if cover[j] > 0} - set(own)
            if _is_feasible(inst, variant, rest, reserve, k):
                best, best_gain = i, gain
        if best is None:
            break
        core.discard(best)
        cover[list(inst.closed_neighborhood(best, d))] -= 1
    reserve = {j for j in range(inst.n_nodes) if cover[j] > 0}
    return Solution.from_sets(inst, variant, core, reserve)


def construct(inst: Instance, variant: Variant | str = Variant.GRSC_CB, k: Optional[int] = None,
              seed: int = 0, nstarts: int = 20, *, cost: Optional[np.ndarray] = None,
              start_pool=None) -> Solution:
    """Best post-processed solution over ``nstarts`` random starts.

    ``cost`` replaces the parcel costs inside the node-cost function only;
    the returned objective always uses the true costs. Starting parcels are
    drawn without replacement from ``start_pool`` (all parcels by default).
    """
    variant = Variant.parse(variant)
    k = inst.max_components if k is None else k
    d = effective_width(inst, variant)
    rng = np.random.default_rng(seed)
    pool = np.arange(inst.n_nodes) if start_pool is None or len(start_pool) == 0 else np.asarray(start_pool)
    best: Optional[Solution] = None
    n_seeds = max(1, k)
    for _ in range(nstarts):
        seeds = rng.choice(pool, size=min(n_seeds, len(pool)), replace=False)
        S = _grow(inst, sorted(int(i) for i in seeds), d, cost)
        if S is None:
            continue
        sol = post_process(inst, variant, Solution.from_sets(inst, variant, S.core, S.reserve), k)
        if best is None or sol.objective < best.objective:
            best = sol
    if best is None:
        raise HeuristicInfeasible("no start reached the protection targets")
    return best


def primal_from_lp(inst: Instance, variant: Variant | str, point: SeparationPoint, k: Optional[int] = None,
                   seed: int = 0, nstarts: int = 5) -> Optional[Solution]:
    """Construction biased by an LP point; ``None`` if it fails.

    Parcel costs are scaled by ``1 - x`` and starts are drawn from parcels
    whose root value is at least 0.001 (all parcels when there are none).
    An integral, feasible LP point is also offered as a candidate.
    """
    variant = Variant.parse(variant)
    k = inst.max_components if k is None else k
    biased = inst.cost * np.clip(1.0 - point.x, 0.0, 1.0)
    pool = np.flatnonzero(point.y >= START_THRESHOLD) if point.y is not None else np.zeros(0, dtype=np.int64)
    cands = []
    try:
        cands.append(construct(inst, variant, k, seed, nstarts, cost=biased, start_pool=pool))
    except HeuristicInfeasible:
        pass
    if _integral(point):
        sol = Solution.from_sets(inst, variant, np.flatnonzero(point.z > 0.5).tolist(),
                                 np.flatnonzero(point.x > 0.5).tolist())
        if validate(inst, variant, sol, k).feasible:
            cands.append(post_process(inst, variant, sol, k))
    return min(cands, key=lambda s: s.objective) if cands else None


def _integral(p: SeparationPoint) -> bool:
    arrs = [p.x, p.z] + ([p.y] if p.y is not None else [])
    return all(np.all(np.abs(a - np.round(a)) <= 1e-6) for a in arrs)


def primal_callback(form, seed: int = 0, nstarts: int = 5):
    """Heuristic callback for :func:`grsc.milp.branch_and_cut`."""
    calls = [0]

    def heuristic(values: np.ndarray, ctx: CutContext):
        calls[0] += 1
        sol = primal_from_lp(form.inst, form.variant, form.point(values), seed=seed + calls[0], nstarts=nstarts)
        return None if sol is None else form.to_values(sol)

    return heuristic


@dataclass
class LocalBranchingParams:
    radius: int = 5
    radius_step: int = 5
    max_radius: int = 20
    iteration_time: float = 20.0
    time_limit: float = 180.0
    max_iterations: int = 100
    use_primal: bool = True
    seed: int = 0
    settings: SeparationSettings = field(default_factory=SeparationSettings)


@dataclass
class LocalBranchingTrace:
    objectives: list[float] = field(default_factory=list)
    radii: list[int] = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = ""


def local_branching(inst: Instance, variant: Variant | str, start: Solution, pool: Optional[CutPool] = None,
                    params: Optional[LocalBranchingParams] = None) -> tuple[Solution, CutPool, LocalBranchingTrace]:
    """First-improvement local branching on the core set.

    Each iteration solves the model restricted to solutions sharing at least
    ``|core| - r`` core parcels with the incumbent and stops at the first
    strictly better solution. Failure widens ``r`` by ``radius_step``,
    success resets it. Every cut found is added to ``pool`` and fed to the
    following iterations.
    """
    variant = Variant.parse(variant)
    params = params or LocalBranchingParams()
    pool = CutPool() if pool is None else pool
    form = build(inst, variant, params.settings)
    best = start
    r = params.radius
    trace = LocalBranchingTrace([best.objective], [])
    t0 = time.perf_counter()
    while True:
        left = params.time_limit - (time.perf_counter() - t0)
        if trace.iterations >= params.max_iterations:
            trace.stop_reason = "iterations"
            break
        if r > params.max_radius:
            trace.stop_reason = "radius"
            break
        if left <= 0:
            trace.stop_reason = "time"
            break
        trace.iterations += 1
        trace.radii.append(r)
        lbf = add_local_branching(form, best.core, r)
        locbra = lbf.model.constraints[-1]
        heur = None
        escaped: list[Solution] = []
        if params.use_primal:
            inner = primal_callback(lbf, seed=params.seed + 1000 * trace.iterations)
            incumbent_cost = best.objective

            def heur(values, ctx, inner=inner, locbra=locbra, incumbent_cost=incumbent_cost):
                cand = inner(values, ctx)
                if cand is not None and locbra.violation(cand) > 1e-6:
                    sol = lbf.to_solution(cand)
                    if sol.objective < incumbent_cost - 1e-9 and validate(inst, variant, sol).feasible:
                        # better solution outside the neighbourhood: restart from it
                        escaped.append(sol)
                        raise SolveInterrupted("primal heuristic left the neighbourhood")
                return cand

        res = branch_and_cut(lbf.model, lbf.generators, heur, time_limit=min(params.iteration_time, left),
                             objective_cutoff=best.objective, stop_at_first=True,
                             initial_cuts=form.pool_rows(pool))
        pool.extend(c.payload for c in res.cuts if c.payload is not None)
        improved = escaped[0] if escaped else None
        if improved is None and res.values is not None:
            improved = lbf.to_solution(res.values)
        if improved is not None and improved.objective < best.objective - 1e-9:
            best = improved
            r = params.radius
            trace.objectives.append(best.objective)
            continue
        if res.status == "infeasible" and r >= len(best.core):
            trace.stop_reason = "optimal"
            break
        r += params.radius_step
    return best, pool, trace
