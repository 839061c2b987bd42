"""Feasibility checking and exhaustive optima for tiny instances.

:func:`brute_force` enumerates one set per candidate solution:

* GRSC / GRSC-C: reserve sets ``X``, with core ``Z = X``. Taking the whole
  reserve as core costs nothing (cost depends on ``x`` only), can only raise
  the first-class quotas, and satisfies linking; connectivity in GRSC-C is
  stated on ``x`` so it is unaffected.
* GRSC-B / GRSC-CB: core sets ``Z``, with reserve ``X`` the union of the
  closed ``d``-neighbourhoods of ``Z``. The buffer rows force ``X`` to
  contain that union and the coverage rows forbid anything else.

Hosted species are taken maximal (``u_s = 1`` whenever the quota is met),
and roots are the smallest node of each component. :func:`brute_force_general`
drops both reductions and enumerates every pair ``Z ⊆ X``; it is used to
check the reductions on graphs with at most 8 nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .graph import connected_components
from .instance import Instance
from .solution import Solution, Variant

MAX_ORACLE_NODES = 14
MAX_GENERAL_NODES = 8


class OracleLimitError(ValueError):
    pass


@dataclass
class FeasibilityReport:
    feasible: bool
    violations: list[tuple[str, object, float]] = field(default_factory=list)
    objective: float = 0.0
    core_components: int = 0
    reserve_components: int = 0

    def families(self) -> set[str]:
        return {v[0] for v in self.violations}


def validate(inst: Instance, variant: Variant | str, sol: Solution, k: Optional[int] = None,
             ncomp_equal: bool = False) -> FeasibilityReport:
    """Check every constraint family of ``variant`` against ``sol``."""
    variant = Variant.parse(variant)
    k = inst.max_components if k is None else k
    n = inst.n_nodes
    for group in (sol.core, sol.reserve, sol.roots):
        if any(not 0 <= i < n for i in group):
            raise ValueError("solution references nodes outside the instance")
    if any(not 0 <= s < inst.n_species for s in sol.hosted):
        raise ValueError("solution references unknown species")
    bad: list[tuple[str, object, float]] = []
    core = sorted(sol.core)
    reserve = sorted(sol.reserve)
    for s in sorted(sol.hosted):
        nodes = core if inst.in_s1(s) else reserve
        score = math.fsum(inst.weight[s, i] for i in nodes)
        if score < inst.lam[s]:
            bad.append(("S1-SQ" if inst.in_s1(s) else "S2-SQ", s, score - float(inst.lam[s])))
    h1 = sum(1 for s in sol.hosted if inst.in_s1(s))
    h2 = len(sol.hosted) - h1
    if h1 < inst.p1:
        bad.append(("S1-PROTECT", None, h1 - inst.p1))
    if h2 < inst.p2:
        bad.append(("S2-PROTECT", None, h2 - inst.p2))
    for i in core:
        if i not in sol.reserve:
            bad.append(("LINK", i, -1.0))
    if variant.has_buffer:
        d = inst.buffer_width
        for i in core:
            for j in sorted(inst.neighborhood(i, d)):
                if j not in sol.reserve:
                    bad.append(("BUFF.1", (i, j), -1.0))
        for i in reserve:
            if not inst.closed_neighborhood(i, d) & sol.core:
                bad.append(("BUFF.2", i, -1.0))
    core_comps = connected_components(inst.adjacency, core)
    res_comps = connected_components(inst.adjacency, reserve)
    if variant.has_connectivity:
        linked = sol.core if variant is Variant.GRSC_CB else sol.reserve
        tag = "YZ" if variant is Variant.GRSC_CB else "YX"
        for i in sorted(sol.roots):
            if i not in linked:
                bad.append((tag, i, -1.0))
        n_roots = len(sol.roots)
        if n_roots > k or (ncomp_equal and n_roots != k):
            bad.append(("NCOMP", None, float(k - n_roots)))
        comps = core_comps if variant is Variant.GRSC_CB else res_comps
        family = "CORECON" if variant is Variant.GRSC_CB else "ALLCON"
        for comp in comps:
            if not sol.roots.intersection(comp):
                bad.append((family, comp[0], -1.0))
    obj = math.fsum(inst.cost[i] for i in reserve)
    if abs(obj - sol.objective) > 1e-6 * max(1.0, abs(obj)):
        bad.append(("COST", None, sol.objective - obj))
    return FeasibilityReport(not bad, bad, obj, len(core_comps), len(res_comps))


def _bits(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def _mask_nodes(mask: int) -> tuple[int, ...]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _hosted_counts(inst: Instance, zbits: np.ndarray, xbits: np.ndarray, forced: Iterable[int]):
    n1 = np.zeros(len(zbits), dtype=np.int64)
    n2 = np.zeros(len(zbits), dtype=np.int64)
    ok = np.ones(len(zbits), dtype=bool)
    forced = set(forced)
    for s in range(inst.n_species):
        bits = zbits if inst.in_s1(s) else xbits
        met = bits.astype(float) @ inst.weight[s] >= inst.lam[s]
        if inst.in_s1(s):
            n1 += met
        else:
            n2 += met
        if s in forced:
            ok &= met
    return ok & (n1 >= inst.p1) & (n2 >= inst.p2)


def brute_force(inst: Instance, variant: Variant | str, k: Optional[int] = None, *,
                forced: Iterable[int] = (), ncomp_equal: bool = False) -> tuple[float, Optional[Solution]]:
    """Exact optimum by enumeration; ``(inf, None)`` when infeasible.

    Among optimal solutions the one whose enumerated set (core for the
    buffer variants, reserve otherwise) is smallest is returned, ties broken
    by the lexicographically smallest node tuple.
    """
    variant = Variant.parse(variant)
    n = inst.n_nodes
    if n > MAX_ORACLE_NODES:
        raise OracleLimitError(f"oracle is limited to {MAX_ORACLE_NODES} nodes")
    k = inst.max_components if k is None else k
    masks = np.arange(1 << n, dtype=np.int64)
    sel = _bits(masks, n)
    if variant.has_buffer:
        d = inst.buffer_width
        ball = np.array([sum(1 << j for j in inst.closed_neighborhood(i, d)) for i in range(n)], dtype=np.int64)
        xmask = np.zeros_like(masks)
        for i in range(n):
            xmask |= np.where(sel[:, i], ball[i], 0)
        zbits, xbits = sel, _bits(xmask, n)
    else:
        zbits = xbits = sel
    cost = xbits.astype(float) @ inst.cost
    feasible = np.flatnonzero(_hosted_counts(inst, zbits, xbits, forced))
    order = sorted(feasible.tolist(), key=lambda m: (cost[m], int(m).bit_count(), _mask_nodes(m)))
    for m in order:
        if variant.has_connectivity:
            support = np.flatnonzero(zbits[m] if variant is Variant.GRSC_CB else xbits[m]).tolist()
            n_comp = len(connected_components(inst.adjacency, support))
            if n_comp > k:
                continue
            if ncomp_equal and len(support) < k:
                continue
        sol = Solution.from_sets(inst, variant, np.flatnonzero(zbits[m]).tolist(), np.flatnonzero(xbits[m]).tolist())
        if ncomp_equal and variant.has_connectivity and len(sol.roots) < k:
            # pad with extra roots on the smallest unused support nodes
            support = sol.core if variant is Variant.GRSC_CB else sol.reserve
            extra = [i for i in sorted(support) if i not in sol.roots][: k - len(sol.roots)]
            sol = Solution(sol.core, sol.reserve, sol.roots | frozenset(extra), sol.hosted, sol.objective)
        return float(cost[m]), sol
    return math.inf, None


def _general_pairs(n: int):
    for xm in range(1 << n):
        zm = xm
        while True:
            yield xm, zm
            if zm == 0:
                break
            zm = (zm - 1) & xm


def enumerate_feasible(inst: Instance, variant: Variant | str, k: Optional[int] = None,
                       max_nodes: int = MAX_GENERAL_NODES) -> list[Solution]:
    """Every feasible ``(Z, X)`` pair, with maximal hosted set and minimum-index roots."""
    variant = Variant.parse(variant)
    n = inst.n_nodes
    if n > max_nodes:
        raise OracleLimitError(f"full enumeration is limited to {max_nodes} nodes")
    k = inst.max_components if k is None else k
    d = inst.buffer_width
    out = []
    for xm, zm in _general_pairs(n):
        z = _mask_nodes(zm)
        x = _mask_nodes(xm)
        if variant.has_buffer:
            xs, zs = set(x), set(z)
            if any(not inst.neighborhood(i, d) <= xs for i in z):
                continue
            if any(not inst.closed_neighborhood(i, d) & zs for i in x):
                continue
        if variant.has_connectivity:
            support = z if variant is Variant.GRSC_CB else x
            if len(connected_components(inst.adjacency, support)) > k:
                continue
        sol = Solution.from_sets(inst, variant, z, x)
        h1 = sum(1 for s in sol.hosted if inst.in_s1(s))
        if h1 < inst.p1 or len(sol.hosted) - h1 < inst.p2:
            continue
        out.append(sol)
    return out


def brute_force_general(inst: Instance, variant: Variant | str, k: Optional[int] = None) -> float:
    """Optimum over all ``Z ⊆ X`` pairs, without the enumeration shortcuts."""
    sols = enumerate_feasible(inst, variant, k)
    return min((s.objective for s in sols), default=math.inf)
