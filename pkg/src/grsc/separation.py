"""Cut generators for the reserve models and the ordered cut loop.

All inequalities have the form

    sum_{i in W_V} v_i + sum_{j in W_A} y_j >= rhs

with ``v`` the core (``z``) or reserve (``x``) variable and ``rhs`` a single
``z``, ``x`` or ``u`` variable. Connectivity cuts keep only root arcs with
index at most the target node (down-lifting), which is valid as long as every
component may be rooted at its smallest node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .graph import (
    FlowNetwork,
    build_split_digraph,
    connected_components,
    cut_to_separator,
    split_in,
)
from .instance import Instance
from .solution import Variant

VIOLATION_EPS = 1e-6
DEFAULT_TAU = 0.5
COVER_CUT_LIMIT = 20
# Minimum cuts are taken closest to the target: among equal-valued cuts this
# keeps zero-valued root arcs out of the separator and yields the
# neighbourhood of the target's component.
CUT_SIDE = "sink"

CORECON = "CORECON"
ALLCON = "ALLCON"
SC = "SC"
COVER = "COVER"
SCC = "SCC"


@dataclass
class SeparationPoint:
    """LP (or integral) values of the model variables, split by family."""

    u: np.ndarray
    x: np.ndarray
    z: np.ndarray
    y: Optional[np.ndarray] = None

    def family(self, name: str) -> np.ndarray:
        return {"u": self.u, "x": self.x, "z": self.z, "y": self.y}[name]


@dataclass(frozen=True)
class Cut:
    family: str
    var: str  # variable of the W_V terms, "z" or "x"
    w_v: tuple[int, ...]
    w_a: tuple[int, ...]
    rhs_kind: str  # "z", "x" or "u"
    rhs_id: int

    @property
    def key(self) -> tuple:
        return (self.family, self.var, self.rhs_kind, self.rhs_id, self.w_v, self.w_a)

    def lhs(self, p: SeparationPoint) -> float:
        v = p.family(self.var)
        total = float(v[list(self.w_v)].sum()) if self.w_v else 0.0
        if self.w_a:
            total += float(p.y[list(self.w_a)].sum())
        return total

    def rhs(self, p: SeparationPoint) -> float:
        return float(p.family(self.rhs_kind)[self.rhs_id])

    def violation(self, p: SeparationPoint) -> float:
        return self.rhs(p) - self.lhs(p)


class CutPool:
    """Deduplicated store of globally valid cuts."""

    def __init__(self, cuts: Iterable[Cut] = ()):
        self._cuts: dict[tuple, Cut] = {}
        self.extend(cuts)

    def add(self, cut: Cut) -> bool:
        if cut.key in self._cuts:
            return False
        self._cuts[cut.key] = cut
        return True

    def extend(self, cuts: Iterable[Cut]) -> int:
        return sum(self.add(c) for c in cuts)

    def __len__(self) -> int:
        return len(self._cuts)

    def __iter__(self):
        return iter(self._cuts.values())

    def __contains__(self, cut: Cut) -> bool:
        return cut.key in self._cuts


# -- connectivity cuts ------------------------------------------------------------------


def _conn_var(family: str) -> str:
    if family == CORECON:
        return "z"
    if family == ALLCON:
        return "x"
    raise ValueError(f"not a connectivity family: {family}")


def separate_connectivity_fractional(
    inst: Instance,
    point: SeparationPoint,
    family: str = CORECON,
    tau: float = DEFAULT_TAU,
    eps: float = VIOLATION_EPS,
) -> list[Cut]:
    """Max-flow separation of node-separator cuts at a fractional point.

    Candidates are the nodes with value at least ``tau``, largest value
    first. Once a cut is found for a target, the nodes whose root arcs lie
    in that cut are not tried as targets in this call.
    """
    var = _conn_var(family)
    vals = point.family(var)
    y = point.y
    dg = build_split_digraph(inst.n_nodes, inst.edges, np.clip(vals, 0, None), np.clip(y, 0, None))
    net = FlowNetwork(dg)
    cand = [i for i in np.lexsort((np.arange(inst.n_nodes), -vals)) if vals[i] >= tau]
    skip: set[int] = set()
    cuts = []
    for ell in cand:
        ell = int(ell)
        if ell in skip:
            continue
        target_val = float(vals[ell])
        flow, arcs = net.solve(dg.root, split_in(ell), limit=target_val, side=CUT_SIDE)
        if flow >= target_val - eps:
            continue
        w_v, w_a = cut_to_separator(dg, arcs)
        skip.update(w_a)
        cut = Cut(family, var, tuple(w_v), tuple(j for j in w_a if j <= ell), var, ell)
        if cut.violation(point) >= eps:
            cuts.append(cut)
    return cuts


def separate_connectivity_integer(
    inst: Instance, point: SeparationPoint, family: str = CORECON
) -> list[Cut]:
    """Cuts for every unrooted component of an integral point.

    For a component ``H`` without a root the separator is the outer
    neighbourhood of ``H`` plus the root arcs of ``H``; after down-lifting
    only the root arc of the target (the smallest node of ``H``) remains.
    """
    var = _conn_var(family)
    vals = point.family(var)
    chosen = np.flatnonzero(vals > 0.5)
    cuts = []
    for comp in connected_components(inst.adjacency, chosen.tolist()):
        if any(point.y[i] > 0.5 for i in comp):
            continue
        members = set(comp)
        outer = sorted({j for i in comp for j in inst.adjacency[i] if j not in members})
        ell = comp[0]
        cuts.append(Cut(family, var, tuple(outer), (ell,), var, ell))
    return cuts


# -- covers and species cuts ---------------------------------------------------------------


def cover_var(inst: Instance, s: int) -> str:
    return "z" if inst.in_s1(s) else "x"


def species_path_var(inst: Instance, variant: Variant, s: int) -> str:
    """Node variable whose induced subgraph must link species ``s`` to a root."""
    if Variant.parse(variant) is Variant.GRSC_CB and inst.in_s1(s):
        return "z"
    return "x"


def find_cover(inst: Instance, values: np.ndarray, s: int) -> Optional[tuple[int, ...]]:
    """Greedy cover: cheapest value-per-score nodes until the rest cannot meet the quota.

    A cover ``C`` needs ``sum_C w > W - lambda``, i.e. the nodes outside
    ``C`` score strictly less than the quota. Returns ``None`` when no cover
    exists (zero quota).
    """
    w = inst.weight[s]
    total = float(w.sum())
    need = total - float(inst.lam[s])
    if inst.lam[s] <= 0:
        return None
    if need < 0:
        return ()
    support = inst.support(s)
    ratio = values[support] / w[support]
    order = support[np.lexsort((support, ratio))]
    acc = 0.0
    chosen = []
    for j in order:
        chosen.append(int(j))
        acc += float(w[j])
        if acc > need:
            return tuple(sorted(chosen))
    return None


def separate_cover(
    inst: Instance, point: SeparationPoint, s: int, eps: float = VIOLATION_EPS
) -> tuple[Optional[tuple[int, ...]], Optional[Cut]]:
    var = cover_var(inst, s)
    vals = point.family(var)
    cover = find_cover(inst, vals, s)
    if cover is None:
        return None, None
    cut = Cut(COVER, var, cover, (), "u", s)
    return cover, (cut if cut.violation(point) >= eps else None)


def _species_flow_cut(inst, point, s, sink_nodes, family, path_var, eps) -> Optional[Cut]:
    u_s = float(point.u[s])
    if u_s < eps:
        return None
    vals = point.family(path_var)
    dg = build_split_digraph(inst.n_nodes, inst.edges, np.clip(vals, 0, None), np.clip(point.y, 0, None),
                             sink_nodes=sink_nodes)
    flow, arcs = FlowNetwork(dg).solve(dg.root, dg.sink, limit=u_s, side=CUT_SIDE)
    if flow >= u_s - eps:
        return None
    w_v, w_a = cut_to_separator(dg, arcs)
    cut = Cut(family, path_var, tuple(w_v), tuple(w_a), "u", s)
    return cut if cut.violation(point) >= eps else None


def separate_species_cover(
    inst: Instance,
    point: SeparationPoint,
    s: int,
    cover: Iterable[int],
    path_var: str = "z",
    eps: float = VIOLATION_EPS,
) -> Optional[Cut]:
    """Species-cover cut: separate the root from the sink fed by the cover nodes."""
    return _species_flow_cut(inst, point, s, list(cover), SCC, path_var, eps)


def separate_species_cut(
    inst: Instance, point: SeparationPoint, s: int, path_var: str = "z", eps: float = VIOLATION_EPS
) -> Optional[Cut]:
    """Species cut (sink fed by every node with positive score).

    Dominated by the species-cover cut, so the cut loop never calls it.
    """
    return _species_flow_cut(inst, point, s, inst.support(s).tolist(), SC, path_var, eps)


# -- cut loop -----------------------------------------------------------------------------


@dataclass
class LoopState:
    is_root: bool = True
    is_integer: bool = False
    use_cover: bool = True
    tau: float = DEFAULT_TAU
    cover_limit: int = COVER_CUT_LIMIT
    cover_cuts_added: int = 0


def _cover_stage(inst, variant, point, state) -> list[Cut]:
    cuts = []
    budget = state.cover_limit - state.cover_cuts_added
    for s in range(inst.n_species):
        if len(cuts) >= budget:
            break
        cover, cut = separate_cover(inst, point, s)
        if cover is None:
            continue
        if cut is not None:
            cuts.append(cut)
        if variant.has_connectivity and len(cuts) < budget:
            scc = separate_species_cover(inst, point, s, cover, species_path_var(inst, variant, s))
            if scc is not None:
                cuts.append(scc)
    return cuts[:budget]


def cut_loop(inst: Instance, variant: Variant | str, point: SeparationPoint, state: LoopState) -> list[Cut]:
    """One pass of the ordered separation.

    Integral points only get connectivity cuts. Fractional points first get
    cover and species-cover cuts (while the budget lasts) and, only if none
    is found, connectivity cuts.
    """
    variant = Variant.parse(variant)
    family = {"z": CORECON, "x": ALLCON, None: None}[variant.connected_family]
    if state.is_integer:
        return separate_connectivity_integer(inst, point, family) if family else []
    if state.use_cover and state.cover_cuts_added < state.cover_limit:
        cuts = _cover_stage(inst, variant, point, state)
        if cuts:
            state.cover_cuts_added += len(cuts)
            return cuts
    if family:
        return separate_connectivity_fractional(inst, point, family, state.tau)
    return []
