"""Binary programs for the four reserve-design variants.

Column layout: ``u_s`` for every species, then ``x_i``, ``z_i`` and, for
the connectivity variants, ``y_i``. The buffer-coverage rows use the closed
neighbourhood (the node itself plus everything within ``d`` hops), so a lone
core parcel covers itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance, InvalidParameterError
from .milp import CutContext, LinearCut, MilpModel, Strategy
from .separation import Cut, CutPool, LoopState, SeparationPoint, cut_loop
from .solution import Solution, Variant, effective_width


@dataclass
class SeparationSettings:
    use_cover: bool = True
    tau: float = 0.5
    cover_limit: int = 20
    strategy: Strategy = Strategy.ROOT_ONLY


@dataclass
class Formulation:
    inst: Instance
    variant: Variant
    model: MilpModel
    u: np.ndarray
    x: np.ndarray
    z: np.ndarray
    y: Optional[np.ndarray]
    ncomp_row: Optional[int] = None
    settings: SeparationSettings = field(default_factory=SeparationSettings)

    # -- value conversion ----------------------------------------------------------

    def point(self, values: np.ndarray) -> SeparationPoint:
        values = np.asarray(values, dtype=float)
        y = values[self.y] if self.y is not None else None
        return SeparationPoint(values[self.u], values[self.x], values[self.z], y)

    def to_solution(self, values: np.ndarray) -> Solution:
        values = np.asarray(values, dtype=float)
        core = np.flatnonzero(values[self.z] > 0.5)
        reserve = np.flatnonzero(values[self.x] > 0.5)
        roots = np.flatnonzero(values[self.y] > 0.5) if self.y is not None else ()
        hosted = np.flatnonzero(values[self.u] > 0.5)
        return Solution.from_sets(self.inst, self.variant, core.tolist(), reserve.tolist(),
                                  list(roots), hosted.tolist())

    def to_values(self, sol: Solution, hosted: str = "maximal") -> np.ndarray:
        """Column vector of a solution.

        With ``hosted="maximal"`` every species whose quota is met gets
        ``u_s = 1``; with ``"given"`` the solution's own ``hosted`` set is used.
        """
        v = np.zeros(self.model.n_vars)
        v[self.x[list(sol.reserve)]] = 1
        v[self.z[list(sol.core)]] = 1
        if self.y is not None:
            v[self.y[list(sol.roots)]] = 1
        if hosted == "maximal":
            from .solution import hosted_species
            chosen = hosted_species(self.inst, sol.core, sol.reserve)
        else:
            chosen = sol.hosted
        v[self.u[list(chosen)]] = 1
        return v

    # -- cuts -------------------------------------------------------------------------

    def linearize(self, cut: Cut) -> LinearCut:
        cols = {"z": self.z, "x": self.x, "u": self.u}
        coef: dict[int, float] = {}
        for i in cut.w_v:
            j = int(cols[cut.var][i])
            coef[j] = coef.get(j, 0.0) + 1.0
        for i in cut.w_a:
            j = int(self.y[i])
            coef[j] = coef.get(j, 0.0) + 1.0
        r = int(cols[cut.rhs_kind][cut.rhs_id])
        coef[r] = coef.get(r, 0.0) - 1.0
        keys = sorted(k for k, a in coef.items() if a != 0.0)
        return LinearCut(tuple(keys), tuple(coef[k] for k in keys), ">=", 0.0,
                         name=f"{cut.family}_{cut.rhs_kind}{cut.rhs_id}", key=cut.key, payload=cut)

    def generator(self, settings: Optional[SeparationSettings] = None):
        """Lazy-cut callback running the cut loop; keeps its own cover budget."""
        settings = settings or self.settings
        budget = LoopState(use_cover=settings.use_cover, tau=settings.tau, cover_limit=settings.cover_limit)

        def generate(values: np.ndarray, ctx: CutContext) -> list[LinearCut]:
            budget.is_root = ctx.is_root
            budget.is_integer = ctx.is_integer
            cuts = cut_loop(self.inst, self.variant, self.point(values), budget)
            return [self.linearize(c) for c in cuts]

        return generate

    @property
    def generators(self) -> list:
        if not self.variant.has_connectivity and not self.settings.use_cover:
            return []
        return [self.generator()]

    def pool_rows(self, pool: CutPool) -> list[LinearCut]:
        return [self.linearize(c) for c in pool]


def build(inst: Instance, variant: Variant | str, settings: Optional[SeparationSettings] = None) -> Formulation:
    variant = Variant.parse(variant)
    k = inst.max_components
    if variant.has_connectivity and k < 1:
        raise InvalidParameterError("connectivity variants need at least one component (k >= 1)")
    n, S = inst.n_nodes, inst.n_species
    m = MilpModel(f"{variant.value}_{inst.name or 'instance'}")
    u = np.array([m.add_var(f"u_{s}") for s in range(S)], dtype=np.int64)
    x = np.array([m.add_var(f"x_{i}", obj=float(inst.cost[i])) for i in range(n)], dtype=np.int64)
    z = np.array([m.add_var(f"z_{i}") for i in range(n)], dtype=np.int64)
    y = None
    if variant.has_connectivity:
        y = np.array([m.add_var(f"y_{i}") for i in range(n)], dtype=np.int64)

    for s in range(S):
        cols = z if inst.in_s1(s) else x
        row = [(cols[i], inst.weight[s, i]) for i in inst.support(s)]
        row.append((u[s], -float(inst.lam[s])))
        m.add_constraint(row, ">=", 0.0, f"SQ_{s}")
    m.add_constraint([(u[s], 1.0) for s in inst.species_s1], ">=", inst.p1, "PROTECT1")
    m.add_constraint([(u[s], 1.0) for s in inst.species_s2], ">=", inst.p2, "PROTECT2")
    for i in range(n):
        m.add_constraint([(z[i], 1.0), (x[i], -1.0)], "<=", 0.0, f"LINK_{i}")

    if variant.has_buffer:
        d = inst.buffer_width
        for i in range(n):
            for j in sorted(inst.neighborhood(i, d)):
                m.add_constraint([(z[i], 1.0), (x[j], -1.0)], "<=", 0.0, f"BUFF1_{i}_{j}")
        for i in range(n):
            row = [(x[i], 1.0)] + [(z[j], -1.0) for j in sorted(inst.closed_neighborhood(i, d))]
            m.add_constraint(row, "<=", 0.0, f"BUFF2_{i}")

    ncomp = None
    if variant.has_connectivity:
        ncomp = m.add_constraint([(y[i], 1.0) for i in range(n)], "<=", k, "NCOMP")
        link = z if variant is Variant.GRSC_CB else x
        tag = "YZ" if variant is Variant.GRSC_CB else "YX"
        for i in range(n):
            m.add_constraint([(y[i], 1.0), (link[i], -1.0)], "<=", 0.0, f"{tag}_{i}")

    return Formulation(inst, variant, m, u, x, z, y, ncomp, settings or SeparationSettings())


def force_species(form: Formulation, s: int) -> Formulation:
    """Copy of the formulation with ``u_s = 1`` added."""
    if not 0 <= s < form.inst.n_species:
        raise InvalidParameterError(f"unknown species {s}")
    model = form.model.copy()
    model.add_constraint([(form.u[s], 1.0)], "==", 1.0, f"FORCE_{s}")
    return Formulation(form.inst, form.variant, model, form.u, form.x, form.z, form.y, form.ncomp_row,
                       form.settings)


def ncomp_equality(form: Formulation, enable: bool = True) -> Formulation:
    """Copy with the component-count row as ``==`` (or back to ``<=``)."""
    if form.ncomp_row is None:
        raise InvalidParameterError("variant has no component-count row")
    model = form.model.copy()
    model.constraints[form.ncomp_row].sense = "==" if enable else "<="
    return Formulation(form.inst, form.variant, model, form.u, form.x, form.z, form.y, form.ncomp_row,
                       form.settings)


def add_local_branching(form: Formulation, core: frozenset[int], radius: int) -> Formulation:
    """Copy restricted to solutions keeping at least ``|core| - radius`` of ``core``."""
    model = form.model.copy()
    model.add_constraint([(form.z[i], 1.0) for i in sorted(core)], ">=", len(core) - radius, "LOCBRA")
    return Formulation(form.inst, form.variant, model, form.u, form.x, form.z, form.y, form.ncomp_row,
                       form.settings)


__all__ = ["Formulation", "SeparationSettings", "build", "force_species", "ncomp_equality",
           "add_local_branching", "effective_width"]
