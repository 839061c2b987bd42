from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .graph import connected_components
from .instance import Instance


class Variant(str, enum.Enum):
    GRSC = "GRSC"
    GRSC_B = "GRSC-B"
    GRSC_C = "GRSC-C"
    GRSC_CB = "GRSC-CB"

    @classmethod
    def parse(cls, text: "Variant | str") -> "Variant":
        if isinstance(text, cls):
            return text
        return cls(str(text).upper().replace("_", "-"))

    @property
    def has_buffer(self) -> bool:
        return self in (Variant.GRSC_B, Variant.GRSC_CB)

    @property
    def has_connectivity(self) -> bool:
        return self in (Variant.GRSC_C, Variant.GRSC_CB)

    @property
    def connected_family(self) -> Optional[str]:
        """Which node variable the connectivity cuts are written in."""
        if self is Variant.GRSC_CB:
            return "z"
        if self is Variant.GRSC_C:
            return "x"
        return None


def effective_width(inst: Instance, variant: Variant) -> int:
    """Buffer width used by the variant (no buffer means width zero)."""
    return inst.buffer_width if Variant.parse(variant).has_buffer else 0


def buffered(inst: Instance, core: Iterable[int], d: int) -> frozenset[int]:
    out: set[int] = set()
    for i in core:
        out |= inst.closed_neighborhood(i, d)
    return frozenset(out)


def hosted_species(inst: Instance, core: Iterable[int], reserve: Iterable[int]) -> frozenset[int]:
    core_mask = np.zeros(inst.n_nodes, dtype=bool)
    core_mask[list(core)] = True
    res_mask = np.zeros(inst.n_nodes, dtype=bool)
    res_mask[list(reserve)] = True
    hosted = set()
    for s in range(inst.n_species):
        mask = core_mask if inst.in_s1(s) else res_mask
        if float(inst.weight[s, mask].sum()) >= inst.lam[s]:
            hosted.add(s)
    return frozenset(hosted)


@dataclass(frozen=True)
class Solution:
    core: frozenset[int]
    reserve: frozenset[int]
    roots: frozenset[int]
    hosted: frozenset[int]
    objective: float

    @classmethod
    def from_sets(cls, inst: Instance, variant: Variant | str, core: Iterable[int],
                  reserve: Optional[Iterable[int]] = None, roots: Optional[Iterable[int]] = None,
                  hosted: Optional[Iterable[int]] = None) -> "Solution":
        """Build a solution, filling in what is implied.

        ``reserve`` defaults to the buffered core, ``roots`` to the
        minimum-index node of every connected component (of the core for
        GRSC-CB, of the reserve for GRSC-C, none otherwise) and ``hosted`` to
        every species whose quota the sets meet.
        """
        variant = Variant.parse(variant)
        core = frozenset(int(i) for i in core)
        if reserve is None:
            reserve = buffered(inst, core, effective_width(inst, variant))
        reserve = frozenset(int(i) for i in reserve)
        if roots is None:
            roots = canonical_roots(inst, variant, core, reserve)
        if hosted is None:
            hosted = hosted_species(inst, core, reserve)
        obj = float(sum(inst.cost[i] for i in sorted(reserve)))
        return cls(core, reserve, frozenset(int(i) for i in roots), frozenset(hosted), obj)

    @classmethod
    def empty(cls, inst: Instance, variant: Variant | str = Variant.GRSC) -> "Solution":
        return cls.from_sets(inst, variant, ())

    def components(self, inst: Instance, variant: Variant | str) -> list[list[int]]:
        variant = Variant.parse(variant)
        nodes = self.reserve if variant is Variant.GRSC_C else self.core
        return connected_components(inst.adjacency, nodes)

    def n_components(self, inst: Instance, variant: Variant | str) -> int:
        return len(self.components(inst, variant))


def canonical_roots(inst: Instance, variant: Variant, core, reserve) -> frozenset[int]:
    variant = Variant.parse(variant)
    if not variant.has_connectivity:
        return frozenset()
    nodes = reserve if variant is Variant.GRSC_C else core
    return frozenset(c[0] for c in connected_components(inst.adjacency, nodes))
