"""Problem instances with their synthetic grid generator and plain-text format.

Species are identified by their row in ``weight``: ids ``0 .. n_s1-1`` form
the class that must be hosted in the core, ids ``n_s1 .. n_s1+n_s2-1`` the
class that may be hosted anywhere in the reserve.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import adjacency_lists, d_neighborhood


class InvalidParameterError(ValueError):
    pass


class InstanceFormatError(ValueError):
    """Raised by :func:`parse_instance`; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Scenario(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"


# field tags for the seed tree of the grid generator
_FIELD_COST = 0
_FIELD_WEIGHT = 1


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    n_nodes: int
    edges: np.ndarray  # (m, 2) int, i < j
    cost: np.ndarray  # (n,)
    n_s1: int
    n_s2: int
    weight: np.ndarray  # (n_s1 + n_s2, n)
    lam: np.ndarray  # (n_s1 + n_s2,)
    p1: int
    p2: int
    buffer_width: int = 1
    max_components: int = 1
    grid_shape: Optional[tuple[int, int]] = None
    name: str = ""

    def __post_init__(self):
        n = int(self.n_nodes)
        object.__setattr__(self, "n_nodes", n)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            edges = np.sort(edges, axis=1)
        object.__setattr__(self, "edges", _frozen(edges, np.int64))
        object.__setattr__(self, "cost", _frozen(self.cost, float))
        n_species = self.n_s1 + self.n_s2
        w = np.asarray(self.weight, dtype=float).reshape(n_species, n)
        object.__setattr__(self, "weight", _frozen(w, float))
        object.__setattr__(self, "lam", _frozen(np.asarray(self.lam, float).reshape(n_species), float))
        self._check()

    def _check(self):
        n = self.n_nodes
        if n < 0:
            raise InvalidParameterError("negative node count")
        if self.cost.shape != (n,):
            raise InvalidParameterError("cost vector must have one entry per node")
        if n and not np.all(self.cost > 0):
            raise InvalidParameterError("costs must be strictly positive")
        if len(self.edges):
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise InvalidParameterError("edge references an unknown node")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise InvalidParameterError("self-loop in edge list")
            if len({(int(a), int(b)) for a, b in self.edges}) != len(self.edges):
                raise InvalidParameterError("duplicate edge")
        if np.any(self.weight < 0) or np.any(self.lam < 0):
            raise InvalidParameterError("weights and quotas must be nonnegative")
        if not (0 <= self.p1 <= self.n_s1 and 0 <= self.p2 <= self.n_s2):
            raise InvalidParameterError("protection counts out of range")
        if self.buffer_width < 0:
            raise InvalidParameterError("buffer width must be nonnegative")
        if self.max_components < 0:
            raise InvalidParameterError("max_components must be nonnegative")

    # -- derived data -----------------------------------------------------

    @property
    def n_species(self) -> int:
        return self.n_s1 + self.n_s2

    @property
    def species_s1(self) -> range:
        return range(self.n_s1)

    @property
    def species_s2(self) -> range:
        return range(self.n_s1, self.n_s1 + self.n_s2)

    def in_s1(self, s: int) -> bool:
        return 0 <= s < self.n_s1

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return adjacency_lists(self.n_nodes, self.edges)

    def neighborhood(self, i: int, d: Optional[int] = None) -> frozenset[int]:
        """``delta_d(i)``: nodes within ``d`` hops of ``i``, excluding ``i``."""
        if d is None:
            d = self.buffer_width
        return self._balls(d)[i] - {i}

    def closed_neighborhood(self, i: int, d: Optional[int] = None) -> frozenset[int]:
        if d is None:
            d = self.buffer_width
        return self._balls(d)[i]

    def _balls(self, d: int) -> tuple[frozenset[int], ...]:
        cache = self.__dict__.setdefault("_ball_cache", {})
        if d not in cache:
            cache[d] = tuple(
                frozenset(d_neighborhood(self.adjacency, i, d)) | {i} for i in range(self.n_nodes)
            )
        return cache[d]

    def support(self, s: int) -> np.ndarray:
        """Nodes with positive score for species ``s``."""
        return np.flatnonzero(self.weight[s] > 0)

    def total_weight(self, s: int) -> float:
        return float(self.weight[s].sum())

    # -- functional updates ------------------------------------------------

    def replace(self, **changes) -> "Instance":
        return dataclasses.replace(self, **changes)

    def same_as(self, other: "Instance") -> bool:
        """Structural equality (numpy fields compared elementwise)."""
        if not isinstance(other, Instance):
            return False
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def apply_scenario(inst: Instance, sc: Scenario | str) -> Instance:
    sc = Scenario(sc)
    p2 = {Scenario.A: inst.n_s2, Scenario.B: math.ceil(0.5 * inst.n_s2), Scenario.C: 0}[sc]
    return inst.replace(p1=inst.n_s1, p2=p2)


def derive_lambda(inst: Instance, fraction: float) -> Instance:
    """Set every quota to ``ceil(fraction * total score of the species)``."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameterError("fraction must lie in [0, 1]")
    lam = [quota_from_fraction(inst.weight[s], fraction) for s in range(inst.n_species)]
    return inst.replace(lam=np.array(lam, dtype=float))


def quota_from_fraction(weights: np.ndarray, fraction: float) -> float:
    total = float(np.sum(weights))
    # round away float noise before the ceiling: 0.05 * 100 must give 5, not 6
    q = math.ceil(round(fraction * total, 9))
    return float(min(q, total)) if total > 0 else 0.0


def threat_score(alpha: int, threats_at_parcel: int, threats_for_species: int) -> float:
    """Threat-discounted suitability ``alpha * (1 - t_i / (t_s + 1))**3``."""
    if threats_at_parcel < 0 or threats_for_species < 0:
        raise InvalidParameterError("threat counts must be nonnegative")
    if threats_at_parcel > threats_for_species:
        raise InvalidParameterError("parcel cannot carry more threats than the species has")
    if alpha not in (0, 1):
        raise InvalidParameterError("alpha must be 0 or 1")
    return alpha * (1.0 - threats_at_parcel / (threats_for_species + 1)) ** 3


def grid_edges(rows: int, cols: int) -> np.ndarray:
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def field_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 stream for one field of one instance.

    The seed tree is ``SeedSequence([seed, *path])`` so each (instance,
    field) pair draws from an independent, reproducible stream.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), *path])))


def generate_grid(
    n: int,
    s1_count: int,
    s2_count: int,
    seed: int,
    *,
    lambda_fraction: float = 0.05,
    scenario: Scenario | str = Scenario.A,
    buffer_width: int = 1,
    max_components: int = 1,
    name: str = "",
) -> Instance:
    """Random ``n x n`` grid instance.

    Costs are uniform integers in [1, 100]; each score is a uniform integer
    in [20, 100] that is then zeroed with probability 0.2 (first class) or
    0.1 (second class). Boundary parcels score zero for every species.
    """
    if n < 2:
        raise InvalidParameterError("grid side must be at least 2")
    if s1_count < 0 or s2_count < 0:
        raise InvalidParameterError("species counts must be nonnegative")
    n_nodes = n * n
    cost = field_rng(seed, _FIELD_COST).integers(1, 101, size=n_nodes).astype(float)

    rng = field_rng(seed, _FIELD_WEIGHT)
    n_species = s1_count + s2_count
    w = rng.integers(20, 101, size=(n_species, n_nodes)).astype(float)
    drop = rng.random(size=(n_species, n_nodes))
    p_zero = np.where(np.arange(n_species) < s1_count, 0.2, 0.1)[:, None]
    w[drop < p_zero] = 0.0

    rows, cols = np.divmod(np.arange(n_nodes), n)
    boundary = (rows == 0) | (rows == n - 1) | (cols == 0) | (cols == n - 1)
    w[:, boundary] = 0.0

    inst = Instance(
        n_nodes=n_nodes,
        edges=grid_edges(n, n),
        cost=cost,
        n_s1=s1_count,
        n_s2=s2_count,
        weight=w,
        lam=np.zeros(n_species),
        p1=s1_count,
        p2=s2_count,
        buffer_width=buffer_width,
        max_components=max_components,
        grid_shape=(n, n),
        name=name or f"grid{n}_s{seed}",
    )
    inst = derive_lambda(inst, lambda_fraction)
    return apply_scenario(inst, scenario)


# -- text format --------------------------------------------------------------

_SECTIONS = ("NODES", "GRID", "NAME", "EDGES", "COSTS", "SPECIES1", "SPECIES2", "W", "LAMBDA", "PARAMS")


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def write_instance(inst: Instance) -> str:
    out = ["# reserve-design instance"]
    if inst.name:
        out.append(f"NAME {inst.name}")
    out.append(f"NODES {inst.n_nodes}")
    if inst.grid_shape is not None:
        out.append(f"GRID {inst.grid_shape[0]} {inst.grid_shape[1]}")
    out.append(f"EDGES {len(inst.edges)}")
    out.extend(f"{a} {b}" for a, b in inst.edges)
    out.append("COSTS")
    for k in range(0, inst.n_nodes, 20):
        out.append(" ".join(_fmt(c) for c in inst.cost[k : k + 20]))
    out.append(f"SPECIES1 {inst.n_s1}")
    out.append(f"SPECIES2 {inst.n_s2}")
    for s in range(inst.n_species):
        out.append(f"W {s}")
        out.extend(f"{i} {_fmt(inst.weight[s, i])}" for i in inst.support(s))
    out.append("LAMBDA")
    if inst.n_species:
        out.append(" ".join(_fmt(v) for v in inst.lam))
    out.append(f"PARAMS {inst.p1} {inst.p2} {inst.buffer_width} {inst.max_components}")
    return "\n".join(out) + "\n"


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_instance(text: str) -> Instance:
    lines = list(_tokens(text))
    pos = 0
    n = None
    grid = None
    name = ""
    edges: list[tuple[int, int]] = []
    cost: list[float] = []
    n_s1 = n_s2 = 0
    weights: dict[int, dict[int, float]] = {}
    lam: list[float] = []
    params = None

    def number(tok: str, lineno: int, kind=float):
        try:
            return kind(tok)
        except ValueError:
            raise InstanceFormatError(f"expected a number, got {tok!r}", lineno) from None

    def node(tok: str, lineno: int) -> int:
        i = number(tok, lineno, int)
        if n is None:
            raise InstanceFormatError("NODES must precede node references", lineno)
        if not 0 <= i < n:
            raise InstanceFormatError(f"unknown node id {i}", lineno)
        return i

    def body(start: int):
        """Lines after a header up to the next section keyword."""
        end = start
        while end < len(lines) and lines[end][1][0] not in _SECTIONS:
            end += 1
        return lines[start:end], end

    while pos < len(lines):
        lineno, toks = lines[pos]
        key = toks[0]
        pos += 1
        if key == "NODES":
            n = number(toks[1], lineno, int) if len(toks) == 2 else None
            if n is None or n < 0:
                raise InstanceFormatError("NODES takes one nonnegative count", lineno)
        elif key == "NAME":
            name = " ".join(toks[1:])
        elif key == "GRID":
            if len(toks) != 3:
                raise InstanceFormatError("GRID takes two integers", lineno)
            grid = (number(toks[1], lineno, int), number(toks[2], lineno, int))
        elif key == "EDGES":
            if len(toks) != 2:
                raise InstanceFormatError("EDGES takes one count", lineno)
            m = number(toks[1], lineno, int)
            rows, pos = body(pos)
            if len(rows) != m:
                raise InstanceFormatError(f"expected {m} edge lines, found {len(rows)}", lineno)
            for ln, t in rows:
                if len(t) != 2:
                    raise InstanceFormatError("edge line needs two node ids", ln)
                edges.append((node(t[0], ln), node(t[1], ln)))
        elif key == "COSTS":
            rows, pos = body(pos)
            for ln, t in rows:
                for tok in t:
                    c = number(tok, ln)
                    if c <= 0:
                        raise InstanceFormatError(f"cost must be positive, got {tok}", ln)
                    cost.append(c)
            if n is None or len(cost) != n:
                raise InstanceFormatError(f"expected {n} costs, found {len(cost)}", lineno)
        elif key in ("SPECIES1", "SPECIES2"):
            if len(toks) != 2:
                raise InstanceFormatError(f"{key} takes one count", lineno)
            cnt = number(toks[1], lineno, int)
            if cnt < 0:
                raise InstanceFormatError("species count must be nonnegative", lineno)
            if key == "SPECIES1":
                n_s1 = cnt
            else:
                n_s2 = cnt
        elif key == "W":
            if len(toks) < 2 or len(toks) % 2 != 0:
                raise InstanceFormatError("W takes a species id and optional 'node value' pairs", lineno)
            s = number(toks[1], lineno, int)
            if not 0 <= s < n_s1 + n_s2:
                raise InstanceFormatError(f"unknown species id {s}", lineno)
            entries = weights.setdefault(s, {})
            pairs = [(lineno, toks[2:])]
            rows, pos = body(pos)
            pairs.extend(rows)
            for ln, t in pairs:
                if len(t) % 2:
                    raise InstanceFormatError("weight entries come in 'node value' pairs", ln)
                for a, b in zip(t[::2], t[1::2]):
                    v = number(b, ln)
                    if v < 0:
                        raise InstanceFormatError("negative score", ln)
                    entries[node(a, ln)] = v
        elif key == "LAMBDA":
            rows, pos = body(pos)
            for ln, t in rows:
                lam.extend(number(tok, ln) for tok in t)
            if len(lam) != n_s1 + n_s2:
                raise InstanceFormatError(f"expected {n_s1 + n_s2} quotas, found {len(lam)}", lineno)
        elif key == "PARAMS":
            if len(toks) != 5:
                raise InstanceFormatError("PARAMS takes P1 P2 d k", lineno)
            params = tuple(number(t, lineno, int) for t in toks[1:])
        else:
            raise InstanceFormatError(f"unknown section {key!r}", lineno)

    if n is None:
        raise InstanceFormatError("missing NODES section", 0)
    if len(cost) != n:
        raise InstanceFormatError("missing COSTS section", 0)
    if params is None:
        raise InstanceFormatError("missing PARAMS section", 0)
    n_species = n_s1 + n_s2
    if len(lam) != n_species:
        raise InstanceFormatError("missing LAMBDA section", 0)
    w = np.zeros((n_species, n))
    for s, entries in weights.items():
        for i, v in entries.items():
            w[s, i] = v
    p1, p2, d, k = params
    try:
        return Instance(
            n_nodes=n, edges=np.array(edges, dtype=np.int64).reshape(-1, 2), cost=np.array(cost),
            n_s1=n_s1, n_s2=n_s2, weight=w, lam=np.array(lam), p1=p1, p2=p2,
            buffer_width=d, max_components=k, grid_shape=grid, name=name,
        )
    except InvalidParameterError as exc:
        raise InstanceFormatError(str(exc), 0) from exc


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_instance(inst))


def make_instance(
    n_nodes: int,
    edges: Iterable[Sequence[int]],
    cost: Sequence[float],
    weights_s1: Sequence[Sequence[float]] = (),
    weights_s2: Sequence[Sequence[float]] = (),
    lam: Optional[Sequence[float]] = None,
    p1: Optional[int] = None,
    p2: Optional[int] = None,
    buffer_width: int = 1,
    max_components: int = 1,
    grid_shape: Optional[tuple[int, int]] = None,
) -> Instance:
    """Convenience constructor for hand-written instances (dense weights)."""
    n_s1, n_s2 = len(weights_s1), len(weights_s2)
    w = np.array(list(weights_s1) + list(weights_s2), dtype=float).reshape(n_s1 + n_s2, n_nodes)
    if lam is None:
        lam = np.zeros(n_s1 + n_s2)
    return Instance(
        n_nodes=n_nodes, edges=np.array(list(edges), dtype=np.int64).reshape(-1, 2), cost=cost,
        n_s1=n_s1, n_s2=n_s2, weight=w, lam=lam,
        p1=n_s1 if p1 is None else p1, p2=n_s2 if p2 is None else p2,
        buffer_width=buffer_width, max_components=max_components, grid_shape=grid_shape,
    )
