"""A small branch-and-cut engine over binary programs.

LP relaxations are solved with the HiGHS dual simplex (through ``highspy``);
one LP object is kept for the whole search so that bound changes and added
cut rows are warm-started. Everything else (cut loop, branching, node
selection, incumbent handling) lives here.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import highspy
import numpy as np

FEAS_TOL = 1e-6
INT_TOL = 1e-6

_INF = highspy.kHighsInf


class LpError(RuntimeError):
    """The LP solver stopped without a usable status."""


class CutValidityError(AssertionError):
    """A generator produced a cut that removes a known feasible solution."""


class SolveInterrupted(Exception):
    """Raise from a callback to stop the search and return what is known."""


class Strategy(str, enum.Enum):
    """When fractional LP points are handed to the cut generators."""

    ROOT_ONLY = "root-only"
    EVERY_NODE = "every-node"
    INTEGER_ONLY = "integer-only"


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = 1.0
    obj: float = 0.0
    binary: bool = True


@dataclass
class Constraint:
    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    sense: str  # "<=", ">=" or "=="
    rhs: float
    name: str = ""

    def activity(self, values: np.ndarray) -> float:
        return float(np.dot(values[list(self.indices)], self.coefs)) if self.indices else 0.0

    def violation(self, values: np.ndarray) -> float:
        act = self.activity(values)
        if self.sense == ">=":
            return self.rhs - act
        if self.sense == "<=":
            return act - self.rhs
        return abs(act - self.rhs)


_SENSES = {"<=": "<=", ">=": ">=", "==": "==", "=": "=="}


def _row(coeffs) -> tuple[tuple[int, ...], tuple[float, ...]]:
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    acc: dict[int, float] = {}
    for j, a in items:
        acc[int(j)] = acc.get(int(j), 0.0) + float(a)
    keys = sorted(j for j, a in acc.items() if a != 0.0)
    return tuple(keys), tuple(acc[j] for j in keys)


@dataclass
class LinearCut(Constraint):
    """A cut row; ``payload`` carries the generator's own description."""

    key: object = None
    payload: object = None


class MilpModel:
    """Minimisation model with bounded variables and sparse linear rows."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self._by_name: dict[str, int] = {}

    def add_var(self, name: str, lb: float = 0.0, ub: float = 1.0, obj: float = 0.0,
                binary: bool = True) -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary and (lb < 0 or ub > 1):
            raise ValueError("binary variables must have bounds within [0, 1]")
        self.variables.append(Variable(name, float(lb), float(ub), float(obj), binary))
        self._by_name[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constraint(self, coeffs, sense: str, rhs: float, name: str = "") -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        idx, coefs = _row(coeffs)
        if idx and (idx[0] < 0 or idx[-1] >= len(self.variables)):
            raise ValueError("constraint references an undeclared variable")
        self.constraints.append(Constraint(idx, coefs, _SENSES[sense], float(rhs), name))
        return len(self.constraints) - 1

    def var_index(self, name: str) -> int:
        return self._by_name[name]

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.variables = [Variable(**vars(v)) for v in self.variables]
        m.constraints = [Constraint(c.indices, c.coefs, c.sense, c.rhs, c.name) for c in self.constraints]
        m._by_name = dict(self._by_name)
        return m

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def objective(self) -> np.ndarray:
        return np.array([v.obj for v in self.variables], dtype=float)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lb for v in self.variables], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.ub for v in self.variables], dtype=float)

    @property
    def binaries(self) -> np.ndarray:
        return np.array([j for j, v in enumerate(self.variables) if v.binary], dtype=np.int64)

    def objective_value(self, values) -> float:
        return float(np.dot(self.objective, values))

    def violated(self, values, tol: float = FEAS_TOL) -> list[int]:
        values = np.asarray(values, dtype=float)
        bad = [k for k, c in enumerate(self.constraints) if c.violation(values) > tol]
        return bad

    def is_feasible(self, values, tol: float = FEAS_TOL) -> bool:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_vars,):
            return False
        if np.any(values < self.lower - tol) or np.any(values > self.upper + tol):
            return False
        b = self.binaries
        if len(b) and np.any(np.abs(values[b] - np.round(values[b])) > INT_TOL):
            return False
        return not self.violated(values, tol)

    def has_integral_objective(self) -> bool:
        for v in self.variables:
            if v.obj != 0.0 and (not v.binary or not float(v.obj).is_integer()):
                return False
        return True


@dataclass
class LpPoint:
    values: np.ndarray
    objective: float
    status: str  # "optimal", "infeasible" or "unbounded"


@dataclass
class CutContext:
    """What a cut generator is told about the point it is asked to separate."""

    is_root: bool
    is_integer: bool
    node: int
    depth: int


CutGenerator = Callable[[np.ndarray, CutContext], Sequence[LinearCut]]
HeuristicCallback = Callable[[np.ndarray, CutContext], Optional[np.ndarray]]


@dataclass
class SolveResult:
    values: Optional[np.ndarray]
    primal: float
    dual: float
    status: str
    nodes: int = 0
    lp_solves: int = 0
    cuts_added: int = 0
    wall_time: float = 0.0
    root_bound: float = -math.inf
    cuts: list[LinearCut] = field(default_factory=list)
    incumbent_source: str = ""

    @property
    def gap(self) -> float:
        return relative_gap(self.primal, self.dual)


def relative_gap(primal: float, dual: float) -> float:
    """``100 * (primal - dual) / primal``; zero when both vanish."""
    if not math.isfinite(primal):
        return math.inf
    if primal == 0:
        return 0.0 if dual >= -FEAS_TOL else math.inf
    return 100.0 * (primal - dual) / primal


# -- LP engine ------------------------------------------------------------------


class _Lp:
    def __init__(self, model: MilpModel):
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("threads", 1)
        self.h = h
        self.n = model.n_vars
        if self.n:
            h.addCols(self.n, model.objective, model.lower, model.upper, 0,
                      np.zeros(0, np.int32), np.zeros(0, np.int32), np.zeros(0))
        for c in model.constraints:
            self.add_row(c)
        self.all_cols = np.arange(self.n, dtype=np.int32)

    def add_row(self, c: Constraint):
        lo, hi = -_INF, _INF
        if c.sense in (">=", "=="):
            lo = c.rhs
        if c.sense in ("<=", "=="):
            hi = c.rhs
        self.h.addRow(lo, hi, len(c.indices), np.array(c.indices, np.int32), np.array(c.coefs, float))

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray):
        if self.n:
            self.h.changeColsBounds(self.n, self.all_cols, lb, ub)

    def solve(self) -> LpPoint:
        if self.n == 0:
            return LpPoint(np.zeros(0), 0.0, "optimal")
        self.h.run()
        st = self.h.getModelStatus()
        if st == highspy.HighsModelStatus.kOptimal:
            vals = np.array(self.h.getSolution().col_value, dtype=float)
            return LpPoint(vals, float(self.h.getInfo().objective_function_value), "optimal")
        if st == highspy.HighsModelStatus.kInfeasible:
            return LpPoint(np.full(self.n, np.nan), math.inf, "infeasible")
        if st in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
            # resolve from scratch to tell the two apart
            self.h.clearSolver()
            self.h.run()
            st = self.h.getModelStatus()
            if st == highspy.HighsModelStatus.kInfeasible:
                return LpPoint(np.full(self.n, np.nan), math.inf, "infeasible")
            if st == highspy.HighsModelStatus.kOptimal:
                vals = np.array(self.h.getSolution().col_value, dtype=float)
                return LpPoint(vals, float(self.h.getInfo().objective_function_value), "optimal")
            return LpPoint(np.full(self.n, np.nan), -math.inf, "unbounded")
        raise LpError(f"LP solver returned status {self.h.modelStatusToString(st)}")


def solve_lp(model: MilpModel) -> LpPoint:
    """Optimal basic solution of the continuous relaxation."""
    lp = _Lp(model)
    return lp.solve()


# -- branch and cut -----------------------------------------------------------------


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    fixings: tuple = field(compare=False, default=())
    depth: int = field(compare=False, default=0)


class _Search:
    def __init__(self, model, generators, heuristic, strategy, time_limit, node_limit,
                 objective_cutoff, stop_at_first, max_root_rounds, max_node_rounds,
                 heuristic_frequency, reference_solutions, initial_cuts):
        self.model = model
        self.generators = list(generators)
        self.heuristic = heuristic
        self.strategy = Strategy(strategy)
        self.deadline = time.perf_counter() + time_limit if math.isfinite(time_limit) else math.inf
        self.node_limit = node_limit
        self.cutoff = math.inf if objective_cutoff is None else float(objective_cutoff)
        self.stop_at_first = stop_at_first
        self.max_root_rounds = max_root_rounds
        self.max_node_rounds = max_node_rounds
        self.heuristic_frequency = heuristic_frequency
        self.references = [np.asarray(r, float) for r in (reference_solutions or [])]
        self.integral_obj = model.has_integral_objective()
        self.lp = _Lp(model)
        self.base_lb = model.lower
        self.base_ub = model.upper
        self.binaries = model.binaries
        self.obj = model.objective
        self.cut_keys: set = set()
        self.cuts: list[LinearCut] = []
        self.extra_rows: list[Constraint] = []
        for c in initial_cuts:
            self._add_cut(c, record=False)
        self.inc_values: Optional[np.ndarray] = None
        self.inc_obj = math.inf
        self.inc_source = ""
        self.lp_solves = 0
        self.nodes = 0
        self.root_bound = -math.inf
        self.seq = itertools.count()

    # -- incumbent --------------------------------------------------------------

    def upper(self) -> float:
        return min(self.inc_obj, self.cutoff)

    def prunable(self, bound: float) -> bool:
        up = self.upper()
        if not math.isfinite(up):
            return False
        if self.integral_obj:
            return math.ceil(bound - FEAS_TOL) > up - 1 + 0.5
        return bound >= up - FEAS_TOL * max(1.0, abs(up))

    def _row_feasible(self, values: np.ndarray) -> bool:
        if not self.model.is_feasible(values):
            return False
        return all(c.violation(values) <= FEAS_TOL for c in self.extra_rows)

    def offer(self, values: np.ndarray, source: str, ctx: CutContext) -> bool:
        """Validate an integral candidate, separating lazy cuts on it first."""
        values = np.asarray(values, dtype=float).copy()
        b = self.binaries
        values[b] = np.round(values[b])
        if not self._row_feasible(values):
            return False
        cuts = self.separate(values, CutContext(ctx.is_root, True, ctx.node, ctx.depth))
        if cuts:
            return False
        obj = float(np.dot(self.obj, values))
        if obj < self.inc_obj - 1e-9 and obj < self.cutoff - (0.5 if self.integral_obj else 1e-9):
            self.inc_values, self.inc_obj, self.inc_source = values, obj, source
            return True
        return False

    # -- cuts ---------------------------------------------------------------------

    def _add_cut(self, cut: Constraint, record: bool = True) -> bool:
        key = getattr(cut, "key", None)
        if key is not None:
            if key in self.cut_keys:
                return False
            self.cut_keys.add(key)
        for ref in self.references:
            if cut.violation(ref) > FEAS_TOL:
                raise CutValidityError(f"cut {cut.name or key} removes a reference solution")
        self.lp.add_row(cut)
        self.extra_rows.append(cut)
        if record:
            self.cuts.append(cut)
        return True

    def separate(self, values: np.ndarray, ctx: CutContext) -> int:
        added = 0
        for gen in self.generators:
            for cut in gen(values, ctx):
                if cut.violation(values) < FEAS_TOL:
                    continue
                if self._add_cut(cut):
                    added += 1
        return added

    # -- search ---------------------------------------------------------------------

    def is_integral(self, values: np.ndarray) -> bool:
        b = self.binaries
        return not len(b) or bool(np.all(np.abs(values[b] - np.round(values[b])) <= INT_TOL))

    def branch_var(self, values: np.ndarray) -> int:
        b = self.binaries
        frac = np.abs(values[b] - np.floor(values[b]) - 0.5)
        return int(b[int(np.argmin(frac))])  # argmin takes the first (smallest index) on ties

    def run(self, incumbent) -> SolveResult:
        t0 = time.perf_counter()
        status = None
        if incumbent is not None:
            self.offer(incumbent, "start", CutContext(True, True, 0, 0))
        heap = [_Node(-math.inf, next(self.seq))]
        current: Optional[_Node] = None
        try:
            while heap:
                if self.stop_at_first and self.inc_values is not None:
                    status = "first-solution"
                    break
                if time.perf_counter() > self.deadline:
                    status = "time-limit"
                    break
                if self.node_limit is not None and self.nodes >= self.node_limit:
                    status = "node-limit"
                    break
                node = heapq.heappop(heap)
                current = node
                if node.seq and self.prunable(node.bound):
                    continue
                for child in self.process(node):
                    heapq.heappush(heap, child)
                current = None
        except SolveInterrupted:
            status = "interrupted"
        open_bounds = [n.bound for n in heap]
        if current is not None:
            open_bounds.append(current.bound)
        if status is None:
            status = "optimal" if self.inc_values is not None else "infeasible"
            dual = self.inc_obj
        else:
            if self.stop_at_first and self.inc_values is not None and status != "interrupted":
                status = "first-solution"
            dual = min(open_bounds) if open_bounds else self.inc_obj
            dual = min(dual, self.inc_obj)
        if self.integral_obj and math.isfinite(dual):
            dual = min(math.ceil(dual - FEAS_TOL), self.inc_obj) if dual > -math.inf else dual
        return SolveResult(
            values=self.inc_values, primal=self.inc_obj, dual=dual, status=status,
            nodes=self.nodes, lp_solves=self.lp_solves, cuts_added=len(self.cuts),
            wall_time=time.perf_counter() - t0, root_bound=self.root_bound, cuts=self.cuts,
            incumbent_source=self.inc_source,
        )

    def process(self, node: _Node) -> list[_Node]:
        node_id = self.nodes
        self.nodes += 1
        is_root = node_id == 0
        lb, ub = self.base_lb.copy(), self.base_ub.copy()
        for j, v in node.fixings:
            lb[j] = ub[j] = v
        self.lp.set_bounds(lb, ub)
        rounds = 0
        max_rounds = self.max_root_rounds if is_root else self.max_node_rounds
        separate_fractional = self.strategy is Strategy.EVERY_NODE or (
            self.strategy is Strategy.ROOT_ONLY and is_root)
        bound = node.bound
        while True:
            lp = self.lp.solve()
            self.lp_solves += 1
            if lp.status == "infeasible":
                if is_root:
                    self.root_bound = math.inf
                return []
            if lp.status == "unbounded":
                raise LpError("LP relaxation is unbounded")
            bound = max(node.bound, lp.objective)
            ctx = CutContext(is_root, False, node_id, node.depth)
            if not is_root and self.prunable(bound):
                return []
            if self.is_integral(lp.values):
                ctx.is_integer = True
                if self.separate(lp.values, ctx):
                    continue
                if is_root:
                    self.root_bound = bound
                self.offer(lp.values, "lp", ctx)
                return []
            if separate_fractional and rounds < max_rounds and time.perf_counter() < self.deadline:
                rounds += 1
                if self.separate(lp.values, ctx):
                    continue
            break
        if is_root:
            self.root_bound = bound
            if self.prunable(bound):
                return []
        if self.heuristic is not None and (is_root or (
                self.heuristic_frequency and node_id % self.heuristic_frequency == 0)):
            cand = self.heuristic(lp.values, ctx)
            if cand is not None:
                self.offer(cand, "heuristic", ctx)
                if self.prunable(bound):
                    return []
        j = self.branch_var(lp.values)
        down = _Node(bound, next(self.seq), node.fixings + ((j, 0.0),), node.depth + 1)
        up = _Node(bound, next(self.seq), node.fixings + ((j, 1.0),), node.depth + 1)
        return [down, up]


def branch_and_cut(
    model: MilpModel,
    lazy_generators: Iterable[CutGenerator] = (),
    heuristic_callback: Optional[HeuristicCallback] = None,
    incumbent=None,
    *,
    time_limit: float = math.inf,
    node_limit: Optional[int] = None,
    strategy: Strategy | str = Strategy.ROOT_ONLY,
    objective_cutoff: Optional[float] = None,
    stop_at_first: bool = False,
    max_root_rounds: int = 500,
    max_node_rounds: int = 20,
    heuristic_frequency: int = 10,
    reference_solutions=None,
    initial_cuts: Iterable[Constraint] = (),
) -> SolveResult:
    """Best-bound branch-and-cut.

    Cut generators are called on every integral LP point (an integral point
    that yields a cut is rejected) and on fractional points according to
    ``strategy``. Branching is on the most fractional binary, smallest index
    first on ties; the open node with the smallest bound is processed next.

    ``objective_cutoff`` only admits incumbents strictly better than the
    given value; together with ``stop_at_first`` this gives a
    first-improvement search. ``reference_solutions`` turns on a debug check
    that raises :class:`CutValidityError` whenever a cut removes one of them.
    """
    search = _Search(model, lazy_generators, heuristic_callback, strategy, time_limit, node_limit,
                     objective_cutoff, stop_at_first, max_root_rounds, max_node_rounds,
                     heuristic_frequency, reference_solutions, initial_cuts)
    return search.run(incumbent)


def root_bound(model: MilpModel, lazy_generators: Iterable[CutGenerator] = (), *,
               max_rounds: int = 500, time_limit: float = math.inf) -> float:
    """Dual bound after the root cut loop (no branching, no incumbent)."""
    search = _Search(model, lazy_generators, None, Strategy.ROOT_ONLY, time_limit, 1, None, False,
                     max_rounds, 0, 0, None, ())
    res = search.run(None)
    return res.root_bound
