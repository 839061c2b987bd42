"""Solve pipeline per algorithm setting and the grid benchmark harness."""
from __future__ import annotations

import csv
import enum
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional

import numpy as np

from .formulations import SeparationSettings, build
from .heuristics import HeuristicInfeasible, LocalBranchingParams, construct, local_branching, primal_callback
from .instance import Instance, Scenario, apply_scenario, generate_grid
from .milp import SolveResult, branch_and_cut, relative_gap
from .separation import CutPool
from .solution import Solution, Variant


class Setting(str, enum.Enum):
    BASIC = "basic"
    BASIC_PLUS = "basic+"
    BASIC_PLUS_CP = "basic+cp"
    BASIC_PLUS_CPLB = "basic+cplb"

    @property
    def use_cover(self) -> bool:
        return self is not Setting.BASIC

    @property
    def use_heuristics(self) -> bool:
        return self in (Setting.BASIC_PLUS_CP, Setting.BASIC_PLUS_CPLB)

    @property
    def use_local_branching(self) -> bool:
        return self is Setting.BASIC_PLUS_CPLB


# (grid side, |S1|, |S2|) of the four grid sets at full scale
GRID_SETS = {1: (20, 1, 3), 2: (20, 3, 9), 3: (30, 1, 3), 4: (30, 3, 9)}
DESK_SIDE = {1: 8, 2: 8, 3: 10, 4: 10}


@dataclass
class RunRecord:
    instance: str
    scenario: str
    variant: str
    k: int
    setting: str
    status: str
    components: int
    parcels: int
    objective: float
    lower_bound: float
    gap: float
    time: float
    root_bound: float
    heuristic: float
    nodes: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class RunOutcome:
    record: RunRecord
    solution: Optional[Solution]
    result: SolveResult


def solve(inst: Instance, variant: Variant | str, setting: Setting | str = Setting.BASIC_PLUS, *,
          time_limit: float = 60.0, seed: int = 0, nstarts: int = 20,
          lb_params: Optional[LocalBranchingParams] = None, instance_id: str = "",
          scenario: str = "") -> RunOutcome:
    """Run one algorithm setting on one instance.

    ``basic`` separates connectivity cuts only, ``basic+`` adds cover and
    species-cover cuts, ``basic+cp`` also seeds the search with the
    construction heuristic and calls the LP-guided primal heuristic, and
    ``basic+cplb`` runs local branching between construction and the exact
    search, handing its cut pool over.
    """
    variant = Variant.parse(variant)
    setting = Setting(setting)
    t0 = time.perf_counter()
    sep = SeparationSettings(use_cover=setting.use_cover)
    form = build(inst, variant, sep)
    start: Optional[Solution] = None
    pool = CutPool()
    heuristic_value = math.nan
    if setting.use_heuristics:
        try:
            start = construct(inst, variant, seed=seed, nstarts=nstarts)
        except HeuristicInfeasible:
            start = None
        if start is not None and setting.use_local_branching:
            params = lb_params or LocalBranchingParams(iteration_time=min(20.0, time_limit / 6),
                                                       time_limit=min(180.0, time_limit / 2),
                                                       seed=seed, settings=sep)
            start, pool, _ = local_branching(inst, variant, start, pool, params)
        if start is not None:
            heuristic_value = start.objective
    left = max(0.0, time_limit - (time.perf_counter() - t0))
    res = branch_and_cut(
        form.model, form.generators,
        primal_callback(form, seed=seed) if setting.use_heuristics else None,
        form.to_values(start) if start is not None else None,
        time_limit=left, strategy=sep.strategy, initial_cuts=form.pool_rows(pool),
    )
    sol = form.to_solution(res.values) if res.values is not None else None
    elapsed = time.perf_counter() - t0
    rec = RunRecord(
        instance=instance_id or inst.name or "instance",
        scenario=scenario,
        variant=variant.value,
        k=inst.max_components,
        setting=setting.value,
        status=res.status,
        components=sol.n_components(inst, variant) if sol is not None else 0,
        parcels=len(sol.reserve) if sol is not None else 0,
        objective=res.primal,
        lower_bound=res.dual,
        gap=res.gap,
        time=round(elapsed, 4),
        root_bound=res.root_bound,
        heuristic=heuristic_value,
        nodes=res.nodes,
    )
    return RunOutcome(rec, sol, res)


def instance_seed(seed: int, grid_set: int, index: int) -> int:
    """Per-instance seed, independent across sets and indices."""
    return int(np.random.SeedSequence([seed, grid_set, index]).generate_state(1, dtype=np.uint64)[0])


def bench_instances(grid_set: int, count: int, *, scale: Optional[int] = None, seed: int = 0,
                    lambda_fraction: float = 0.05) -> list[Instance]:
    side, s1, s2 = GRID_SETS[grid_set]
    n = DESK_SIDE[grid_set] if scale is None else scale
    return [generate_grid(n, s1, s2, instance_seed(seed, grid_set, i), lambda_fraction=lambda_fraction,
                          name=f"set{grid_set}_n{n}_{i}")
            for i in range(count)]


@dataclass(frozen=True)
class BenchCell:
    inst: Instance
    scenario: str
    variant: str
    k: int
    setting: str
    time_limit: float
    seed: int


def _run_cell(cell: BenchCell) -> RunRecord:
    inst = apply_scenario(cell.inst, cell.scenario).replace(max_components=cell.k)
    return solve(inst, cell.variant, cell.setting, time_limit=cell.time_limit, seed=cell.seed,
                 instance_id=cell.inst.name, scenario=cell.scenario).record


def bench(grid_sets: Iterable[int] = (1,), *, count: int = 10, scale: Optional[int] = None,
          scenarios: Iterable[str] = ("A", "B", "C"), ks: Iterable[int] = (1, 3),
          variants: Iterable[str] = (Variant.GRSC_CB.value,), settings: Iterable[str] = (Setting.BASIC_PLUS.value,),
          time_limit: float = 60.0, seed: int = 0, jobs: int = 1) -> list[RunRecord]:
    """One record per (instance, scenario, k, variant, setting), in that nesting order."""
    cells = []
    for g in grid_sets:
        for inst in bench_instances(g, count, scale=scale, seed=seed):
            for sc in scenarios:
                for k in ks:
                    for v in variants:
                        for st in settings:
                            cells.append(BenchCell(inst, Scenario(sc).value, Variant.parse(v).value, k,
                                                   Setting(st).value, time_limit, seed))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(round(v, 6))
    return str(v)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RunRecord.columns())
    for r in records:
        w.writerow([_fmt(v) for v in asdict(r).values()])
    return buf.getvalue()


def records_from_csv(text: str) -> list[RunRecord]:
    out = []
    types = {f.name: f.type for f in fields(RunRecord)}
    for row in csv.DictReader(io.StringIO(text)):
        vals = {}
        for name, raw in row.items():
            t = types[name]
            if t == "int":
                vals[name] = int(raw)
            elif t == "float":
                vals[name] = float(raw) if raw != "" else math.nan
            else:
                vals[name] = raw
        out.append(RunRecord(**vals))
    return out


def recomputed_gap(rec: RunRecord) -> float:
    return relative_gap(rec.objective, rec.lower_bound)


def root_bound_improvement(basic: float, plus: float) -> float:
    """Relative root-bound improvement in percent."""
    if basic == 0:
        return 0.0 if plus == 0 else math.inf
    return 100.0 * (plus - basic) / basic
