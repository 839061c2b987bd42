"""Command-line front end: ``grsc solve | bench | gen-grid | oracle``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import GRID_SETS, RunRecord, Setting, bench, records_to_csv, solve
from .instance import (
    Instance,
    InstanceFormatError,
    InvalidParameterError,
    Scenario,
    apply_scenario,
    derive_lambda,
    generate_grid,
    read_instance,
    save_instance,
)
from .oracle import OracleLimitError, brute_force
from .render import render_solution
from .solution import Solution, Variant

OUT_ENV = "GRSC_OUT_DIR"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NO_SOLUTION = 4

log = logging.getLogger("grsc")


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "grsc_out"))


def first_failing_protection(inst: Instance, variant: Variant) -> str:
    """Name of the protection row that cannot be met.

    Checks the best case (every parcel selected) class by class. When both
    classes pass that check the infeasibility comes from the structure
    (buffers or the component limit), and the first class with a positive
    target is named.
    """
    everything = Solution.from_sets(inst, variant, range(inst.n_nodes), range(inst.n_nodes))
    h1 = sum(1 for s in everything.hosted if inst.in_s1(s))
    h2 = len(everything.hosted) - h1
    if h1 < inst.p1:
        return "S1-PROTECT"
    if h2 < inst.p2:
        return "S2-PROTECT"
    return "S1-PROTECT" if inst.p1 > 0 else "S2-PROTECT"


def solution_text(inst: Instance, variant: Variant, sol: Solution) -> str:
    def nodes(label, group):
        return f"{label} " + " ".join(str(i) for i in sorted(group))

    buffer = sol.reserve - sol.core
    return "\n".join([
        f"VARIANT {variant.value}",
        f"OBJECTIVE {sol.objective:g}",
        nodes("CORE", sol.core),
        nodes("BUFFER", buffer),
        nodes("ROOTS", sol.roots),
        nodes("HOSTED", sol.hosted),
    ]) + "\n"


def _load_instance(args) -> Instance:
    if args.instance:
        inst = read_instance(args.instance)
    else:
        inst = generate_grid(args.grid, args.s1, args.s2, args.seed, lambda_fraction=args.lambda_frac or 0.05,
                             name=f"grid{args.grid}_s{args.seed}")
    if args.scenario:
        inst = apply_scenario(inst, args.scenario)
    if args.lambda_frac is not None and args.instance:
        inst = derive_lambda(inst, args.lambda_frac)
    changes = {}
    if args.k is not None:
        changes["max_components"] = args.k
    if args.d is not None:
        changes["buffer_width"] = args.d
    return inst.replace(**changes) if changes else inst


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path, help="instance file")
    src.add_argument("--grid", type=int, help="generate an n x n grid instead")
    p.add_argument("--s1", type=int, default=1, help="core species (generated grids)")
    p.add_argument("--s2", type=int, default=3, help="reserve species (generated grids)")
    p.add_argument("--variant", default="grsc-cb", type=str.upper,
                   choices=[v.value for v in Variant])
    p.add_argument("--k", type=int, help="maximum number of components")
    p.add_argument("--d", type=int, help="buffer width in hops")
    p.add_argument("--scenario", choices=[s.value for s in Scenario])
    p.add_argument("--lambda-frac", type=float, help="quota as a fraction of the total score")
    p.add_argument("--seed", type=int, default=0)


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    variant = Variant.parse(args.variant)
    if variant.has_connectivity and inst.max_components < 1:
        raise InvalidParameterError("connectivity variants need k >= 1")
    out = args.out or default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    run = solve(inst, variant, args.setting, time_limit=args.time_limit, seed=args.seed,
                instance_id=inst.name or "instance", scenario=args.scenario or "")
    stem = f"{inst.name or 'instance'}_{variant.value.lower()}_k{inst.max_components}"
    (out / f"{stem}.csv").write_text(records_to_csv([run.record]))
    if run.solution is None:
        if run.record.status == "infeasible":
            print(f"infeasible: {first_failing_protection(inst, variant)} cannot be satisfied", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"no solution found ({run.record.status})", file=sys.stderr)
        return EXIT_NO_SOLUTION
    (out / f"{stem}.sol").write_text(solution_text(inst, variant, run.solution))
    layout = "grid" if inst.grid_shape is not None else "force"
    (out / f"{stem}.svg").write_text(render_solution(inst, run.solution, layout,
                                                     title=f"{variant.value} z={run.solution.objective:g}"))
    r = run.record
    print(f"{r.status} z={r.objective:g} lb={r.lower_bound:g} gap={r.gap:.2f}% "
          f"#c={r.components} #lp={r.parcels} t={r.time:.2f}s -> {out / stem}.*")
    return EXIT_OK


def cmd_bench(args) -> int:
    records = bench(args.set, count=args.count, scale=args.scale, scenarios=args.scenarios, ks=args.ks,
                    variants=args.variants, settings=args.settings, time_limit=args.time_limit,
                    seed=args.seed, jobs=args.jobs)
    text = records_to_csv(records)
    out = args.out or default_out_dir() / "bench.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"{len(records)} runs -> {out}")
    return EXIT_OK


def cmd_gen_grid(args) -> int:
    inst = generate_grid(args.n, args.s1, args.s2, args.seed, lambda_fraction=args.lambda_frac,
                         scenario=args.scenario, buffer_width=args.d, max_components=args.k,
                         name=args.name or f"grid{args.n}_s{args.seed}")
    out = args.out or default_out_dir() / f"{inst.name}.grsc"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    print(out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load_instance(args)
    variant = Variant.parse(args.variant)
    cost, sol = brute_force(inst, variant)
    if sol is None:
        print(f"infeasible: {first_failing_protection(inst, variant)} cannot be satisfied", file=sys.stderr)
        return EXIT_INFEASIBLE
    sys.stdout.write(solution_text(inst, variant, sol))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grsc", description="Reserve set covering solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance")
    _add_instance_flags(s)
    s.add_argument("--setting", default="basic+", choices=[x.value for x in Setting])
    s.add_argument("--time-limit", type=float, default=60.0)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="grid benchmark, one CSV row per run")
    b.add_argument("--set", type=int, nargs="+", default=[1], choices=sorted(GRID_SETS))
    b.add_argument("--scale", type=int, help="grid side (default 8 for sets 1-2, 10 for sets 3-4)")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--scenarios", nargs="+", default=["A", "B", "C"], choices=[x.value for x in Scenario])
    b.add_argument("--ks", type=int, nargs="+", default=[1, 3])
    b.add_argument("--variants", nargs="+", type=str.upper, default=["GRSC-CB"], choices=[v.value for v in Variant])
    b.add_argument("--settings", nargs="+", default=["basic+"], choices=[x.value for x in Setting])
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", type=Path, help="CSV path")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen-grid", help="write a generated grid instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--s1", type=int, default=1)
    g.add_argument("--s2", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scenario", default="A", choices=[x.value for x in Scenario])
    g.add_argument("--lambda-frac", type=float, default=0.05)
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--name")
    g.add_argument("--out", type=Path)
    g.set_defaults(func=cmd_gen_grid)

    o = sub.add_parser("oracle", help="exact optimum by enumeration (at most 14 parcels)")
    _add_instance_flags(o)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidParameterError, InstanceFormatError, OracleLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
