import math
import re

import numpy as np
import pytest

from grsc.bench import (
    RunRecord,
    Setting,
    bench,
    bench_instances,
    records_from_csv,
    records_to_csv,
    recomputed_gap,
    root_bound_improvement,
    solve,
)
from grsc.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, OUT_ENV, main
from grsc.instance import generate_grid, make_instance, read_instance, grid_edges
from grsc.oracle import validate
from grsc.render import BUFFER_FILL, CORE_FILL, EMPTY_FILL, render_solution
from grsc.solution import Solution, Variant


@pytest.fixture(scope="module")
def grid6():
    return generate_grid(6, 1, 2, seed=3, max_components=1)


@pytest.mark.parametrize("setting", list(Setting))
def test_solve_settings_agree(grid6, setting):
    run = solve(grid6, "GRSC-CB", setting, time_limit=30)
    ref = solve(grid6, "GRSC-CB", "basic", time_limit=30)
    assert run.record.status == "optimal"
    assert run.record.objective == ref.record.objective
    assert validate(grid6, "GRSC-CB", run.solution).feasible
    if setting in (Setting.BASIC_PLUS_CP, Setting.BASIC_PLUS_CPLB):
        assert run.record.heuristic >= run.record.objective
    else:
        assert math.isnan(run.record.heuristic)


def test_record_fields(grid6):
    rec = solve(grid6, "GRSC", "basic+", time_limit=30, instance_id="x", scenario="A").record
    assert rec.components >= 1 and rec.parcels == len(solve(grid6, "GRSC").solution.reserve)
    assert rec.gap == pytest.approx(recomputed_gap(rec), abs=1e-6)


def test_variant_records_nest(grid6):
    z = {v: solve(grid6, v, time_limit=30).record.objective for v in Variant}
    assert z[Variant.GRSC] <= z[Variant.GRSC_B] <= z[Variant.GRSC_CB]
    assert z[Variant.GRSC] <= z[Variant.GRSC_C] <= z[Variant.GRSC_CB]


def test_csv_round_trip_and_gap_column(grid6):
    recs = [solve(grid6, "GRSC-CB", s, time_limit=30).record for s in ("basic", "basic+cp")]
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(RunRecord.columns())
    assert '"' not in text
    back = records_from_csv(text)
    for a, b in zip(recs, back):
        assert b.objective == a.objective and b.setting == a.setting
        assert b.gap == pytest.approx(recomputed_gap(b), abs=1e-6)


def test_bench_row_count_and_determinism():
    kw = dict(count=3, scale=4, ks=(1, 3), time_limit=20)
    a = bench([1], **kw)
    assert len(a) == 3 * 3 * 2
    b = bench([1], **kw)
    cols = lambda rs: [(r.objective, r.components, r.parcels, r.root_bound) for r in rs]
    assert cols(a) == cols(b)


def test_bench_instances_regenerate():
    a = bench_instances(2, 2, scale=5, seed=4)
    b = bench_instances(2, 2, scale=5, seed=4)
    assert all(x.same_as(y) for x, y in zip(a, b))
    assert not a[0].same_as(a[1])
    assert (a[0].n_s1, a[0].n_s2, a[0].n_nodes) == (3, 9, 25)


def test_root_bound_improvement():
    assert root_bound_improvement(100, 106) == pytest.approx(6)
    assert root_bound_improvement(0, 0) == 0


# -- rendering -------------------------------------------------------------------------


def test_render_empty_solution_all_outlined(grid6):
    svg = render_solution(grid6, None)
    assert svg.count(f'fill="{EMPTY_FILL}"') == 36
    assert CORE_FILL not in svg and BUFFER_FILL not in svg


def test_render_colours_and_determinism(grid6):
    sol = solve(grid6, "GRSC-CB").solution
    svg = render_solution(grid6, sol)
    assert svg == render_solution(grid6, sol)
    assert svg.count(f'fill="{CORE_FILL}"') == len(sol.core)
    assert svg.count(f'fill="{BUFFER_FILL}"') == len(sol.reserve - sol.core)
    assert sol.n_components(grid6, "GRSC-CB") <= grid6.max_components


def test_render_force_layout():
    inst = make_instance(5, [(0, 1), (1, 2), (2, 3), (3, 4)], np.ones(5))
    sol = Solution.from_sets(inst, "GRSC-B", [2])
    a = render_solution(inst, sol, "force")
    assert a == render_solution(inst, sol, "force") and a.count("<line") == 4
    with pytest.raises(ValueError):
        render_solution(inst, sol, "grid")


# -- command line ------------------------------------------------------------------------


def test_cli_solve_writes_outputs(tmp_path, capsys):
    rc = main(["solve", "--grid", "6", "--variant", "grsc", "--seed", "1", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    files = sorted(p.suffix for p in tmp_path.iterdir())
    assert files == [".csv", ".sol", ".svg"]
    sol = next(tmp_path.glob("*.sol")).read_text()
    assert re.search(r"^CORE \d", sol, re.M)
    rec = records_from_csv(next(tmp_path.glob("*.csv")).read_text())[0]
    assert rec.components >= 1


def test_cli_rejects_zero_components(tmp_path, capsys):
    rc = main(["solve", "--grid", "6", "--variant", "grsc-cb", "--k", "0", "--out", str(tmp_path)])
    assert rc == EXIT_USAGE


def test_cli_infeasible_names_protection(tmp_path, capsys):
    inst = make_instance(3, [(0, 1), (1, 2)], [1, 1, 1], weights_s1=[[0, 1, 0]], lam=[5])
    from grsc.instance import save_instance
    path = tmp_path / "bad.grsc"
    save_instance(inst, path)
    rc = main(["solve", "--instance", str(path), "--variant", "grsc", "--out", str(tmp_path)])
    assert rc == EXIT_INFEASIBLE
    assert "S1-PROTECT" in capsys.readouterr().err


def test_cli_gen_grid_and_oracle(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    assert main(["gen-grid", "--n", "3", "--s1", "1", "--s2", "1", "--seed", "2", "--name", "g3"]) == EXIT_OK
    path = tmp_path / "g3.grsc"
    assert read_instance(path).n_nodes == 9
    capsys.readouterr()
    assert main(["oracle", "--instance", str(path), "--variant", "grsc-cb"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("VARIANT GRSC-CB")


def test_cli_bench(tmp_path):
    out = tmp_path / "b.csv"
    rc = main(["bench", "--set", "1", "--scale", "4", "--count", "1", "--ks", "1", "--scenarios", "A",
               "--settings", "basic", "basic+", "--out", str(out)])
    assert rc == EXIT_OK
    recs = records_from_csv(out.read_text())
    assert [r.setting for r in recs] == ["basic", "basic+"]
    assert recs[1].root_bound >= recs[0].root_bound - 1e-9
