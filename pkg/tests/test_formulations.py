import math

import numpy as np
import pytest

from conftest import path_edges, random_instance, two_blobs
from grsc.formulations import add_local_branching, build, force_species, ncomp_equality
from grsc.instance import InvalidParameterError, grid_edges, make_instance
from grsc.milp import branch_and_cut
from grsc.oracle import brute_force, validate
from grsc.solution import Solution, Variant, buffered


def solve(inst, variant, form=None):
    form = form or build(inst, variant)
    res = branch_and_cut(form.model, form.generators)
    return res, form


def toy3x3():
    return make_instance(9, grid_edges(3, 3), np.ones(9), weights_s1=[[0] * 9], weights_s2=[[0] * 9],
                         lam=[0, 0])


def test_variable_and_row_counts():
    inst = toy3x3()
    f = build(inst, "GRSC")
    assert f.model.n_vars == 2 + 18
    assert len(f.model.constraints) == 1 + 1 + 2 + 9
    assert build(inst, "GRSC-CB").model.n_vars == 2 + 27
    assert build(inst, "GRSC-B").model.n_vars == 2 + 18
    assert build(inst, "GRSC-C").model.n_vars == 2 + 27


@pytest.mark.parametrize("variant", list(Variant))
def test_zero_targets_give_empty_solution(variant):
    inst = toy3x3().replace(p1=0, p2=0)
    f = build(inst, variant)
    assert f.model.is_feasible(np.zeros(f.model.n_vars))
    res, _ = solve(inst, variant, f)
    assert res.primal == 0


@pytest.mark.parametrize("variant", ["GRSC-C", "GRSC-CB"])
def test_connectivity_needs_k(variant):
    with pytest.raises(InvalidParameterError):
        build(toy3x3().replace(max_components=0), variant)


def test_force_species_without_habitat_is_infeasible():
    inst = make_instance(4, path_edges(4), [1, 1, 1, 1], weights_s1=[[0, 0, 0, 0], [0, 3, 0, 0]],
                         lam=[2, 3], p1=1)
    f = force_species(build(inst, "GRSC"), 0)
    assert solve(inst, "GRSC", f)[0].status == "infeasible"
    with pytest.raises(InvalidParameterError):
        force_species(build(inst, "GRSC"), 7)


def test_force_redundant_species_keeps_optimum():
    inst = make_instance(6, grid_edges(2, 3), [2, 3, 1, 4, 2, 2], weights_s1=[[5, 0, 1, 0, 0, 5]], lam=[6])
    base = solve(inst, "GRSC-CB")[0].primal
    forced = solve(inst, "GRSC-CB", force_species(build(inst, "GRSC-CB"), 0))[0].primal
    assert base == forced == brute_force(inst, "GRSC-CB")[0]


def test_force_species_matches_forced_oracle():
    inst = make_instance(6, grid_edges(2, 3), [2, 3, 1, 4, 2, 9],
                         weights_s1=[[5, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 6]], lam=[5, 6], p1=1)
    for s in (0, 1):
        res = solve(inst, "GRSC-CB", force_species(build(inst, "GRSC-CB"), s))[0]
        assert res.primal == brute_force(inst, "GRSC-CB", forced=[s])[0]


def test_ncomp_equality_never_lowers_optimum(rng):
    for _ in range(8):
        inst = random_instance(rng, "g2x4")
        for v in ("GRSC-C", "GRSC-CB"):
            le = solve(inst, v)[0]
            eq = solve(inst, v, ncomp_equality(build(inst, v)))[0]
            assert eq.primal >= le.primal - 1e-9
            assert eq.primal == brute_force(inst, v, ncomp_equal=True)[0]
    with pytest.raises(InvalidParameterError):
        ncomp_equality(build(inst, "GRSC"))


def test_ncomp_equality_on_three_patches():
    # three separate 2-node patches, each holding one species
    edges = [(0, 1), (2, 3), (4, 5), (1, 2), (3, 4)]
    w = [[4, 0, 0, 0, 0, 0], [0, 0, 0, 4, 0, 0], [0, 0, 0, 0, 0, 4]]
    inst = make_instance(6, edges, [1, 50, 1, 1, 50, 1], weights_s1=w, lam=[4, 4, 4], max_components=3)
    le = solve(inst, "GRSC-C")[0]
    eq = solve(inst, "GRSC-C", ncomp_equality(build(inst, "GRSC-C")))[0]
    assert le.primal == eq.primal == 3


def test_local_branching_row():
    inst = make_instance(4, path_edges(4), [1, 1, 1, 1], weights_s1=[[1, 1, 1, 1]], lam=[2])
    f = add_local_branching(build(inst, "GRSC-CB"), frozenset({1, 2}), 1)
    row = f.model.constraints[-1]
    assert row.name == "LOCBRA" and row.rhs == 1 and row.sense == ">="
    assert len(f.model.constraints) == len(build(inst, "GRSC-CB").model.constraints) + 1


def test_nesting_and_reductions_on_random_instances(rng):
    for _ in range(12):
        inst = random_instance(rng)
        z = {}
        for v in Variant:
            res, f = solve(inst, v)
            z[v] = res.primal
            if res.values is None:
                continue
            sol = f.to_solution(res.values)
            assert validate(inst, v, sol).feasible
            if v in (Variant.GRSC, Variant.GRSC_C):
                # promoting the whole reserve to core is cost-neutral and feasible
                full = Solution.from_sets(inst, v, sol.reserve, sol.reserve)
                assert validate(inst, v, full).feasible and full.objective == sol.objective
            if v is Variant.GRSC_CB:
                assert sol.reserve == buffered(inst, sol.core, inst.buffer_width)
        assert z[Variant.GRSC] <= z[Variant.GRSC_B] <= z[Variant.GRSC_CB]
        assert z[Variant.GRSC] <= z[Variant.GRSC_C] <= z[Variant.GRSC_CB]


def test_more_components_never_cost_more(rng):
    for _ in range(6):
        inst = random_instance(rng, "blobs")
        for v in ("GRSC-C", "GRSC-CB"):
            z1 = solve(inst.replace(max_components=1), v)[0].primal
            z3 = solve(inst.replace(max_components=3), v)[0].primal
            assert z3 <= z1


def test_to_values_round_trip():
    inst = make_instance(6, grid_edges(2, 3), [2, 3, 1, 4, 2, 2], weights_s1=[[5, 0, 0, 0, 0, 5]], lam=[5])
    f = build(inst, "GRSC-CB")
    sol = Solution.from_sets(inst, "GRSC-CB", [0])
    assert f.to_solution(f.to_values(sol)) == sol
    assert f.model.is_feasible(f.to_values(sol))
