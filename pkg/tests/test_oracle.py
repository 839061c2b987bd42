import math

import numpy as np
import pytest

from conftest import path_edges, random_instance
from grsc.instance import grid_edges, make_instance
from grsc.oracle import OracleLimitError, brute_force, brute_force_general, enumerate_feasible, validate
from grsc.solution import Solution, Variant


def path3():
    return make_instance(3, path_edges(3), [1, 1, 1], weights_s1=[[0, 5, 0]], lam=[5], buffer_width=1,
                         max_components=1)


def test_empty_two_by_two():
    inst = make_instance(4, grid_edges(2, 2), [1, 2, 3, 4])
    cost, sol = brute_force(inst, "GRSC-CB")
    assert cost == 0 and not sol.reserve


def test_path_examples():
    cost, sol = brute_force(path3(), "GRSC-CB")
    assert cost == 3 and sol.core == {1} and sol.reserve == {0, 1, 2}
    cost, sol = brute_force(path3(), "GRSC")
    assert cost == 1 and sol.reserve == {1}


def test_infeasible_reports_inf():
    inst = make_instance(3, path_edges(3), [1, 1, 1], weights_s1=[[0, 1, 0]], lam=[5])
    assert brute_force(inst, "GRSC") == (math.inf, None)


def test_size_cap():
    inst = make_instance(15, path_edges(15), np.ones(15))
    with pytest.raises(OracleLimitError):
        brute_force(inst, "GRSC")
    with pytest.raises(OracleLimitError):
        enumerate_feasible(make_instance(9, path_edges(9), np.ones(9)), "GRSC")


def test_validate_examples():
    inst = make_instance(4, grid_edges(2, 2), [1, 2, 3, 4], weights_s1=[[1, 1, 1, 1]], lam=[1], p1=0)
    rep = validate(inst, "GRSC-CB", Solution.empty(inst, "GRSC-CB"))
    assert rep.feasible and rep.objective == 0
    bad = Solution(frozenset({0}), frozenset({0}), frozenset({0}), frozenset(), 1.0)
    rep = validate(inst, "GRSC-CB", bad)
    assert not rep.feasible and "BUFF.1" in rep.families()


def test_validate_flags_each_family():
    inst = make_instance(3, path_edges(3), [1, 1, 1], weights_s1=[[0, 5, 0]], weights_s2=[[1, 0, 1]],
                         lam=[5, 2])
    sol = Solution(frozenset({0, 2}), frozenset({2}), frozenset(), frozenset({0, 1}), 5.0)
    fams = validate(inst, "GRSC-CB", sol).families()
    assert {"S1-SQ", "S2-SQ", "LINK", "CORECON", "COST", "BUFF.1"} <= fams
    with pytest.raises(ValueError):
        validate(inst, "GRSC", Solution(frozenset({7}), frozenset({7}), frozenset(), frozenset(), 1.0))


@pytest.mark.parametrize("variant", list(Variant))
def test_reductions_match_general_enumeration(rng, variant):
    for _ in range(10):
        inst = random_instance(rng, ["path5", "g2x3", "g2x4", "blobs"][int(rng.integers(4))])
        assert brute_force(inst, variant)[0] == brute_force_general(inst, variant)


def test_optimum_invariant_under_relabelling(rng):
    for _ in range(6):
        inst = random_instance(rng, "g3x3")
        perm = rng.permutation(inst.n_nodes)
        inv = np.argsort(perm)  # new id of old node i is inv[i]
        relabelled = inst.replace(edges=inv[inst.edges], cost=inst.cost[perm], weight=inst.weight[:, perm],
                                  grid_shape=None)
        for v in Variant:
            assert brute_force(inst, v)[0] == brute_force(relabelled, v)[0]


def test_oracle_solutions_validate(rng):
    for _ in range(10):
        inst = random_instance(rng)
        for v in Variant:
            cost, sol = brute_force(inst, v)
            if sol is not None:
                rep = validate(inst, v, sol)
                assert rep.feasible and rep.objective == cost


def test_tie_break_is_lexicographic():
    inst = make_instance(3, path_edges(3), [1, 1, 1], weights_s1=[[5, 0, 5]], lam=[5])
    assert brute_force(inst, "GRSC")[1].reserve == {0}
