import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treegroups import quotient
from treegroups.automaton import builtin, parse_transducer
from treegroups.words import AutomatonGroup

GAMMA = AutomatonGroup(builtin("gamma"))


def test_level_permutation_examples():
    assert quotient.level_permutation(GAMMA, "a", 1).cycles() == [(0, 1)]
    assert quotient.level_permutation(GAMMA, "b", 1).is_identity()
    assert quotient.level_permutation(GAMMA, "", 5).is_identity()


def test_level_permutation_algebra():
    a = quotient.level_permutation(GAMMA, "a", 6)
    b = quotient.level_permutation(GAMMA, "b", 6)
    ab = quotient.level_permutation(GAMMA, "ab", 6)
    assert np.array_equal((a * b).image, ab.image)
    assert (a * a.inverse()).is_identity()


@pytest.mark.parametrize("n,order", [(1, 2), (2, 8), (3, 64), (4, 4096)])
def test_group_order_examples(n, order):
    assert quotient.group_order(GAMMA, None, n) == order
    assert quotient.predicted_order_basilica(n) == order


@pytest.mark.parametrize("name", ["gamma", "bsv", "grigorchuk", "aleshin"])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_tree_chain_matches_sympy(name, n):
    G = AutomatonGroup(builtin(name))
    perms = [G.word_perm((c,), n) for c in G.codes if c > 0]
    assert quotient.group_order(G, None, n) == quotient.schreier_sims_order(perms)


def test_predicted_order():
    assert quotient.predicted_order_basilica(6) == 2 ** 45
    for n in range(31):
        quotient.predicted_order_basilica(n)


def test_element_orders():
    assert quotient.element_order(GAMMA, "a", 3) == 4
    assert quotient.element_order(GAMMA, "b", 1) == 1
    assert quotient.element_order(GAMMA, "[a,b]", 4) == 4


def test_derived_index():
    assert quotient.derived_index(GAMMA, 2) == 4
    assert quotient.derived_index(GAMMA, 1) == 2
    trivial = AutomatonGroup(parse_transducer("alphabet 2\n"))
    assert quotient.derived_index(trivial, 3) == 1


def test_derived_subgroup_matches_sympy():
    from sympy.combinatorics import Permutation, PermutationGroup

    for name in ("gamma", "grigorchuk"):
        G = AutomatonGroup(builtin(name))
        for n in range(1, 6):
            P = PermutationGroup([Permutation(list(map(int, G.word_perm((c,), n)))) for c in G.codes if c > 0])
            assert quotient.derived_subgroup_order(G, n) == P.derived_subgroup().order()


def test_hausdorff():
    assert quotient.hausdorff_estimate(GAMMA, 4) == pytest.approx(0.8)
    assert quotient.hausdorff_estimate(GAMMA, 1) == 1.0
    assert quotient.hausdorff_estimate(GAMMA, 10) == pytest.approx(687 / 1023)


def test_bsv_membership():
    assert quotient.bsv_membership_check()


def test_chain_membership():
    n = 6
    perms = [GAMMA.word_perm((c,), n) for c in (1, 2)]
    chain = quotient.tree_chain(perms, n)
    assert chain.contains(GAMMA.word_perm(GAMMA.word("a b A b^3"), n))
    # a swap of two leaves under one parent is in Aut(X^n) but not in Q_6
    odd = np.arange(2 ** n)
    odd[[0, 1]] = [1, 0]
    inside = chain.contains(odd)
    from sympy.combinatorics import Permutation, PermutationGroup

    P = PermutationGroup([Permutation(list(map(int, p))) for p in perms])
    assert inside == P.contains(Permutation(list(map(int, odd))))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=12), st.integers(1, 8))
def test_element_order_divides_group_order(w, n):
    o = quotient.element_order(GAMMA, w, n)
    assert o & (o - 1) == 0  # the quotients are 2-groups
    assert quotient.group_order(GAMMA, None, n) % o == 0


def test_numpy_fallback_agrees():
    n = 7
    perms = np.array([GAMMA.word_perm((c,), n) for c in (1, 2)], dtype=np.int64)
    conj = np.zeros((0, 2 ** n), dtype=np.int64)
    f1, _ = quotient._tree_chain_np(perms, conj, n)
    f2, _ = quotient._tree_chain(perms, conj, n)
    assert np.array_equal(f1, f2)
    assert int(f1.sum()) == int(math.log2(quotient.predicted_order_basilica(n)))
