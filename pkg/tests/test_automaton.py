import itertools

import pytest
from hypothesis import given, settings, strategies as st

from treegroups.automaton import (
    AutomatonError, apply_state, builtin, dual, format_transducer, parse_transducer, validate,
)

GAMMA_FILE = """
# the basilica transducer
alphabet 2
state a
on 1 -> 2 goto b
on 2 -> 1 goto id
state b
on 1 -> 1 goto a
on 2 -> 2 goto id
"""


def test_parse_gamma_matches_builtin():
    T = parse_transducer(GAMMA_FILE)
    B = builtin("gamma")
    for q in ("a", "b"):
        for v in ("1", "2", "12", "2121", "11112"):
            assert apply_state(T, q, v) == apply_state(B, q, v)


def test_parse_trivial():
    T = parse_transducer("alphabet 2\n")
    assert T.num_states == 0
    assert validate(T).as_dict() == {"invertible": True, "monomial": True, "dual_invertible": True}


def test_parse_rejects_non_permutation():
    bad = GAMMA_FILE.replace("on 2 -> 1 goto id", "on 2 -> 2 goto id")
    with pytest.raises(AutomatonError, match="not a permutation"):
        parse_transducer(bad)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(AutomatonError, match="line"):
        parse_transducer("alphabet 2\nstate a\non 1 -> 2 goto nowhere\non 2 -> 1 goto id\n")


def test_round_trip_format():
    for name in ("gamma", "bsv", "grigorchuk", "aleshin"):
        T = builtin(name)
        U = parse_transducer(format_transducer(T))
        for q in T.states:
            for v in ("1", "21", "1122", "2212"):
                assert apply_state(T, q, v) == apply_state(U, q, v)


def test_builtin_sizes():
    assert builtin("gamma").num_states == 2  # plus the implicit id
    assert builtin("grigorchuk").num_states == 4
    assert set(builtin("bsv").states) == {"l", "m"}
    with pytest.raises(AutomatonError):
        builtin("nope")
    with pytest.raises(AutomatonError):
        builtin("mandelbrot", "012")


def test_validate_examples():
    assert validate(builtin("gamma")).as_dict() == {"invertible": True, "monomial": True, "dual_invertible": False}
    g = validate(builtin("grigorchuk"))
    assert g.invertible and not g.monomial


def test_apply_state_examples():
    T = builtin("gamma")
    assert apply_state(T, "a", "1") == "2"
    assert apply_state(T, "a", "21") == "11"
    assert apply_state(T, "id", "2121") == "2121"
    assert apply_state(T, "a", "") == ""
    with pytest.raises(AutomatonError):
        apply_state(T, "a", "3")


@pytest.mark.parametrize("name", ["gamma", "bsv", "grigorchuk", "aleshin"])
def test_level_bijection_and_inverse(name):
    T = builtin(name)
    for n in range(1, 9):
        verts = ["".join(p) for p in itertools.product("12", repeat=n)]
        for q in T.states:
            imgs = [apply_state(T, q, v) for v in verts]
            assert len(set(imgs)) == len(verts)
            if n <= 5:
                assert [apply_state(T, q + "^-1", w) for w in imgs] == verts


def test_dual_of_dual():
    for name in ("gamma", "grigorchuk", "aleshin"):
        M = dual(builtin(name))
        assert M.dual().dual() == M


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["gamma", "bsv", "grigorchuk", "aleshin"]), st.text("12", min_size=1, max_size=14),
       st.integers(0, 13))
def test_prefix_compatibility(name, v, cut):
    T = builtin(name)
    cut = min(cut, len(v))
    for q in T.states:
        assert apply_state(T, q, v)[:cut] == apply_state(T, q, v[:cut])
