from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treegroups import unrooted
from treegroups.unrooted import (
    IDENTITY, PLMap, all_vertices, decode_vertex, encode_vertex, hnn_action, pl_compose, pl_equal,
    pl_invert, t_act, thompson_maps,
)

vertices = st.text("12", min_size=1, max_size=16)


def neighbours(v):
    out = [v + "1", v + "2"]
    if len(v) > 1:
        out.append(v[:-1])
    else:
        out.append("2" if v == "1" else "1")
    return out


def test_vertex_codec():
    for v in ("1", "2", "12", "2211", "1" * 20):
        assert decode_vertex(*encode_vertex(v)) == v
    with pytest.raises(ValueError):
        encode_vertex("")
    with pytest.raises(ValueError):
        encode_vertex("13")


def test_t_examples():
    assert t_act("2") == "1"
    assert t_act("1") == "11"
    assert t_act("22") == "2" and t_act("21") == "12"
    assert t_act("1", "grig") == "12" and t_act("21", "grig") == "11"


@pytest.mark.parametrize("variant", ["delta", "grig"])
def test_t_is_a_bijection(variant):
    Ls, idxs = all_vertices(10)
    L1, I1 = unrooted._t_batch(Ls, idxs, variant, False)
    L2, I2 = unrooted._t_batch(L1, I1, variant, True)
    assert np.array_equal(L2, Ls) and np.array_equal(I2, idxs)
    L3, I3 = unrooted._t_batch(*unrooted._t_batch(Ls, idxs, variant, True), variant, False)
    assert np.array_equal(L3, Ls) and np.array_equal(I3, idxs)


@settings(max_examples=300, deadline=None)
@given(vertices, st.sampled_from(["delta", "grig"]), st.booleans())
def test_t_preserves_adjacency(v, variant, inverse):
    image = t_act(v, variant, inverse)
    assert set(neighbours(image)) == {t_act(w, variant, inverse) for w in neighbours(v)}


@settings(max_examples=200, deadline=None)
@given(vertices, st.sampled_from(["delta", "gtilde"]), st.lists(st.sampled_from("tabTAB"), max_size=8))
def test_words_act_by_isometries(v, variant, letters):
    H = hnn_action(variant)
    w = "".join(letters)
    image = H.act(w, v)
    assert set(neighbours(image)) == {H.act(w, u) for u in neighbours(v)}
    assert H.act(f"({w})^-1" if w else "", image) == v


def test_lift_examples():
    H = hnn_action("gtilde")
    S = H.system
    # b~ = <b, d>: on 1w it acts as b on w
    for w in ("1", "21", "2212"):
        L, idx = encode_vertex(w)
        img = decode_vertex(L, int(S.word_perm(S.word("b"), L)[idx]))
        assert H.act("b", "1" + w) == "1" + img
    D = hnn_action("delta").system
    for w in ("1", "2", "12", "221"):
        L, idx = encode_vertex(w)
        assert unrooted.act_rooted(D, unrooted.pair(D.word(""), D.word("c")), L + 1,
                                   np.array([idx]))[0] == idx  # <1, c> fixes 1w


def test_rooted_commutator_cd():
    D = hnn_action("delta").system
    for L in range(13):
        assert np.array_equal(D.word_perm(D.word("[c,d]"), L), np.arange(1 << L))


def test_unrooted_examples():
    H = hnn_action("delta")
    assert not H.same_action("bt", "tb", 4)
    assert H.same_action("b^(t^-1)", "a", 10)
    assert H.fixes_ball("", 6)
    assert unrooted.unrooted_act("t", "2") == "1"
    assert unrooted.lifted_act("a", "1") == H.act("a", "1")


def test_relators():
    assert all(r.ok for r in unrooted.verify_unrooted_relators("delta", 14))
    assert all(r.ok for r in unrooted.verify_unrooted_relators("gtilde", 14))
    bad = unrooted.verify_unrooted_relators("delta", 6, ["[[b,t^-1],b]"])
    assert not bad[0].ok and "fails" in bad[0].as_dict()["note"]


def test_delta_relations():
    assert all(unrooted.delta_relations(10).values())


def test_transitivity():
    assert unrooted.transitivity_check("delta", 8)
    assert unrooted.transitivity_check("gtilde", 8)
    assert unrooted.transitivity_check("delta", 0)


def test_conjugation_identity():
    assert unrooted.verify_conjugation_identity("delta", triples=[("a", "b", "")], depth=8)
    assert unrooted.verify_conjugation_identity("gtilde", triples=[("a", "d", "b")], depth=8)
    assert unrooted.verify_conjugation_identity("gtilde", triples=[("", "", "")], depth=6)
    assert unrooted.verify_conjugation_identity("gtilde", samples=30, depth=8, seed=4)


# ------------------------------------------------------------ Thompson


def test_thompson_examples():
    t, u = thompson_maps()
    assert t(Fraction(1, 2)) == Fraction(1, 4)
    assert pl_compose(t, pl_invert(t)).is_identity()
    assert all(unrooted.verify_thompson_relators().values())
    assert not unrooted.pl_word("t u").is_identity()


def test_pl_validation():
    with pytest.raises(ValueError):
        PLMap((0, Fraction(1, 3), 1), (0, Fraction(1, 2), 1))
    with pytest.raises(ValueError):
        PLMap((0, 1), (0, Fraction(1, 2)))
    assert PLMap((0, Fraction(1, 2), 1), (0, Fraction(1, 2), 1)) == IDENTITY


@st.composite
def pl_maps(draw):
    t, u = thompson_maps()
    gens = [t, u, pl_invert(t), pl_invert(u)]
    f = IDENTITY
    for i in draw(st.lists(st.integers(0, 3), max_size=6)):
        f = pl_compose(f, gens[i])
    return f


@settings(max_examples=100, deadline=None)
@given(pl_maps(), pl_maps(), pl_maps(), st.fractions(0, 1).filter(lambda x: x.denominator & (x.denominator - 1) == 0))
def test_pl_group_laws(f, g, h, x):
    assert pl_equal(pl_compose(pl_compose(f, g), h), pl_compose(f, pl_compose(g, h)))
    assert pl_compose(f, pl_invert(f)).is_identity()
    assert pl_compose(f, g)(x) == g(f(x))
    fg = pl_compose(f, g)
    assert all(s.numerator & (s.numerator - 1) == 0 and s.denominator & (s.denominator - 1) == 0 for s in fg.slopes())
