import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treegroups import schreier
from treegroups.automaton import builtin

GAMMA = builtin("gamma")
P = (-0.25, -0.25)


def test_level_one_graph():
    g = schreier.schreier_graph(GAMMA, 1)
    assert list(g.targets["a"]) == [1, 0]
    assert list(g.targets["b"]) == [0, 1]
    assert g.names == ["1", "2"]


def test_level_zero_and_three():
    g = schreier.schreier_graph(GAMMA, 0)
    assert g.size == 1 and list(g.degrees()) == [4]
    g = schreier.schreier_graph(GAMMA, 3)
    assert g.size == 8 and g.is_regular_permutation_graph()


def test_recursive_small():
    g = schreier.basilica_recursive_graph(1)
    assert g.size == 2 and sorted(g.targets["a"]) == [0, 1] and list(g.targets["b"]) == [0, 1]
    assert schreier.basilica_recursive_graph(0).size == 1


@pytest.mark.parametrize("n", range(0, 11))
def test_recursive_matches_action(n):
    rec = schreier.basilica_recursive_graph(n)
    act = schreier.schreier_graph(GAMMA, n)
    assert schreier.labeled_isomorphic(rec, act)
    assert np.all(rec.degrees() == 4)


def test_isomorphism_negative():
    g = schreier.schreier_graph(GAMMA, 2)
    assert schreier.labeled_isomorphic(g, g)
    assert not schreier.labeled_isomorphic(g, schreier.schreier_graph(builtin("grigorchuk"), 2))
    # the same graph rooted elsewhere is a different labelled rooted graph
    h = schreier.schreier_graph(GAMMA, 3)
    moved = schreier.SchreierGraph(3, h.labels, h.targets, root=5)
    assert not schreier.labeled_isomorphic(h, moved)


def test_hecke_matrix():
    M = schreier.hecke_matrix(schreier.schreier_graph(GAMMA, 1))
    assert np.allclose(M, [[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(schreier.hecke_matrix(schreier.schreier_graph(GAMMA, 0)), [[1.0]])
    M = schreier.hecke_matrix(schreier.schreier_graph(GAMMA, 5))
    assert np.allclose(M.sum(axis=1), 1) and np.allclose(M, M.T)


def test_level_spectrum_basic():
    assert np.allclose(schreier.level_spectrum(1), [0, 1])
    for n in (3, 7):
        ev = schreier.level_spectrum(n)
        assert abs(ev[-1] - 1) < 1e-12 and np.all(np.abs(ev) <= 1 + 1e-12)


def test_eigenvalues_against_numpy():
    M = schreier.hecke_matrix(schreier.schreier_graph(GAMMA, 6))
    assert np.allclose(schreier.eigenvalues(M), np.sort(np.linalg.eigvalsh(M)), atol=1e-12)


def test_f_map():
    assert schreier.f_map((1, -0.25, -0.25)) == pytest.approx((0.375, -0.125, -0.0625))
    assert schreier.f_map((0, 0, 0)) == (0, 0, 0)


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.floats(-2, 2)] * 3))
def test_f_homogeneous(p):
    lhs = schreier.f_map(tuple(2 * x for x in p))
    assert lhs == pytest.approx(tuple(4 * x for x in schreier.f_map(p)), abs=1e-12)


def test_q_values():
    assert schreier.q_eval(0, (1,) + P) == 0
    assert schreier.q_eval(1, (0,) + P) == 0
    rng = np.random.default_rng(5)
    for p in rng.uniform(-1, 1, size=(10, 3)):
        lam, mu, nu = p
        closed = schreier.q_eval(1, p)
        det = np.linalg.det([[lam + 2 * nu, 2 * mu], [2 * mu, lam + 2 * nu]])
        # (lam + 2nu)^2 - 4mu^2 factors as Q_0 L
        assert det == pytest.approx(closed, abs=1e-12)
        s, logdet = schreier.q_det(1, p)
        assert s * np.exp(logdet) == pytest.approx(closed, abs=1e-12)


def test_det_recursion():
    assert schreier.verify_det_recursion(100, 1, 1e-8, seed=1).ok
    assert schreier.verify_det_recursion(20, 5, 1e-8, seed=2).ok
    rep = schreier.verify_det_recursion(points=[(0.0, 0.0, 0.0)], nmax=3)
    assert rep.ok and rep.worst == 0.0


def test_spectrum_check():
    rep = schreier.spectrum_check(1)
    assert rep.ok and np.allclose(rep.eigenvalues, [0, 1])
    rep = schreier.spectrum_check(0)
    assert rep.ok and rep.eigenvalues.tolist() == [1.0]
    rep = schreier.spectrum_check(6, 1e-6)
    assert rep.ok and rep.eigenvalues.size == 64


def test_spectrum_check_rejects_wrong_values():
    # perturbed eigenvalues are not roots of Q_n
    res = [schreier.q_eval(4, (lam + 1e-3,) + P) for lam in schreier.level_spectrum(4)[:-1]]
    scales = [schreier.spectrum_scale(4, lam) for lam in schreier.level_spectrum(4)[:-1]]
    assert max(abs(r) / s for r, s in zip(res, scales)) > 1e-6


def test_cantor():
    assert np.allclose(schreier.cantor_approximation(1), [0, 1])
    pts = schreier.cantor_approximation(8)
    assert pts.min() >= -1 and pts.max() <= 1
    ev = schreier.level_spectrum(6)
    c6 = schreier.cantor_approximation(6)
    assert all(np.min(np.abs(c6 - x)) < 1e-6 for x in ev)


def test_cantor_methods_agree():
    for depth in range(1, 8):
        a = schreier.cantor_approximation(depth)
        b = schreier.cantor_approximation(depth, method="roots")
        assert a.size == b.size and np.allclose(a, b, atol=1e-8)


def test_block_perms_match_matrices():
    for n in range(5):
        a, b = schreier.block_matrices(n)
        pa, pb = schreier.block_perms(n)
        assert np.array_equal(np.argmax(a, axis=1), pa)
        assert np.array_equal(np.argmax(b, axis=1), pb)


def test_exports(tmp_path):
    g = schreier.schreier_graph(GAMMA, 1)
    dot = schreier.export(g, "dot")
    assert dot.startswith("digraph") and dot.count("->") == 4 and 'label="a"' in dot
    doc = json.loads(schreier.export(g, "json", tmp_path / "g.json"))
    assert doc["vertices"] == ["1", "2"] and {"from": "1", "label": "a", "to": "2"} in doc["edges"]
    assert json.loads((tmp_path / "g.json").read_text()) == doc
    ev = schreier.level_spectrum(5)
    assert np.array_equal(schreier.parse_spectrum_csv(schreier.spectrum_csv(ev)), ev)
    with pytest.raises(ValueError):
        schreier.export(g, "png")
