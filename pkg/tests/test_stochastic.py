import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from treegroups import stochastic
from treegroups.automaton import builtin
from treegroups.expr import free_reduce
from treegroups.words import AutomatonGroup

GAMMA = AutomatonGroup(builtin("gamma"))


def test_random_word_basics():
    rng = np.random.default_rng(0)
    assert stochastic.random_reduced_word(0, rng) == ()
    for _ in range(500):
        w = stochastic.random_reduced_word(2, rng)
        assert len(w) == 2 and w[0] != -w[1]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2 ** 32), st.integers(1, 3))
def test_random_words_are_reduced(n, seed, k):
    w = stochastic.random_reduced_word(n, np.random.default_rng(seed), k)
    assert len(w) == n and free_reduce(w) == w
    assert all(1 <= abs(c) <= k for c in w)


def test_letters_uniform():
    first = np.empty(100_000, dtype=np.int64)
    steps = np.random.default_rng(3).integers(0, 3, size=(100_000, 1))
    first[:] = np.random.default_rng(4).integers(0, 4, size=100_000)
    words = stochastic._build_words(first, steps)
    for col in range(2):
        counts = np.bincount(words[:, col], minlength=4)
        assert stats.chisquare(counts).pvalue > 1e-3


def test_level_one_words():
    st1 = stochastic.estimate_contraction(GAMMA, 1, 200, seed=1)
    assert st1.mu_hat == 1.0 and st1.degenerate


def test_child_sums_match_decompose():
    sums = stochastic.child_sums(GAMMA, 40, 50, seed=9)
    for i in range(50):
        rng = stochastic.sample_rng(9, i)
        first = rng.integers(0, 4)
        steps = rng.integers(0, 3, size=39)
        letters = stochastic._build_words(np.array([first]), steps[None, :])[0]
        w = tuple(int(c) for c in stochastic._letter_to_code(letters))
        assert sums[i] == sum(len(c) for c in GAMMA.decompose(w).children)


def test_child_sums_independent_of_batching():
    a = stochastic.child_sums(GAMMA, 300, 100, seed=5, batch=7)
    b = stochastic.child_sums(GAMMA, 300, 100, seed=5, batch=256)
    assert np.array_equal(a, b)


def test_kernels_agree_with_numpy_versions():
    rng = np.random.default_rng(11)
    first = rng.integers(0, 4, size=64)
    steps = rng.integers(0, 3, size=(64, 199))
    w1 = stochastic._build_words_np(first, steps)
    assert np.array_equal(w1, stochastic._build_words(first, steps))
    for name in ("gamma", "bsv", "grigorchuk"):
        G = AutomatonGroup(builtin(name))
        perm, child = stochastic._tables(G)
        k = G.T.num_states
        words = stochastic._build_words_np(rng.integers(0, 2 * k, size=64),
                                           rng.integers(0, 2 * k - 1, size=(64, 199)))
        assert np.array_equal(stochastic._child_lengths_np(words, perm, child),
                              stochastic._child_lengths(words, perm, child))


def test_estimates_moderate_length():
    gam = stochastic.estimate_contraction(GAMMA, 4000, 800, seed=3)
    bsv = stochastic.estimate_contraction(AutomatonGroup(builtin("bsv")), 4000, 800, seed=3)
    assert abs(gam.mu_hat - 0.699) < 0.03 and abs(bsv.mu_hat - 0.781) < 0.03
    assert gam.stderr_mu < 0.01


def test_c_coefficient():
    mu, eta, n = 0.699, 0.326, 1000
    assert stochastic.c_coefficient(n, n, mu, eta) == pytest.approx(eta * mu ** (eta * n))
    assert stochastic.c_coefficient(0, n, mu, eta) == pytest.approx(eta * (1 - mu) ** (eta * n))
    total = sum(stochastic.c_coefficient(m, n, mu, eta) for m in range(n + 1))
    assert abs(total - 1) < 0.05
    with pytest.raises(ValueError):
        stochastic.c_coefficient(5, 3, mu, eta)


def test_bound_check():
    rep = stochastic.amenability_bound_check(0.699, 0.326)
    assert rep.ok and rep.min_gap > 0 and rep.h_at_one == 1.0
    near = stochastic.amenability_bound_check(1 - 1e-9, 0.326)
    assert near.min_gap < 1e-6


def test_cogrowth_small():
    rows = stochastic.exact_cogrowth(GAMMA, 8)
    assert (rows[0].reduced, rows[0].trivial) == (1, 1)
    assert all(r.trivial == 0 for r in rows[1:8])
    assert rows[8].trivial >= 2
    assert rows[3].reduced == 4 * 9


def test_cogrowth_counts_by_brute_force():
    # every reduced word up to length 8, checked one by one
    layer = [()]
    counts = [1]
    for n in range(1, 9):
        layer = [w + (c,) for w in layer for c in (1, -1, 2, -2) if not w or c != -w[-1]]
        counts.append(sum(GAMMA.is_identity(w) for w in layer))
    assert [r.trivial for r in stochastic.exact_cogrowth(GAMMA, 8)] == counts


def test_scan_agrees_with_numpy_version():
    perms_by_code = GAMMA.level_perms(5)
    perms = np.array([perms_by_code[c] for c in (1, -1, 2, -2)], dtype=np.int64)
    f1, l1, o1 = stochastic._scan_np(perms, 8, 100_000)
    f2, l2, o2 = stochastic._scan(perms, 8, 100_000)
    key = lambda f, l: sorted(tuple(r[:n]) for r, n in zip(f.tolist(), l.tolist()))
    assert key(f1, l1) == key(f2, l2) and o1 == o2
