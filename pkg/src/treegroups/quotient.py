"""Finite level quotients ``Q_n``: the action of a group on ``X^n``.

For binary trees the order is computed with a stabilizer chain adapted
to the tree.  Internal vertices are numbered breadth first and the
``v``-th subgroup of the chain consists of elements whose portrait is
trivial at every vertex before ``v``.  Each step has index at most 2,
so the transversal at ``v`` is a single element and the order is
``2 ** (number of filled vertices)``.  The chain is closed by sifting
squares and conjugates of the transversal elements (a polycyclic
consistency check) and, for normal closures, conjugates by the ambient
generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._accel import pick
from .expr import commutator
from .words import AutomatonGroup, as_group

MAX_POINTS = 1 << 14


@dataclass(frozen=True)
class LevelPermutation:
    level: int
    image: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.int64)
        if img.ndim != 1 or not np.array_equal(np.sort(img), np.arange(img.size)):
            raise ValueError("image is not a permutation")
        object.__setattr__(self, "image", img)

    def __mul__(self, other):
        # right action: x^(gh) = (x^g)^h
        return LevelPermutation(self.level, other.image[self.image])

    def __eq__(self, other):
        return isinstance(other, LevelPermutation) and np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash(self.image.tobytes())

    def inverse(self):
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(self.image.size)
        return LevelPermutation(self.level, inv)

    def is_identity(self):
        return bool(np.all(self.image == np.arange(self.image.size)))

    def cycles(self):
        seen = np.zeros(self.image.size, dtype=bool)
        out = []
        for start in range(self.image.size):
            if seen[start]:
                continue
            cyc, x = [], start
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = int(self.image[x])
            out.append(tuple(cyc))
        return out

    def order(self):
        return math.lcm(*(len(c) for c in self.cycles()))


def _budget(G: AutomatonGroup, n: int):
    if n < 0:
        raise ValueError("level must be non-negative")
    if G.d ** n > MAX_POINTS:
        raise MemoryError(f"level {n} has {G.d ** n} vertices, above the budget of {MAX_POINTS}")


def level_permutation(T, w, n: int) -> LevelPermutation:
    G = as_group(T)
    _budget(G, n)
    word = G.word(w) if isinstance(w, str) else tuple(w)
    return LevelPermutation(n, G.word_perm(word, n))


def element_order(T, w, n: int) -> int:
    return level_permutation(T, w, n).order()


# ------------------------------------------------------------ tree chain


def _leading_nb(g, n, start):
    # first internal vertex (BFS index >= start) where g has a non-trivial label,
    # assuming all earlier labels are trivial
    V = (1 << n) - 1
    for v in range(start, V):
        k = 0
        while (1 << (k + 1)) - 1 <= v:
            k += 1
        i = v - ((1 << k) - 1)
        s = n - k - 1
        if (g[(2 * i) << s] >> s) != 2 * i:
            return v
    return -1


def _tree_chain_nb(gens, conj, n):
    """Fill the chain from generator leaf permutations.

    ``conj`` holds extra conjugators; the result is then the normal closure
    of ``gens`` under them.  Returns the filled flags and the transversal.
    """
    N = 1 << n
    V = N - 1
    T = np.zeros((max(V, 1), N), dtype=np.int64)
    Tinv = np.zeros((max(V, 1), N), dtype=np.int64)
    filled = np.zeros(max(V, 1), dtype=np.bool_)
    inserted = np.empty(max(V, 1), dtype=np.int64)
    m = 0
    nc = conj.shape[0]
    cap = V * (V + 1) // 2 + V * nc + gens.shape[0] + 8
    qk = np.empty(cap, dtype=np.int64)
    qa = np.empty(cap, dtype=np.int64)
    qb = np.empty(cap, dtype=np.int64)
    head = 0
    tail = 0
    for r in range(gens.shape[0]):
        qk[tail] = 0
        qa[tail] = r
        qb[tail] = 0
        tail += 1
    conj_inv = np.empty_like(conj)
    for c in range(nc):
        for x in range(N):
            conj_inv[c, conj[c, x]] = x
    g = np.empty(N, dtype=np.int64)
    h = np.empty(N, dtype=np.int64)
    while head < tail:
        kind, a, b = qk[head], qa[head], qb[head]
        head += 1
        if kind == 0:
            for x in range(N):
                g[x] = gens[a, x]
        elif kind == 1:
            if a == b:
                for x in range(N):
                    g[x] = T[a, T[a, x]]
            else:
                # T[a]^-1 T[b] T[a]
                for x in range(N):
                    g[x] = T[a, T[b, Tinv[a, x]]]
        else:
            for x in range(N):
                g[x] = conj[b, T[a, conj_inv[b, x]]]
        v = _leading(g, n, 0)
        while v >= 0 and filled[v]:
            for x in range(N):
                h[x] = Tinv[v, g[x]]
            for x in range(N):
                g[x] = h[x]
            v = _leading(g, n, v)
        if v < 0:
            continue
        filled[v] = True
        for x in range(N):
            T[v, x] = g[x]
            Tinv[v, g[x]] = x
        qk[tail] = 1
        qa[tail] = v
        qb[tail] = v
        tail += 1
        for j in range(m):
            u = inserted[j]
            qk[tail] = 1
            qa[tail] = min(u, v)
            qb[tail] = max(u, v)
            tail += 1
        inserted[m] = v
        m += 1
        for c in range(nc):
            qk[tail] = 2
            qa[tail] = v
            qb[tail] = c
            tail += 1
    return filled, T


def _probe(n):
    # for each internal vertex (BFS order): a leaf below its first child, and the shift
    idx, shift, want = [], [], []
    for k in range(n):
        s = n - k - 1
        for i in range(1 << k):
            idx.append((2 * i) << s)
            shift.append(s)
            want.append(2 * i)
    return np.array(idx, dtype=np.int64), np.array(shift, dtype=np.int64), np.array(want, dtype=np.int64)


_PROBES: dict = {}


def _leading_np(g, n, start):
    if n not in _PROBES:
        _PROBES[n] = _probe(n)
    idx, shift, want = _PROBES[n]
    moved = np.flatnonzero((g[idx[start:]] >> shift[start:]) != want[start:])
    return int(moved[0]) + start if moved.size else -1


def _tree_chain_np(gens, conj, n):
    N = 1 << n
    V = max(N - 1, 1)
    T = np.zeros((V, N), dtype=np.int64)
    Tinv = np.zeros((V, N), dtype=np.int64)
    filled = np.zeros(V, dtype=bool)
    inserted = []
    conj_inv = np.argsort(conj, axis=1) if len(conj) else conj
    queue = [(0, r, 0) for r in range(gens.shape[0])]
    head = 0
    while head < len(queue):
        kind, a, b = queue[head]
        head += 1
        if kind == 0:
            g = gens[a].copy()
        elif kind == 1:
            g = T[a][T[a]] if a == b else T[a][T[b][Tinv[a]]]
        else:
            g = conj[b][T[a][conj_inv[b]]]
        v = _leading_np(g, n, 0)
        while v >= 0 and filled[v]:
            g = Tinv[v][g]
            v = _leading_np(g, n, v)
        if v < 0:
            continue
        filled[v] = True
        T[v] = g
        Tinv[v][g] = np.arange(N)
        queue.append((1, v, v))
        queue.extend((1, min(u, v), max(u, v)) for u in inserted)
        inserted.append(v)
        queue.extend((2, v, c) for c in range(len(conj)))
    return filled, T


_leading = pick(_leading_nb, _leading_np)
_tree_chain = pick(_tree_chain_nb, _tree_chain_np)


@dataclass
class StabilizerChain:
    """Chain data; ``base`` lists the vertex indices whose transversal is non-trivial."""

    level: int
    base: list
    transversal: dict
    log2_order: int | None = None
    order: int = 1

    def contains(self, perm) -> bool:
        g = np.asarray(perm, dtype=np.int64).copy()
        v = _leading(g, self.level, 0)
        while v >= 0:
            t = self.transversal.get(v)
            if t is None:
                return False
            inv = np.empty_like(t)
            inv[t] = np.arange(t.size)
            g = inv[g]
            v = _leading(g, self.level, v)
        return True


def tree_chain(perms, n: int, conjugators=()) -> StabilizerChain:
    N = 1 << n
    gens = np.array([np.asarray(p, dtype=np.int64) for p in perms], dtype=np.int64).reshape(-1, N)
    conj = np.array([np.asarray(p, dtype=np.int64) for p in conjugators], dtype=np.int64).reshape(-1, N)
    if n == 0:
        return StabilizerChain(0, [], {}, 0, 1)
    filled, T = _tree_chain(gens, conj, n)
    base = [int(v) for v in np.flatnonzero(filled)]
    return StabilizerChain(n, base, {v: T[v].copy() for v in base}, len(base), 2 ** len(base))


def schreier_sims_order(perms) -> int:
    """Generic order via sympy's Schreier-Sims (used for d > 2 and as a check)."""
    from sympy.combinatorics import Permutation, PermutationGroup

    perms = [list(map(int, p)) for p in perms]
    if not perms:
        return 1
    return int(PermutationGroup([Permutation(p) for p in perms]).order())


def _generator_perms(G: AutomatonGroup, generators, n):
    if generators is None:
        words = [(c,) for c in G.codes if c > 0]
    else:
        words = [G.word(w) if isinstance(w, str) else tuple(w) for w in generators]
    return words, [G.word_perm(w, n) for w in words]


def group_order(T, generators=None, n: int = 1) -> int:
    """Exact order of the group generated by ``generators`` acting on ``X^n``."""
    G = as_group(T)
    _budget(G, n)
    _, perms = _generator_perms(G, generators, n)
    if G.d == 2:
        return tree_chain(perms, n).order
    return schreier_sims_order(perms)


def predicted_order_basilica(n: int) -> int:
    """Closed form ``2^((2/3)(2^n + floor(3n/2)/2 - 1))`` for the basilica quotients."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1
    e = Fraction(2, 3) * (2 ** n + Fraction(3 * n // 2, 2) - 1)
    if e.denominator != 1:
        raise ArithmeticError(f"non-integer exponent {e} at n={n}")
    return 2 ** int(e)


def derived_subgroup_order(T, n: int, generators=None) -> int:
    G = as_group(T)
    _budget(G, n)
    words, perms = _generator_perms(G, generators, n)
    comms = [G.word_perm(commutator(u, v), n) for i, u in enumerate(words) for v in words[i + 1:]]
    if not comms:
        return 1
    if G.d == 2:
        return tree_chain(comms, n, conjugators=perms).order
    from sympy.combinatorics import Permutation, PermutationGroup

    P = PermutationGroup([Permutation(list(map(int, p))) for p in perms])
    H = PermutationGroup([Permutation(list(map(int, p))) for p in comms])
    return int(P.normal_closure(H).order())


def derived_index(T, n: int, generators=None) -> int:
    return group_order(T, generators, n) // derived_subgroup_order(T, n, generators)


def hausdorff_estimate(T, n: int, generators=None) -> float:
    """``log |Q_n| / log |W/W_n|``; for binary trees ``log2 |Q_n| / (2^n - 1)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    G = as_group(T)
    order = group_order(G, generators, n)
    if G.d == 2:
        return (order.bit_length() - 1) / (2 ** n - 1)
    full = sum(G.d ** k for k in range(n)) * math.lgamma(G.d + 1)
    return math.log(order) / full


def bsv_membership_check(T=None) -> bool:
    """``b^-1 a`` decomposes as ``<a^-1 b, 1>`` with the swap at the root."""
    from .automaton import builtin

    G = as_group(T if T is not None else builtin("gamma"))
    dec = G.decompose(G.word("b^-1 a"))
    if tuple(dec.root) != (1, 0):
        return False
    return G.equal(dec.children[0], G.word("a^-1 b")) and G.is_identity(dec.children[1])
