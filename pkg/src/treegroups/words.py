"""Words over automaton states: wreath decomposition and the word problem.

A group word is a tuple of signed state codes (see :mod:`treegroups.automaton`).
:class:`AutomatonGroup` wraps a transducer with the tables and memo needed to
decompose words and decide triviality.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .automaton import Transducer, act_letters, parse_vertex, format_vertex
from .expr import (ExpressionError, evaluate, free_reduce, invert, multiply,
                   parse_word, commutator)


class BudgetExceeded(RuntimeError):
    """A search exceeded its configured size limit."""


@dataclass(frozen=True)
class WreathDecomposition:
    children: tuple  # d freely reduced words
    root: tuple  # 0-based permutation of the alphabet

    @property
    def root_trivial(self):
        return all(i == p for i, p in enumerate(self.root))


class AutomatonGroup:
    """The group generated by the states of a transducer."""

    def __init__(self, T: Transducer, memo_limit: int = 2_000_000):
        self.T = T
        self.d = T.alphabet_size
        k = T.num_states
        self.codes = tuple(c for j in range(k) for c in (j + 1, -(j + 1)))
        self._perm = {0: tuple(range(self.d))}
        self._child = {0: (0,) * self.d}
        for c in self.codes:
            self._perm[c] = T.permutation(c)
            self._child[c] = T.children(c)
        self._identity_memo: dict = {(): True}
        self._memo_limit = memo_limit
        self._level_cache: dict = {}

    # -------------------------------------------------------- words

    def word(self, expr, params=None) -> tuple:
        """Evaluate an expression string (or parsed AST) to a reduced word."""
        if isinstance(expr, str) and expr.strip() in ("", "1"):
            return ()
        node = parse_word(expr) if isinstance(expr, str) else expr
        return evaluate(node, self.resolve, params)

    def resolve(self, name):
        T = self.T
        if name in T.states:
            return (T.code(name),)
        if name == "id":
            return ()
        if len(name) == 1 and name.isupper() and name.lower() in T.states:
            return (T.code(name.lower(), -1),)
        raise ExpressionError(f"unknown generator {name!r}")

    def format(self, word) -> str:
        """Compact text form that :meth:`word` parses back."""
        if not word:
            return "1"
        parts = []
        for c in word:
            name = self.T.states[abs(c) - 1]
            plain = name if (len(name) == 1 or name[1:].replace("_", "").isdigit()) else f"{{{name}}}"
            if c > 0:
                parts.append(plain)
            elif len(name) == 1 and name.islower():
                parts.append(name.upper())
            else:
                parts.append(plain + "^-1")
        return "".join(parts)

    def weight_of(self, word, weights) -> float:
        return sum(weights[abs(c)] for c in word)

    # -------------------------------------------------------- decomposition

    def decompose(self, word) -> WreathDecomposition:
        """Children words (freely reduced) and root permutation of ``word``.

        Right action: ``(x v)^w = root[x] (v)^{children[x]}``.
        """
        d = self.d
        pos = list(range(d))
        stacks = [[] for _ in range(d)]
        perm, child = self._perm, self._child
        for c in word:
            pc, cc = perm[c], child[c]
            for x in range(d):
                p = pos[x]
                s = cc[p]
                if s:
                    st = stacks[x]
                    if st and st[-1] == -s:
                        st.pop()
                    else:
                        st.append(s)
                pos[x] = pc[p]
        return WreathDecomposition(tuple(tuple(s) for s in stacks), tuple(pos))

    def act(self, word, vertex):
        """Image of a vertex (string or 1-based sequence) under ``word``."""
        letters = parse_vertex(vertex, self.d)
        for c in word:
            letters = act_letters(self.T, c, letters)
        if isinstance(vertex, str):
            return format_vertex(letters, self.d)
        return tuple(x + 1 for x in letters)

    # -------------------------------------------------------- word problem

    def is_identity(self, word, budget: int = 1_000_000) -> bool:
        """Exact triviality test.

        Every section of ``w`` at every vertex is represented by a reduced
        word of length at most ``|w|``, so the set of section words reachable
        from ``w`` is finite; ``w`` is trivial iff each of them has a trivial
        root permutation.
        """
        w = free_reduce(word)
        memo = self._identity_memo
        known = memo.get(w)
        if known is not None:
            return known
        seen = {w}
        stack = [w]
        result = True
        while stack:
            u = stack.pop()
            flag = memo.get(u)
            if flag is True:
                continue
            if flag is False:
                result = False
                break
            dec = self.decompose(u)
            if not dec.root_trivial:
                memo[u] = False
                result = False
                break
            for ch in dec.children:
                if ch not in seen:
                    seen.add(ch)
                    stack.append(ch)
            if len(seen) > budget:
                raise BudgetExceeded("section set exceeded budget")
        if len(memo) > self._memo_limit:
            memo.clear()
            memo[()] = True
        if result:
            for u in seen:
                memo[u] = True
        else:
            memo[w] = False
        return result

    def equal(self, u, v) -> bool:
        return self.is_identity(multiply(u, invert(v)))

    # -------------------------------------------------------- level actions

    def level_perms(self, n: int) -> dict:
        """Permutation arrays of every signed generator on ``X^n``.

        Vertex ``x_1..x_n`` (0-based letters) has index ``sum x_i d^(n-i)``.
        """
        cached = self._level_cache.get(n)
        if cached is not None:
            return cached
        d = self.d
        if n == 0:
            res = {c: np.zeros(1, dtype=np.int64) for c in (0,) + self.codes}
        else:
            prev = self.level_perms(n - 1)
            size = d ** (n - 1)
            res = {}
            for c in (0,) + self.codes:
                arr = np.empty(d * size, dtype=np.int64)
                for x in range(d):
                    arr[x * size:(x + 1) * size] = self._perm[c][x] * size + prev[self._child[c][x]]
                res[c] = arr
        self._level_cache[n] = res
        return res

    def word_perm(self, word, n: int) -> np.ndarray:
        perms = self.level_perms(n)
        arr = np.arange(self.d ** n, dtype=np.int64)
        for c in word:
            arr = perms[c][arr]
        return arr

    def fixes_level(self, word, n: int) -> bool:
        arr = self.word_perm(word, n)
        return bool(np.all(arr == np.arange(arr.size)))


def as_group(T) -> AutomatonGroup:
    return T if isinstance(T, AutomatonGroup) else AutomatonGroup(T)


def _w(G, w):
    return G.word(w) if isinstance(w, str) else free_reduce(w)


# ------------------------------------------------------------ functional API


def decompose(T, w) -> WreathDecomposition:
    G = as_group(T)
    return G.decompose(_w(G, w))


def is_identity(T, w) -> bool:
    G = as_group(T)
    return G.is_identity(_w(G, w))


def equal(T, u, v) -> bool:
    G = as_group(T)
    return G.equal(_w(G, u), _w(G, v))


# ------------------------------------------------------------ canonical store


class ElementStore:
    """Deduplicates words by group element (fingerprint bucket + exact test)."""

    def __init__(self, G: AutomatonGroup, level: int | None = None):
        self.G = G
        if level is None:
            level = max(1, int(math.log(512, G.d)))
        self.level = level
        self.words: list = []
        self._buckets: dict = {}

    def fingerprint(self, word):
        return self.G.word_perm(word, self.level).tobytes()

    def find(self, word, fp=None):
        fp = self.fingerprint(word) if fp is None else fp
        for i in self._buckets.get(fp, ()):
            if self.G.equal(word, self.words[i]):
                return i
        return None

    def add(self, word, fp=None):
        """Return ``(index, is_new)``."""
        fp = self.fingerprint(word) if fp is None else fp
        i = self.find(word, fp)
        if i is not None:
            return i, False
        self.words.append(word)
        self._buckets.setdefault(fp, []).append(len(self.words) - 1)
        return len(self.words) - 1, True

    def __len__(self):
        return len(self.words)


# ------------------------------------------------------------ nucleus


@dataclass
class Nucleus:
    words: list  # canonical reduced words; words[0] is the empty word
    children: dict  # index -> tuple of child indices
    identity: dict  # index -> bool

    def __len__(self):
        return len(self.words)

    def is_closed(self, G) -> bool:
        store = ElementStore(G)
        for w in self.words:
            store.add(w)
        for w in self.words:
            for ch in G.decompose(w).children:
                if store.find(ch) is None:
                    return False
        return True


def _cycle_nodes(graph):
    """Nodes lying on a directed cycle (iterative Tarjan)."""
    index, low, onstack, stack = {}, {}, set(), []
    result = set()
    counter = 0
    for root in graph:
        if root in index:
            continue
        work = [(root, iter(graph[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(graph[w])))
                    advanced = True
                    break
                if w in onstack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1 or v in graph[v]:
                    result.update(comp)
    return result


def compute_nucleus(T, budget: int = 2000) -> Nucleus:
    """Nucleus of a contracting automaton group.

    Elements on cycles of the section graph of the generators are collected
    and closed under sections; then products of pairs of members are
    explored the same way until no new cycle element appears.  Raises
    :class:`BudgetExceeded` when more than ``budget`` distinct elements are
    visited (the group is then not certified contracting).
    """
    G = as_group(T)
    store = ElementStore(G)
    store.add(())
    children: dict = {0: (0,) * G.d}

    def explore(starts):
        graph = {}
        todo = []
        for w in starts:
            i, _ = store.add(w)
            todo.append(i)
        while todo:
            i = todo.pop()
            if i in graph:
                continue
            if i not in children:
                kids = []
                for ch in G.decompose(store.words[i]).children:
                    j, _ = store.add(ch)
                    kids.append(j)
                children[i] = tuple(kids)
                if len(store) > budget:
                    raise BudgetExceeded(f"nucleus search exceeded {budget} elements")
            graph[i] = children[i]
            todo.extend(j for j in children[i] if j not in graph)
        return _cycle_nodes(graph)

    def close(nodes):
        out, todo = set(nodes), list(nodes)
        while todo:
            i = todo.pop()
            for j in children[i]:
                if j not in out:
                    out.add(j)
                    todo.append(j)
        return out

    gens = [(c,) for c in G.codes]
    nucleus = close(explore(gens) | {0})
    while True:
        members = sorted(nucleus)
        products = [multiply(store.words[i], store.words[j]) for i in members for j in members]
        new = close(explore(products)) - nucleus
        if not new:
            break
        nucleus |= new

    order = sorted(nucleus, key=lambda i: (len(store.words[i]), _shortlex(store.words[i])))
    remap = {i: n for n, i in enumerate(order)}
    words = [store.words[i] for i in order]
    kids = {remap[i]: tuple(remap[j] for j in children[i]) for i in order}
    flags = {remap[i]: len(store.words[i]) == 0 for i in order}
    for w, flag in zip(words, flags.values()):
        G._identity_memo[w] = flag
    return Nucleus(words, kids, flags)


def _shortlex(word):
    return tuple(2 * (abs(c) - 1) + (c < 0) for c in word)


# ------------------------------------------------------------ balls


def weight_table(G: AutomatonGroup, weights=None) -> dict:
    """Map ``abs(code) -> weight``; ``weights`` keyed by state name."""
    weights = weights or {}
    table = {}
    for j, name in enumerate(G.T.states):
        w = float(weights.get(name, 1.0))
        if not w > 0:
            raise ValueError(f"weight of {name} must be positive")
        table[j + 1] = w
    return table


@dataclass
class Ball:
    group: AutomatonGroup
    radius: float
    weights: dict  # abs(code) -> weight
    words: list  # canonical word per element, in shortlex (weight, letters) order
    lengths: list  # minimal weighted length per element
    store: ElementStore = field(repr=False)

    def __len__(self):
        return len(self.words)

    def index(self, word):
        return self.store.find(free_reduce(word))

    def length(self, word):
        """Certified minimal weighted length, or ``None`` if beyond the radius."""
        i = self.index(word)
        return None if i is None else self.lengths[i]


def ball(T, radius: float, weights=None, max_size: int = 500_000) -> Ball:
    """All elements of weighted length at most ``radius``.

    Best-first search over words; each element keeps its first-popped word,
    which is minimal for (weighted length, letter sequence).
    """
    G = as_group(T)
    wt = weight_table(G, weights)
    eps = 1e-9
    store = ElementStore(G)
    perms = G.level_perms(store.level)
    lengths = []
    heap = [(0.0, (), 0.0, (), -1, 0)]
    arrays = []
    base = np.arange(G.d ** store.level, dtype=np.int64)
    while heap:
        _, key, w8, word, parent, code = heapq.heappop(heap)
        arr = base if parent < 0 else perms[code][arrays[parent]]
        fp = arr.tobytes()
        i, new = store.add(word, fp)
        if not new:
            continue
        arrays.append(arr)
        lengths.append(w8)
        if len(store) > max_size:
            raise BudgetExceeded(f"ball exceeded {max_size} elements")
        for c in G.codes:
            if word and word[-1] == -c:
                continue
            nw8 = w8 + wt[abs(c)]
            if nw8 <= radius + eps:
                heapq.heappush(heap, (round(nw8, 9), key + (2 * (abs(c) - 1) + (c < 0),), nw8, word + (c,), i, c))
    return Ball(G, radius, wt, store.words, lengths, store)


# ------------------------------------------------------------ contraction


@dataclass
class ContractionReport:
    mode: str
    eta: float
    constant: float
    radius: float
    checked: int
    uncertified: int
    violations: list
    max_excess: float  # max over checked elements of lhs - rhs
    worst_ratio: float  # max lhs / rhs over elements with rhs > 0

    @property
    def ok(self):
        return not self.violations

    def as_dict(self):
        return {"mode": self.mode, "eta": self.eta, "C": self.constant, "radius": self.radius,
                "checked": self.checked, "uncertified": self.uncertified,
                "violations": self.violations, "max_excess": self.max_excess,
                "worst_ratio": self.worst_ratio, "ok": self.ok}


def verify_contraction(T, weights, eta: float, C: float, radius: float,
                       mode: str = "per-child", tol: float = 1e-9, the_ball: Ball | None = None):
    """Check ``|g_x| <= eta |g| + C`` (per-child) or ``sum_x |g_x| <= ...``
    (summed) for every element of the ball, with minimal weighted lengths."""
    if mode not in ("per-child", "summed"):
        raise ValueError("mode must be 'per-child' or 'summed'")
    G = as_group(T)
    B = the_ball if the_ball is not None else ball(G, radius, weights)
    violations, checked, uncertified = [], 0, 0
    max_excess, worst = -math.inf, 0.0
    for word, length in zip(B.words, B.lengths):
        rhs = eta * length + C
        kids = G.decompose(word).children
        klen = []
        beyond = False
        for ch in kids:
            L = B.length(ch)
            if L is None:
                beyond = True
                L = B.radius  # strict lower bound on the true length
            klen.append(L)
        lhs_values = klen if mode == "per-child" else [sum(klen)]
        if beyond:
            # a child outside the ball has length > radius: decisive only if that already breaks the bound
            if any(v > rhs + tol for v in lhs_values):
                violations.append({"element": G.format(word), "length": length,
                                   "children": [G.format(c) for c in kids], "certified": False})
            else:
                uncertified += 1
            continue
        checked += 1
        for v in lhs_values:
            max_excess = max(max_excess, v - rhs)
            if rhs > 0:
                worst = max(worst, v / rhs)
            if v > rhs + tol:
                violations.append({"element": G.format(word), "length": length,
                                   "children": [G.format(c) for c in kids], "lhs": v, "rhs": rhs})
    return ContractionReport(mode, eta, C, radius, checked, uncertified, violations,
                             max_excess, worst)


def growth_exponent(d: int, eta: float) -> float:
    """Exponent ``alpha = log d / log(d / eta)`` of the growth upper bound."""
    if d < 2 or not 0 < eta < 1:
        raise ValueError("need d >= 2 and 0 < eta < 1")
    return math.log(d) / math.log(d / eta)


def grigorchuk_eta() -> float:
    """Real root of X^3 + X^2 + X - 2."""
    roots = np.roots([1.0, 1.0, 1.0, -2.0])
    real = [r.real for r in roots if abs(r.imag) < 1e-12]
    return float(real[0])


def grigorchuk_weights(eta: float | None = None) -> dict:
    """Weights making the summed bound tight on generators (``a`` has weight 1)."""
    eta = grigorchuk_eta() if eta is None else eta
    # eta(1+b) = 1+c, eta(1+c) = 1+d, eta(1+d) = b
    A = np.array([[eta, -1.0, 0.0], [0.0, eta, -1.0], [-1.0, 0.0, eta]])
    rhs = np.array([1.0 - eta, 1.0 - eta, -eta])
    b, c, d = np.linalg.solve(A, rhs)
    return {"a": 1.0, "b": float(b), "c": float(c), "d": float(d)}


# ------------------------------------------------------------ algebraic checks


def free_monoid_check(T, L: int) -> bool:
    """True iff all positive words of length <= L over the first two states
    are pairwise distinct group elements."""
    G = as_group(T)
    if L <= 0:
        return True
    gens = G.codes[0], G.codes[2]
    store = ElementStore(G)
    level = [()]
    store.add(())
    for _ in range(L):
        nxt = []
        for w in level:
            for g in gens:
                nw = w + (g,)
                _, new = store.add(nw)
                if not new:
                    return False
                nxt.append(nw)
        level = nxt
    return True


def torsion_check(T, radius: float, weights=None, the_ball: Ball | None = None) -> list:
    """Non-trivial ball elements ``g`` with ``g^2 = 1``."""
    G = as_group(T)
    B = the_ball if the_ball is not None else ball(G, radius, weights)
    return [G.format(w) for w in B.words if w and G.is_identity(w + w)]


def verify_relators(T, relators, pmax: int = 1, param: str = "p") -> bool:
    """Every relator instance (``p`` in 1, 2, 4, ..., pmax) is trivial."""
    G = as_group(T)
    ps = []
    p = 1
    while p <= max(pmax, 1):
        ps.append(p)
        p *= 2
    for rel in relators:
        node = parse_word(rel) if isinstance(rel, str) else rel
        for p in ps:
            if not G.is_identity(evaluate(node, G.resolve, {param: p})):
                return False
    return True


def relator_report(T, relators, pmax: int = 1, param: str = "p") -> list:
    G = as_group(T)
    out = []
    for rel in relators:
        node = parse_word(rel) if isinstance(rel, str) else rel
        p = 1
        while p <= max(pmax, 1):
            uses_p = param in (rel if isinstance(rel, str) else "")
            w = evaluate(node, G.resolve, {param: p})
            out.append({"relator": rel, "p": p if uses_p else None, "length": len(w),
                        "identity": G.is_identity(w)})
            if not uses_p:
                break
            p *= 2
    return out


GAMMA_RELATORS = ("[[a^p,b^p],b^p]", "[[b^p,a^(2p)],a^(2p)]")


@dataclass
class BranchingWitness:
    word: tuple
    children: tuple
    nontrivial: list  # indices of non-trivial children
    target: tuple  # [s, t]
    ok: bool


def branching_witness(T, s: str, t: str) -> BranchingWitness:
    """``[s', t'^n]`` where ``s'_x = s``, ``t'_y = t`` and ``n`` is the order
    of the root permutation of ``t'``; it should have exactly one non-trivial
    coordinate, equal to ``[s, t]``."""
    from .automaton import is_monomial, ID

    G = as_group(T)
    if s == ID or t == ID:
        return BranchingWitness((), tuple(() for _ in range(G.d)), [], (), True)
    if not is_monomial(G.T):
        raise ValueError("branching witness needs a monomial automaton")
    cs, ct = G.T.code(s), G.T.code(t)

    def parent(code):
        for c in G.codes:
            if code in G._child[c]:
                return c
        raise ValueError(f"no state has {G.T.label(code)} as a section")

    sp, tp = parent(cs), parent(ct)
    perm = G._perm[tp]
    n, p = 1, perm
    while any(i != v for i, v in enumerate(p)):
        p = tuple(perm[v] for v in p)
        n += 1
    w = commutator((sp,), (tp,) * n)
    dec = G.decompose(w)
    nontrivial = [x for x, ch in enumerate(dec.children) if not G.is_identity(ch)]
    target = commutator((cs,), (ct,))
    ok = (dec.root_trivial and len(nontrivial) == 1
          and G.equal(dec.children[nontrivial[0]], target))
    return BranchingWitness(w, dec.children, nontrivial, target, ok)
