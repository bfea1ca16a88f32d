"""HNN-type extensions acting on the 3-regular tree, and Thompson's group.

The 3-regular tree is the binary tree ``U = {1,2}^*`` with the root
removed and an extra edge joining ``1`` and ``2``.  A vertex is a
non-empty word; internally it is a pair ``(L, idx)`` with letter ``1``
as bit 0 and the first letter most significant.

Elements fixing that edge are nested pairs ``<g1, g2>`` of rooted
elements; rooted elements are words in a small self-similar system whose
sections may be words (``c = <b, d^2>`` is not finite-state over the
generators).  ``t`` is the hyperbolic element of the chosen variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .expr import ExpressionError, evaluate, invert, parse_word

MAX_LEVEL = 24


# ------------------------------------------------------------ rooted systems


class RecursiveSystem:
    """Binary self-similar elements given by ``name -> (root permutation, child words)``."""

    def __init__(self, spec: dict):
        self.names = tuple(spec)
        self._code = {n: i + 1 for i, n in enumerate(self.names)}
        self._perm = {}
        self._children = {}
        for n, (perm, kids) in spec.items():
            self._perm[self._code[n]] = tuple(perm)
            self._children[self._code[n]] = tuple(self.word(k) if isinstance(k, str) else tuple(k) for k in kids)
        self._levels = {}

    def code(self, name):
        return self._code[name]

    def resolve(self, name):
        if name in self._code:
            return (self._code[name],)
        if name == "id":
            return ()
        if len(name) == 1 and name.isupper() and name.lower() in self._code:
            return (-self._code[name.lower()],)
        raise ExpressionError(f"unknown generator {name!r}")

    def word(self, expr, params=None) -> tuple:
        if not isinstance(expr, str):
            return tuple(expr)
        if not expr.strip() or expr.strip() == "1":
            return ()
        return evaluate(parse_word(expr), self.resolve, params)

    def level_perms(self, L: int) -> dict:
        if L in self._levels:
            return self._levels[L]
        if L > MAX_LEVEL:
            raise MemoryError(f"level {L} above {MAX_LEVEL}")
        codes = list(self._perm)
        if L == 0:
            res = {c: np.zeros(1, dtype=np.int64) for c in codes}
        else:
            prev = self.level_perms(L - 1)
            S = 1 << (L - 1)
            res = {}
            for c in codes:
                arr = np.empty(2 * S, dtype=np.int64)
                for x in range(2):
                    arr[x * S:(x + 1) * S] = self._perm[c][x] * S + _compose(prev, self._children[c][x], S)
                res[c] = arr
        for c in codes:
            inv = np.empty_like(res[c])
            inv[res[c]] = np.arange(res[c].size)
            res[-c] = inv
        self._levels[L] = res
        return res

    def word_perm(self, word, L: int) -> np.ndarray:
        return _compose(self.level_perms(L), word, 1 << L)


def _compose(perms, word, size):
    arr = np.arange(size, dtype=np.int64)
    for c in word:
        arr = perms[c][arr]
    return arr


def delta_system() -> RecursiveSystem:
    """Basilica generators with the auxiliary ``c = <b, d^2>``, ``d = <1, c>``."""
    return RecursiveSystem({
        "a": ((1, 0), ("b", "")),
        "b": ((0, 1), ("a", "")),
        "c": ((0, 1), ("b", "d d")),
        "d": ((0, 1), ("", "c")),
    })


def grigorchuk_system() -> RecursiveSystem:
    return RecursiveSystem({
        "a": ((1, 0), ("", "")),
        "b": ((0, 1), ("a", "c")),
        "c": ((0, 1), ("a", "d")),
        "d": ((0, 1), ("", "b")),
    })


# ------------------------------------------------------------ elements


@dataclass(frozen=True)
class Rooted:
    word: tuple


@dataclass(frozen=True)
class Pair:
    left: "Element"
    right: "Element"


Element = Union[Rooted, Pair]


def pair(x, y) -> Pair:
    return Pair(x if isinstance(x, (Rooted, Pair)) else Rooted(tuple(x)),
                y if isinstance(y, (Rooted, Pair)) else Rooted(tuple(y)))


def element_inverse(g: Element) -> Element:
    if isinstance(g, Rooted):
        return Rooted(invert(g.word))
    return Pair(element_inverse(g.left), element_inverse(g.right))


def act_rooted(system: RecursiveSystem, g: Element, L: int, idx: np.ndarray) -> np.ndarray:
    """Images of level-``L`` vertex indices under ``g``."""
    idx = np.asarray(idx, dtype=np.int64)
    if L == 0 or idx.size == 0:
        return idx.copy()
    if isinstance(g, Rooted):
        return system.word_perm(g.word, L)[idx] if g.word else idx.copy()
    S = 1 << (L - 1)
    top, rest = idx >> (L - 1), idx & (S - 1)
    out = idx.copy()
    for x, side in ((0, g.left), (1, g.right)):
        sel = top == x
        if np.any(sel):
            out[sel] = x * S + act_rooted(system, side, L - 1, rest[sel])
    return out


# ------------------------------------------------------------ the element t


def encode_vertex(v: str):
    v = v.strip()
    if not v or any(ch not in "12" for ch in v):
        raise ValueError(f"bad vertex {v!r}: need a non-empty word over 1, 2")
    return len(v), int("".join("0" if ch == "1" else "1" for ch in v), 2)


def decode_vertex(L: int, idx: int) -> str:
    return "".join("1" if (idx >> (L - 1 - i)) & 1 == 0 else "2" for i in range(L))


def _t_batch(Ls, idxs, variant: str, inverse: bool):
    Ls = np.asarray(Ls, dtype=np.int64).copy()
    idxs = np.asarray(idxs, dtype=np.int64).copy()
    nL, nI = Ls.copy(), idxs.copy()
    top = idxs >> (Ls - 1)
    second = np.where(Ls >= 2, (idxs >> np.maximum(Ls - 2, 0)) & 1, -1)
    rest2 = idxs & ((np.int64(1) << np.maximum(Ls - 2, 0)) - 1)
    rest1 = idxs & ((np.int64(1) << (Ls - 1)) - 1)
    single = Ls == 1

    def put(mask, L, I):
        nL[mask] = L[mask]
        nI[mask] = I[mask]

    if variant == "delta" and not inverse:
        put(~single & (top == 1) & (second == 1), Ls - 1, (np.int64(1) << np.maximum(Ls - 2, 0)) | rest2)  # 22w -> 2w
        put(~single & (top == 1) & (second == 0), Ls, (np.int64(1) << np.maximum(Ls - 2, 0)) | rest2)  # 21w -> 12w
        put(single & (top == 1), Ls, idxs & 0)  # 2 -> 1
        put(top == 0, Ls + 1, idxs)  # 1w -> 11w
    elif variant == "delta":
        put(top == 1, Ls + 1, idxs | (np.int64(1) << Ls))  # 2w -> 22w
        put(~single & (top == 0) & (second == 1), Ls, (np.int64(2) << np.maximum(Ls - 2, 0)) | rest2)  # 12w -> 21w
        put(single & (top == 0), Ls, idxs | 1)  # 1 -> 2
        put(~single & (top == 0) & (second == 0), Ls - 1, idxs)  # 11w -> 1w
    elif variant == "grig" and not inverse:
        put(top == 0, Ls + 1, (np.int64(1) << (Ls - 1)) | rest1)  # 1w -> 12w
        put(~single & (top == 1) & (second == 0), Ls, rest2)  # 21w -> 11w
        put(~single & (top == 1) & (second == 1), Ls - 1, (np.int64(1) << np.maximum(Ls - 2, 0)) | rest2)  # 22w -> 2w
        put(single & (top == 1), Ls, idxs & 0)  # 2 -> 1
    elif variant == "grig":
        put(~single & (top == 0) & (second == 1), Ls - 1, rest2)  # 12w -> 1w
        put(~single & (top == 0) & (second == 0), Ls, (np.int64(2) << np.maximum(Ls - 2, 0)) | rest2)  # 11w -> 21w
        put(top == 1, Ls + 1, idxs | (np.int64(1) << Ls))  # 2w -> 22w
        put(single & (top == 0), Ls, idxs | 1)  # 1 -> 2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return nL, nI


def t_act(v: str, variant: str = "delta", inverse: bool = False) -> str:
    L, idx = encode_vertex(v)
    nL, nI = _t_batch([L], [idx], variant, inverse)
    return decode_vertex(int(nL[0]), int(nI[0]))


# ------------------------------------------------------------ presets


class HNNAction:
    """Generators acting on the 3-regular tree: ``t`` plus lifted pairs."""

    def __init__(self, variant: str):
        if variant == "delta":
            self.t_variant = "delta"
            self.system = delta_system()
            w = self.system.word
            # lifts: a = <a, d>, b = <b, c>, so that a^t = b and b^t = a^2
            self.lifts = {"a": pair(w("a"), w("d")), "b": pair(w("b"), w("c"))}
            self.relators = ("b^(t^2-2)", "[[[b,t^-1],b],b]")
        elif variant in ("gtilde", "grig"):
            self.t_variant = "grig"
            self.system = grigorchuk_system()
            w = self.system.word
            self.lifts = {
                "a": pair(w("a"), pair(w("d"), pair(w("a^d"), w("d")))),
                "b": pair(w("b"), w("d")),
                "c": pair(w("c"), w("c")),
                "d": pair(w("d"), w("b")),
            }
            self.relators = ("a^2", "a^(tat^2+tat+ta)", "a^((1+ta)8)", "a^((1+tat^2+(1+ta)2)4)")
        else:
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        self.names = ("t",) + tuple(self.lifts)
        self._code = {n: i + 1 for i, n in enumerate(self.names)}

    def resolve(self, name):
        if name in self._code:
            return (self._code[name],)
        if len(name) == 1 and name.isupper() and name.lower() in self._code:
            return (-self._code[name.lower()],)
        raise ExpressionError(f"unknown generator {name!r} (have {', '.join(self.names)})")

    def word(self, expr) -> tuple:
        if not isinstance(expr, str):
            return tuple(expr)
        if not expr.strip() or expr.strip() == "1":
            return ()
        return evaluate(parse_word(expr), self.resolve)

    def act_batch(self, word, Ls, idxs):
        Ls = np.asarray(Ls, dtype=np.int64)
        idxs = np.asarray(idxs, dtype=np.int64)
        for c in self.word(word):
            name = self.names[abs(c) - 1]
            if name == "t":
                Ls, idxs = _t_batch(Ls, idxs, self.t_variant, c < 0)
                continue
            g = self.lifts[name] if c > 0 else element_inverse(self.lifts[name])
            idxs = self.apply_element(g, Ls, idxs)
        return Ls, idxs

    def apply_element(self, g: Element, Ls, idxs):
        out = np.asarray(idxs, dtype=np.int64).copy()
        for L in np.unique(Ls):
            sel = Ls == L
            out[sel] = act_rooted(self.system, g, int(L), out[sel])
        return out

    def act(self, word, v: str) -> str:
        L, idx = encode_vertex(v)
        nL, nI = self.act_batch(word, [L], [idx])
        return decode_vertex(int(nL[0]), int(nI[0]))

    def fixes_ball(self, word, depth: int) -> bool:
        Ls, idxs = all_vertices(depth)
        nL, nI = self.act_batch(word, Ls, idxs)
        return bool(np.array_equal(nL, Ls) and np.array_equal(nI, idxs))

    def same_action(self, w1, w2, depth: int) -> bool:
        Ls, idxs = all_vertices(depth)
        a = self.act_batch(w1, Ls, idxs)
        b = self.act_batch(w2, Ls, idxs)
        return bool(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]))


def all_vertices(depth: int):
    Ls = np.concatenate([np.full(1 << L, L, dtype=np.int64) for L in range(1, depth + 1)]) if depth > 0 else np.zeros(0, np.int64)
    idxs = np.concatenate([np.arange(1 << L, dtype=np.int64) for L in range(1, depth + 1)]) if depth > 0 else np.zeros(0, np.int64)
    return Ls, idxs


_ACTIONS: dict = {}


def hnn_action(variant: str) -> HNNAction:
    if variant not in _ACTIONS:
        _ACTIONS[variant] = HNNAction(variant)
    return _ACTIONS[variant]


def lifted_act(g: str, v: str, variant: str = "delta") -> str:
    """Action of a single lifted generator (or its inverse, ``A`` for ``a^-1``)."""
    return hnn_action(variant).act(g, v)


def unrooted_act(word: str, v: str, variant: str = "delta") -> str:
    return hnn_action(variant).act(word, v)


# ------------------------------------------------------------ verification


@dataclass(frozen=True)
class RelatorResult:
    relator: str
    depth: int
    ok: bool

    def as_dict(self):
        return {"relator": self.relator, "depth": self.depth, "ok": self.ok,
                "note": f"verified to depth {self.depth}" if self.ok else f"fails within depth {self.depth}"}


def verify_unrooted_relators(variant: str, depth: int, relators=None) -> list:
    H = hnn_action(variant)
    return [RelatorResult(r, depth, H.fixes_ball(r, depth)) for r in (relators or H.relators)]


def delta_relations(depth: int = 10) -> dict:
    """``a^t = b``, ``b^t = a^2``, ``a = b^(t^-1)`` on the tree and ``[c, d] = 1`` on the rooted tree."""
    H = hnn_action("delta")
    S = H.system
    Ls, idxs = all_vertices(depth)
    rooted_cd = all(
        np.array_equal(S.word_perm(S.word("[c,d]"), L), np.arange(1 << L)) for L in range(depth + 1))
    return {
        "a^t = b": H.same_action("a^t", "b", depth),
        "b^t = a^2": H.same_action("b^t", "a^2", depth),
        "a = b^(t^-1)": H.same_action("a", "b^(t^-1)", depth),
        "[c,d] = 1": rooted_cd,
    }


def _tree_distance_ball(radius: int):
    """Vertices within distance ``radius`` of ``1``: ``1w`` with ``|w| <= r`` and ``2w`` with ``|w| < r``."""
    out = set()
    for L in range(1, radius + 2):
        for idx in range(1 << L):
            first = idx >> (L - 1)
            dist = L - 1 if first == 0 else L
            if dist <= radius:
                out.add((L, idx))
    return out


def transitivity_check(variant: str, radius: int) -> bool:
    """BFS from ``1`` under the generators; every vertex within ``radius`` must be reached."""
    if radius > 10:
        raise ValueError("radius must be at most 10")
    H = hnn_action(variant)
    target = _tree_distance_ball(radius)
    limit = radius + 5
    gens = [(c,) for c in range(1, len(H.names) + 1)] + [(-c,) for c in range(1, len(H.names) + 1)]
    seen = {encode_vertex("1")}
    frontier = np.array([encode_vertex("1")], dtype=np.int64)
    while frontier.size:
        new = set()
        for g in gens:
            nL, nI = H.act_batch(g, frontier[:, 0], frontier[:, 1])
            for v in zip(nL[nL <= limit].tolist(), nI[nL <= limit].tolist()):
                if v not in seen:
                    seen.add(v)
                    new.add(v)
        frontier = np.array(sorted(new), dtype=np.int64).reshape(-1, 2)
    return target <= seen


def _random_rooted_word(system, rng, max_len):
    k = len(system.names)
    n = int(rng.integers(0, max_len + 1))
    out = []
    for _ in range(n):
        c = int(rng.integers(1, k + 1)) * (1 if rng.integers(0, 2) else -1)
        if out and out[-1] == -c:
            continue
        out.append(c)
    return tuple(out)


def verify_conjugation_identity(variant: str, samples: int = 20, depth: int = 8, seed: int = 0,
                                triples=None) -> bool:
    """``<x,<y,z>>^t`` against ``<<x,y>,z>`` (delta) or ``<<y,x>,z>`` (grig) on a ball."""
    H = hnn_action(variant)
    S = H.system
    if triples is None:
        rng = np.random.default_rng(seed)
        triples = [tuple(_random_rooted_word(S, rng, 4) for _ in range(3)) for _ in range(samples)]
    Ls, idxs = all_vertices(depth)
    for x, y, z in triples:
        x, y, z = (S.word(w) for w in (x, y, z))
        g = pair(x, pair(y, z))
        want = pair(pair(x, y), z) if H.t_variant == "delta" else pair(pair(y, x), z)
        # v^(t^-1 g t)
        L1, I1 = _t_batch(Ls, idxs, H.t_variant, True)
        I1 = H.apply_element(g, L1, I1)
        L1, I1 = _t_batch(L1, I1, H.t_variant, False)
        I2 = H.apply_element(want, Ls, idxs)
        if not (np.array_equal(L1, Ls) and np.array_equal(I1, I2)):
            return False
    return True


# ------------------------------------------------------------ Thompson's group


@dataclass(frozen=True)
class PLMap:
    """Piecewise-linear map of ``[0, 1]`` through the points ``(xs[i], ys[i])``."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = tuple(Fraction(x) for x in self.xs)
        ys = tuple(Fraction(y) for y in self.ys)
        if xs[0] != 0 or xs[-1] != 1 or ys[0] != 0 or ys[-1] != 1:
            raise ValueError("map must fix 0 and 1")
        if any(b <= a for a, b in zip(xs, xs[1:])) or any(b <= a for a, b in zip(ys, ys[1:])):
            raise ValueError("breakpoints must increase")
        for v in xs + ys:
            if v.denominator & (v.denominator - 1):
                raise ValueError(f"non-dyadic breakpoint {v}")
        # drop breakpoints where the slope does not change
        keep_x, keep_y = [xs[0]], [ys[0]]
        for i in range(1, len(xs) - 1):
            s1 = (ys[i] - keep_y[-1]) / (xs[i] - keep_x[-1])
            s2 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            if s1 != s2:
                keep_x.append(xs[i])
                keep_y.append(ys[i])
        keep_x.append(xs[-1])
        keep_y.append(ys[-1])
        object.__setattr__(self, "xs", tuple(keep_x))
        object.__setattr__(self, "ys", tuple(keep_y))

    def __call__(self, x):
        x = Fraction(x)
        for i in range(len(self.xs) - 1):
            if self.xs[i] <= x <= self.xs[i + 1]:
                x0, x1, y0, y1 = self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]
                return y0 + (x - x0) * (y1 - y0) / (x1 - x0)
        raise ValueError(f"{x} outside [0, 1]")

    def slopes(self):
        return [(y1 - y0) / (x1 - x0) for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])]

    def is_identity(self):
        return self.xs == (0, 1)


IDENTITY = PLMap((0, 1), (0, 1))


def pl_compose(f: PLMap, g: PLMap) -> PLMap:
    """``x -> g(f(x))``: first ``f``, then ``g`` (right action)."""
    pts = sorted(set(f.xs) | {f_inv for f_inv in (pl_invert(f)(y) for y in g.xs)})
    return PLMap(tuple(pts), tuple(g(f(x)) for x in pts))


def pl_invert(f: PLMap) -> PLMap:
    return PLMap(f.ys, f.xs)


def pl_equal(f: PLMap, g: PLMap) -> bool:
    return f.xs == g.xs and f.ys == g.ys


def thompson_maps():
    """``t`` and ``u = <t, 1>`` as PL maps."""
    h = Fraction(1, 2)
    t = PLMap((0, h, Fraction(3, 4), 1), (0, Fraction(1, 4), h, 1))
    u = PLMap((0, Fraction(1, 4), Fraction(3, 8), h, 1), (0, Fraction(1, 8), Fraction(1, 4), h, 1))
    return t, u


THOMPSON_RELATORS = ("[t u^-1, u^t]", "[t u^-1, u^(t^2)]")


def pl_word(expr: str) -> PLMap:
    t, u = thompson_maps()
    table = {1: t, 2: u, -1: pl_invert(t), -2: pl_invert(u)}

    def resolve(name):
        codes = {"t": 1, "u": 2}
        if name in codes:
            return (codes[name],)
        if name in ("T", "U"):
            return (-codes[name.lower()],)
        raise ExpressionError(f"unknown generator {name!r}")

    out = IDENTITY
    for c in evaluate(parse_word(expr), resolve):
        out = pl_compose(out, table[c])
    return out


def verify_thompson_relators(relators=THOMPSON_RELATORS) -> dict:
    return {r: pl_word(r).is_identity() for r in relators}


__all__ = [
    "RecursiveSystem", "Rooted", "Pair", "pair", "HNNAction", "hnn_action", "t_act", "lifted_act",
    "unrooted_act", "verify_unrooted_relators", "transitivity_check", "verify_conjugation_identity",
    "delta_relations", "PLMap", "pl_compose", "pl_invert", "pl_equal", "thompson_maps",
    "verify_thompson_relators", "pl_word",
]
