"""Schreier graphs on tree levels, Hecke spectra and the determinant recursion."""

from __future__ import annotations

import io
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .automaton import format_vertex
from .words import as_group

MAX_SIZE = 1 << 13
_P = (-0.25, -0.25)


@dataclass
class SchreierGraph:
    """Labelled graph with one out-edge per generator label at every vertex.

    ``targets[s][v]`` is the image of vertex ``v`` under generator ``s``.
    """

    level: int
    labels: tuple
    targets: dict
    root: int = 0
    names: list | None = None

    @property
    def size(self):
        return len(next(iter(self.targets.values()))) if self.targets else 1

    def vertex_name(self, v):
        return self.names[v] if self.names is not None else f"v{v}"

    def edges(self):
        for s in self.labels:
            for v, w in enumerate(self.targets[s]):
                yield v, s, int(w)

    def inverse_targets(self, s):
        inv = np.empty(self.size, dtype=np.int64)
        inv[np.asarray(self.targets[s])] = np.arange(self.size)
        return inv

    def degrees(self):
        """Undirected degree; a loop contributes 2."""
        deg = np.zeros(self.size, dtype=np.int64)
        for v, _, w in self.edges():
            deg[v] += 1
            deg[w] += 1
        return deg

    def is_regular_permutation_graph(self):
        return all(np.array_equal(np.sort(self.targets[s]), np.arange(self.size)) for s in self.labels)


def _digits(v, d, n):
    out = []
    for _ in range(n):
        v, r = divmod(v, d)
        out.append(r)
    return out[::-1]


def schreier_graph(T, n: int, generators=None) -> SchreierGraph:
    G = as_group(T)
    if G.d ** n > MAX_SIZE * 4:
        raise MemoryError(f"level {n} too large")
    gens = generators or [s for s in G.T.states]
    perms = G.level_perms(n)
    targets = {s: perms[G.T.code(s)].copy() for s in gens}
    names = [format_vertex(_digits(v, G.d, n), G.d) for v in range(G.d ** n)]
    return SchreierGraph(n, tuple(gens), targets, 0, names)


# ------------------------------------------------------------ recursive construction


def _glue(parts, at, piece):
    """Attach ``piece`` to vertex ``at`` of ``parts`` (both dicts label -> list)."""
    off = len(parts["a"]) - 1
    size = len(piece["a"])

    def remap(x):
        return at if x == 0 else x + off

    for lab in ("a", "b"):
        tgt = piece[lab]
        if tgt[0] != 0:
            parts[lab][at] = remap(tgt[0])
        for x in range(1, size):
            parts[lab].append(remap(tgt[x]))


def _polygon(label, k):
    other = "b" if label == "a" else "a"
    cyc = list(range(1, k)) + [0]
    return {label: cyc, other: list(range(k))}


def _parts(n, memo):
    if n in memo:
        return memo[n]
    if n == 0:
        res = ({"a": [0], "b": [0]}, {"a": [0], "b": [0]})
    elif n % 2 == 1:
        k = (n - 1) // 2
        _, B = _parts(n - 1, memo)
        A = _polygon("a", 2 ** (k + 1))
        for i in range(1, 2 ** (k + 1)):
            j = (i & -i).bit_length() - 1
            _glue(A, i, _parts(2 * j, memo)[1])
        res = (A, B)
    else:
        k = n // 2
        A, _ = _parts(n - 1, memo)
        B = _polygon("b", 2 ** k)
        for i in range(1, 2 ** k):
            j = (i & -i).bit_length() - 1
            _glue(B, i, _parts(2 * j + 1, memo)[0])
        res = (A, B)
    memo[n] = res
    return res


def basilica_recursive_graph(n: int) -> SchreierGraph:
    """Level-``n`` basilica graph built from the A/B polygon recursion alone."""
    if n < 0:
        raise ValueError("n must be non-negative")
    A, B = _parts(n, {})
    g = {"a": list(A["a"]), "b": list(A["b"])}
    _glue(g, 0, B)
    return SchreierGraph(n, ("a", "b"), {s: np.array(g[s], dtype=np.int64) for s in "ab"}, 0)


def canonical_form(g: SchreierGraph):
    """BFS relabelling from the root, exploring ``s, s^-1`` for each label in order."""
    maps = []
    for s in g.labels:
        maps.append(np.asarray(g.targets[s]))
        maps.append(g.inverse_targets(s))
    new = {g.root: 0}
    queue = deque([g.root])
    rows = []
    while queue:
        v = queue.popleft()
        row = []
        for m in maps:
            w = int(m[v])
            if w not in new:
                new[w] = len(new)
                queue.append(w)
            row.append(new[w])
        rows.append(tuple(row))
    return tuple(g.labels), len(new) == g.size, tuple(rows)


def labeled_isomorphic(g1: SchreierGraph, g2: SchreierGraph) -> bool:
    if g1.labels != g2.labels or g1.size != g2.size:
        return False
    return canonical_form(g1) == canonical_form(g2)


# ------------------------------------------------------------ Hecke operator and spectra


def hecke_matrix(g: SchreierGraph, labels=None) -> np.ndarray:
    labels = tuple(labels or g.labels)
    N = g.size
    if N > MAX_SIZE:
        raise MemoryError(f"matrix size {N} exceeds {MAX_SIZE}")
    M = np.zeros((N, N))
    rows = np.arange(N)
    for s in labels:
        t = np.asarray(g.targets[s])
        np.add.at(M, (rows, t), 1.0)
        np.add.at(M, (t, rows), 1.0)
    return M / (2 * len(labels))


def eigenvalues(M: np.ndarray, check: bool = True) -> np.ndarray:
    if M.shape[0] > MAX_SIZE:
        raise MemoryError("matrix too large")
    w, V = linalg.eigh(M)
    if check:
        norm = max(np.abs(M).sum(axis=1).max(), 1.0)
        res = np.linalg.norm(M @ V - V * w, axis=0)
        if np.any(res > 1e-8 * norm):
            raise linalg.LinAlgError(f"eigenpair residual {res.max():.3g} too large")
    return np.sort(w)


def level_spectrum(n: int, T=None) -> np.ndarray:
    from .automaton import builtin

    return eigenvalues(hecke_matrix(schreier_graph(T if T is not None else builtin("gamma"), n)))


def f_map(p):
    lam, mu, nu = p
    return (lam * lam + 2 * lam * nu - 2 * mu * mu, lam * nu + 2 * nu * nu, -mu * mu)


def _q0(p):
    return p[0] + 2 * p[1] + 2 * p[2]


def _l(p):
    return p[0] - 2 * p[1] + 2 * p[2]


def f_iterate(p, k: int):
    for _ in range(k):
        p = f_map(p)
    return p


def q_eval(n: int, p) -> float:
    """``Q_n(p)`` from the closed forms; ``n >= 2`` goes through ``F^(n-1)``.

    Overflow shows up as ``inf`` or ``nan``; callers check ``math.isfinite``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return float(_q0(p))
    with np.errstate(over="ignore", invalid="ignore"):
        q = tuple(float(x) for x in f_iterate(tuple(map(float, p)), n - 1))
        return _q0(q) * _l(q)


def block_matrices(n: int):
    """Permutation matrices ``a_n, b_n`` from the 2x2 block recursion."""
    a = b = np.ones((1, 1))
    for _ in range(n):
        m = a.shape[0]
        z, one = np.zeros((m, m)), np.eye(m)
        a, b = np.block([[z, b], [one, z]]), np.block([[a, z], [z, one]])
    return a, b


def q_det(n: int, p, mats=None):
    """``(sign, log|Q_n(p)|)`` from the defining determinant."""
    a, b = mats if mats is not None else block_matrices(n)
    lam, mu, nu = p
    M = lam * np.eye(a.shape[0]) + mu * (a + a.T) + nu * (b + b.T)
    return np.linalg.slogdet(M)


def _relative_gap(x, y):
    (s1, l1), (s2, l2) = x, y
    if s1 == 0 and s2 == 0:
        return 0.0
    if s1 == 0 or s2 == 0 or s1 != s2:
        return math.inf
    return abs(math.expm1(l2 - l1))


@dataclass
class RecursionReport:
    samples: int
    nmax: int
    tol: float
    max_error: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(e < self.tol for e in self.max_error.values())

    @property
    def worst(self):
        return max(self.max_error.values(), default=0.0)


def verify_det_recursion(samples: int = 100, nmax: int = 6, tol: float = 1e-8, seed: int = 0,
                         points=None) -> RecursionReport:
    """Compare ``Q_{n+1}(p)`` with ``Q_n(F(p))``, both from determinants."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(points) if points is not None else rng.uniform(-1, 1, size=(samples, 3))
    rep = RecursionReport(len(pts), nmax, tol)
    for n in range(nmax + 1):
        lo, hi = block_matrices(n), block_matrices(n + 1)
        worst = 0.0
        for p in pts:
            worst = max(worst, _relative_gap(q_det(n + 1, p, hi), q_det(n, f_map(p), lo)))
        rep.max_error[n] = worst
    return rep


@dataclass
class SpectrumReport:
    level: int
    tol: float
    eigenvalues: np.ndarray
    residuals: np.ndarray
    scales: np.ndarray
    top_multiplicity: int

    @property
    def roots_ok(self):
        return bool(np.all(np.abs(self.residuals) <= self.tol * self.scales))

    @property
    def in_range(self):
        return bool(np.all(np.abs(self.eigenvalues) <= 1 + 1e-9))

    @property
    def ok(self):
        top = abs(self.eigenvalues[-1] - 1) < 1e-9
        return self.roots_ok and self.in_range and top and self.top_multiplicity == 1

    def as_dict(self):
        return {"level": self.level, "tol": self.tol, "count": int(self.eigenvalues.size),
                "roots_ok": self.roots_ok, "in_range": self.in_range,
                "max_eigenvalue": float(self.eigenvalues[-1]),
                "top_multiplicity": self.top_multiplicity,
                "worst_ratio": float(np.max(np.abs(self.residuals) / self.scales)), "ok": self.ok}


def spectrum_scale(n: int, lam: float) -> float:
    p = (lam,) + _P
    q = f_iterate(p, max(n - 1, 0))
    return (1 + max(abs(x) for x in q)) ** (2 if n >= 1 else 1)


def spectrum_check(n: int, tol: float = 1e-6, T=None) -> SpectrumReport:
    ev = level_spectrum(n, T)
    res = np.array([q_eval(n, (lam,) + _P) for lam in ev])
    scales = np.array([spectrum_scale(n, lam) for lam in ev])
    top = int(np.sum(np.abs(ev - 1) < 1e-9))
    return SpectrumReport(n, tol, ev, res, scales, top)


def _branch(j: int, lam):
    """Value and slope of ``L(F^j(lam, -1/4, -1/4))`` up to a common positive factor."""
    lam = np.asarray(lam, dtype=float)
    one = np.ones_like(lam)
    x, y, z = lam, -0.25 * one, -0.25 * one
    dx, dy, dz = one, 0 * one, 0 * one
    for _ in range(j):
        x, y, z, dx, dy, dz = (x * x + 2 * x * z - 2 * y * y, x * z + 2 * z * z, -y * y,
                               (2 * x + 2 * z) * dx - 4 * y * dy + 2 * x * dz,
                               z * dx + (x + 4 * z) * dz, -2 * y * dy)
        s = np.maximum(np.maximum(np.abs(x), np.abs(y)), np.abs(z))
        s = np.where(s > 0, s, 1.0)
        x, y, z, dx, dy, dz = x / s, y / s, z / s, dx / s, dy / s, dz / s
    return x - 2 * y + 2 * z, dx - 2 * dy + 2 * dz


def _newton(j, x, steps=60):
    for _ in range(steps):
        g, dg = _branch(j, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.clip(x - np.where(dg != 0, g / dg, 0.0), -1.0, 1.0)
    g, dg = _branch(j, x)
    return x[np.abs(g) <= 1e-10 * np.maximum(np.abs(dg), 1.0)]


def block_perms(n: int):
    """The block-recursion matrices ``a_n, b_n`` as permutation arrays (row -> column)."""
    a = b = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        m = a.size
        idx = np.arange(m)
        a, b = np.concatenate([m + b, idx]), np.concatenate([a, m + idx])
    return a, b


def branch_roots(j: int, resolution: int | None = None) -> np.ndarray:
    """Zeros of ``L(F^j(lam, -1/4, -1/4))`` in ``[-1, 1]`` by grid brackets and Newton.

    Reliable for ``j <= 6``; beyond that the iterates lose the precision
    needed to separate neighbouring zeros (at ``j = 7`` two of them are
    9e-8 apart and merge).
    """
    m = resolution or max(1 << 12, 1 << (j + 6))
    xs = np.linspace(-1.0, 1.0, m + 1)
    ys, _ = _branch(j, xs)
    f = lambda x: float(_branch(j, np.array([x]))[0][0])
    found = list(xs[ys == 0])
    for i in np.flatnonzero(np.sign(ys[:-1]) * np.sign(ys[1:]) < 0):
        found.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-15))
    found.extend(_newton(j, xs))
    return _dedupe(found, 1e-9)


def _dedupe(values, tol):
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return v
    return v[np.concatenate([[True], np.diff(v) > tol])]


def cantor_approximation(depth: int, method: str = "matrix") -> np.ndarray:
    """Level-``depth`` approximation of the spectrum on the line ``mu = nu = -1/4``.

    These are the distinct roots of ``Q_depth(lam, -1/4, -1/4)``, that is
    ``lam = 1`` together with the zeros of ``L(F^j)`` for ``j < depth``.
    ``method="matrix"`` diagonalises the averaged block-recursion matrices
    (exact up to rounding for every depth); ``method="roots"`` solves each
    factor numerically.
    """
    if depth < 0 or depth > 12:
        raise ValueError("depth must be in 0..12")
    if method == "roots":
        pts = [np.array([1.0])] + [branch_roots(j) for j in range(depth)]
        # later factors reproduce earlier roots only to about 1e-9
        return _dedupe(np.concatenate(pts), 1e-8)
    if method != "matrix":
        raise ValueError(f"unknown method {method!r}")
    a, b = block_perms(depth)
    N = a.size
    M = np.zeros((N, N))
    rows = np.arange(N)
    for t in (a, b):
        np.add.at(M, (rows, t), 0.25)
        np.add.at(M, (t, rows), 0.25)
    return _dedupe(np.clip(eigenvalues(M), -1.0, 1.0), 1e-9)


# ------------------------------------------------------------ export


def to_dot(g: SchreierGraph) -> str:
    out = io.StringIO()
    out.write(f"digraph schreier_{g.level} {{\n")
    for v in range(g.size):
        extra = ", shape=doublecircle" if v == g.root else ""
        out.write(f'  n{v} [label="{g.vertex_name(v)}"{extra}];\n')
    for v, s, w in g.edges():
        out.write(f'  n{v} -> n{w} [label="{s}"];\n')
    out.write("}\n")
    return out.getvalue()


def to_json(g: SchreierGraph) -> str:
    doc = {
        "level": g.level,
        "vertices": [g.vertex_name(v) for v in range(g.size)],
        "edges": [{"from": g.vertex_name(v), "label": s, "to": g.vertex_name(w)} for v, s, w in g.edges()],
    }
    return json.dumps(doc, indent=1)


def spectrum_csv(values) -> str:
    return "".join(f"{float(v):.17g}\n" for v in values)


def parse_spectrum_csv(text: str) -> np.ndarray:
    return np.array([float(line) for line in text.split() if line.strip()])


def export(obj, fmt: str, path=None) -> str:
    if fmt == "dot":
        text = to_dot(obj)
    elif fmt == "json":
        text = to_json(obj)
    elif fmt == "csv":
        text = spectrum_csv(obj)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
