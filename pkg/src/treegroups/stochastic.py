"""Random reduced words, contraction statistics and cogrowth counts.

Letters are indexed ``0 .. 2k-1``: ``2j`` is state ``j`` and ``2j+1`` its
inverse, so the inverse of letter ``l`` is ``l ^ 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._accel import HAVE_NUMBA, pick
from .words import as_group


def _letter_to_code(letter):
    return np.where(letter % 2 == 0, letter // 2 + 1, -(letter // 2 + 1))


def _tables(G):
    """Root permutation and child letter (-1 for trivial) per letter and position."""
    k = G.T.num_states
    d = G.d
    perm = np.empty((2 * k, d), dtype=np.int64)
    child = np.empty((2 * k, d), dtype=np.int64)
    for letter in range(2 * k):
        c = int(_letter_to_code(letter))
        perm[letter] = G._perm[c]
        for x, s in enumerate(G._child[c]):
            child[letter, x] = -1 if s == 0 else (2 * (s - 1) if s > 0 else 2 * (-s - 1) + 1)
    return perm, child


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample stream: PCG64 seeded with ``seed XOR index``."""
    return np.random.Generator(np.random.PCG64((int(seed) ^ int(index)) & ((1 << 64) - 1)))


# ------------------------------------------------------------ kernels


def _build_words_nb(first, steps):
    S, n = steps.shape[0], steps.shape[1] + 1
    out = np.empty((S, n), dtype=np.int64)
    for s in range(S):
        prev = first[s]
        out[s, 0] = prev
        for i in range(1, n):
            r = steps[s, i - 1]
            if r >= (prev ^ 1):
                r += 1
            out[s, i] = r
            prev = r
    return out


def _build_words_np(first, steps):
    S, n = steps.shape[0], steps.shape[1] + 1
    out = np.empty((S, n), dtype=np.int64)
    out[:, 0] = first
    for i in range(1, n):
        r = steps[:, i - 1].astype(np.int64)
        out[:, i] = r + (r >= (out[:, i - 1] ^ 1))
    return out


def _child_lengths_nb(words, perm, child):
    S, n = words.shape
    d = perm.shape[1]
    stack = np.empty((d, n), dtype=np.int64)
    top = np.zeros(d, dtype=np.int64)
    pos = np.empty(d, dtype=np.int64)
    out = np.empty(S, dtype=np.int64)
    for s in range(S):
        for x in range(d):
            top[x] = 0
            pos[x] = x
        for i in range(n):
            c = words[s, i]
            for x in range(d):
                y = pos[x]
                t = child[c, y]
                if t >= 0:
                    if top[x] > 0 and stack[x, top[x] - 1] == (t ^ 1):
                        top[x] -= 1
                    else:
                        stack[x, top[x]] = t
                        top[x] += 1
                pos[x] = perm[c, y]
        tot = 0
        for x in range(d):
            tot += top[x]
        out[s] = tot
    return out


def _child_lengths_np(words, perm, child):
    S, n = words.shape
    d = perm.shape[1]
    rows = np.arange(S)
    stack = np.zeros((d, S, n + 1), dtype=np.int64)
    top = np.zeros((d, S), dtype=np.int64)
    pos = np.tile(np.arange(d), (S, 1)).T.copy()
    for i in range(n):
        c = words[:, i]
        for x in range(d):
            t = child[c, pos[x]]
            live = t >= 0
            below = stack[x, rows, np.maximum(top[x] - 1, 0)]
            cancel = live & (top[x] > 0) & (below == (t ^ 1))
            push = live & ~cancel
            stack[x, rows[push], top[x][push]] = t[push]
            top[x] += push.astype(np.int64) - cancel.astype(np.int64)
            pos[x] = perm[c, pos[x]]
    return top.sum(axis=0)


_build_words = pick(_build_words_nb, _build_words_np)
_child_lengths = pick(_child_lengths_nb, _child_lengths_np)


# ------------------------------------------------------------ sampling


def random_reduced_word(n: int, rng: np.random.Generator, k: int = 2) -> tuple:
    """Uniform freely reduced word of length ``n`` over ``k`` generators (signed codes)."""
    if n <= 0:
        return ()
    first = rng.integers(0, 2 * k, size=1)
    steps = rng.integers(0, 2 * k - 1, size=(1, n - 1))
    letters = _build_words(first, steps)[0]
    return tuple(int(c) for c in _letter_to_code(letters))


def _sample_words(k, n, seed, indices):
    first = np.empty(len(indices), dtype=np.int64)
    steps = np.empty((len(indices), max(n - 1, 0)), dtype=np.int64)
    for row, i in enumerate(indices):
        rng = sample_rng(seed, i)
        first[row] = rng.integers(0, 2 * k)
        steps[row] = rng.integers(0, 2 * k - 1, size=n - 1)
    return _build_words(first, steps)


@dataclass(frozen=True)
class TrialStats:
    n: int
    samples: int
    mu_hat: float
    variance: float
    eta_hat: float | None
    stderr_mu: float
    stderr_eta: float | None

    @property
    def degenerate(self):
        return self.eta_hat is None

    def as_dict(self):
        return {"n": self.n, "samples": self.samples, "mu_hat": self.mu_hat, "variance": self.variance,
                "eta_hat": self.eta_hat, "stderr_mu": self.stderr_mu, "stderr_eta": self.stderr_eta}


def child_sums(T, n: int, samples: int, seed: int = 0, batch: int = 256) -> np.ndarray:
    """Total reduced child length ``m`` for each of ``samples`` random words."""
    G = as_group(T)
    perm, child = _tables(G)
    k = G.T.num_states
    out = np.empty(samples, dtype=np.int64)
    for start in range(0, samples, batch):
        idx = range(start, min(start + batch, samples))
        out[start:start + len(idx)] = _child_lengths(_sample_words(k, n, seed, idx), perm, child)
    return out


def estimate_contraction(T, n: int, samples: int, seed: int = 0, batch: int = 256) -> TrialStats:
    m = child_sums(T, n, samples, seed, batch).astype(float)
    mu = float(m.mean()) / n
    var = float(m.var(ddof=1)) if samples > 1 else 0.0
    se_mu = math.sqrt(var / samples) / n if samples > 1 else math.inf
    if var <= 0:
        return TrialStats(n, samples, mu, var, None, se_mu, None)
    eta = mu * (1 - mu) * n / var
    # delta method on s^2, treating the sample as roughly normal
    se_eta = eta * math.sqrt(2.0 / (samples - 1))
    return TrialStats(n, samples, mu, var, eta, se_mu, se_eta)


# ------------------------------------------------------------ binomial model


def c_coefficient(m, n, mu: float, eta: float) -> float:
    """``eta * binom(eta n, eta m) * mu^(eta m) * (1-mu)^(eta (n-m))`` via log-Gamma."""
    if not (0 <= m <= n) or not (0 < mu < 1) or not (0 < eta <= 1):
        raise ValueError("need 0 <= m <= n, 0 < mu < 1, 0 < eta <= 1")
    a, b = eta * n, eta * m
    logc = gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)
    return float(eta * np.exp(logc + b * np.log(mu) + (a - b) * np.log1p(-mu)))


@dataclass(frozen=True)
class BoundReport:
    mu: float
    eta: float
    min_gap: float
    argmin: float
    h_at_one: float

    @property
    def ok(self):
        return self.min_gap > 0 and self.h_at_one == 1.0


def amenability_bound_check(mu: float, eta: float, grid_size: int = 99) -> BoundReport:
    """Check ``h(rho) = ((1-mu) + mu rho^(1/eta))^eta > rho`` on a grid in ``(0, 1)``."""
    if not (0 < mu < 1) or eta <= 0:
        raise ValueError("need 0 < mu < 1 and eta > 0")
    rho = np.arange(1, grid_size + 1) / (grid_size + 1)
    gap = ((1 - mu) + mu * rho ** (1 / eta)) ** eta - rho
    i = int(np.argmin(gap))
    h1 = ((1 - mu) + mu * 1.0 ** (1 / eta)) ** eta
    return BoundReport(mu, eta, float(gap[i]), float(rho[i]), float(h1))


# ------------------------------------------------------------ exact cogrowth


def _scan_nb(perms, nmax, cap):
    # DFS over reduced words; record words whose level action is trivial
    L, N = perms.shape
    cur = np.empty((nmax + 1, N), dtype=np.int64)
    for x in range(N):
        cur[0, x] = x
    word = np.zeros(nmax + 1, dtype=np.int64)
    nxt = np.zeros(nmax + 1, dtype=np.int64)
    found = np.zeros((cap, nmax), dtype=np.int64)
    lens = np.zeros(cap, dtype=np.int64)
    count = 0
    overflow = False
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        if depth == nmax or nxt[depth] >= L:
            depth -= 1
            if depth >= 0:
                nxt[depth] += 1
            continue
        c = nxt[depth]
        if depth > 0 and c == (word[depth - 1] ^ 1):
            nxt[depth] += 1
            continue
        word[depth] = c
        trivial = True
        for x in range(N):
            y = perms[c, cur[depth, x]]
            cur[depth + 1, x] = y
            if y != x:
                trivial = False
        if trivial:
            if count < cap:
                for i in range(depth + 1):
                    found[count, i] = word[i]
                lens[count] = depth + 1
                count += 1
            else:
                overflow = True
        depth += 1
        nxt[depth] = 0
    return found[:min(count, cap)], lens[:min(count, cap)], overflow


def _scan_np(perms, nmax, cap):
    L, N = perms.shape
    found, lens = [], []
    ident = np.arange(N)
    frontier = [((), ident)]
    for depth in range(nmax):
        new = []
        for word, cur in frontier:
            for c in range(L):
                if word and c == (word[-1] ^ 1):
                    continue
                nw = word + (c,)
                img = perms[c][cur]
                if np.array_equal(img, ident):
                    found.append(nw)
                new.append((nw, img))
        frontier = new
    out = np.zeros((len(found), nmax), dtype=np.int64)
    for i, w in enumerate(found):
        out[i, :len(w)] = w
    return out[:cap], np.array([len(w) for w in found[:cap]], dtype=np.int64), len(found) > cap


_scan = pick(_scan_nb, _scan_np)


@dataclass(frozen=True)
class CogrowthRow:
    n: int
    reduced: int
    trivial: int
    candidates: int


def exact_cogrowth(T, nmax: int, filter_level: int = 10, cap: int = 1_000_000) -> list:
    """Rows ``(n, #F_n, #N_n)``: reduced words of length ``n`` and those equal to 1.

    Words are enumerated depth first while tracking the action on level
    ``filter_level``; survivors are confirmed with the exact word problem.
    """
    G = as_group(T)
    k = G.T.num_states
    if k == 0:
        return [CogrowthRow(0, 1, 1, 1)]
    perms_by_code = G.level_perms(filter_level)
    perms = np.array([perms_by_code[int(_letter_to_code(l))] for l in range(2 * k)], dtype=np.int64)
    found, lens, overflow = _scan(perms, nmax, cap)
    if overflow:
        raise MemoryError("too many candidate words; lower nmax or raise filter_level")
    trivial = [0] * (nmax + 1)
    cand = [0] * (nmax + 1)
    trivial[0] = cand[0] = 1
    for row, ln in zip(found, lens):
        ln = int(ln)
        cand[ln] += 1
        word = tuple(int(c) for c in _letter_to_code(row[:ln]))
        if G.is_identity(word):
            trivial[ln] += 1
    rows = []
    for n in range(nmax + 1):
        total = 1 if n == 0 else 2 * k * (2 * k - 1) ** (n - 1)
        rows.append(CogrowthRow(n, total, trivial[n], cand[n]))
    return rows


def backend_info():
    return {"numba": HAVE_NUMBA}
