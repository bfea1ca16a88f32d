"""Finite-state transducers acting on the rooted tree X^*.

Letters are 1-based at every public interface (``"1"``, ``"2"``, ...) and
0-based inside the tables.  A *signed state* is encoded as a non-zero int:
``j + 1`` for state ``j`` and ``-(j + 1)`` for its formal inverse; ``0`` is
the identity state ``id``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

ID = "id"
_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_TARGET_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)(\^-1)?$")


class AutomatonError(ValueError):
    """Malformed or non-invertible automaton description."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Transducer:
    """An invertible transducer ``(Q, X, output, transition)``.

    ``output[j][x]`` is the image letter of state ``j`` on letter ``x`` and
    ``transition[j][x]`` the signed code of the state reached.
    """

    alphabet_size: int
    states: tuple[str, ...]
    output: tuple[tuple[int, ...], ...]
    transition: tuple[tuple[int, ...], ...]
    name: str = ""
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        d = self.alphabet_size
        if d < 2:
            raise AutomatonError("alphabet size must be at least 2")
        if len(set(self.states)) != len(self.states):
            raise AutomatonError("duplicate state names")
        k = len(self.states)
        if len(self.output) != k or len(self.transition) != k:
            raise AutomatonError("table sizes do not match the state list")
        for j, name in enumerate(self.states):
            if name == ID or not _NAME_RE.match(name):
                raise AutomatonError(f"invalid state name {name!r}")
            row = self.output[j]
            if len(row) != d or sorted(row) != list(range(d)):
                raise AutomatonError(f"state {name}: output not a permutation")
            trow = self.transition[j]
            if len(trow) != d or any(abs(c) > k for c in trow):
                raise AutomatonError(f"state {name}: undefined state reference")
        object.__setattr__(self, "_index", {s: j for j, s in enumerate(self.states)})

    @property
    def num_states(self):
        return len(self.states)

    def code(self, name, sign=1):
        """Signed code of ``name`` (``'id'`` gives 0)."""
        if name == ID:
            return 0
        try:
            j = self._index[name]
        except KeyError:
            raise AutomatonError(f"unknown state {name!r}") from None
        return (j + 1) if sign > 0 else -(j + 1)

    def label(self, code):
        if code == 0:
            return ID
        name = self.states[abs(code) - 1]
        return name if code > 0 else name + "^-1"

    def signed_output(self, code, x):
        """Image of 0-based letter ``x`` under the signed state ``code``."""
        if code == 0:
            return x
        row = self.output[abs(code) - 1]
        if code > 0:
            return row[x]
        return row.index(x)

    def signed_transition(self, code, x):
        """Signed state reached from ``code`` when reading 0-based ``x``."""
        if code == 0:
            return 0
        j = abs(code) - 1
        if code > 0:
            return self.transition[j][x]
        # inverse: tau'(q^-1, x) = tau(q, lambda_q^{-1}(x))^-1
        y = self.output[j].index(x)
        return -self.transition[j][y]

    def permutation(self, code):
        """Root permutation of a signed state as a tuple (0-based images)."""
        return tuple(self.signed_output(code, x) for x in range(self.alphabet_size))

    def children(self, code):
        return tuple(self.signed_transition(code, x) for x in range(self.alphabet_size))

    def __str__(self):
        return format_transducer(self)


# ---------------------------------------------------------------- parsing


def parse_transducer(text: str, name: str = "") -> Transducer:
    """Parse the line-based automaton format.

    ``alphabet <d>`` followed by blocks ``state <name>`` with ``d`` lines
    ``on <x> -> <y> goto <state|id>``.  A target may carry ``^-1`` to name
    the formal inverse of a state.
    """
    d = None
    blocks: list[tuple[str, int, dict]] = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "alphabet":
            if d is not None or len(parts) != 2 or not parts[1].isdigit():
                raise AutomatonError("syntax error in alphabet declaration", lineno)
            d = int(parts[1])
            if d < 2:
                raise AutomatonError("alphabet size must be at least 2", lineno)
        elif head == "state":
            if d is None:
                raise AutomatonError("state declared before alphabet", lineno)
            if len(parts) != 2 or not _NAME_RE.match(parts[1]):
                raise AutomatonError("syntax error in state declaration", lineno)
            if any(b[0] == parts[1] for b in blocks):
                raise AutomatonError(f"duplicate state {parts[1]!r}", lineno)
            current = (parts[1], lineno, {})
            blocks.append(current)
        elif head == "on":
            if current is None:
                raise AutomatonError("transition outside a state block", lineno)
            if len(parts) != 6 or parts[2] != "->" or parts[4] != "goto":
                raise AutomatonError("expected 'on <x> -> <y> goto <state>'", lineno)
            try:
                x, y = int(parts[1]), int(parts[3])
            except ValueError:
                raise AutomatonError("letters must be integers", lineno) from None
            if not (1 <= x <= d and 1 <= y <= d):
                raise AutomatonError("letter out of range", lineno)
            m = _TARGET_RE.match(parts[5])
            if not m:
                raise AutomatonError(f"bad target {parts[5]!r}", lineno)
            if x in current[2]:
                raise AutomatonError(f"letter {x} defined twice", lineno)
            current[2][x] = (y, m.group(1), -1 if m.group(2) else 1, lineno)
        else:
            raise AutomatonError(f"syntax error near {head!r}", lineno)
    if d is None:
        raise AutomatonError("missing alphabet declaration")

    names = [b[0] for b in blocks if b[0] != ID]
    index = {s: j for j, s in enumerate(names)}
    output, transition = [], []
    for sname, lineno, rows in blocks:
        if len(rows) != d:
            raise AutomatonError(f"state {sname}: expected {d} transitions", lineno)
        out_row, tr_row = [], []
        for x in range(1, d + 1):
            y, target, sign, ln = rows[x]
            if target == ID:
                code = 0
            elif target in index:
                code = sign * (index[target] + 1)
            else:
                raise AutomatonError(f"undefined state reference {target!r}", ln)
            out_row.append(y - 1)
            tr_row.append(code)
        if sorted(out_row) != list(range(d)):
            raise AutomatonError(f"state {sname}: output not a permutation", lineno)
        if sname == ID:
            if out_row != list(range(d)) or any(tr_row):
                raise AutomatonError("state id must act trivially", lineno)
            continue
        output.append(tuple(out_row))
        transition.append(tuple(tr_row))
    return Transducer(d, tuple(names), tuple(output), tuple(transition), name=name)


def format_transducer(T: Transducer) -> str:
    lines = [f"alphabet {T.alphabet_size}"]
    for j, sname in enumerate(T.states):
        lines.append(f"state {sname}")
        for x in range(T.alphabet_size):
            lines.append(f"  on {x + 1} -> {T.output[j][x] + 1} goto {T.label(T.transition[j][x])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- builtins


def _from_recursion(d, spec, name):
    """Build from ``{state: (children, perm)}`` with children given as
    (name, sign) pairs or None for the identity and perm 0-based."""
    states = tuple(spec)
    idx = {s: j for j, s in enumerate(states)}
    output, transition = [], []
    for s in states:
        children, perm = spec[s]
        # (x w)^s = perm(x) w^{s_x}; wreath notation <s_1,..,s_d> pi
        output.append(tuple(perm))
        row = []
        for c in children:
            if c is None:
                row.append(0)
            else:
                cname, sign = c
                row.append(sign * (idx[cname] + 1))
        transition.append(tuple(row))
    return Transducer(d, states, tuple(output), tuple(transition), name=name)


SWAP = (1, 0)
FIX = (0, 1)
BUILTINS = ("gamma", "bsv", "grigorchuk", "aleshin", "mandelbrot")


def builtin(name: str, parameter: str | None = None) -> Transducer:
    """Return one of the named example automata.

    ``mandelbrot`` takes a binary kneading word of length ``n - 1``: letter
    ``i`` selects ``a_{i+1} = <a_i, 1>`` (``0``) or ``<1, a_i>`` (``1``);
    ``a_1 = <a_n, 1>(1 2)``.
    """
    if name != "mandelbrot" and parameter is not None:
        raise AutomatonError(f"builtin {name!r} takes no parameter")
    if name == "gamma":
        spec = {"a": ((("b", 1), None), SWAP), "b": ((("a", 1), None), FIX)}
    elif name == "bsv":
        spec = {"l": ((("l", 1), None), SWAP), "m": ((("m", -1), None), SWAP)}
    elif name == "grigorchuk":
        spec = {
            "a": ((None, None), SWAP),
            "b": ((("a", 1), ("c", 1)), FIX),
            "c": ((("a", 1), ("d", 1)), FIX),
            "d": ((None, ("b", 1)), FIX),
        }
    elif name == "aleshin":
        spec = {
            "a": ((("c", 1), ("b", 1)), SWAP),
            "b": ((("b", 1), ("c", 1)), SWAP),
            "c": ((("a", 1), ("a", 1)), FIX),
        }
    elif name == "mandelbrot":
        word = "0" if parameter is None else parameter
        if not word or any(ch not in "01" for ch in word):
            raise AutomatonError(f"malformed kneading word {parameter!r}")
        n = len(word) + 1
        spec = {"a1": (((f"a{n}", 1), None), SWAP)}
        for i in range(2, n + 1):
            prev = (f"a{i - 1}", 1)
            spec[f"a{i}"] = (((prev, None) if word[i - 2] == "0" else (None, prev)), FIX)
    else:
        raise AutomatonError(f"unknown builtin {name!r}")
    return _from_recursion(2, spec, name)


# ---------------------------------------------------------------- predicates


@dataclass(frozen=True)
class ValidationReport:
    invertible: bool
    monomial: bool
    dual_invertible: bool

    def as_dict(self):
        return {"invertible": self.invertible, "monomial": self.monomial,
                "dual_invertible": self.dual_invertible}


def _cycle_powers(d):
    cyc = tuple((x + 1) % d for x in range(d))
    powers, p = set(), tuple(range(d))
    for _ in range(d):
        powers.add(p)
        p = tuple(cyc[p[x]] for x in range(d))
    return powers


def is_monomial(T: Transducer) -> bool:
    powers = _cycle_powers(T.alphabet_size)
    counts = [0] * T.num_states
    for j in range(T.num_states):
        if T.output[j] not in powers:
            return False
        for c in T.transition[j]:
            if c:
                counts[abs(c) - 1] += 1
    return all(c == 1 for c in counts)


@dataclass(frozen=True)
class MealyMachine:
    """A plain Mealy machine; not necessarily invertible.  Used for duals."""

    states: tuple
    letters: tuple
    output: dict  # (state, letter) -> letter
    transition: dict  # (state, letter) -> state

    def dual(self) -> "MealyMachine":
        return MealyMachine(
            states=self.letters,
            letters=self.states,
            output={(x, q): self.transition[q, x] for q in self.states for x in self.letters},
            transition={(x, q): self.output[q, x] for q in self.states for x in self.letters},
        )

    def is_invertible(self) -> bool:
        for q in self.states:
            images = {self.output[q, x] for x in self.letters}
            if len(images) != len(self.letters):
                return False
        return True


def machine(T: Transducer) -> MealyMachine:
    """The transducer as a Mealy machine over signed-state labels.

    Formal inverses are included only when some transition targets one.
    """
    codes = [0] + [j + 1 for j in range(T.num_states)]
    if any(c < 0 for row in T.transition for c in row):
        codes += [-(j + 1) for j in range(T.num_states)]
    letters = tuple(range(1, T.alphabet_size + 1))
    labels = tuple(T.label(c) for c in codes)
    out, tr = {}, {}
    for c in codes:
        for x in letters:
            out[T.label(c), x] = T.signed_output(c, x - 1) + 1
            tr[T.label(c), x] = T.label(T.signed_transition(c, x - 1))
    return MealyMachine(labels, letters, out, tr)


def dual(T: Transducer) -> MealyMachine:
    return machine(T).dual()


def validate(T: Transducer) -> ValidationReport:
    # Transducer construction already rejects non-bijective rows.
    return ValidationReport(
        invertible=all(sorted(r) == list(range(T.alphabet_size)) for r in T.output),
        monomial=is_monomial(T),
        dual_invertible=dual(T).is_invertible(),
    )


# ---------------------------------------------------------------- action


def parse_vertex(v, d: int) -> tuple[int, ...]:
    """Vertex word to a tuple of 0-based letters."""
    if isinstance(v, str):
        v = v.strip()
        if not v:
            return ()
        items = v.split(",") if (d > 9 or "," in v) else list(v)
        try:
            letters = [int(s) for s in items]
        except ValueError:
            raise AutomatonError(f"bad vertex word {v!r}") from None
    else:
        letters = list(v)
    for x in letters:
        if not 1 <= x <= d:
            raise AutomatonError(f"letter {x} out of range 1..{d}")
    return tuple(x - 1 for x in letters)


def format_vertex(letters: Sequence[int], d: int) -> str:
    if d > 9:
        return ",".join(str(x + 1) for x in letters)
    return "".join(str(x + 1) for x in letters)


def resolve_state(T: Transducer, q) -> int:
    """Accept a signed code, a name, ``name^-1``, or a ``(name, sign)`` pair."""
    if isinstance(q, int):
        if abs(q) > T.num_states:
            raise AutomatonError(f"state code {q} out of range")
        return q
    if isinstance(q, tuple):
        return T.code(q[0], q[1])
    m = _TARGET_RE.match(q)
    if not m:
        raise AutomatonError(f"bad state {q!r}")
    return T.code(m.group(1), -1 if m.group(2) else 1)


def act_letters(T: Transducer, code: int, letters: Sequence[int]) -> list[int]:
    out = []
    for x in letters:
        out.append(T.signed_output(code, x))
        code = T.signed_transition(code, x)
        if code == 0:
            out.extend(letters[len(out):])
            break
    return out


def apply_state(T: Transducer, q, v):
    """Image of vertex ``v`` under the (signed) state ``q``.

    ``v`` may be a string (``"21"``) or a sequence of 1-based ints; the
    result has the same form.
    """
    code = resolve_state(T, q)
    letters = parse_vertex(v, T.alphabet_size)
    image = act_letters(T, code, letters)
    if isinstance(v, str):
        return format_vertex(image, T.alphabet_size)
    return tuple(x + 1 for x in image)
