"""Compile two-counter machines into pairs of linearly ambiguous automata.

A machine run is written as ``t1 B1 t2 B2 ... tk Bk`` where ``ti`` is the
letter of the i-th transition taken and ``Bi = a^n b^m`` is the configuration
reached after it (the configuration before ``t1`` is ``(0, 0)`` and is left
implicit).  Keeping the last block makes every counter check compare two actual
blocks, which the final transition needs as much as the others.

``compile`` returns ``A`` and ``B`` with ``[[A]](w) = [[B]](w)`` exactly on the
word of the halting run, and ``[[A]](w) > [[B]](w)`` on every other word.

Gadgets (``i`` is the position of the checked transition letter, ``u``/``v``
the counter value in the block before/after it):

=====  ==========================================  =========================
A1     first counter incremented on ``T1+``        ``y^(u+1) z^v``
A2     second counter incremented on ``T2+``       ``y^(u+1) z^v``
A3     first counter unchanged on ``T2+ | T2-``    ``y^u z^v``
A4     second counter unchanged on ``T1+ | T1-``   ``y^u z^v``
A5     first counter decremented on ``T1-``        ``y^u z^(v+1)``, ``u > 0``
A6     second counter decremented on ``T2-``       ``y^u z^(v+1)``, ``u > 0``
=====  ==========================================  =========================

each multiplied by ``x (1/2)^(i-1)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import Pa, PaInputError, as_fraction, make_pa, weighted_sum

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
KINDS = ("inc1", "inc2", "dec1", "dec2")


class MachineDoesNotHalt(RuntimeError):
    """Simulation exceeded its step budget."""


@dataclass(frozen=True)
class TwoCounterMachine:
    states: tuple
    t1plus: tuple  # (p, q)
    t2plus: tuple
    t1minus: tuple  # (p, q_zero, q_nonzero)
    t2minus: tuple
    q_init: str
    q_halt: str

    def __post_init__(self):
        for name in ("states", "t1plus", "t2plus", "t1minus", "t2minus"):
            object.__setattr__(self, name, tuple(tuple(t) if not isinstance(t, str) else t
                                                 for t in getattr(self, name)))
        known = set(self.states)
        if len(known) != len(self.states):
            raise PaInputError("duplicate machine state")
        if self.q_init not in known or self.q_halt not in known:
            raise PaInputError("initial and halting states must be declared")
        if self.q_init == self.q_halt:
            raise PaInputError("initial and halting states must differ")
        sources = []
        for kind, trans in self.by_kind():
            width = 2 if kind.startswith("inc") else 3
            for t in trans:
                if len(t) != width or any(q not in known for q in t):
                    raise PaInputError(f"malformed {kind} transition {t}")
                sources.append(t[0])
        if len(set(sources)) != len(sources):
            raise PaInputError("machine is not deterministic: a state has two actions")
        if self.q_halt in sources:
            raise PaInputError("halting state has an outgoing transition")

    def by_kind(self):
        return (("inc1", self.t1plus), ("inc2", self.t2plus),
                ("dec1", self.t1minus), ("dec2", self.t2minus))

    @property
    def letters(self) -> dict:
        """Letter ``t<k>`` -> ``(kind, transition)``, numbered in kind order."""
        out = {}
        for kind, trans in self.by_kind():
            for t in trans:
                out[f"t{len(out) + 1}"] = (kind, t)
        return out

    def letters_of(self, *kinds) -> tuple:
        return tuple(l for l, (k, _) in self.letters.items() if k in kinds)

    def action(self, q: str):
        for letter, (kind, t) in self.letters.items():
            if t[0] == q:
                return letter, kind, t
        return None


def target(kind: str, t: tuple, zero1: bool, zero2: bool) -> str:
    """State reached by ``t`` given which counters are zero before it."""
    if kind.startswith("inc"):
        return t[1]
    zero = zero1 if kind == "dec1" else zero2
    return t[1] if zero else t[2]


@dataclass
class Execution:
    steps: list  # (letter, (n1, n2)) with the configuration after the step

    @property
    def length(self) -> int:
        return len(self.steps)


def simulate(m: TwoCounterMachine, max_steps: int = 10_000) -> Execution:
    q, n1, n2 = m.q_init, 0, 0
    steps = []
    while q != m.q_halt:
        if len(steps) >= max_steps:
            raise MachineDoesNotHalt(f"no halt within {max_steps} steps")
        act = m.action(q)
        if act is None:
            raise MachineDoesNotHalt(f"machine is stuck in {q!r}")
        letter, kind, t = act
        nxt = target(kind, t, n1 == 0, n2 == 0)
        if kind == "inc1":
            n1 += 1
        elif kind == "inc2":
            n2 += 1
        elif kind == "dec1" and n1:
            n1 -= 1
        elif kind == "dec2" and n2:
            n2 -= 1
        steps.append((letter, (n1, n2)))
        q = nxt
    return Execution(steps)


def encode_steps(steps) -> tuple:
    word = []
    for letter, (n1, n2) in steps:
        word.append(letter)
        word.extend("a" * n1)
        word.extend("b" * n2)
    return tuple(word)


def encode_execution(m: TwoCounterMachine, max_steps: int = 10_000) -> tuple:
    return encode_steps(simulate(m, max_steps).steps)


def decode_word(m: TwoCounterMachine, word) -> Optional[list]:
    """Split a word of the right shape into ``(letter, (n1, n2))`` steps."""
    letters = m.letters
    steps, cur = [], None
    for ch in word:
        if ch in letters:
            if cur is not None:
                steps.append(cur)
            cur = [ch, 0, 0]
        elif cur is None:
            return None
        elif ch == "a":
            if cur[2]:
                return None
            cur[1] += 1
        elif ch == "b":
            cur[2] += 1
        else:
            return None
    if cur is not None:
        steps.append(cur)
    return [(l, (a, b)) for l, a, b in steps]


# -- A0: regular conditions --------------------------------------------------------

def _shape_checker(m):
    letters = m.letters
    t_init = {l for l, (_, t) in letters.items() if t[0] == m.q_init}

    def step(s, ch):
        if s is None:
            return None
        if s == "start":
            return "T" if ch in t_init else None
        if ch in letters:
            return "T"
        if ch == "a":
            return "A" if s in ("T", "A") else None
        return "B"

    return "start", step, lambda s: s in ("T", "A", "B")


def _tracking_step(m, s, ch):
    """State ``(last letter, zero1 before it, zero2 before it, zero1 now, zero2 now)``."""
    last, zb1, zb2, z1, z2 = s
    if ch == "a":
        return (last, zb1, zb2, False, z2)
    if ch == "b":
        return (last, zb1, zb2, z1, False)
    return (ch, z1, z2, True, True)


_TRACK_START = (None, True, True, True, True)


def _after(m, s):
    last, zb1, zb2, _, _ = s
    kind, t = m.letters[last]
    return target(kind, t, zb1, zb2)


def _halting_checker(m):
    def accept(s):
        return s[0] is not None and _after(m, s) == m.q_halt

    return _TRACK_START, lambda s, ch: _tracking_step(m, s, ch), accept


def _compat_checker(m):
    letters = m.letters

    def step(s, ch):
        if s is None:
            return None
        if ch in letters and s[0] is not None and letters[ch][1][0] != _after(m, s):
            return None
        return _tracking_step(m, s, ch)

    return _TRACK_START, step, lambda s: s is not None


def _zero_checker(m):
    letters = m.letters

    def ok(s):
        pending, z1, z2 = s
        return not ((pending == 1 and not z1) or (pending == 2 and not z2))

    def step(s, ch):
        if s is None:
            return None
        pending, z1, z2 = s
        if ch == "a":
            return (pending, False, z2)
        if ch == "b":
            return (pending, z1, False)
        if not ok(s):
            return None
        kind = letters[ch][0]
        nxt = 1 if kind == "dec1" and z1 else 2 if kind == "dec2" and z2 else None
        return (nxt, True, True)

    return (None, True, True), step, lambda s: s is not None and ok(s)


def build_A0(m: TwoCounterMachine) -> Pa:
    """Deterministic automaton with value 0 on words meeting every regular
    condition (shape, halting, state compatibility, zero tests) and 1 otherwise."""
    alphabet = ("a", "b") + tuple(m.letters)
    checkers = [_shape_checker(m), _halting_checker(m), _compat_checker(m), _zero_checker(m)]
    start = tuple(c[0] for c in checkers)
    names = {start: "g0"}
    queue = deque([start])
    edges = []
    while queue:
        s = queue.popleft()
        for ch in alphabet:
            t = tuple(c[1](si, ch) for c, si in zip(checkers, s))
            if t not in names:
                names[t] = f"g{len(names)}"
                queue.append(t)
            edges.append((names[s], ch, names[t], 1))
    finals = {n for s, n in names.items() if not all(c[2](si) for c, si in zip(checkers, s))}
    return _minimize(alphabet, list(names.values()), edges, "g0", finals)


def _minimize(alphabet, states, edges, start, finals) -> Pa:
    """Moore partition refinement of a complete deterministic automaton."""
    delta = {(s, ch): t for s, ch, t, _ in edges}
    block = {q: int(q in finals) for q in states}
    while True:
        sig = {q: (block[q],) + tuple(block[delta[(q, ch)]] for ch in alphabet) for q in states}
        ids: dict = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in states}
        if len(ids) == len(set(block.values())):
            break
        block = new
    # number blocks in order of first appearance from the start state
    order, names = deque([start]), {}
    while order:
        q = order.popleft()
        if block[q] in names:
            continue
        names[block[q]] = f"g{len(names)}"
        order.extend(delta[(q, ch)] for ch in alphabet)
    rep = {}
    for q in states:
        if block[q] in names:
            rep.setdefault(block[q], q)
    out_edges = [(names[b], ch, names[block[delta[(q, ch)]]], 1) for b, q in rep.items() for ch in alphabet]
    out_finals = [names[b] for b, q in rep.items() if q in finals]
    return make_pa(alphabet, [names[b] for b in rep], out_edges, {names[block[start]]: 1}, out_finals)


# -- gadgets ----------------------------------------------------------------------

def _check_params(x, y, z):
    x, y, z = (as_fraction(v) for v in (x, y, z))
    if not (0 < x <= HALF and 0 < y <= 1 and 0 < z <= 1):
        raise PaInputError("gadget parameters need 0 < x <= 1/2 and 0 < y, z <= 1")
    return x, y, z


def _gadget(kind: str, x, y, z, letters_T, trigger, counter: str) -> Pa:
    x, y, z = _check_params(x, y, z)
    if counter not in ("a", "b"):
        raise PaInputError("counter must be 'a' or 'b'")
    other = "b" if counter == "a" else "a"
    T = tuple(letters_T)
    trigger = set(trigger)
    if not trigger <= set(T):
        raise PaInputError("trigger letters must be transition letters")
    alphabet = ("a", "b") + T
    entry = "q" if kind == "D" else "q2"
    states = ["q1", "q2", "q3", "q4"] + (["q"] if kind == "D" else [])
    edges = [("q1", "a", "q1", 1), ("q1", "b", "q1", 1)]
    for t in T:
        edges += [("q1", t, "q1", HALF), ("q1", t, entry, HALF)]
    if kind == "D":
        if counter == "a":
            edges.append(("q", "a", "q2", y))
        else:
            edges += [("q", "a", "q", 1), ("q", "b", "q2", y)]
    edges += [("q2", counter, "q2", y), ("q2", other, "q2", 1)]
    into = {"C": y, "E": Fraction(1), "D": z}[kind]
    edges += [("q2", t, "q3", into) for t in T if t in trigger]
    edges.append(("q3", counter, "q3", z))
    if counter == "a":
        edges.append(("q3", "b", "q4", 1))
    else:
        edges.append(("q3", "a", "q3", 1))
    edges += [("q3", t, "q4", 1) for t in T]
    edges += [("q4", ch, "q4", 1) for ch in alphabet]
    return make_pa(alphabet, states, edges, {"q1": x, entry: x}, ["q3", "q4"])


def build_gadget_C(x, y, z, letters_T=("t1", "t2"), trigger=("t1",), counter="a") -> Pa:
    """Increment check: ``x (1/2)^(i-1) y^(u+1) z^v`` per trigger letter."""
    return _gadget("C", x, y, z, letters_T, trigger, counter)


def build_gadget_D(x, y, z, letters_T=("t1", "t2"), trigger=("t1",), counter="a") -> Pa:
    """Decrement check: ``x (1/2)^(i-1) y^u z^(v+1)`` per trigger letter with ``u > 0``."""
    return _gadget("D", x, y, z, letters_T, trigger, counter)


def build_gadget_E(x, y, z, letters_T=("t1", "t2"), trigger=("t1",), counter="a") -> Pa:
    """No-change check: ``x (1/2)^(i-1) y^u z^v`` per trigger letter."""
    return _gadget("E", x, y, z, letters_T, trigger, counter)


def length_tracker(alphabet) -> Pa:
    """Unambiguous automaton with value ``(1/13) (1/4)^(|w|+1)``."""
    edges = [("l", ch, "l", QUARTER) for ch in alphabet]
    return make_pa(alphabet, ["l"], edges, {"l": Fraction(1, 52)}, ["l"])


@dataclass
class ReductionOutput:
    A: Pa
    B: Pa
    Aprime: Pa
    Bprime: Pa
    alphabet: tuple
    parts: dict = field(default_factory=dict)


def _checks(m: TwoCounterMachine):
    """``(gadget kind, counter, trigger letters)`` for A1..A6."""
    return [
        ("C", "a", m.letters_of("inc1")),
        ("C", "b", m.letters_of("inc2")),
        ("E", "a", m.letters_of("inc2", "dec2")),
        ("E", "b", m.letters_of("inc1", "dec1")),
        ("D", "a", m.letters_of("dec1")),
        ("D", "b", m.letters_of("dec2")),
    ]


def compile(m: TwoCounterMachine) -> ReductionOutput:  # noqa: A001 - domain name
    T = tuple(m.letters)
    alphabet = ("a", "b") + T
    a0 = build_A0(m)
    parts = {"A0": a0}
    a_parts = [(Fraction(7, 13), a0)]
    b_parts = []
    for idx, (kind, counter, trigger) in enumerate(_checks(m), 1):
        ai = weighted_sum([(HALF, _gadget(kind, HALF, 1, QUARTER, T, trigger, counter)),
                           (HALF, _gadget(kind, HALF, QUARTER, 1, T, trigger, counter))])
        bi = _gadget(kind, HALF, HALF, HALF, T, trigger, counter)
        parts[f"A{idx}"], parts[f"B{idx}"] = ai, bi
        a_parts.append((Fraction(1, 13), ai))
        b_parts.append((Fraction(1, 13), bi))
    A = weighted_sum(a_parts)
    B = weighted_sum(b_parts)
    L = length_tracker(alphabet)
    parts["L"] = L
    Aprime = weighted_sum([(HALF, A)])
    Bprime = weighted_sum([(HALF, B), (HALF, L)])
    return ReductionOutput(A, B, Aprime, Bprime, alphabet, parts)


# -- text format --------------------------------------------------------------------

def parse_machine(text: str) -> TwoCounterMachine:
    states, init, halt = [], None, None
    trans = {k: [] for k in KINDS}
    arity = {"state": 1, "init": 1, "halt": 1, "inc1": 2, "inc2": 2, "dec1": 3, "dec2": 3}
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        kw, args = toks[0], toks[1:]
        if kw not in arity:
            raise PaInputError(f"line {lineno}: unknown keyword {kw!r}")
        if len(args) != arity[kw]:
            raise PaInputError(f"line {lineno}: {kw} takes {arity[kw]} argument(s)")
        if kw == "state":
            states.append(args[0])
        elif kw == "init":
            init = args[0]
        elif kw == "halt":
            halt = args[0]
        else:
            trans[kw].append(tuple(args))
    if not states:
        raise PaInputError("machine file declares no states")
    if init is None or halt is None:
        raise PaInputError("machine file needs 'init' and 'halt' lines")
    return TwoCounterMachine(tuple(states), tuple(trans["inc1"]), tuple(trans["inc2"]),
                             tuple(trans["dec1"]), tuple(trans["dec2"]), init, halt)


def render_machine(m: TwoCounterMachine) -> str:
    lines = [f"state {q}" for q in m.states]
    lines += [f"init {m.q_init}", f"halt {m.q_halt}"]
    for kind, trans in m.by_kind():
        lines += [" ".join((kind,) + t) for t in trans]
    return "\n".join(lines) + "\n"
