"""Exact-rational probabilistic automata.

A :class:`Pa` is immutable once built.  Probabilities are :class:`fractions.Fraction`
values (always in lowest terms), transition rows are sparse and never carry zero
entries, and state identifiers are plain strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

Word = tuple  # tuple of letter tokens


class PaInputError(ValueError):
    """Malformed automaton, word or construction argument."""


class ContractError(RuntimeError):
    """An operation was called outside its precondition."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise PaInputError(f"floating point probability {value!r}; use an exact rational")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise PaInputError(f"not a rational: {value!r}") from exc


def _freeze_row(row: Mapping) -> Mapping[str, Fraction]:
    clean = {}
    for dst, p in row.items():
        p = as_fraction(p)
        if p != 0:
            clean[dst] = p
    return MappingProxyType(dict(sorted(clean.items())))


@dataclass(frozen=True, eq=False)
class Pa:
    """A probabilistic automaton ``(alphabet, states, transitions, initial, finals)``.

    ``transitions`` maps ``(state, letter)`` to a sparse distribution over states.
    Missing rows mean "no transition".  Row sums and the initial mass may be
    below one.
    """

    alphabet: tuple
    states: tuple
    transitions: Mapping[tuple, Mapping[str, Fraction]]
    initial: Mapping[str, Fraction]
    finals: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        states = tuple(self.states)
        if len(set(alphabet)) != len(alphabet):
            raise PaInputError("duplicate letter in alphabet")
        if len(set(states)) != len(states):
            raise PaInputError("duplicate state identifier")
        state_set = set(states)
        letter_set = set(alphabet)

        rows = {}
        for key, row in self.transitions.items():
            src, letter = key
            if src not in state_set:
                raise PaInputError(f"transition from unknown state {src!r}")
            if letter not in letter_set:
                raise PaInputError(f"transition on unknown letter {letter!r}")
            frozen = _freeze_row(row)
            for dst, p in frozen.items():
                if dst not in state_set:
                    raise PaInputError(f"transition into unknown state {dst!r}")
                if not 0 < p <= 1:
                    raise PaInputError(f"probability {p} of ({src}, {letter}, {dst}) outside (0,1]")
            if sum(frozen.values()) > 1:
                raise PaInputError(f"row ({src}, {letter}) sums to {sum(frozen.values())} > 1")
            if frozen:
                rows[(src, letter)] = frozen

        init = _freeze_row(self.initial)
        for q, p in init.items():
            if q not in state_set:
                raise PaInputError(f"initial mass on unknown state {q!r}")
            if not 0 < p <= 1:
                raise PaInputError(f"initial probability {p} of {q} outside (0,1]")
        if sum(init.values()) > 1:
            raise PaInputError(f"initial distribution sums to {sum(init.values())} > 1")

        finals = frozenset(self.finals)
        if not finals <= state_set:
            raise PaInputError(f"final states {sorted(finals - state_set)} not declared")

        order = {q: i for i, q in enumerate(states)}
        letter_order = {a: i for i, a in enumerate(alphabet)}
        rows = dict(sorted(rows.items(), key=lambda kv: (order[kv[0][0]], letter_order[kv[0][1]])))
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transitions", MappingProxyType(rows))
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "finals", finals)

    # structural equality: same alphabet, states (as sets) and maps
    def __eq__(self, other):
        if not isinstance(other, Pa):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and set(self.states) == set(other.states)
            and dict(self.transitions) == dict(other.transitions)
            and dict(self.initial) == dict(other.initial)
            and self.finals == other.finals
        )

    __hash__ = None

    def row(self, q: str, letter) -> Mapping[str, Fraction]:
        return self.transitions.get((q, letter), _EMPTY)

    def edges(self):
        """Yield every transition ``(src, letter, dst, probability)``."""
        for (src, letter), row in self.transitions.items():
            for dst, p in row.items():
                yield src, letter, dst, p

    def is_choice(self, src: str, letter) -> bool:
        """True when reading ``letter`` in ``src`` has more than one successor."""
        return len(self.row(src, letter)) > 1

    def check_word(self, word: Sequence) -> Word:
        word = tuple(word)
        letters = set(self.alphabet)
        for a in word:
            if a not in letters:
                raise PaInputError(f"letter {a!r} not in alphabet {list(self.alphabet)}")
        return word

    def __repr__(self):
        return f"Pa(|Σ|={len(self.alphabet)}, |Q|={len(self.states)}, |δ|={sum(len(r) for r in self.transitions.values())})"


_EMPTY: Mapping[str, Fraction] = MappingProxyType({})


def make_pa(alphabet, states, edges: Iterable, initial: Mapping, finals: Iterable) -> Pa:
    """Build a :class:`Pa` from ``(src, letter, dst, p)`` tuples."""
    rows: dict = {}
    for src, letter, dst, p in edges:
        row = rows.setdefault((src, letter), {})
        row[dst] = row.get(dst, Fraction(0)) + as_fraction(p)
    return Pa(tuple(alphabet), tuple(states), rows, dict(initial), frozenset(finals))


def evaluate(pa: Pa, word: Sequence) -> Fraction:
    """Acceptance probability of ``word`` by forward propagation."""
    word = pa.check_word(word)
    vec = dict(pa.initial)
    for letter in word:
        nxt: dict = {}
        for q, mass in vec.items():
            for r, p in pa.row(q, letter).items():
                nxt[r] = nxt.get(r, 0) + mass * p
        vec = nxt
        if not vec:
            break
    return sum((m for q, m in vec.items() if q in pa.finals), Fraction(0))


def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name = "_" + name
    return name


def weighted_sum(parts: Sequence) -> Pa:
    """Disjoint union of ``(weight, Pa)`` parts with scaled initial distributions.

    State ``q`` of the ``i``-th part becomes ``"{i}.{q}"``.
    """
    parts = [(as_fraction(d), a) for d, a in parts]
    if not parts:
        raise PaInputError("weighted_sum needs at least one part")
    alphabet = parts[0][1].alphabet
    for _, a in parts:
        if set(a.alphabet) != set(alphabet):
            raise PaInputError("weighted_sum parts have different alphabets")
    if any(d < 0 for d, _ in parts):
        raise PaInputError("negative weight")
    if sum(d for d, _ in parts) > 1:
        raise PaInputError(f"weights sum to {sum(d for d, _ in parts)} > 1")

    states, edges, initial, finals = [], [], {}, []
    for i, (d, a) in enumerate(parts):
        name = {q: f"{i}.{q}" for q in a.states}
        states.extend(name[q] for q in a.states)
        edges.extend((name[s], x, name[t], p) for s, x, t, p in a.edges())
        for q, p in a.initial.items():
            if d * p:
                initial[name[q]] = d * p
        finals.extend(name[q] for q in a.finals)
    return make_pa(alphabet, states, edges, initial, finals)


def complement(pa: Pa) -> Pa:
    """Complete ``pa`` with a sink state and swap final and non-final states."""
    sink = _fresh("bot", set(pa.states))
    states = list(pa.states) + [sink]
    edges = list(pa.edges())
    for q in pa.states:
        for a in pa.alphabet:
            missing = 1 - sum(pa.row(q, a).values())
            if missing:
                edges.append((q, a, sink, missing))
    edges.extend((sink, a, sink, 1) for a in pa.alphabet)
    initial = dict(pa.initial)
    rest = 1 - sum(initial.values())
    if rest:
        initial[sink] = rest
    finals = [q for q in states if q not in pa.finals]
    return make_pa(pa.alphabet, states, edges, initial, finals)


def reachable_states(pa: Pa) -> set:
    seen = set(pa.initial)
    stack = list(seen)
    while stack:
        q = stack.pop()
        for a in pa.alphabet:
            for r in pa.row(q, a):
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
    return seen


def coreachable_states(pa: Pa) -> set:
    back: dict = {}
    for s, _, t, _ in pa.edges():
        back.setdefault(t, set()).add(s)
    seen = set(pa.finals)
    stack = list(seen)
    while stack:
        q = stack.pop()
        for s in back.get(q, ()):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def trim(pa: Pa) -> Pa:
    """Drop states that are unreachable or cannot reach a final state."""
    keep = reachable_states(pa) & coreachable_states(pa)
    if keep == set(pa.states):
        return pa
    states = [q for q in pa.states if q in keep]
    edges = [(s, a, t, p) for s, a, t, p in pa.edges() if s in keep and t in keep]
    initial = {q: p for q, p in pa.initial.items() if q in keep}
    return make_pa(pa.alphabet, states, edges, initial, [q for q in pa.finals if q in keep])


def rename_states(pa: Pa, mapping: Mapping[str, str]) -> Pa:
    edges = [(mapping[s], a, mapping[t], p) for s, a, t, p in pa.edges()]
    return make_pa(
        pa.alphabet,
        [mapping[q] for q in pa.states],
        edges,
        {mapping[q]: p for q, p in pa.initial.items()},
        [mapping[q] for q in pa.finals],
    )


def constant_pa(alphabet, value) -> Pa:
    """Single-state unambiguous automaton computing the constant ``value``."""
    value = as_fraction(value)
    if not 0 <= value <= 1:
        raise PaInputError("constant must lie in [0,1]")
    edges = [("c", a, "c", 1) for a in alphabet]
    return make_pa(alphabet, ["c"], edges, {"c": value} if value else {}, ["c"])


def halving_after_b() -> Pa:
    """The unambiguous automaton mapping ``a^n b Σ*`` to ``2^-n`` and ``a*`` to 0."""
    half = Fraction(1, 2)
    return make_pa(
        ("a", "b"),
        ("q1", "q2"),
        [("q1", "a", "q1", half), ("q1", "b", "q2", 1), ("q2", "a", "q2", 1), ("q2", "b", "q2", 1)],
        {"q1": 1},
        ["q2"],
    )


def halving_complement() -> Pa:
    """Complement of :func:`halving_after_b`, drawn with an explicit sink ``qt``."""
    half = Fraction(1, 2)
    edges = [
        ("q1", "a", "q1", half),
        ("q1", "a", "qt", half),
        ("q1", "b", "q2", 1),
        ("q2", "a", "q2", 1),
        ("q2", "b", "q2", 1),
        ("qt", "a", "qt", 1),
        ("qt", "b", "qt", 1),
    ]
    return make_pa(("a", "b"), ("q1", "q2", "qt"), edges, {"q1": 1}, ["q1", "qt"])
