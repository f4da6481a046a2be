"""Line-based text format for automata, and word syntax used on the command line.

::

    # comment
    alphabet a b
    state q1
    state q2
    initial q1 1/1
    final q2
    trans q1 a q1 1/2
    trans q1 b q2 1/1
"""

from __future__ import annotations

from fractions import Fraction

from .core import Pa, PaInputError, make_pa
from .ipexp import fmt_rat


class PaSyntaxError(PaInputError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line, self.column = line, column


def _tokens(raw: str):
    """``(column, token)`` pairs of a line with its comment removed."""
    body = raw.split("#", 1)[0]
    out, col, i = [], 0, 0
    while i < len(body):
        if body[i].isspace():
            i += 1
            continue
        col = i
        while i < len(body) and not body[i].isspace():
            i += 1
        out.append((col + 1, body[col:i]))
    return out


def _parse_rat(tok: str, line: int, col: int) -> Fraction:
    if "." in tok or "e" in tok.lower():
        raise PaSyntaxError(f"{tok!r} is not an exact rational (use num/den)", line, col)
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise PaSyntaxError(f"{tok!r} is not a rational", line, col) from None


_ARITY = {"alphabet": None, "state": 1, "initial": 2, "final": 1, "trans": 4}


def parse_pa(text: str) -> Pa:
    alphabet = None
    states, initial, finals, edges = [], {}, [], []
    where: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw)
        if not toks:
            continue
        (kcol, kw), args = toks[0], toks[1:]
        if kw not in _ARITY:
            raise PaSyntaxError(f"unknown keyword {kw!r}", lineno, kcol)
        arity = _ARITY[kw]
        if arity is not None and len(args) != arity:
            raise PaSyntaxError(f"'{kw}' takes {arity} argument(s), got {len(args)}", lineno, kcol)
        if kw == "alphabet":
            if alphabet is not None:
                raise PaSyntaxError("alphabet declared twice", lineno, kcol)
            if not args:
                raise PaSyntaxError("empty alphabet", lineno, kcol)
            alphabet = [t for _, t in args]
            if len(set(alphabet)) != len(alphabet):
                raise PaSyntaxError("duplicate letter in alphabet", lineno, kcol)
        elif kw == "state":
            col, q = args[0]
            if q in where.setdefault("state", {}):
                raise PaSyntaxError(f"state {q!r} declared twice", lineno, col)
            where["state"][q] = lineno
            states.append(q)
        elif kw == "initial":
            (col, q), (pcol, p) = args
            if q in initial:
                raise PaSyntaxError(f"initial probability of {q!r} given twice", lineno, col)
            initial[q] = (_parse_rat(p, lineno, pcol), lineno, col, pcol)
        elif kw == "final":
            col, q = args[0]
            finals.append((q, lineno, col))
        else:
            (c1, src), (c2, letter), (c3, dst), (c4, p) = args
            edges.append((src, letter, dst, _parse_rat(p, lineno, c4), lineno, (c1, c2, c3, c4)))
    if alphabet is None:
        raise PaSyntaxError("missing 'alphabet' line" + ("" if text.strip() else " (empty file)"))
    declared = set(states)
    letters = set(alphabet)
    rows: dict = {}
    for src, letter, dst, p, lineno, cols in edges:
        if src not in declared:
            raise PaSyntaxError(f"unknown state {src!r}", lineno, cols[0])
        if letter not in letters:
            raise PaSyntaxError(f"letter {letter!r} not in alphabet", lineno, cols[1])
        if dst not in declared:
            raise PaSyntaxError(f"unknown state {dst!r}", lineno, cols[2])
        if not 0 < p <= 1:
            raise PaSyntaxError(f"probability {fmt_rat(p)} outside (0,1]", lineno, cols[3])
        key = (src, letter)
        if dst in rows.setdefault(key, {}):
            raise PaSyntaxError(f"duplicate transition {src} {letter} {dst}", lineno, cols[2])
        rows[key][dst] = p
        if sum(rows[key].values()) > 1:
            raise PaSyntaxError(f"row ({src}, {letter}) sums to {fmt_rat(sum(rows[key].values()))} > 1",
                                lineno, cols[3])
    for q, (p, lineno, col, pcol) in initial.items():
        if q not in declared:
            raise PaSyntaxError(f"unknown state {q!r}", lineno, col)
        if not 0 < p <= 1:
            raise PaSyntaxError(f"probability {fmt_rat(p)} outside (0,1]", lineno, pcol)
    if sum(v[0] for v in initial.values()) > 1:
        last = max(v[1] for v in initial.values())
        raise PaSyntaxError("initial distribution sums to more than 1", last, 1)
    for q, lineno, col in finals:
        if q not in declared:
            raise PaSyntaxError(f"unknown state {q!r}", lineno, col)
    return make_pa(alphabet, states, [e[:4] for e in edges],
                   {q: v[0] for q, v in initial.items()}, [q for q, _, _ in finals])


def render_pa(pa: Pa) -> str:
    lines = ["alphabet " + " ".join(pa.alphabet)]
    lines += [f"state {q}" for q in pa.states]
    lines += [f"initial {q} {fmt_rat(p)}" for q, p in pa.initial.items()]
    lines += [f"final {q}" for q in pa.states if q in pa.finals]
    lines += [f"trans {s} {a} {t} {fmt_rat(p)}" for s, a, t, p in pa.edges()]
    return "\n".join(lines) + "\n"


def parse_word(text: str, alphabet) -> tuple:
    """Read a word: letters separated by spaces or commas, or run together when
    every letter is a single character.  ``""`` and ``ε`` denote the empty word."""
    text = text.strip()
    if text in ("", "ε", "eps"):
        return ()
    letters = set(alphabet)
    if any(ch.isspace() or ch == "," for ch in text):
        word = tuple(t for t in text.replace(",", " ").split())
    elif text in letters:
        word = (text,)
    elif all(ch in letters for ch in text):
        word = tuple(text)
    else:
        word = (text,)
    bad = [a for a in word if a not in letters]
    if bad:
        raise PaInputError(f"letter {bad[0]!r} not in alphabet {list(alphabet)}")
    return word


def render_word(word) -> str:
    return " ".join(word) if word else "ε"
