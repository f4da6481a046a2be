"""Brute-force ground truth: explicit run enumeration and bounded sweeps.

Everything here deliberately avoids the main code paths (no vector propagation,
no product constructions) so it can serve as an independent check in tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .core import Pa


@dataclass(frozen=True)
class Run:
    """A run given by its visited states; ``len(states) == len(word) + 1``."""

    states: tuple
    word: tuple

    @property
    def transitions(self):
        return tuple(zip(self.states, self.word, self.states[1:]))

    def __len__(self):
        return len(self.word)


@dataclass
class SweepReport:
    bound: int
    witnesses: list = field(default_factory=list)
    extremal: object = None

    @property
    def found(self) -> bool:
        return bool(self.witnesses)


def words_upto(alphabet: Sequence, max_len: int) -> Iterator[tuple]:
    """All words of length ``<= max_len`` in length-lexicographic order."""
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def enumerate_runs(pa: Pa, word: Sequence, accepting_only: bool = True) -> list:
    """Every run over ``word`` starting in the initial support (DFS)."""
    word = pa.check_word(word)
    out = []

    def dfs(path):
        i = len(path) - 1
        if i == len(word):
            if not accepting_only or path[-1] in pa.finals:
                out.append(Run(tuple(path), word))
            return
        for nxt in pa.row(path[-1], word[i]):
            path.append(nxt)
            dfs(path)
            path.pop()

    for q0 in pa.initial:
        dfs([q0])
    return out


def count_accepting_runs(pa: Pa, word: Sequence) -> int:
    return len(enumerate_runs(pa, word))


def run_probability(pa: Pa, run: Run, with_initial: bool = True) -> Fraction:
    p = pa.initial.get(run.states[0], Fraction(0)) if with_initial else Fraction(1)
    for src, a, dst in run.transitions:
        p *= pa.row(src, a).get(dst, 0)
    return p


def value_by_runs(pa: Pa, word: Sequence) -> Fraction:
    return sum((run_probability(pa, r) for r in enumerate_runs(pa, word)), Fraction(0))


def choice_count(pa: Pa, run: Run) -> int:
    """Number of non-deterministic choices made along ``run``.

    Picking the initial state counts as one choice when the initial support has
    at least two states.
    """
    m = 1 if len(pa.initial) >= 2 else 0
    return m + sum(1 for src, a, _ in run.transitions if pa.is_choice(src, a))


def choice_profile(pa: Pa, word: Sequence) -> dict:
    """Map ``m`` to the number of accepting runs using exactly ``m`` choices."""
    profile: dict = {}
    for run in enumerate_runs(pa, word):
        m = choice_count(pa, run)
        profile[m] = profile.get(m, 0) + 1
    return dict(sorted(profile.items()))


def brute_force_containment(a: Pa, b: Pa, max_len: int) -> SweepReport:
    """Check ``[[a]](w) <= [[b]](w)`` on every word up to ``max_len``.

    ``extremal`` is the largest observed ``[[a]](w) - [[b]](w)``.
    """
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError("automata over different alphabets")
    report = SweepReport(bound=max_len)
    worst = None
    for w in words_upto(a.alphabet, max_len):
        diff = value_by_runs(a, w) - value_by_runs(b, w)
        if worst is None or diff > worst:
            worst = diff
        if diff > 0:
            report.witnesses.append(w)
    report.extremal = worst
    return report


def box_points(n: int, radius: int) -> Iterator[tuple]:
    """Integer points of the max-norm box, by increasing norm then lexicographically."""
    if n == 0:
        yield ()
        return
    yield (0,) * n
    for r in range(1, radius + 1):
        for x in itertools.product(range(-r, r + 1), repeat=n):
            if max(abs(v) for v in x) == r:
                yield x


def brute_force_ipexp(inst, radius: int) -> SweepReport:
    """All integer ``x`` with ``|x|_inf <= radius``, ``f(x) < 1`` and ``Mx < c``."""
    report = SweepReport(bound=radius)
    best = None
    for x in box_points(inst.n, radius):
        if any(sum(mij * xj for mij, xj in zip(row, x)) >= ci for row, ci in zip(inst.M, inst.c)):
            continue
        val = _eval_terms(inst.f.r, inst.f.s, x)
        if best is None or val < best:
            best = val
        if val < 1:
            report.witnesses.append(x)
    report.extremal = best
    return report


def _eval_terms(r, s, x) -> Fraction:
    # independent of ipexp.eval_expsum on purpose
    total = Fraction(0)
    for ri, si in zip(r, s):
        term = Fraction(ri)
        for base, e in zip(si, x):
            term *= Fraction(base) ** e
        total += term
    return total


def value_sweep(pas: Sequence[Pa], max_len: int) -> Iterator[tuple]:
    """``(word, [value of each automaton])`` for every word up to ``max_len``.

    Words come in depth-first order and share the work of their prefixes: the
    weight of all runs ending in each state is carried down the word tree, so
    long sweeps over several automata stay affordable.
    """
    alphabet = pas[0].alphabet
    if any(set(p.alphabet) != set(alphabet) for p in pas):
        raise ValueError("automata over different alphabets")

    def value(pa, weights):
        return sum((w for q, w in weights.items() if q in pa.finals), Fraction(0))

    def step(pa, weights, a):
        out: dict = {}
        for q, w in weights.items():
            for t, p in pa.row(q, a).items():
                out[t] = out.get(t, Fraction(0)) + w * p
        return out

    stack = [((), [dict(p.initial) for p in pas])]
    while stack:
        word, weights = stack.pop()
        yield word, [value(p, w) for p, w in zip(pas, weights)]
        if len(word) < max_len:
            for a in reversed(alphabet):
                stack.append((word + (a,), [step(p, w, a) for p, w in zip(pas, weights)]))
