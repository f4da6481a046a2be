"""Degree of ambiguity of the automaton underlying a PA.

The classification uses the classical structural patterns on products of the
automaton with itself:

* two distinct runs from a state back to itself on one word (exponential);
* states ``p != q`` and a word looping on ``p``, on ``q`` and leading from ``p``
  to ``q`` (the pattern separating finite from polynomial ambiguity).  Chains of
  that pattern give the polynomial degree.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .core import ContractError, Pa
from .graphs import reach, tarjan_scc


@dataclass(frozen=True)
class Nfa:
    alphabet: tuple
    states: tuple
    transitions: frozenset  # of (src, letter, dst)
    initial: frozenset
    finals: frozenset

    def succ_map(self) -> dict:
        out: dict = {q: {} for q in self.states}
        for s, a, t in sorted(self.transitions, key=_edge_key(self)):
            out[s].setdefault(a, []).append(t)
        return out

    def graph_succ(self) -> dict:
        out: dict = {q: set() for q in self.states}
        for s, _, t in self.transitions:
            out[s].add(t)
        return out

    def accepts(self, word) -> bool:
        cur = set(self.initial)
        succ = self.succ_map()
        for a in word:
            cur = {t for q in cur for t in succ[q].get(a, ())}
        return bool(cur & self.finals)

    def is_empty(self) -> bool:
        succ = self.graph_succ()
        return not (reach(self.initial, lambda q: succ[q]) & self.finals)


def _edge_key(nfa: Nfa):
    order = {q: i for i, q in enumerate(nfa.states)}
    lorder = {a: i for i, a in enumerate(nfa.alphabet)}
    return lambda e: (order[e[0]], lorder[e[1]], order[e[2]])


class Tag(enum.Enum):
    UNAMBIGUOUS = "unambiguous"
    FINITE = "finite"
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class AmbiguityClass:
    tag: Tag
    finite_degree: Optional[int] = None
    poly_degree: Optional[int] = None

    @property
    def is_finite(self) -> bool:
        return self.tag in (Tag.UNAMBIGUOUS, Tag.FINITE)

    @property
    def is_polynomial(self) -> bool:
        return self.tag is not Tag.EXPONENTIAL

    def growth_degree(self) -> Optional[int]:
        """Degree of the polynomial bounding the run count (0 when bounded)."""
        if self.is_finite:
            return 0
        return self.poly_degree

    def __str__(self):
        if self.tag is Tag.FINITE:
            return f"finite k={self.finite_degree}"
        if self.tag is Tag.POLYNOMIAL:
            return f"polynomial degree={self.poly_degree}"
        return self.tag.value


def underlying_nfa(pa: Pa) -> Nfa:
    return Nfa(
        alphabet=pa.alphabet,
        states=pa.states,
        transitions=frozenset((s, a, t) for s, a, t, _ in pa.edges()),
        initial=frozenset(pa.initial),
        finals=pa.finals,
    )


def trim_nfa(nfa: Nfa) -> Nfa:
    fwd = nfa.graph_succ()
    back: dict = {q: set() for q in nfa.states}
    for s, _, t in nfa.transitions:
        back[t].add(s)
    keep = reach(nfa.initial, lambda q: fwd[q]) & reach(nfa.finals, lambda q: back[q])
    return Nfa(
        nfa.alphabet,
        tuple(q for q in nfa.states if q in keep),
        frozenset(e for e in nfa.transitions if e[0] in keep and e[2] in keep),
        frozenset(nfa.initial & keep),
        frozenset(nfa.finals & keep),
    )


def _pair_succ(succ):
    def step(pq):
        p, q = pq
        out = []
        for a, ps in succ[p].items():
            qs = succ[q].get(a)
            if qs:
                out.extend((p2, q2) for p2 in ps for q2 in qs)
        return out

    return step


def _is_unambiguous(nfa: Nfa, succ) -> bool:
    step = _pair_succ(succ)
    start = [(p, q) for p in nfa.initial for q in nfa.initial]
    fwd = reach(start, step)
    back: dict = {}
    for v in fwd:
        for w in step(v):
            back.setdefault(w, set()).add(v)
    useful = reach([(p, q) for (p, q) in fwd if p in nfa.finals and q in nfa.finals],
                   lambda v: back.get(v, ()))
    return all(p == q for p, q in useful)


def _has_eda(nfa: Nfa, succ) -> bool:
    step = _pair_succ(succ)
    nodes = [(p, q) for p in nfa.states for q in nfa.states]
    for comp in tarjan_scc(nodes, step):
        if len(comp) > 1 and any(p == q for p, q in comp) and any(p != q for p, q in comp):
            return True
    return False


def _ida_pairs(nfa: Nfa, succ) -> list:
    """Pairs ``(p, q)`` exhibiting the finite-vs-polynomial pattern (no EDA assumed)."""
    gsucc = nfa.graph_succ()
    comps = tarjan_scc(nfa.states, lambda q: gsucc[q])
    comp_of = {}
    for i, comp in enumerate(comps):
        for q in comp:
            comp_of[q] = i
    cyclic = {q for q in nfa.states
              if len(comps[comp_of[q]]) > 1 or q in gsucc[q]}
    reach_from = {q: reach([q], lambda v: gsucc[v]) for q in nfa.states}

    pairs = []
    for p in nfa.states:
        if p not in cyclic:
            continue
        for q in nfa.states:
            if q == p or q not in cyclic or q not in reach_from[p] or comp_of[q] == comp_of[p]:
                continue
            x_ok = set(comps[comp_of[p]])
            z_ok = set(comps[comp_of[q]])
            y_ok = {v for v in reach_from[p] if q in reach_from[v]}
            if _triple_reaches(succ, (p, p, q), (p, q, q), x_ok, y_ok, z_ok):
                pairs.append((p, q))
    return pairs


def _triple_reaches(succ, start, goal, x_ok, y_ok, z_ok) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        x, y, z = queue.popleft()
        for a, xs in succ[x].items():
            ys = succ[y].get(a)
            zs = succ[z].get(a)
            if not ys or not zs:
                continue
            for x2 in xs:
                if x2 not in x_ok:
                    continue
                for y2 in ys:
                    if y2 not in y_ok:
                        continue
                    for z2 in zs:
                        if z2 not in z_ok:
                            continue
                        v = (x2, y2, z2)
                        if v == goal:
                            return True
                        if v not in seen:
                            seen.add(v)
                            queue.append(v)
    return False


def _longest_ida_chain(nfa: Nfa, pairs) -> int:
    gsucc = nfa.graph_succ()
    reach_from = {q: reach([q], lambda v: gsucc[v]) for q in nfa.states}
    memo: dict = {}

    def longest(pair):
        if pair not in memo:
            _, q = pair
            memo[pair] = 1 + max(
                (longest(nxt) for nxt in pairs if nxt != pair and nxt[0] in reach_from[q]),
                default=0,
            )
        return memo[pair]

    return max((longest(pr) for pr in pairs), default=0)


def _weak_components(nfa: Nfa) -> list:
    adj: dict = {q: set() for q in nfa.states}
    for s, _, t in nfa.transitions:
        adj[s].add(t)
        adj[t].add(s)
    seen: set = set()
    pieces = []
    for q in nfa.states:
        if q in seen:
            continue
        comp = reach([q], lambda v: adj[v])
        seen |= comp
        pieces.append(Nfa(
            nfa.alphabet,
            tuple(s for s in nfa.states if s in comp),
            frozenset(e for e in nfa.transitions if e[0] in comp),
            frozenset(nfa.initial & comp),
            frozenset(nfa.finals & comp),
        ))
    return pieces


def classify(nfa: Nfa) -> AmbiguityClass:
    """Strictest ambiguity class of ``nfa`` (trimmed internally)."""
    nfa = trim_nfa(nfa)
    if not nfa.states:
        return AmbiguityClass(Tag.UNAMBIGUOUS, finite_degree=1)
    # the patterns live inside one connected piece, so look at each separately
    degree = 0
    for piece in _weak_components(nfa):
        succ = piece.succ_map()
        if _has_eda(piece, succ):
            return AmbiguityClass(Tag.EXPONENTIAL)
        pairs = _ida_pairs(piece, succ)
        if pairs:
            degree = max(degree, _longest_ida_chain(piece, pairs))
    if degree:
        return AmbiguityClass(Tag.POLYNOMIAL, poly_degree=degree)
    succ = nfa.succ_map()
    if _is_unambiguous(nfa, succ):
        return AmbiguityClass(Tag.UNAMBIGUOUS, finite_degree=1)
    return AmbiguityClass(Tag.FINITE, finite_degree=_max_accepting_count(nfa))


def classify_pa(pa: Pa) -> AmbiguityClass:
    return classify(underlying_nfa(pa))


def _ws_bound(n: int) -> int:
    # bound on the degree of a finitely ambiguous automaton with n states
    return max(1, 5 ** ((n + 1) // 2) * n ** n)


def _count_step(nfa: Nfa, succ, vec, letter, cap):
    idx = {q: i for i, q in enumerate(nfa.states)}
    out = [0] * len(vec)
    for i, c in enumerate(vec):
        if c:
            for t in succ[nfa.states[i]].get(letter, ()):
                j = idx[t]
                out[j] = min(cap, out[j] + c)
    return tuple(out)


def _count_automaton(nfa: Nfa, cap: int):
    """Explore run-count vectors (saturated at ``cap``) reachable from the start."""
    succ = nfa.succ_map()
    start = tuple(1 if q in nfa.initial else 0 for q in nfa.states)
    order = [start]
    delta = {}
    seen = {start}
    queue = deque([start])
    while queue:
        vec = queue.popleft()
        for a in nfa.alphabet:
            nxt = _count_step(nfa, succ, vec, a, cap)
            delta[(vec, a)] = nxt
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return start, order, delta


def _accepting_count(nfa: Nfa, vec, cap) -> int:
    return min(cap, sum(c for q, c in zip(nfa.states, vec) if q in nfa.finals))


def _max_accepting_count(nfa: Nfa) -> int:
    if not nfa.states:
        return 1
    cap = _ws_bound(len(nfa.states)) + 1
    _, order, _ = _count_automaton(nfa, cap)
    best = max(_accepting_count(nfa, v, cap) for v in order)
    if best >= cap:
        raise ContractError("run counts exceed the finite-ambiguity bound")
    return max(best, 1)


def max_finite_ambiguity(nfa: Nfa) -> int:
    """Least ``k`` such that every word has at most ``k`` accepting runs."""
    cls = classify(nfa)
    if not cls.is_finite:
        raise ContractError(f"automaton is not finitely ambiguous ({cls})")
    return _max_accepting_count(trim_nfa(nfa))


@dataclass(frozen=True)
class CountDfa:
    """Deterministic automaton over saturated run-count vectors.

    ``vectors[i]`` is the count vector of state ``"v{i}"``; ``counts[i]`` its
    number of accepting runs (saturated at ``cap``).
    """

    nfa: Nfa
    cap: int
    vectors: tuple
    delta: dict  # (index, letter) -> index
    counts: tuple

    def run(self, word) -> int:
        i = 0
        for a in word:
            i = self.delta[(i, a)]
        return i


def count_dfa(pa: Pa, cap: Optional[int] = None) -> CountDfa:
    """Run-count tracking automaton of the trimmed ``pa``."""
    nfa = trim_nfa(underlying_nfa(pa))
    if cap is None:
        cap = max_finite_ambiguity(nfa) + 1
    start, order, delta = _count_automaton(nfa, cap)
    index = {v: i for i, v in enumerate(order)}
    table = {(index[v], a): index[w] for (v, a), w in delta.items()}
    counts = tuple(_accepting_count(nfa, v, cap) for v in order)
    return CountDfa(nfa, cap, tuple(order), table, counts)


def fixed_ambiguity_language(pa: Pa, i: int) -> Nfa:
    """Deterministic automaton for the words with exactly ``i`` accepting runs."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    dfa = count_dfa(pa)
    states = tuple(f"v{j}" for j in range(len(dfa.vectors)))
    edges = frozenset((f"v{j}", a, f"v{t}") for (j, a), t in dfa.delta.items())
    finals = frozenset(f"v{j}" for j, c in enumerate(dfa.counts) if c == i)
    return Nfa(pa.alphabet, states, edges, frozenset({"v0"}), finals)
