"""Simple cycles, spines and the translation of containment into exponential sums.

A *spine* is a short run; every run is a spine with simple cycles injected into
it.  For a pair of finitely ambiguous automata the synchronized product built by
:func:`build_product` has exactly the accepting runs that record all accepting
runs of both automata on a word, so each accepting spine of that product yields
one :class:`DeltaTuple` of exponential-sum coefficients.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .ambiguity import Nfa, count_dfa, max_finite_ambiguity, underlying_nfa
from .core import Pa, PaInputError, trim
from .graphs import reach, tarjan_scc
from .oracle import Run

DEFAULT_MAX_SPINES = 100_000
DEFAULT_MAX_PRODUCT_STATES = 1_000_000


class BudgetExceeded(RuntimeError):
    """A configured enumeration budget ran out; ``partial`` holds what was built."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def scc_partition(nfa: Nfa) -> list:
    """Strongly connected components of the letter-free transition graph."""
    succ = nfa.graph_succ()
    order = {q: i for i, q in enumerate(nfa.states)}
    comps = tarjan_scc(nfa.states, lambda q: sorted(succ[q], key=order.get))
    return sorted((sorted(c, key=order.get) for c in comps), key=lambda c: order[c[0]])


# -- simple cycles ---------------------------------------------------------------

def periods(host: Nfa, stateset) -> list:
    """All simple cycles using only states of ``stateset``, as :class:`Run` objects.

    A cycle is a run, so its rotations (different first states) are distinct
    cycles.  Output order is deterministic: by first state, then lexicographic in
    the host's state and letter order.
    """
    allowed = set(stateset)
    if not allowed:
        return []
    order = {q: i for i, q in enumerate(host.states)}
    lorder = {a: i for i, a in enumerate(host.alphabet)}
    succ: dict = {}
    for s, a, t in host.transitions:
        if s in allowed and t in allowed:
            succ.setdefault(s, []).append((a, t))
    for s in succ:
        succ[s].sort(key=lambda e: (lorder[e[0]], order[e[1]]))

    cycles = []
    for start in sorted(allowed, key=order.get):
        states, word, on_path = [start], [], {start}

        def dfs(v):
            for a, t in succ.get(v, ()):
                if t == start:
                    cycles.append(Run(tuple(states) + (start,), tuple(word) + (a,)))
                elif t not in on_path:
                    states.append(t)
                    word.append(a)
                    on_path.add(t)
                    dfs(t)
                    on_path.discard(t)
                    word.pop()
                    states.pop()

        dfs(start)
    return cycles


def inject(run: Run, pos: int, cycle: Run) -> Run:
    """Insert ``cycle`` at position ``pos`` (where ``run`` visits the cycle's first state)."""
    if run.states[pos] != cycle.states[0]:
        raise ValueError("cycle does not start at the injection point")
    return Run(run.states[:pos] + cycle.states + run.states[pos + 1:],
               run.word[:pos] + cycle.word + run.word[pos:])


def inject_counts(spine: Run, cycles: Sequence[Run], counts: Sequence[int]) -> Run:
    """Inject ``counts[j]`` copies of ``cycles[j]`` at each cycle's first visit."""
    run = spine
    for cyc, k in zip(cycles, counts):
        if k < 0:
            raise ValueError("negative cycle count")
        if not k:
            continue
        pos = run.states.index(cyc.states[0])
        block = cyc
        for _ in range(k - 1):
            block = inject(block, len(block.word), cyc)
        run = inject(run, pos, block)
    return run


def _simple_cycle_factors(states):
    """``(i, j)`` with ``states[i] == states[j]`` and distinct interior states."""
    out = []
    last: dict = {}
    for j, v in enumerate(states):
        i = last.get(v)
        if i is not None:
            interior = states[i + 1:j]
            if len(set(interior)) == len(interior):
                out.append((i, j))
        last[v] = j
    return out


def _removable(states, i, j, occ) -> bool:
    return all(occ[s] >= 2 for s in states[i + 1:j])


def _occurrences(states) -> dict:
    occ: dict = {}
    for s in states:
        occ[s] = occ.get(s, 0) + 1
    return occ


def is_irreducible(states) -> bool:
    """No simple-cycle factor can be cut out without losing a state."""
    occ = _occurrences(states)
    return not any(_removable(states, i, j, occ) for i, j in _simple_cycle_factors(states))


@dataclass
class Decomposition:
    spine: Run
    cycles: list  # distinct simple cycles with positive count, in first-removal order
    sigma: dict  # cycle -> count
    log: list = field(default_factory=list)  # (position, cycle) in removal order

    def reconstruct(self) -> Run:
        run = self.spine
        for pos, cyc in reversed(self.log):
            run = inject(run, pos, cyc)
        return run


def simple_cycle_decomposition(run: Run, irreducible: bool = False) -> Decomposition:
    """Peel simple cycles whose removal keeps the state set.

    Peeling stops as soon as the run is shorter than ``|Q(run)|**2`` or, with
    ``irreducible=True``, once no simple cycle can be removed at all.
    """
    states, word = list(run.states), list(run.word)
    nq = len(set(states))
    log = []
    while irreducible or len(word) >= nq * nq:
        occ = _occurrences(states)
        for i, j in _simple_cycle_factors(states):
            if _removable(states, i, j, occ):
                break
        else:
            if not irreducible:
                raise AssertionError("no removable simple cycle in a long run")
            break
        cyc = Run(tuple(states[i:j + 1]), tuple(word[i:j]))
        log.append((i, cyc))
        del states[i + 1:j + 1]
        del word[i:j]
    sigma: dict = {}
    cycles = []
    for _, cyc in log:
        if cyc not in sigma:
            cycles.append(cyc)
            sigma[cyc] = 0
        sigma[cyc] += 1
    spine = Run(tuple(states), tuple(word))
    assert len(spine.word) < max(1, len(set(spine.states))) ** 2 or not spine.word
    return Decomposition(spine, cycles, sigma, log)


# -- synchronized product ----------------------------------------------------------

def _restricted_growth(labels) -> tuple:
    seen: dict = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def _refine(blocks, new_states) -> tuple:
    return _restricted_growth(zip(blocks, new_states))


@dataclass
class Product:
    """The product of the two count automata, ``k`` copies of A, ``l`` of B and
    the run-identity trackers.

    A state is ``(dfa_a, dfa_b, a_states, b_states, a_blocks, b_blocks)``.
    Edges carry the per-copy transition probabilities.
    """

    a: Pa
    b: Pa
    k: int
    l: int
    states: list
    initial: dict  # state -> (per-copy A initial probs, per-copy B initial probs)
    edges: dict  # state -> list of (letter, dst, a_probs, b_probs)
    accepting: set

    @property
    def alphabet(self):
        return self.a.alphabet

    def as_nfa(self) -> Nfa:
        names = {s: i for i, s in enumerate(self.states)}
        return Nfa(
            self.alphabet,
            tuple(range(len(self.states))),
            frozenset((names[s], a, names[t]) for s in self.states for a, t, _, _ in self.edges[s]),
            frozenset(names[s] for s in self.initial),
            frozenset(names[s] for s in self.accepting),
        )

    def edge(self, src, letter, dst):
        for a, t, pa_, pb_ in self.edges[src]:
            if a == letter and t == dst:
                return pa_, pb_
        raise KeyError((src, letter, dst))

    def weights(self, run: Run, with_initial: bool):
        """Per-copy probability products along ``run``."""
        if with_initial:
            ia, ib = self.initial[run.states[0]]
            wa, wb = list(ia), list(ib)
        else:
            wa, wb = [Fraction(1)] * self.k, [Fraction(1)] * self.l
        for src, letter, dst in run.transitions:
            pa_, pb_ = self.edge(src, letter, dst)
            wa = [x * y for x, y in zip(wa, pa_)]
            wb = [x * y for x, y in zip(wb, pb_)]
        return tuple(wa), tuple(wb)


def build_product(a: Pa, b: Pa, k: int, l: int, *, dfa_a=None, dfa_b=None,
                  max_states: int = DEFAULT_MAX_PRODUCT_STATES) -> Product:
    """Product whose accepting runs on ``w`` are the tuples of ``k`` distinct
    accepting runs of ``a`` and ``l`` of ``b``, when those are all of them.

    Only states that are reachable and can reach an accepting state are kept.
    """
    if set(a.alphabet) != set(b.alphabet):
        raise PaInputError("automata over different alphabets")
    a, b = trim(a), trim(b)
    dfa_a = dfa_a or count_dfa(a)
    dfa_b = dfa_b or count_dfa(b)
    if k >= dfa_a.cap or l >= dfa_b.cap:
        raise PaInputError("requested run count exceeds the automaton's ambiguity")

    def init_choices(pa, n):
        return itertools.product(sorted(pa.initial), repeat=n)

    initial = {}
    for qa in init_choices(a, k):
        for qb in init_choices(b, l):
            s = (0, 0, qa, qb, _restricted_growth(qa), _restricted_growth(qb))
            initial[s] = (tuple(a.initial[q] for q in qa), tuple(b.initial[q] for q in qb))

    def moves(pa, qs, letter):
        rows = [sorted(pa.row(q, letter).items()) for q in qs]
        return itertools.product(*rows)

    edges: dict = {}
    seen = set(initial)
    queue = deque(sorted(initial, key=repr))
    order = list(queue)
    while queue:
        s = queue.popleft()
        da, db, qa, qb, ba, bb = s
        out = []
        for letter in a.alphabet:
            na = dfa_a.delta[(da, letter)]
            nb = dfa_b.delta[(db, letter)]
            for ma in moves(a, qa, letter):
                ta = tuple(t for t, _ in ma)
                pa_ = tuple(p for _, p in ma)
                for mb in moves(b, qb, letter):
                    tb = tuple(t for t, _ in mb)
                    pb_ = tuple(p for _, p in mb)
                    t = (na, nb, ta, tb, _refine(ba, ta), _refine(bb, tb))
                    out.append((letter, t, pa_, pb_))
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
                        queue.append(t)
                        if len(seen) > max_states:
                            raise BudgetExceeded(f"product exceeds {max_states} states")
        edges[s] = out

    def is_accepting(s):
        da, db, qa, qb, ba, bb = s
        return (dfa_a.counts[da] == k and dfa_b.counts[db] == l
                and all(q in a.finals for q in qa) and all(q in b.finals for q in qb)
                and len(set(ba)) == k and len(set(bb)) == l)

    accepting = {s for s in order if is_accepting(s)}
    back: dict = {}
    for s, out in edges.items():
        for _, t, _, _ in out:
            back.setdefault(t, set()).add(s)
    useful = reach(accepting, lambda v: back.get(v, ()))
    states = [s for s in order if s in useful]
    edges = {s: [e for e in edges[s] if e[1] in useful] for s in states}
    return Product(a, b, k, l, states, {s: v for s, v in initial.items() if s in useful},
                   edges, accepting & useful)


# -- translation -------------------------------------------------------------------

@dataclass(frozen=True)
class ExpSumValueSpec:
    """``x -> sum_i p_i * prod_j q[i][j] ** x_j``; empty ``p`` means the constant 0."""

    p: tuple
    q: tuple

    def __call__(self, x) -> Fraction:
        total = Fraction(0)
        for pi, qi in zip(self.p, self.q):
            term = pi
            for base, e in zip(qi, x):
                term *= base ** e
            total += term
        return total


@dataclass(frozen=True, eq=False)
class DeltaTuple:
    """Coefficients ``(p, q_1..q_k', r, s_1..s_l')`` of one accepting spine.

    ``spine`` and ``cycles`` live in the product automaton; they let a solution
    ``x`` be turned back into a word.
    """

    k: int
    l: int
    p: tuple
    q: tuple
    r: tuple
    s: tuple
    spine: Run
    cycles: tuple

    @property
    def n(self) -> int:
        return len(self.cycles)

    @property
    def lhs(self) -> ExpSumValueSpec:
        return ExpSumValueSpec(self.p, self.q)

    @property
    def rhs(self) -> ExpSumValueSpec:
        return ExpSumValueSpec(self.r, self.s)

    def holds_at(self, x) -> bool:
        return self.lhs(x) > self.rhs(x)

    def word_at(self, x) -> tuple:
        return inject_counts(self.spine, self.cycles, x).word

    def key(self):
        return (self.k, self.l, self.p, self.q, self.r, self.s)


def accepting_spines(prod: Product, max_spines: int = DEFAULT_MAX_SPINES):
    """Irreducible runs of ``prod`` from an initial to an accepting state.

    Every run of the product reduces to one of these by cutting simple cycles
    that keep its state set, and each has length below ``|Q(run)|**2``.
    """
    out = []
    succ = {s: sorted({(a, t) for a, t, _, _ in prod.edges[s]},
                      key=lambda e: (prod.alphabet.index(e[0]), repr(e[1])))
            for s in prod.states}
    for start in sorted(prod.initial, key=repr):
        states, word = [start], []

        def dfs():
            if states[-1] in prod.accepting:
                run = Run(tuple(states), tuple(word))
                nq = len(set(run.states))
                assert not run.word or len(run.word) < nq * nq, "spine bound violated"
                out.append(run)
                if len(out) > max_spines:
                    raise BudgetExceeded(f"more than {max_spines} spines", partial=out)
            for a, t in succ[states[-1]]:
                states.append(t)
                word.append(a)
                if is_irreducible(states):
                    dfs()
                word.pop()
                states.pop()

        dfs()
    return out


def translate(a: Pa, b: Pa, k_max: Optional[int] = None, l_max: Optional[int] = None, *,
              max_spines: int = DEFAULT_MAX_SPINES,
              max_product_states: int = DEFAULT_MAX_PRODUCT_STATES) -> list:
    """Finite set of :class:`DeltaTuple` such that ``[[a]](w) > [[b]](w)`` for
    some word iff some tuple's left sum beats its right sum at some ``x >= 0``.
    """
    a, b = trim(a), trim(b)
    k_true = max_finite_ambiguity(underlying_nfa(a))
    l_true = max_finite_ambiguity(underlying_nfa(b))
    if (k_max is not None and k_max < k_true) or (l_max is not None and l_max < l_true):
        raise PaInputError("ambiguity bounds below the automata's actual ambiguity")
    # larger bounds only add unsatisfiable products, so the exact degrees suffice
    k_max, l_max = k_true, l_true
    dfa_a, dfa_b = count_dfa(a), count_dfa(b)

    tuples: list = []
    seen = set()
    spent = 0
    for k in range(k_max + 1):
        for l in range(l_max + 1):
            try:
                prod = build_product(a, b, k, l, dfa_a=dfa_a, dfa_b=dfa_b,
                                     max_states=max_product_states)
                spines = accepting_spines(prod, max_spines - spent)
            except BudgetExceeded as exc:
                raise BudgetExceeded(str(exc), partial=tuples) from exc
            spent += len(spines)
            if not spines:
                continue
            host = prod.as_nfa()
            names = {s: i for i, s in enumerate(prod.states)}
            period_cache: dict = {}
            for spine in spines:
                qset = frozenset(spine.states)
                if qset not in period_cache:
                    idx = periods(host, {names[s] for s in qset})
                    period_cache[qset] = tuple(
                        Run(tuple(prod.states[i] for i in c.states), c.word) for c in idx)
                cycles = period_cache[qset]
                p, r = prod.weights(spine, with_initial=True)
                cyc_w = [prod.weights(c, with_initial=False) for c in cycles]
                q = tuple(tuple(w[0][i] for w in cyc_w) for i in range(k))
                s = tuple(tuple(w[1][j] for w in cyc_w) for j in range(l))
                t = DeltaTuple(k, l, p, q, r, s, spine, cycles)
                if t.key() not in seen:
                    seen.add(t.key())
                    tuples.append(t)
    return tuples
