"""Seeded random automata and hand-built fixtures shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from palab.ambiguity import Tag, classify_pa, max_finite_ambiguity, underlying_nfa
from palab.core import make_pa, trim

SIGMA = ("a", "b")
_PROBS = [Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4), Fraction(1)]


def random_pa(rng: random.Random, n_states: int, density: float = 0.45, sigma=SIGMA):
    states = [f"s{i}" for i in range(n_states)]
    edges = []
    for q in states:
        for a in sigma:
            targets = [t for t in states if rng.random() < density]
            if not targets:
                continue
            weights = [rng.choice(_PROBS) for _ in targets]
            total = sum(weights)
            scale = rng.choice([Fraction(1), Fraction(3, 4), Fraction(1, 2)])
            edges.extend((q, a, t, w / total * scale) for t, w in zip(targets, weights))
    init_states = rng.sample(states, min(n_states, rng.choice([1, 1, 2])))
    initial = {q: Fraction(1, len(init_states)) * rng.choice([Fraction(1), Fraction(1, 2)]) for q in init_states}
    finals = [q for q in states if rng.random() < 0.5] or [rng.choice(states)]
    return make_pa(sigma, states, edges, initial, finals)


def random_with(rng: random.Random, accept, max_states: int = 3, tries: int = 10_000):
    for _ in range(tries):
        pa = random_pa(rng, rng.randint(1, max_states))
        if accept(pa):
            return pa
    raise RuntimeError("generator could not satisfy the filter")


def is_unambiguous(pa) -> bool:
    return classify_pa(pa).tag is Tag.UNAMBIGUOUS


def is_k_ambiguous(k: int):
    def accept(pa):
        cls = classify_pa(pa)
        return cls.is_finite and max_finite_ambiguity(underlying_nfa(pa)) <= k and bool(trim(pa).states)
    return accept


def random_pairs(seed: int, count: int, left, right, max_states: int = 3):
    rng = random.Random(seed)
    return [(random_with(rng, left, max_states), random_with(rng, right, max_states)) for _ in range(count)]


# -- ambiguity corpus -------------------------------------------------------------------

def _hand_built():
    half = Fraction(1, 2)
    from palab.core import halving_after_b, halving_complement, weighted_sum
    from palab.forge import build_gadget_C, build_gadget_D
    two_paths = make_pa("ab", ["p", "q", "r"],
                        [("p", "a", "q", half), ("p", "a", "r", half), ("q", "b", "q", 1), ("r", "b", "r", 1)],
                        {"p": 1}, ["q", "r"])
    fork = make_pa("ab", ["p", "q"],
                   [("p", "a", "p", half), ("p", "a", "q", half), ("p", "b", "p", half), ("p", "b", "q", half),
                    ("q", "a", "q", 1)], {"p": 1}, ["p", "q"])
    self_loop = make_pa("ab", ["p"], [("p", "a", "p", half)], {"p": 1}, ["p"])
    branch = make_pa("ab", ["p", "q"], [("p", "a", "p", half), ("p", "a", "q", half), ("q", "a", "p", 1)],
                     {"p": 1}, ["p"])
    third = Fraction(1, 3)
    chain = make_pa("a", ["p", "q", "r"],
                    [("p", "a", "p", half), ("p", "a", "q", half), ("q", "a", "q", half), ("q", "a", "r", half),
                     ("r", "a", "r", 1)], {"p": 1}, ["r"])
    chain = make_pa("ab", chain.states, list(chain.edges()) + [("p", "b", "p", third)], {"p": 1}, ["r"])
    return [
        chain, halving_after_b(), halving_complement(), two_paths, fork, self_loop, branch,
        weighted_sum([(half, halving_after_b()), (half, halving_after_b())]),
        build_gadget_C(half, 1, Fraction(1, 4)), build_gadget_D(half, half, half),
    ]


def ambiguity_corpus(seed: int = 2024):
    """Twenty automata covering every ambiguity class."""
    rng = random.Random(seed)
    pas = _hand_built()
    want = [Tag.UNAMBIGUOUS, Tag.FINITE, Tag.POLYNOMIAL, Tag.EXPONENTIAL] * 3
    for tag in want[: 20 - len(pas)]:
        pas.append(random_with(rng, lambda pa, tag=tag: classify_pa(pa).tag is tag and bool(trim(pa).states)))
    return pas


def max_counts(pa, max_len: int):
    """Largest number of accepting runs over words of each length ``0..max_len``."""
    from palab.oracle import count_accepting_runs, words_upto
    best = [0] * (max_len + 1)
    for w in words_upto(pa.alphabet, max_len):
        best[len(w)] = max(best[len(w)], count_accepting_runs(pa, w))
    return best


def pumping_witness(pa, growth, max_len: int = 8):
    """Words ``u, v, x`` with ``count(u v^j x) >= growth(j)`` for every ``j`` that
    keeps the word within ``max_len``, at least two such ``j`` beyond 0."""
    from palab.oracle import count_accepting_runs, words_upto
    sigma = pa.alphabet
    for v in words_upto(sigma, 3):
        if not v:
            continue
        for u in words_upto(sigma, 2):
            for x in words_upto(sigma, 2):
                js = [j for j in range(max_len + 1) if len(u) + j * len(v) + len(x) <= max_len]
                if len(js) < 3:
                    continue
                if all(count_accepting_runs(pa, u + v * j + x) >= growth(j) for j in js):
                    return u, v, x
    return None


def growth_consistent(pa, cls, max_len: int = 8) -> bool:
    """Does the observed run-count growth on words up to ``max_len`` fit ``cls``?

    Bounded classes must stay within their bound (and reach it); polynomial
    classes must grow along a pumped family yet stay under the polynomial bound;
    exponential classes must double along a pumped family.
    """
    counts = max_counts(pa, max_len)
    q = len(pa.states)
    if cls.tag is Tag.UNAMBIGUOUS:
        return max(counts) <= 1
    if cls.tag is Tag.FINITE:
        return max(counts) == cls.finite_degree
    if cls.tag is Tag.POLYNOMIAL:
        d = cls.poly_degree
        bounded = all(c <= (q * q * (n + 1)) ** d for n, c in enumerate(counts))
        return bounded and pumping_witness(pa, lambda j: j + 1, max_len) is not None
    return pumping_witness(pa, lambda j: 2 ** j, max_len) is not None


# -- exponential-sum box oracle -------------------------------------------------------

def _sum_value(p, q, x):
    total = Fraction(0)
    for pi, qi in zip(p, q):
        term = Fraction(pi)
        for base, e in zip(qi, x):
            term *= Fraction(base) ** e
        total += term
    return total


def box_point(t, radius: int):
    """Some ``x`` in ``[0, radius]^n`` where the tuple's left sum beats its right sum.

    With at most one right-hand term, ``left/right`` is a positive sum of
    exponentials of linear forms, hence convex, so its maximum over the box is at
    a vertex: the vertices are enough.  Larger dimensions are therefore cheap.
    """
    import itertools
    if not t.p:
        return None
    if len(t.r) > 1:
        raise ValueError("box oracle expects an unambiguous right-hand side")
    for x in itertools.product((0, radius), repeat=t.n):
        if _sum_value(t.p, t.q, x) > _sum_value(t.r, t.s, x):
            return x
    return None


def box_point_full(t, radius: int):
    """Same question by sweeping every point of the box (small ``n`` only)."""
    import itertools
    for x in itertools.product(range(radius + 1), repeat=t.n):
        if _sum_value(t.p, t.q, x) > _sum_value(t.r, t.s, x):
            return x
    return None


_BASES = [Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]
_COEFS = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2)]


def random_instance(rng: random.Random, n: int = None, ell: int = None, m: int = None):
    from palab.ipexp import make_instance
    n = rng.randint(1, 3) if n is None else n
    ell = rng.randint(1, 3) if ell is None else ell
    m = rng.randint(0, 3) if m is None else m
    r = [rng.choice(_COEFS) for _ in range(ell)]
    s = [[rng.choice(_BASES) for _ in range(n)] for _ in range(ell)]
    M = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(m)]
    c = [rng.randint(-1, 4) for _ in range(m)]
    return make_instance(r, s, M, c, n=n)
