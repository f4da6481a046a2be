import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from corpus import ambiguity_corpus, box_point, is_k_ambiguous, is_unambiguous, random_pa, random_pairs
from palab.ambiguity import Nfa, classify_pa, count_dfa, underlying_nfa
from palab.core import PaInputError, constant_pa, evaluate, halving_after_b, make_pa, trim, weighted_sum
from palab.oracle import Run, brute_force_containment, count_accepting_runs, enumerate_runs, words_upto
from palab.structure import (BudgetExceeded, accepting_spines, build_product, periods,
                             scc_partition, simple_cycle_decomposition, translate)

HALF = Fraction(1, 2)


def _nfa(states, edges, alphabet="ab"):
    return Nfa(tuple(alphabet), tuple(states), frozenset(edges), frozenset(states[:1]), frozenset(states))


def test_scc_partition_examples():
    assert scc_partition(underlying_nfa(halving_after_b())) == [["q1"], ["q2"]]
    assert scc_partition(_nfa(["p"], [("p", "a", "p")])) == [["p"]]
    ring = _nfa(["p", "q", "r"], [("p", "a", "q"), ("q", "a", "r"), ("r", "a", "p")])
    assert scc_partition(ring) == [["p", "q", "r"]]


def test_periods_examples():
    loops = _nfa(["q"], [("q", "a", "q"), ("q", "b", "q")])
    assert len(periods(loops, {"q"})) == 2
    assert periods(loops, set()) == []
    swap = _nfa(["p", "q"], [("p", "a", "q"), ("q", "b", "p")])
    got = {(c.states, c.word) for c in periods(swap, {"p", "q"})}
    assert got == {(("p", "q", "p"), ("a", "b")), (("q", "p", "q"), ("b", "a"))}


def _cycles_by_search(nfa, allowed):
    """Closed walks up to length |P| whose interior states are distinct."""
    out = set()
    succ = {}
    for s, a, t in nfa.transitions:
        if s in allowed and t in allowed:
            succ.setdefault(s, []).append((a, t))
    for start in allowed:
        frontier = [((start,), ())]
        for _ in range(len(allowed)):
            nxt = []
            for states, word in frontier:
                for a, t in succ.get(states[-1], ()):
                    if t == start:
                        out.add((states + (t,), word + (a,)))
                    elif t not in states:
                        nxt.append((states + (t,), word + (a,)))
            frontier = nxt
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_periods_complete_and_duplicate_free(seed, n):
    rng = random.Random(seed)
    nfa = underlying_nfa(random_pa(rng, n, density=0.6))
    allowed = {q for q in nfa.states if rng.random() < 0.8}
    cyc = periods(nfa, allowed)
    keys = [(c.states, c.word) for c in cyc]
    assert len(keys) == len(set(keys))
    assert set(keys) == _cycles_by_search(nfa, allowed)
    assert periods(nfa, allowed) == cyc


def test_decomposition_of_short_run_is_trivial():
    run = Run(("q1", "q1", "q2"), ("a", "b"))
    d = simple_cycle_decomposition(run)
    assert d.spine == run and not d.sigma


def test_decomposition_peels_a_self_loop():
    run = Run(("q1",) * 6 + ("q2",), ("a",) * 5 + ("b",))
    d = simple_cycle_decomposition(run, irreducible=True)
    assert d.spine == Run(("q1", "q2"), ("b",))
    assert list(d.sigma.values()) == [5]
    assert d.reconstruct() == run


def _random_run(pa, rng, length):
    q = rng.choice(list(pa.initial))
    states, word = [q], []
    for _ in range(length):
        options = [(a, t) for a in pa.alphabet for t in pa.row(q, a)]
        if not options:
            break
        a, q = rng.choice(options)
        states.append(q)
        word.append(a)
    return Run(tuple(states), tuple(word))


def _prob(pa, run):
    p = Fraction(1)
    for s, a, t in run.transitions:
        p *= pa.row(s, a)[t]
    return p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 20), st.booleans())
def test_decomposition_round_trip(seed, length, irreducible):
    rng = random.Random(seed)
    pa = random_pa(rng, 4, density=0.5)
    run = _random_run(pa, rng, length)
    d = simple_cycle_decomposition(run, irreducible=irreducible)
    back = d.reconstruct()
    assert back == run
    assert Counter(back.transitions) == Counter(run.transitions)
    nq = len(set(d.spine.states))
    assert not d.spine.word or len(d.spine.word) < nq * nq
    assert set(d.spine.states) == set(run.states)
    factor = _prob(pa, d.spine)
    for cyc, count in d.sigma.items():
        assert set(cyc.states) <= set(d.spine.states)
        factor *= _prob(pa, cyc) ** count
    assert factor == _prob(pa, run)


def _accepts(nfa, word):
    return nfa.accepts(word)


def test_product_of_halving_after_b_with_itself():
    a = halving_after_b()
    prod = build_product(a, a, 1, 1).as_nfa()
    for w in words_upto("ab", 6):
        expected = count_accepting_runs(a, w) == 1
        assert _accepts(prod, w) == expected == ("b" in w)


def test_product_with_no_left_runs():
    a, one = halving_after_b(), constant_pa("ab", 1)
    prod = build_product(a, one, 0, 1).as_nfa()
    for w in words_upto("ab", 6):
        assert _accepts(prod, w) == ("b" not in w)


def test_product_requesting_too_many_runs():
    a = halving_after_b()
    prod = build_product(a, a, 2, 1, dfa_a=count_dfa(a, cap=3))
    assert not prod.accepting
    with pytest.raises(PaInputError):
        build_product(a, a, 2, 1)


def test_product_keeps_runs_distinct():
    two = make_pa("ab", ["p", "q", "r"],
                  [("p", "a", "q", HALF), ("p", "a", "r", HALF), ("q", "b", "q", 1), ("r", "b", "r", 1)],
                  {"p": 1}, ["q", "r"])
    one = constant_pa("ab", 1)
    prod = build_product(two, one, 2, 1)
    # accepting product runs on a b^n are the two orderings of the two distinct runs
    for n in range(4):
        w = ("a",) + ("b",) * n
        runs = _product_runs(prod, w)
        assert len(runs) == 2
        assert all(len(set(zip(*[r[2] for r in run]))) == 2 for run in runs)


def _product_runs(prod, word):
    paths = [[s] for s in prod.initial]
    for letter in word:
        paths = [p + [t] for p in paths for a, t, _, _ in prod.edges[p[-1]] if a == letter]
    return [p for p in paths if p[-1] in prod.accepting]


def test_translate_constant_zero_is_contained():
    zero = make_pa("ab", ["p"], [("p", "a", "p", 1)], {"p": 1}, [])
    for t in translate(zero, halving_after_b()):
        assert t.k == 0


def test_translate_rejects_low_bounds():
    two = weighted_sum([(HALF, halving_after_b()), (HALF, halving_after_b())])
    with pytest.raises(PaInputError):
        translate(two, halving_after_b(), k_max=1)


def test_translate_halving_after_b_against_half():
    a, half = halving_after_b(), constant_pa("ab", HALF)
    tuples = translate(a, half)
    assert any(box_point(t, 6) is not None for t in tuples)
    assert brute_force_containment(a, half, 6).witnesses[0] == ("b",)


def test_spine_budget():
    pairs = random_pairs(5, 1, is_k_ambiguous(2), is_unambiguous)
    a, b = pairs[0]
    with pytest.raises(BudgetExceeded) as info:
        translate(a, b, max_spines=0)
    assert isinstance(info.value.partial, list)


@pytest.mark.parametrize("seed", range(6))
def test_translation_matches_brute_force(seed):
    for a, b in random_pairs(seed, 5, is_k_ambiguous(2), is_unambiguous):
        tuples = translate(a, b)
        by_tuples = any(box_point(t, 6) is not None for t in tuples)
        assert by_tuples == brute_force_containment(a, b, 7).found


@pytest.mark.parametrize("seed", range(4))
def test_tuple_values_equal_automaton_values(seed):
    rng = random.Random(seed)
    for a, b in random_pairs(100 + seed, 4, is_k_ambiguous(2), is_k_ambiguous(2)):
        for t in translate(a, b):
            for _ in range(3):
                x = tuple(rng.randint(0, 3) for _ in range(t.n))
                w = t.word_at(x)
                assert t.lhs(x) == evaluate(a, w)
                assert t.rhs(x) == evaluate(b, w)
                assert count_accepting_runs(a, w) == t.k
                assert count_accepting_runs(b, w) == t.l


@pytest.mark.parametrize("seed", range(3))
def test_spines_obey_length_bound(seed):
    for a, b in random_pairs(200 + seed, 4, is_k_ambiguous(2), is_unambiguous):
        for k, l in itertools.product(range(3), range(2)):
            try:
                prod = build_product(a, b, k, l)
            except PaInputError:
                continue
            for spine in accepting_spines(prod):
                nq = len(set(spine.states))
                assert not spine.word or len(spine.word) < nq * nq


def test_runs_inside_polynomial_scc_are_unique():
    for pa in ambiguity_corpus():
        if not classify_pa(pa).is_polynomial:
            continue
        pa = trim(pa)
        nq = len(pa.states)
        for comp in map(set, scc_partition(underlying_nfa(pa))):
            inner = [e for e in pa.edges() if e[0] in comp and e[2] in comp]
            for w in words_upto(pa.alphabet, 6):
                total = 0
                for p, q in itertools.product(comp, comp):
                    runs = len(enumerate_runs(make_pa(pa.alphabet, pa.states, inner, {p: 1}, [q]), w))
                    assert runs <= 1
                    total += runs
                assert total <= nq * nq
