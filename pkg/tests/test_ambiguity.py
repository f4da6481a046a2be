import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from corpus import ambiguity_corpus, growth_consistent, random_pa
from palab.ambiguity import (Nfa, Tag, classify, classify_pa, count_dfa, fixed_ambiguity_language,
                             max_finite_ambiguity, underlying_nfa)
from palab.core import ContractError, halving_after_b, halving_complement, make_pa, trim, weighted_sum
from palab.forge import build_gadget_C, build_gadget_D
from palab.oracle import count_accepting_runs, words_upto

HALF = Fraction(1, 2)


def test_underlying_nfa_of_halving_after_b():
    nfa = underlying_nfa(halving_after_b())
    assert set(nfa.transitions) == {("q1", "a", "q1"), ("q1", "b", "q2"), ("q2", "a", "q2"), ("q2", "b", "q2")}
    assert nfa.initial == {"q1"} and nfa.finals == {"q2"}


def test_underlying_nfa_ignores_probability_values():
    a = underlying_nfa(build_gadget_C(HALF, 1, Fraction(1, 4)))
    b = underlying_nfa(build_gadget_C(Fraction(1, 3), Fraction(2, 3), Fraction(1, 5)))
    assert a == b
    empty = make_pa("a", ["p"], [], {"p": 1}, ["p"])
    assert not underlying_nfa(empty).transitions


@pytest.mark.parametrize("pa, expected", [
    (halving_after_b(), "unambiguous"),
    (halving_complement(), "polynomial degree=1"),
    (build_gadget_C(HALF, 1, Fraction(1, 4)), "polynomial degree=1"),
    (build_gadget_D(HALF, HALF, HALF), "polynomial degree=1"),
    (make_pa("a", ["p"], [("p", "a", "p", 1)], {"p": 1}, ["p"]), "unambiguous"),
    (weighted_sum([(HALF, halving_after_b()), (HALF, halving_after_b())]), "finite k=2"),
])
def test_classify_examples(pa, expected):
    assert str(classify_pa(pa)) == expected


def test_exponential_example():
    pa = make_pa("a", ["p", "q"], [("p", "a", "p", HALF), ("p", "a", "q", HALF), ("q", "a", "p", 1)],
                 {"p": 1}, ["p"])
    assert classify_pa(pa).tag is Tag.EXPONENTIAL


def test_max_finite_ambiguity():
    assert max_finite_ambiguity(underlying_nfa(halving_after_b())) == 1
    two = weighted_sum([(HALF, halving_after_b()), (HALF, halving_after_b())])
    assert max_finite_ambiguity(underlying_nfa(two)) == 2
    assert max(count_accepting_runs(two, w) for w in words_upto("ab", 6)) == 2
    no_finals = Nfa(("a",), ("p",), frozenset({("p", "a", "p")}), frozenset({"p"}), frozenset())
    assert max_finite_ambiguity(no_finals) == 1


def test_max_finite_ambiguity_contract():
    with pytest.raises(ContractError):
        max_finite_ambiguity(underlying_nfa(halving_complement()))


def test_fixed_ambiguity_language_halving_after_b():
    a = halving_after_b()
    one, zero = fixed_ambiguity_language(a, 1), fixed_ambiguity_language(a, 0)
    for w in words_upto("ab", 6):
        in_astar_b = "b" in w
        assert one.accepts(w) == in_astar_b
        assert zero.accepts(w) == (not in_astar_b)
    assert fixed_ambiguity_language(a, 5).is_empty()


def test_classification_matches_growth_on_corpus():
    for pa in ambiguity_corpus():
        cls = classify_pa(pa)
        assert growth_consistent(pa, cls), (cls, pa)


def test_corpus_covers_all_classes():
    tags = {classify_pa(pa).tag for pa in ambiguity_corpus()}
    assert tags == set(Tag)


finite_pa = st.builds(lambda seed, n: random_pa(random.Random(seed), n), st.integers(0, 10 ** 6),
                      st.integers(1, 4)).filter(lambda pa: classify_pa(pa).is_finite)


@settings(max_examples=30, deadline=None)
@given(finite_pa)
def test_fixed_ambiguity_languages_partition(pa):
    k = max_finite_ambiguity(underlying_nfa(pa))
    langs = [fixed_ambiguity_language(pa, i) for i in range(k + 1)]
    for w in words_upto(pa.alphabet, 6):
        hits = [i for i, lang in enumerate(langs) if lang.accepts(w)]
        assert hits == [count_accepting_runs(pa, w)]


@settings(max_examples=30, deadline=None)
@given(finite_pa)
def test_count_dfa_counts_runs(pa):
    dfa = count_dfa(pa)
    for w in words_upto(pa.alphabet, 6):
        assert dfa.counts[dfa.run(w)] == min(dfa.cap, count_accepting_runs(pa, w))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_unambiguous_means_at_most_one_run(seed, n):
    pa = random_pa(random.Random(seed), n)
    cls = classify_pa(pa)
    counts = [count_accepting_runs(pa, w) for w in words_upto("ab", 6)]
    if cls.tag is Tag.UNAMBIGUOUS:
        assert max(counts) <= 1
    if cls.is_finite:
        assert max(counts) <= max_finite_ambiguity(underlying_nfa(pa))
    if max(counts) > 1:
        assert cls.tag is not Tag.UNAMBIGUOUS


def test_classify_trims_first():
    pa = make_pa("a", ["p", "q", "r"], [("p", "a", "p", HALF), ("q", "a", "q", HALF), ("q", "a", "r", HALF),
                                        ("r", "a", "q", 1)], {"p": 1}, ["p"])
    assert classify_pa(pa).tag is Tag.UNAMBIGUOUS
    assert classify(underlying_nfa(trim(pa))).tag is Tag.UNAMBIGUOUS
