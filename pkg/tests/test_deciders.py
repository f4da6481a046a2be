from fractions import Fraction

import pytest

from corpus import ambiguity_corpus, is_k_ambiguous, is_unambiguous, random_pairs
from palab.ambiguity import classify_pa
from palab.core import (ContractError, PaInputError, constant_pa, evaluate, halving_after_b, halving_complement,
                        make_pa, trim, weighted_sum)
from palab.deciders import (GapParams, build_A_prime, compute_N, containment_fin_vs_unamb,
                            containment_unamb_vs_fin, emptiness_finite, gap_emptiness)
from palab.oracle import (brute_force_containment, choice_count, choice_profile, enumerate_runs,
                          run_probability, words_upto)

F = Fraction
HALF = F(1, 2)


def halving():
    """``a^n -> (1/2)^n``, zero on every word containing ``b``."""
    return make_pa("ab", ["p"], [("p", "a", "p", HALF)], {"p": 1}, ["p"])


def fork():
    """Two states, one non-deterministic choice on ``a``."""
    return make_pa("a", ["p", "q"], [("p", "a", "p", HALF), ("p", "a", "q", HALF), ("q", "a", "q", 1)],
                   {"p": 1}, ["q"])


def zero():
    return make_pa("ab", ["p"], [("p", "a", "p", 1)], {"p": 1}, [])


def _exact(a, b, verdict):
    assert evaluate(a, verdict.witness) > evaluate(b, verdict.witness)


# -- containment and emptiness examples ---------------------------------------------

def test_everything_below_constant_one():
    assert containment_fin_vs_unamb(halving_after_b(), constant_pa("ab", 1)).answer == "YES"


def test_constant_one_not_below_halving_after_b():
    a, b = constant_pa("ab", 1), halving_after_b()
    v = containment_fin_vs_unamb(a, b)
    assert v.answer == "NO"
    _exact(a, b, v)
    assert "b" not in v.witness


def test_emptiness_examples():
    assert emptiness_finite(constant_pa("ab", HALF)).answer == "YES"
    v = emptiness_finite(halving_after_b())
    assert v.answer == "NO" and v.witness == ("b",)
    assert evaluate(halving_after_b(), v.witness) == 1
    scaled = weighted_sum([(HALF, halving_after_b())])
    assert emptiness_finite(scaled).answer == "YES"
    assert not brute_force_containment(scaled, constant_pa("ab", HALF), 8).found


def test_unamb_vs_fin_examples():
    b = weighted_sum([(HALF, halving_after_b()), (HALF, halving_after_b())])
    assert containment_unamb_vs_fin(zero(), b).answer == "YES"
    a = halving()
    twice = weighted_sum([(HALF, a), (HALF, a)])
    assert containment_unamb_vs_fin(a, twice).answer == "YES"
    assert not brute_force_containment(a, twice, 8).found


def test_unamb_vs_fin_finds_separation():
    a, b = constant_pa("ab", F(2, 3)), weighted_sum([(HALF, halving()), (HALF, halving())])
    v = containment_unamb_vs_fin(a, b)
    assert v.answer == "NO"
    _exact(a, b, v)


def test_preconditions_checked():
    with pytest.raises(ContractError):
        containment_fin_vs_unamb(halving_complement(), halving_after_b())
    with pytest.raises(ContractError):
        containment_fin_vs_unamb(halving_after_b(), weighted_sum([(HALF, halving_after_b()), (HALF, halving_after_b())]))
    with pytest.raises(ContractError):
        containment_unamb_vs_fin(halving_complement(), halving_after_b())
    with pytest.raises(ContractError):
        gap_emptiness(ambiguity_corpus_exponential(), F(1, 4))


def ambiguity_corpus_exponential():
    return next(pa for pa in ambiguity_corpus() if classify_pa(pa).tag.name == "EXPONENTIAL")


def test_spine_budget_gives_unknown():
    a, b = random_pairs(5, 1, is_k_ambiguous(2), is_unambiguous)[0]
    assert containment_fin_vs_unamb(a, b, max_spines=0).answer == "UNKNOWN"


# -- agreement with the brute-force oracle ----------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_fin_vs_unamb_agrees_with_oracle(seed):
    for a, b in random_pairs(500 + seed, 10, is_k_ambiguous(2), is_unambiguous):
        v = containment_fin_vs_unamb(a, b)
        assert v.answer != "UNKNOWN"
        assert (v.answer == "NO") == brute_force_containment(a, b, 7).found
        if v.answer == "NO":
            _exact(a, b, v)


@pytest.mark.parametrize("seed", range(4))
def test_unamb_vs_fin_agrees_with_oracle(seed):
    unknown = 0
    for a, b in random_pairs(600 + seed, 10, is_unambiguous, is_k_ambiguous(2)):
        v = containment_unamb_vs_fin(a, b)
        if v.answer == "UNKNOWN":
            unknown += 1
            continue
        assert (v.answer == "NO") == brute_force_containment(a, b, 7).found
        if v.answer == "NO":
            _exact(a, b, v)
    assert unknown < 2


# -- gap emptiness ----------------------------------------------------------------------

def test_compute_N_deterministic_is_zero():
    params = compute_N(halving_after_b(), F(1, 4))
    assert params.N == 0 and params.tail_upper(1) == 0
    assert build_A_prime(halving_after_b(), 0) == halving_after_b()


def test_compute_N_certificate_by_partial_sums():
    eps = F(1, 8)
    params = compute_N(fork(), eps)
    assert params.alpha == HALF and params.n_states == 2
    N = params.N
    head = sum(params.term(m) for m in range(N + 1, N + 201))
    start = N + 201
    assert start >= params.m0
    ratio_ok = all(params.term(m + 1) <= params.beta * params.term(m) for m in range(start, start + 50))
    assert ratio_ok
    assert head + params.term(start) / (1 - params.beta) <= eps
    # the returned N is the least one the over-approximation certifies
    assert params.tail_upper(N) > eps


def test_compute_N_monotone_in_epsilon():
    Ns = [compute_N(fork(), F(k, 10)).N for k in range(1, 10)]
    assert Ns == sorted(Ns, reverse=True)
    assert compute_N(fork(), F(9, 10)).N <= compute_N(fork(), F(1, 10)).N


@pytest.mark.parametrize("eps", [0, 1, F(3, 2), -F(1, 2)])
def test_compute_N_rejects_bad_epsilon(eps):
    with pytest.raises(PaInputError):
        compute_N(fork(), eps)


def test_poly_bound_formula():
    p = GapParams(F(1, 8), HALF, 0, 2)
    assert p.poly_bound(0) == 4 * 4 ** 8
    assert p.poly_bound(3) == 4 * 16 ** 8


def _polynomial_samples():
    out = [halving_complement(), fork()]
    out += [trim(pa) for pa in ambiguity_corpus() if classify_pa(pa).is_polynomial][:6]
    return out


def test_A_prime_sandwich_and_monotonicity():
    for pa in _polynomial_samples():
        primes = [build_A_prime(pa, N) for N in range(4)]
        for w in words_upto(pa.alphabet, 6):
            vals = [evaluate(p, w) for p in primes] + [evaluate(pa, w)]
            assert vals == sorted(vals)


def test_A_prime_of_halving_complement_at_zero():
    right = halving_complement()
    prime = build_A_prime(right, 0)
    for w in words_upto("ab", 8):
        assert evaluate(prime, w) <= evaluate(right, w)
    assert classify_pa(prime).is_finite


def test_A_prime_of_deterministic_is_identity():
    a = halving_after_b()
    for N in range(3):
        prime = build_A_prime(a, N)
        assert all(evaluate(prime, w) == evaluate(a, w) for w in words_upto("ab", 6))


def test_A_prime_keeps_runs_with_few_choices():
    pa = trim(halving_complement())
    for N in range(4):
        prime = build_A_prime(pa, N)
        assert classify_pa(prime).is_finite
        for w in words_upto("ab", 5):
            expected = sum((run_probability(pa, r) for r in enumerate_runs(pa, w) if choice_count(pa, r) <= N),
                           F(0))
            assert evaluate(prime, w) == expected


def test_gap_deterministic_no():
    a = make_pa("ab", ["p", "q"], [("p", "a", "q", 1)], {"p": 1}, ["q"])
    v = gap_emptiness(a, F(1, 4))
    assert v.answer == "NO" and v.certificate["N"] == 0 and v.certificate["certified"]
    assert evaluate(a, v.witness) == 1


def test_gap_scaled_yes():
    a = weighted_sum([(F(1, 3), halving_after_b())])
    v = gap_emptiness(a, F(1, 10))
    assert v.answer == "YES"
    assert all(evaluate(a, w) <= F(1, 3) for w in words_upto("ab", 8))


def test_gap_override_on_halving_complement():
    right = halving_complement()
    v = gap_emptiness(right, F(1, 8), override_N=2)
    assert v.answer == "NO" and not v.certificate["certified"]
    assert evaluate(right, v.witness) > HALF


def test_gap_reports_unknown_when_cutoff_too_large():
    v = gap_emptiness(halving_complement(), F(1, 8), max_layers=4)
    assert v.answer == "UNKNOWN"


# -- run-level invariants ----------------------------------------------------------------

def test_run_counts_and_probability_bounds():
    for pa in _polynomial_samples():
        alpha = max((p for _, _, _, p in pa.edges() if p != 1), default=None)
        alpha = max([alpha] + [p for p in pa.initial.values() if p != 1], key=lambda v: v or 0)
        q = len(pa.states)
        params = GapParams(F(1, 2), alpha, 0, q)
        for w in words_upto(pa.alphabet, 6):
            runs = enumerate_runs(pa, w)
            profile = choice_profile(pa, w)
            assert sum(profile.values()) == len(runs)
            for m, count in profile.items():
                assert count <= params.poly_bound(m)
            for r in runs:
                m = choice_count(pa, r)
                if m:
                    assert run_probability(pa, r) <= alpha ** m


def test_choice_profile_of_fork():
    pa = fork()
    for n in range(1, 6):
        # the run leaving p at step i has made i choices
        assert choice_profile(pa, "a" * n) == {i: 1 for i in range(1, n + 1)}
