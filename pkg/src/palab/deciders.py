"""Decision procedures: emptiness, containment and gap emptiness.

Answers follow the question asked.  For containment, YES means
``[[A]] <= [[B]]`` everywhere; for (gap) emptiness, YES means every word has
value at most 1/2.  A NO answer always carries a word that was checked by exact
evaluation before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ambiguity import Tag, classify_pa
from .core import ContractError, Pa, PaInputError, as_fraction, constant_pa, evaluate, make_pa, trim
from .ipexp import Budget, IpExpInstance, ExpSumFunction, solve
from .structure import BudgetExceeded, translate

HALF = Fraction(1, 2)


@dataclass
class Verdict:
    answer: str  # "YES", "NO" or "UNKNOWN"
    witness: Optional[tuple] = None
    certificate: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.answer not in ("YES", "NO", "UNKNOWN"):
            raise ValueError(f"bad answer {self.answer!r}")


def _require(pa: Pa, ok, what: str):
    cls = classify_pa(pa)
    if not ok(cls):
        raise ContractError(f"automaton must be {what}, got {cls}")
    return cls


def _is_unambiguous(cls) -> bool:
    return cls.tag is Tag.UNAMBIGUOUS


def _confirm_not_contained(a: Pa, b: Pa, word) -> tuple:
    va, vb = evaluate(a, word), evaluate(b, word)
    if not va > vb:
        raise AssertionError(f"witness {word!r} does not separate: {va} <= {vb}")
    return va, vb


# -- finitely ambiguous vs unambiguous --------------------------------------------

def _tuple_point_fin_vs_unamb(t) -> Optional[tuple]:
    """A point ``x`` with left sum above right sum, or None if there is none."""
    zero = (0,) * t.n
    if t.k == 0:
        return None
    if t.l == 0:
        return zero
    (s,) = t.s
    for qi in t.q:
        for j, (qij, sj) in enumerate(zip(qi, s)):
            if qij > sj:
                m = 0
                while True:
                    x = tuple(m if jj == j else 0 for jj in range(t.n))
                    if t.holds_at(x):
                        return x
                    m += 1
    # every base on the left is at most the matching base on the right, so the
    # ratio left/right is non-increasing in each coordinate
    return zero if t.holds_at(zero) else None


def containment_fin_vs_unamb(a: Pa, b: Pa, *, max_spines: Optional[int] = None) -> Verdict:
    """Decide ``[[a]] <= [[b]]`` for finitely ambiguous ``a`` and unambiguous ``b``."""
    _require(a, lambda c: c.is_finite, "finitely ambiguous")
    _require(b, _is_unambiguous, "unambiguous")
    kwargs = {} if max_spines is None else {"max_spines": max_spines}
    try:
        tuples = translate(a, b, **kwargs)
    except BudgetExceeded as exc:
        return Verdict("UNKNOWN", certificate={"reason": str(exc)})
    for idx, t in enumerate(tuples):
        x = _tuple_point_fin_vs_unamb(t)
        if x is None:
            continue
        word = t.word_at(x)
        va, vb = _confirm_not_contained(a, b, word)
        return Verdict("NO", word, {"tuple": idx, "k": t.k, "l": t.l, "x": x, "lhs": va, "rhs": vb})
    return Verdict("YES", certificate={"tuples": len(tuples)})


def emptiness_finite(a: Pa, **kwargs) -> Verdict:
    """Decide ``[[a]](w) <= 1/2`` for all words, for finitely ambiguous ``a``."""
    return containment_fin_vs_unamb(a, constant_pa(a.alphabet, HALF), **kwargs)


# -- unambiguous vs finitely ambiguous ------------------------------------------------

@dataclass
class _Reduction:
    instance: IpExpInstance
    kept: tuple  # original coordinate behind each reduced one

    def lift(self, y, n: int) -> tuple:
        x = [0] * n
        for j, v in zip(self.kept, y):
            x[j] = v
        return tuple(x)


def _instance_for(t) -> _Reduction:
    """``sum_i (r_i/p) prod_j (s_ij/q_j)^x_j < 1`` over ``x >= 0``.

    Coordinates whose bases are all at least one only make the sum larger and
    are pinned to zero; coordinates with identical base columns only matter
    through their total and are merged.
    """
    (p,), (q,) = t.p, t.q
    r = [ri / p for ri in t.r]
    cols = [tuple(sj[j] / q[j] for sj in t.s) for j in range(t.n)]
    kept, seen = [], set()
    for j, col in enumerate(cols):
        if all(v >= 1 for v in col) or col in seen:
            continue
        seen.add(col)
        kept.append(j)
    n = len(kept)
    s = tuple(tuple(cols[j][i] for j in kept) for i in range(len(r)))
    M = tuple(tuple(-1 if a == b else 0 for b in range(n)) for a in range(n))
    inst = IpExpInstance(ExpSumFunction(n, tuple(r), s), M, (1,) * n)
    return _Reduction(inst, tuple(kept))


def containment_unamb_vs_fin(a: Pa, b: Pa, *, budget: Optional[Budget] = None,
                             max_spines: Optional[int] = None) -> Verdict:
    """Decide ``[[a]] <= [[b]]`` for unambiguous ``a`` and finitely ambiguous ``b``."""
    _require(a, _is_unambiguous, "unambiguous")
    _require(b, lambda c: c.is_finite, "finitely ambiguous")
    budget = budget or Budget()
    kwargs = {} if max_spines is None else {"max_spines": max_spines}
    try:
        tuples = translate(a, b, **kwargs)
    except BudgetExceeded as exc:
        return Verdict("UNKNOWN", certificate={"reason": str(exc)})
    unknown, unsat = [], []
    for idx, t in enumerate(tuples):
        if t.k == 0:
            continue
        if t.l == 0:
            x = (0,) * t.n
        else:
            red = _instance_for(t)
            res = solve(red.instance, budget)
            if res.status == "UNKNOWN":
                unknown.append(idx)
                continue
            if res.status == "UNSAT":
                unsat.append((idx, res.certificate.get("tree")))
                continue
            x = red.lift(res.witness, t.n)
        if not t.holds_at(x):
            raise AssertionError("reduced solution does not satisfy the original inequality")
        word = t.word_at(x)
        va, vb = _confirm_not_contained(a, b, word)
        return Verdict("NO", word, {"tuple": idx, "k": t.k, "l": t.l, "x": x, "lhs": va, "rhs": vb})
    if unknown:
        return Verdict("UNKNOWN", certificate={"undecided_tuples": unknown, "budget": budget.as_dict()})
    return Verdict("YES", certificate={"tuples": len(tuples), "unsat": unsat})


# -- gap emptiness ---------------------------------------------------------------

def _has_choices(a: Pa) -> bool:
    return len(a.initial) >= 2 or any(len(row) > 1 for row in a.transitions.values())


@dataclass(frozen=True)
class GapParams:
    epsilon: Fraction
    alpha: Optional[Fraction]
    N: int
    n_states: int
    beta: Optional[Fraction] = None
    m0: Optional[int] = None
    tail_bound: Fraction = Fraction(0)

    def poly_bound(self, m: int) -> int:
        """Bound on accepting runs on one word using exactly ``m`` choices."""
        q = self.n_states
        return 2 ** q * ((m + 1) * q * q) ** (q ** 3)

    def term(self, m: int) -> Fraction:
        return self.alpha ** m * self.poly_bound(m)

    def tail_upper(self, start: int) -> Fraction:
        """Certified upper bound on ``sum_{m >= start} term(m)``."""
        if self.beta is None:  # no choices: every run makes none
            return Fraction(0)
        head = Fraction(0)
        m = start
        while m < self.m0:
            head += self.term(m)
            m += 1
        return head + self.term(m) / (1 - self.beta)


def _alpha(a: Pa) -> Optional[Fraction]:
    probs = [p for _, _, _, p in a.edges()] + list(a.initial.values())
    below = [p for p in probs if p != 1]
    return max(below) if below else None


def compute_N(a: Pa, epsilon) -> GapParams:
    """Least ``N`` whose certified tail bound on the weight of runs with more than
    ``N`` choices is at most ``epsilon``."""
    epsilon = as_fraction(epsilon)
    if not 0 < epsilon < 1:
        raise PaInputError("epsilon must lie strictly between 0 and 1")
    a = trim(a)
    q = len(a.states)
    if not _has_choices(a):
        return GapParams(epsilon, _alpha(a), 0, q)
    alpha = _alpha(a)
    beta = (1 + alpha) / 2
    D = q ** 3
    m0 = 0
    while Fraction(m0 + 2, m0 + 1) ** D * alpha > beta:
        m0 += 1
    params = GapParams(epsilon, alpha, 0, q, beta, m0)

    def ok(n):
        return params.tail_upper(n + 1) <= epsilon

    hi = 1
    while not ok(hi):
        hi *= 2
    lo = 0
    if ok(0):
        hi = 0
    while lo + 1 < hi:  # ok(hi) holds, ok(lo) fails
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return GapParams(epsilon, alpha, hi, q, beta, m0, params.tail_upper(hi + 1))


def build_A_prime(a: Pa, N: int) -> Pa:
    """``a`` restricted to runs making at most ``N`` non-deterministic choices.

    State ``q`` at layer ``j`` (choices made so far) is named ``"{q}#{j}"``.
    """
    if N < 0:
        raise PaInputError("N must be nonnegative")
    if not _has_choices(a):
        return a
    layers = range(N + 1)
    states = [f"{q}#{j}" for j in layers for q in a.states]
    edges = []
    for src, letter, dst, p in a.edges():
        step = 1 if a.is_choice(src, letter) else 0
        for j in layers:
            if j + step <= N:
                edges.append((f"{src}#{j}", letter, f"{dst}#{j + step}", p))
    start = 1 if len(a.initial) >= 2 else 0
    initial = {f"{q}#{start}": p for q, p in a.initial.items()} if start <= N else {}
    finals = [f"{q}#{j}" for j in layers for q in a.finals]
    return make_pa(a.alphabet, states, edges, initial, finals)


def gap_emptiness(a: Pa, epsilon, *, override_N: Optional[int] = None,
                  max_layers: int = 64, **kwargs) -> Verdict:
    """Promise problem: YES when every word has value at most 1/2, NO when some
    word exceeds 1/2 (in particular when one exceeds 1/2 + epsilon).

    ``override_N`` replaces the certified cutoff; answers obtained that way are
    marked as not certified.
    """
    _require(a, lambda c: c.is_polynomial, "polynomially ambiguous")
    epsilon = as_fraction(epsilon)
    if not 0 < epsilon < 1:
        raise PaInputError("epsilon must lie strictly between 0 and 1")
    a = trim(a)
    cert: dict = {"epsilon": epsilon}
    if override_N is None:
        params = compute_N(a, epsilon)
        N = params.N
        cert.update(N=N, alpha=params.alpha, tail_bound=params.tail_bound, certified=True)
        if N > max_layers:
            cert["reason"] = f"cutoff N={N} exceeds max_layers={max_layers}"
            return Verdict("UNKNOWN", certificate=cert)
    else:
        N = override_N
        cert.update(N=N, certified=False)
    prime = build_A_prime(a, N)
    inner = emptiness_finite(prime, **kwargs)
    cert["inner"] = inner.certificate
    if inner.answer == "NO":
        value = evaluate(a, inner.witness)
        if not value > HALF:
            raise AssertionError("gap witness does not exceed 1/2 on the original automaton")
        cert["value"] = value
    return Verdict(inner.answer, inner.witness, cert)
