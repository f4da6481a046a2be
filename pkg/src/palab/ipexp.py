"""Integer feasibility of ``f(x) < 1 and Mx < c`` with exponential sums ``f``.

The solver dovetails two tracks:

* enumeration of integer points by growing max-norm (finds every solution
  eventually);
* a slicing procedure: find an integer direction ``d`` along which the real
  solution set is bounded, then recurse on each integer hyperplane
  ``d.x = i``.  Boundedness is read off the polyhedral relaxation obtained by
  taking logarithms of each term, so coefficients live in the ring generated by
  logarithms of primes.  Signs in that ring are certified with interval
  arithmetic at growing precision; when no precision suffices the direction is
  abandoned, which can only make the answer UNKNOWN, never wrong.
"""

from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import mpmath
from mpmath import iv
from sympy import factorint

from .core import PaInputError, as_fraction


# -- data ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExpSumFunction:
    """``f(x) = sum_i r[i] * prod_j s[i][j] ** x[j]`` with positive rationals."""

    n: int
    r: tuple
    s: tuple

    def __post_init__(self):
        r = tuple(as_fraction(v) for v in self.r)
        s = tuple(tuple(as_fraction(v) for v in row) for row in self.s)
        if len(r) != len(s):
            raise PaInputError("need one base row per coefficient")
        if any(len(row) != self.n for row in s):
            raise PaInputError(f"base rows must have length {self.n}")
        if any(v <= 0 for v in r) or any(v <= 0 for row in s for v in row):
            raise PaInputError("coefficients and bases must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @property
    def ell(self) -> int:
        return len(self.r)


@dataclass(frozen=True)
class IpExpInstance:
    f: ExpSumFunction
    M: tuple
    c: tuple

    def __post_init__(self):
        M = tuple(tuple(int(v) for v in row) for row in self.M)
        c = tuple(int(v) for v in self.c)
        if len(M) != len(c) or any(len(row) != self.f.n for row in M):
            raise PaInputError("constraint matrix and vector have inconsistent shapes")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def ell(self) -> int:
        return self.f.ell

    @property
    def m(self) -> int:
        return len(self.M)

    def holds(self, x) -> bool:
        """Exact check of both constraints at the integer point ``x``."""
        if any(sum(a * b for a, b in zip(row, x)) >= ci for row, ci in zip(self.M, self.c)):
            return False
        return eval_expsum(self.f, x) < 1


def make_instance(r, s, M=(), c=(), n: Optional[int] = None) -> IpExpInstance:
    if n is None:
        n = len(s[0]) if s else (len(M[0]) if M else 0)
    return IpExpInstance(ExpSumFunction(n, tuple(r), tuple(tuple(row) for row in s)), tuple(M), tuple(c))


def eval_expsum(f: ExpSumFunction, x: Sequence[int]) -> Fraction:
    if len(x) != f.n:
        raise PaInputError(f"point has dimension {len(x)}, expected {f.n}")
    total = Fraction(0)
    for ri, si in zip(f.r, f.s):
        term = ri
        for base, e in zip(si, x):
            if e:
                term *= base ** int(e)
        total += term
    return total


# -- exact logarithms --------------------------------------------------------------

def logvec_of_rational(q) -> dict:
    """Exponents of the prime factorization of ``q``: ``log q = sum e_p log p``."""
    q = as_fraction(q)
    if q <= 0:
        raise PaInputError("logarithm of a non-positive number")
    out: dict = {}
    for p, e in factorint(q.numerator).items():
        out[p] = out.get(p, 0) + e
    for p, e in factorint(q.denominator).items():
        out[p] = out.get(p, 0) - e
    return {p: Fraction(e) for p, e in sorted(out.items()) if e}


def logvec_sign(v: dict) -> int:
    """Exact sign of ``sum v[p] * log p`` for rational ``v[p]``."""
    v = {p: as_fraction(e) for p, e in v.items() if e}
    if not v:
        return 0
    den = math.lcm(*(e.denominator for e in v.values()))
    pos, neg = 1, 1
    for p, e in v.items():
        k = int(e * den)
        if k > 0:
            pos *= p ** k
        else:
            neg *= p ** (-k)
    return (pos > neg) - (pos < neg)


class UncertainSign(ArithmeticError):
    """Interval evaluation could not separate a value from zero."""


@contextlib.contextmanager
def _precision(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


_LOG_CACHE: dict = {}


def _log_prime(p: int, bits: int):
    key = (p, bits)
    if key not in _LOG_CACHE:
        _LOG_CACHE[key] = iv.log(iv.mpf(p))
    return _LOG_CACHE[key]


def _iv_fraction(q: Fraction):
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


class LogPoly:
    """Polynomial with rational coefficients in the symbols ``log p``.

    ``terms`` maps a sorted tuple of primes (a monomial) to its coefficient.
    Linear polynomials without constant term have exact signs; everything else
    is decided by interval evaluation.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    @classmethod
    def const(cls, q) -> "LogPoly":
        return cls({(): as_fraction(q)})

    @classmethod
    def log(cls, q) -> "LogPoly":
        return cls({(p,): e for p, e in logvec_of_rational(q).items()})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return LogPoly(out)

    def __neg__(self):
        return LogPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return LogPoly({k: v * other for k, v in self.terms.items()})
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(sorted(k1 + k2))
                out[k] = out.get(k, 0) + v1 * v2
        return LogPoly(out)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, LogPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, coef in sorted(self.terms.items()):
            sym = "*".join(f"log{p}" for p in mono)
            parts.append(f"{coef}" + (f"*{sym}" if sym else ""))
        return " + ".join(parts)

    def interval(self, bits: int):
        """Enclosure of the value; call inside a matching precision context."""
        total = iv.mpf(0)
        for mono, coef in self.terms.items():
            term = _iv_fraction(coef)
            for p in mono:
                term = term * _log_prime(p, bits)
            total = total + term
        return total

    def sign(self, max_bits: int = 1024) -> int:
        if not self.terms:
            return 0
        if all(len(k) == 1 for k in self.terms):
            return logvec_sign({k[0]: v for k, v in self.terms.items()})
        if all(len(k) == 0 for k in self.terms):
            v = self.terms[()]
            return (v > 0) - (v < 0)
        bits = 64
        while bits <= max_bits:
            with _precision(bits):
                val = self.interval(bits)
                if val.a > 0:
                    return 1
                if val.b < 0:
                    return -1
            bits *= 2
        raise UncertainSign(repr(self))


# -- lattice helpers -----------------------------------------------------------------

def _column_reduce(d: Sequence[int]):
    """Unimodular ``U`` with ``d^T U = (g, 0, ..., 0)``, ``g = gcd(d) > 0``."""
    n = len(d)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    v = [int(x) for x in d]

    def col_op(dst, src, q):  # column dst -= q * column src
        v[dst] -= q * v[src]
        for row in U:
            row[dst] -= q * row[src]

    def swap(i, j):
        v[i], v[j] = v[j], v[i]
        for row in U:
            row[i], row[j] = row[j], row[i]

    for j in range(1, n):
        while v[j]:
            col_op(0, j, v[0] // v[j])
            swap(0, j)
    if v[0] < 0:
        v[0] = -v[0]
        for row in U:
            row[0] = -row[0]
    return v[0], U


@dataclass(frozen=True)
class HyperplaneParam:
    d: tuple
    g: int
    U: tuple
    Nmat: tuple  # n rows, n-1 columns
    h: tuple


def unimodular_for(d: Sequence[int]):
    if not any(d):
        raise PaInputError("direction must be non-zero")
    return _column_reduce(d)


def hyperplane_solutions(d: Sequence[int], i: int) -> Optional[HyperplaneParam]:
    """Parametrize the integer solutions of ``d.x = i`` as ``Nmat y + h``."""
    g, U = unimodular_for(d)
    if i % g:
        return None
    t = i // g
    Nmat = tuple(tuple(row[1:]) for row in U)
    h = tuple(t * row[0] for row in U)
    return HyperplaneParam(tuple(d), g, tuple(tuple(r) for r in U), Nmat, h)


def int_det(A) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    n = len(A)
    if n == 0:
        return 1
    m = [list(map(int, row)) for row in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k]:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def substitute(inst: IpExpInstance, Nmat, h) -> IpExpInstance:
    """The instance in ``y`` obtained by ``x = Nmat y + h``."""
    n = inst.n
    k = len(Nmat[0]) if Nmat and Nmat[0] else 0
    if len(Nmat) != n or len(h) != n:
        raise PaInputError("substitution shape mismatch")
    r2, s2 = [], []
    for ri, si in zip(inst.f.r, inst.f.s):
        coef = ri
        for base, hj in zip(si, h):
            if hj:
                coef *= base ** hj
        r2.append(coef)
        row = []
        for col in range(k):
            b = Fraction(1)
            for j in range(n):
                e = Nmat[j][col]
                if e:
                    b *= si[j] ** e
            row.append(b)
        s2.append(tuple(row))
    M2 = tuple(tuple(sum(row[j] * Nmat[j][col] for j in range(n)) for col in range(k)) for row in inst.M)
    c2 = tuple(ci - sum(a * b for a, b in zip(row, h)) for row, ci in zip(inst.M, inst.c))
    return IpExpInstance(ExpSumFunction(k, tuple(r2), tuple(s2)), M2, c2)


# -- the polyhedral relaxation ------------------------------------------------------

@dataclass
class Budget:
    """Limits for :func:`solve`; every field is recorded in the certificate."""

    radius: int = 10  # enumeration track: largest max-norm explored
    direction_radius: int = 3  # slicing track: largest max-norm of a candidate d
    max_bits: int = 1024  # interval precision cap
    max_depth: int = 8
    max_slices: int = 2000
    max_rows: int = 4000  # Fourier-Motzkin row cap
    quantum: int = 64  # enumeration points per round

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class _FmOverflow(RuntimeError):
    pass


def _relaxation_rows(inst: IpExpInstance):
    """Rows ``(coeffs, rhs)`` meaning ``coeffs . x <= rhs`` of the relaxation."""
    rows = []
    for ri, si in zip(inst.f.r, inst.f.s):
        rows.append(([LogPoly.log(b) for b in si], -LogPoly.log(ri)))
    for row, ci in zip(inst.M, inst.c):
        rows.append(([LogPoly.const(v) for v in row], LogPoly.const(ci)))
    return rows


def _transform(rows, U):
    """Rewrite rows for the change of variables ``x = U y``."""
    n = len(U)
    out = []
    for coeffs, rhs in rows:
        new = []
        for col in range(n):
            acc = LogPoly()
            for j in range(n):
                if U[j][col]:
                    acc = acc + coeffs[j] * U[j][col]
            new.append(acc)
        out.append((new, rhs))
    return out


def _eliminate(rows, var: int, max_bits: int, max_rows: int):
    pos, neg, keep = [], [], []
    for coeffs, rhs in rows:
        sg = coeffs[var].sign(max_bits)
        (pos if sg > 0 else neg if sg < 0 else keep).append((coeffs, rhs))
    out = list(keep)
    seen = set()
    for cp, rp in pos:
        for cn, rn in neg:
            a, b = -cn[var], cp[var]  # both positive multipliers
            coeffs = [a * x + b * y for x, y in zip(cp, cn)]
            coeffs[var] = LogPoly()
            rhs = a * rp + b * rn
            key = (tuple(coeffs), rhs)
            if key in seen:
                continue
            seen.add(key)
            out.append((coeffs, rhs))
            if len(out) > max_rows:
                raise _FmOverflow()
    return out


def _infeasible_constant_row(rows, max_bits) -> bool:
    """Some row reads ``0 <= rhs`` with ``rhs`` certified negative."""
    for coeffs, rhs in rows:
        if all(c.is_zero() for c in coeffs):
            try:
                if rhs.sign(max_bits) < 0:
                    return True
            except UncertainSign:
                pass
    return False


def relaxation_is_empty(inst: IpExpInstance, budget: Budget) -> bool:
    """Certified emptiness of the log-linear relaxation (False means unknown)."""
    rows = _relaxation_rows(inst)
    try:
        for var in range(inst.n):
            if _infeasible_constant_row(rows, budget.max_bits):
                return True
            rows = _eliminate(rows, var, budget.max_bits, budget.max_rows)
    except (UncertainSign, _FmOverflow):
        return _infeasible_constant_row(rows, budget.max_bits)
    return _infeasible_constant_row(rows, budget.max_bits)


def _primitive_directions(n: int, radius: int) -> Iterator[tuple]:
    """Primitive integer vectors up to sign, by growing max-norm."""
    for r in range(1, radius + 1):
        for d in itertools.product(range(-r, r + 1), repeat=n):
            if max(abs(v) for v in d) != r or math.gcd(*d) != 1:
                continue
            first = next(v for v in d if v)
            if first > 0:
                yield d


def _ratio_enclosure(num: LogPoly, den: LogPoly, max_bits: int):
    bits = 64
    while bits <= max_bits:
        with _precision(bits):
            lo_hi = den.interval(bits)
            if lo_hi.a > 0 or lo_hi.b < 0:
                return num.interval(bits) / lo_hi
        bits *= 2
    raise UncertainSign(repr(den))


def _direction_bounds(rows, d, budget: Budget):
    """Integer ``(a, b)`` with ``a <= d.x <= b`` on the relaxation, or None."""
    g, U = unimodular_for(d)
    assert g == 1
    rows = _transform(rows, U)
    for var in range(1, len(d)):
        rows = _eliminate(rows, var, budget.max_bits, budget.max_rows)
    lows, highs = [], []
    for coeffs, rhs in rows:
        alpha = coeffs[0]
        sg = alpha.sign(budget.max_bits)
        if sg == 0:
            continue
        q = _ratio_enclosure(rhs, alpha, budget.max_bits)
        if sg > 0:
            highs.append(int(mpmath.ceil(q.b)))
        else:
            lows.append(int(mpmath.floor(q.a)))
    if not lows or not highs:
        return None
    return max(lows), min(highs)


def find_bounding_direction(inst: IpExpInstance, budget: Optional[Budget] = None):
    """Sound certificate ``(d, a, b)``: every real solution has ``a <= d.x <= b``.

    Returns None when the search budget runs out.
    """
    budget = budget or Budget()
    n = inst.n
    if n == 0:
        return None
    e1 = (1,) + (0,) * (n - 1)
    if relaxation_is_empty(inst, budget):
        return e1, 0, 0
    rows = _relaxation_rows(inst)
    for d in _primitive_directions(n, budget.direction_radius):
        try:
            ab = _direction_bounds(rows, d, budget)
        except (UncertainSign, _FmOverflow):
            continue
        if ab is not None:
            # a > b means the relaxation is empty along d: no slice to visit
            return (d,) + ab
    return None


# -- solving ---------------------------------------------------------------------

@dataclass
class IpExpResult:
    status: str  # "SAT", "UNSAT" or "UNKNOWN"
    witness: Optional[tuple] = None
    certificate: dict = field(default_factory=dict)

    def __str__(self):
        if self.status == "SAT":
            return f"SAT x=({', '.join(map(str, self.witness))})"
        return self.status


def _coordinate_ranges(inst: IpExpInstance, radius: int):
    lo = [-radius] * inst.n
    hi = [radius] * inst.n
    for row, ci in zip(inst.M, inst.c):
        nz = [j for j, v in enumerate(row) if v]
        if len(nz) != 1:
            continue
        j = nz[0]
        a = row[j]
        # a * x_j < ci  over the integers
        if a > 0:
            hi[j] = min(hi[j], -((-ci) // a) - 1)
        else:
            lo[j] = max(lo[j], ci // a + 1)
    return lo, hi


def lattice_points(inst: IpExpInstance, radius: int) -> Iterator[tuple]:
    """Integer points by growing max-norm, lexicographic within a shell,
    restricted to the box cut out by single-variable constraints."""
    n = inst.n
    if n == 0:
        yield ()
        return
    lo, hi = _coordinate_ranges(inst, radius)
    if any(l > h for l, h in zip(lo, hi)):
        return
    for r in range(radius + 1):
        ranges = [range(max(l, -r), min(h, r) + 1) for l, h in zip(lo, hi)]
        for x in itertools.product(*ranges):
            if max((abs(v) for v in x), default=0) == r:
                yield x


def _enumeration_track(inst: IpExpInstance, budget: Budget):
    count = 0
    for x in lattice_points(inst, budget.radius):
        if inst.holds(x):
            return ("SAT", x, {"track": "enumeration", "points": count + 1})
        count += 1
        if count % budget.quantum == 0:
            yield
    return ("EXHAUSTED", None, {"track": "enumeration", "points": count, "radius": budget.radius})


def _proc(inst: IpExpInstance, budget: Budget, depth: int):
    """Generator implementation of the slicing procedure.

    Returns ``(status, witness, tree)``; yields between units of work.
    """
    if inst.n == 0:
        ok = inst.holds(())
        return ("SAT", (), None) if ok else ("UNSAT", None, {"point": True})
    if depth > budget.max_depth:
        return ("UNKNOWN", None, {"reason": "depth"})
    found = find_bounding_direction(inst, budget)
    yield
    if found is None:
        return ("UNKNOWN", None, {"reason": "no bounding direction within budget"})
    d, a, b = found
    if b - a + 1 > budget.max_slices:
        return ("UNKNOWN", None, {"reason": "too many slices", "d": d, "a": a, "b": b})
    tree = {"d": d, "a": a, "b": b, "slices": []}
    for i in range(a, b + 1):
        hp = hyperplane_solutions(d, i)
        if hp is None:
            tree["slices"].append((i, "no lattice points"))
            continue
        sub = substitute(inst, hp.Nmat, hp.h)
        status, y, subtree = yield from _proc(sub, budget, depth + 1)
        if status == "SAT":
            x = tuple(sum(hp.Nmat[j][k] * y[k] for k in range(len(y))) + hp.h[j] for j in range(inst.n))
            return ("SAT", x, None)
        if status == "UNKNOWN":
            return ("UNKNOWN", None, subtree)
        tree["slices"].append((i, subtree))
        yield
    return ("UNSAT", None, tree)


def _drive(gen):
    """Advance a track by one quantum; returns its result or None."""
    try:
        next(gen)
    except StopIteration as stop:
        return stop.value
    return None


def solve(inst: IpExpInstance, budget: Optional[Budget] = None) -> IpExpResult:
    """Decide ``exists x in Z^n: f(x) < 1 and Mx < c`` within ``budget``."""
    budget = budget or Budget()
    tracks = {"enumeration": _enumeration_track(inst, budget), "slicing": _proc(inst, budget, 0)}
    outcome: dict = {}
    while tracks:
        for name in list(tracks):
            res = _drive(tracks[name])
            if res is None:
                continue
            del tracks[name]
            status, x, info = res
            if status == "SAT":
                if not inst.holds(x):
                    raise AssertionError("solver produced an invalid witness")
                return IpExpResult("SAT", tuple(x), {"track": name, "budget": budget.as_dict()})
            if status == "UNSAT":
                return IpExpResult("UNSAT", None, {"tree": info, "budget": budget.as_dict()})
            outcome[name] = info
    return IpExpResult("UNKNOWN", None, {"tracks": outcome, "budget": budget.as_dict()})


def check_unsat_tree(inst: IpExpInstance, tree, budget: Optional[Budget] = None) -> bool:
    """Re-verify an UNSAT certificate: directions, lattice bookkeeping and leaves."""
    budget = budget or Budget()
    if inst.n == 0:
        return tree == {"point": True} and not inst.holds(())
    d, a, b = tree["d"], tree["a"], tree["b"]
    if relaxation_is_empty(inst, budget):
        pass
    else:
        try:
            ab = _direction_bounds(_relaxation_rows(inst), d, budget)
        except (UncertainSign, _FmOverflow):
            return False
        if ab is None or ab[0] < a or ab[1] > b:
            return False
    slices = dict(tree["slices"])
    if sorted(slices) != list(range(a, b + 1)):
        return False
    for i in range(a, b + 1):
        hp = hyperplane_solutions(d, i)
        if hp is None:
            if slices[i] != "no lattice points":
                return False
            continue
        if not check_unsat_tree(substitute(inst, hp.Nmat, hp.h), slices[i], budget):
            return False
    return True


# -- text format ---------------------------------------------------------------------

def _rat(tok: str, lineno: int) -> Fraction:
    try:
        return as_fraction(tok)
    except PaInputError as exc:
        raise PaInputError(f"line {lineno}: {exc}") from None


def parse_instance(text: str) -> IpExpInstance:
    header = None
    terms, rows = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        kw, args = line[0], line[1:]
        if kw == "ipexp":
            if header is not None or len(args) != 3:
                raise PaInputError(f"line {lineno}: malformed header")
            try:
                header = tuple(int(v) for v in args)
            except ValueError:
                raise PaInputError(f"line {lineno}: header needs integers") from None
        elif header is None:
            raise PaInputError(f"line {lineno}: expected 'ipexp n l m' header first")
        elif kw == "term":
            if len(args) != header[0] + 1:
                raise PaInputError(f"line {lineno}: term needs {header[0] + 1} rationals")
            vals = [_rat(t, lineno) for t in args]
            terms.append((vals[0], tuple(vals[1:])))
        elif kw == "row":
            if len(args) != header[0] + 1:
                raise PaInputError(f"line {lineno}: row needs {header[0] + 1} integers")
            try:
                vals = [int(t) for t in args]
            except ValueError:
                raise PaInputError(f"line {lineno}: row entries must be integers") from None
            rows.append((tuple(vals[:-1]), vals[-1]))
        else:
            raise PaInputError(f"line {lineno}: unknown keyword {kw!r}")
    if header is None:
        raise PaInputError("empty instance file")
    n, ell, m = header
    if len(terms) != ell or len(rows) != m:
        raise PaInputError(f"header announces {ell} terms and {m} rows, found {len(terms)} and {len(rows)}")
    return IpExpInstance(ExpSumFunction(n, tuple(t[0] for t in terms), tuple(t[1] for t in terms)),
                         tuple(r[0] for r in rows), tuple(r[1] for r in rows))


def fmt_rat(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def render_instance(inst: IpExpInstance) -> str:
    lines = [f"ipexp {inst.n} {inst.ell} {inst.m}"]
    for ri, si in zip(inst.f.r, inst.f.s):
        lines.append(" ".join(["term", fmt_rat(ri)] + [fmt_rat(v) for v in si]))
    for row, ci in zip(inst.M, inst.c):
        lines.append(" ".join(["row"] + [str(v) for v in row] + [str(ci)]))
    return "\n".join(lines) + "\n"
